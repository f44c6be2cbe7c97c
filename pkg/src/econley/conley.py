"""Combinatorial index pairs for the truncated gradient flow.

The flow of -grad f on a finite truncation is discretized by an outer
approximation of its time-T map: every grid cube is covered by a ball
around its center, the ball is pushed through the integrator while its
radius grows by a bound on the local expansion rate, and the final box
is rasterized back to cubes.  The resulting multivalued map is a
genuine outer approximation of the numerical flow (with safety pads
rather than formal interval arithmetic: soundness is enforced by
construction and checked by dense sampling in the test suite).

Index pairs are then built graph-theoretically: the invariant part of
a cube set is the largest subgraph with in- and out-edges everywhere,
and the pair consists of its buffered forward hull together with the
forward closure of the one-step leavers.  Suspending such a pair by
interval factors in the extra coordinates of a larger truncation turns
it into a member of a pair family, and the stabilized index is the
limit of the relative cohomology tower over that family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cubical import CubeSet, CubicalPair, Grid, relative_cohomology
from .ecohomology import ELimit, expand_ladder, stabilized_limit, tower_from_family
from .functional import FunctionalSpec, TruncationLevel

__all__ = [
    "FlowParams",
    "MultivaluedMap",
    "IndexPair",
    "ExitTimeField",
    "flow",
    "outer_map",
    "invariant_part",
    "is_isolating",
    "build_index_pair",
    "exit_time",
    "exit_time_field",
    "squeeze_forward",
    "squeeze_backward",
    "product_grid",
    "product_index_pair",
    "conley_index",
    "verify_independence",
]

_MAX_STEPS = 20_000_000


@dataclass(frozen=True)
class FlowParams:
    """Numerical controls for the truncated flow and its cube map.

    time_step is the integrator step of the fixed fourth-order scheme;
    map_time is the flow time realized by one combinatorial transition.
    The per-cube image enclosures dominate the local stretching of the
    time map by construction, so expansion_bound is an extra inflation
    pad on top of them, not the sole soundness mechanism.
    """

    time_step: float
    map_time: float = 1.0
    expansion_bound: float = 0.0

    def __post_init__(self):
        if not self.time_step > 0:
            raise ValueError("time step must be positive")
        if not self.map_time > 0:
            raise ValueError("map time must be positive")
        if self.expansion_bound < 0:
            raise ValueError("expansion bound must be nonnegative")

    @classmethod
    def for_grid(cls, spec, grid: Grid, map_time: float = 1.0) -> "FlowParams":
        """Default step: cube diameter over four times the field Lipschitz bound."""
        fld = _as_field(spec, grid.level)
        h = np.array([grid.h(i) for i in range(grid.dim)])
        diam = float(np.linalg.norm(h))
        lip = max(fld.lipschitz(), 1e-9)
        return cls(time_step=diam / (4.0 * lip), map_time=map_time)


class _GradientField:
    """Vectorized -grad f on a fixed truncation, with local rate bounds."""

    def __init__(self, spec: FunctionalSpec, level: TruncationLevel):
        self.spec = spec
        self.level = level
        self.lam = spec.operator.level_eigenvalues(level)
        axes = spec.support_axes(level)
        self.axis = axes[0] if axes else None
        self.nl = spec.nonlinearity
        if self.axis is None:
            self.b2_global = (0.0, 0.0)
        else:
            # global span of the profile curvature from a dense sweep,
            # padded by the largest observed increment
            r = self.nl.clamp_radius + 1.0
            s = np.linspace(-r, r, 200001)
            h2 = self.nl.hess1(s)
            pad = 2.0 * float(np.max(np.abs(np.diff(h2)))) + 1e-9
            self.b2_global = (float(h2.min()) - pad, float(h2.max()) + pad)

    def lipschitz(self) -> float:
        return self.spec.lipschitz_field(self.level)

    def field_many(self, x: np.ndarray) -> np.ndarray:
        g = self.lam[None, :] * x
        if self.axis is not None:
            g[:, self.axis] += self.nl.grad1(x[:, self.axis])
        return -g

    def _b2_interval(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Curvature span of the axis profile over [lo, hi], elementwise."""
        inner = self.nl.inner_radius
        core = (lo >= -inner) & (hi <= inner)
        if self.nl.family == "double-well":
            ends_max = np.maximum(3.0 * lo * lo, 3.0 * hi * hi) - 2.0
            ends_min = np.minimum(3.0 * lo * lo, 3.0 * hi * hi) - 2.0
            ends_min = np.where((lo <= 0) & (hi >= 0), -2.0, ends_min)
        else:
            ends_max = np.zeros_like(lo)
            ends_min = np.zeros_like(lo)
        gmin, gmax = self.b2_global
        return (np.where(core, ends_min, gmin), np.where(core, ends_max, gmax))

    def rate_bounds(self, x: np.ndarray, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Bounds over a ball of radius rho around each row of x.

        Returns (mu, big): mu bounds the top eigenvalue of the field
        Jacobian (the expansion rate), big bounds its spectral norm.
        """
        n = len(x)
        neg = -self.lam
        if self.axis is None:
            mu = float(neg.max()) if len(neg) else 0.0
            big = float(np.abs(self.lam).max()) if len(self.lam) else 0.0
            return np.full(n, mu), np.full(n, big)
        others = np.delete(neg, self.axis)
        base_mu = float(others.max()) if len(others) else -np.inf
        others_abs = np.delete(np.abs(self.lam), self.axis)
        base_big = float(others_abs.max()) if len(others_abs) else 0.0
        s = x[:, self.axis]
        b2_min, b2_max = self._b2_interval(s - rho, s + rho)
        mu = np.maximum(base_mu, neg[self.axis] - b2_min)
        la = self.lam[self.axis]
        big_axis = np.maximum(np.abs(la + b2_min), np.abs(la + b2_max))
        big = np.maximum(base_big, big_axis)
        return mu, big


_FIELD_CACHE: dict[tuple[int, TruncationLevel], _GradientField] = {}


def _as_field(spec, level: TruncationLevel):
    if hasattr(spec, "field_many") and hasattr(spec, "rate_bounds"):
        return spec
    key = (id(spec), level)
    hit = _FIELD_CACHE.get(key)
    if hit is not None and hit.spec is spec:
        return hit
    if len(_FIELD_CACHE) > 64:
        _FIELD_CACHE.clear()
    fld = _GradientField(spec, level)
    _FIELD_CACHE[key] = fld
    return fld


def _rk4(f, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def flow(spec, x, t: float, level: TruncationLevel, params: FlowParams) -> np.ndarray:
    """Point of the trajectory of -grad f through x after time t.

    Negative t integrates the reversed field.  The trajectory is cut
    into steps of at most params.time_step.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != level.dim:
        raise ValueError(f"point has dimension {len(x)}, level needs {level.dim}")
    if t == 0:
        return x.copy()
    n = math.ceil(abs(t) / params.time_step)
    if n > _MAX_STEPS:
        raise ValueError("step-size underflow: trajectory needs too many steps")
    fld = _as_field(spec, level)
    pts = x[None, :].copy()
    dt = t / n
    for _ in range(n):
        pts = _rk4(fld.field_many, pts, dt)
    return pts[0]


def _lin(grid: Grid, cubes: np.ndarray) -> np.ndarray:
    if len(cubes) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.ravel_multi_index(tuple(cubes.T), grid.resolution).astype(np.int64)


def _unlin(grid: Grid, lin: np.ndarray) -> np.ndarray:
    if len(lin) == 0:
        return np.zeros((0, grid.dim), dtype=np.int64)
    return np.stack(np.unravel_index(lin, grid.resolution), axis=-1).astype(np.int64)


@dataclass
class MultivaluedMap:
    """Combinatorial outer approximation of the time map on a grid.

    Image cubes are stored in compressed rows indexed by the row-major
    linear index of the source cube; exits flags sources whose image
    box pokes out of the grid box.
    """

    grid: Grid
    ptr: np.ndarray
    idx: np.ndarray
    exits: np.ndarray
    params: FlowParams

    @property
    def n_cubes(self) -> int:
        return int(np.prod(self.grid.resolution))

    def images(self, i: int) -> np.ndarray:
        return self.idx[self.ptr[i]:self.ptr[i + 1]]

    def image_set(self, cubes: CubeSet) -> CubeSet:
        """Union of the images of every cube in the set."""
        lin = _lin(self.grid, cubes.cubes)
        parts = [self.images(int(i)) for i in lin]
        if not parts:
            return CubeSet.empty(self.grid)
        return CubeSet(self.grid, _unlin(self.grid, np.unique(np.concatenate(parts))))

    def edge_count(self) -> int:
        return int(len(self.idx))


def outer_map(spec, grid: Grid, level: TruncationLevel, params: FlowParams | None = None) -> MultivaluedMap:
    """Outer approximation of the time-map on all cubes of the grid.

    Each cube is enclosed in a ball around its center; the ball is
    integrated for params.map_time while its radius is multiplied by a
    bound on the one-step stretching, derived from the local expansion
    rate over a neighborhood of the current position.  Corner samples
    are flowed alongside and their landing points widen the final box.

    Raises ValueError when the typical final radius exceeds the grid
    box (resolution too coarse to resolve the map).
    """
    if grid.level != level:
        raise ValueError("grid belongs to a different truncation level")
    fld = _as_field(spec, level)
    if params is None:
        params = FlowParams.for_grid(fld, grid)

    cubes = CubeSet.full(grid).cubes
    centers = grid.centers(cubes)
    hvec = np.array([grid.h(i) for i in range(grid.dim)])
    box_lo = np.array([b[0] for b in grid.box])
    box_hi = np.array([b[1] for b in grid.box])
    extent = float((box_hi - box_lo).max())
    r0 = float(np.linalg.norm(hvec / 2.0))

    nsub = math.ceil(params.map_time / params.time_step)
    if nsub > _MAX_STEPS:
        raise ValueError("step-size underflow: map time needs too many steps")
    dt = params.map_time / nsub

    x = centers.copy()
    r = np.full(len(x), r0)
    for _ in range(nsub):
        x2 = _rk4(fld.field_many, x, dt)
        move = np.linalg.norm(x2 - x, axis=1)
        mu, big = fld.rate_bounds(x, r + 1.25 * move + 1e-9)
        b = big * dt
        factor = np.exp(mu * dt) + (b ** 5) / 120.0 + 1e-12
        r = np.minimum(r * factor + 1e-12, 1e9)
        x = x2
    if float(np.median(r)) >= extent:
        raise ValueError("resolution too coarse: image inflation exceeds the grid box")

    pad = r + params.expansion_bound + 1e-9
    lo = x - pad[:, None]
    hi = x + pad[:, None]

    # corner witnesses widen the boxes where the flow bends
    axes = [np.arange(res + 1) for res in grid.resolution]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.dim)
    pts = box_lo[None, :] + mesh * hvec[None, :]
    for _ in range(nsub):
        pts = _rk4(fld.field_many, pts, dt)
    corner_shape = tuple(res + 1 for res in grid.resolution)
    offsets = np.stack(np.meshgrid(*([np.array([0, 1])] * grid.dim), indexing="ij"),
                       axis=-1).reshape(-1, grid.dim)
    ctol = hvec / 100.0
    for off in offsets:
        cid = np.ravel_multi_index(tuple((cubes + off[None, :]).T), corner_shape)
        img = pts[cid]
        lo = np.minimum(lo, img - ctol[None, :])
        hi = np.maximum(hi, img + ctol[None, :])

    exits = ((lo < box_lo[None, :] - 1e-12) | (hi > box_hi[None, :] + 1e-12)).any(axis=1)
    tol = hvec * 1e-9
    i_lo = np.floor((lo - box_lo[None, :]) / hvec[None, :] - tol).astype(np.int64)
    i_hi = np.floor((hi - box_lo[None, :]) / hvec[None, :] + tol).astype(np.int64)
    res_arr = np.array(grid.resolution, dtype=np.int64)
    i_lo = np.clip(i_lo, 0, res_arr[None, :] - 1)
    i_hi = np.clip(i_hi, 0, res_arr[None, :] - 1)

    ptr = np.zeros(len(cubes) + 1, dtype=np.int64)
    chunks = []
    for i in range(len(cubes)):
        ranges = [np.arange(i_lo[i, a], i_hi[i, a] + 1) for a in range(grid.dim)]
        block = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, grid.dim)
        chunk = np.sort(np.ravel_multi_index(tuple(block.T), grid.resolution))
        chunks.append(chunk)
        ptr[i + 1] = ptr[i] + len(chunk)
    idx = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    return MultivaluedMap(grid, ptr, idx.astype(np.int64), exits, params)


def _member_edges(cubes: CubeSet, mv: MultivaluedMap):
    """Edge list of the map restricted to the set, as member positions."""
    members = _lin(cubes.grid, cubes.cubes)
    src, dst = [], []
    for p, m in enumerate(members):
        img = mv.images(int(m))
        pos = np.searchsorted(members, img)
        pos = np.minimum(pos, len(members) - 1) if len(members) else pos
        ok = members[pos] == img if len(members) else np.zeros(0, bool)
        hits = pos[ok]
        src.append(np.full(len(hits), p, dtype=np.int64))
        dst.append(hits.astype(np.int64))
    if src:
        return members, np.concatenate(src), np.concatenate(dst)
    return members, np.zeros(0, np.int64), np.zeros(0, np.int64)


def invariant_part(cubes: CubeSet, mv: MultivaluedMap) -> CubeSet:
    """Outer enclosure of the invariant set inside the cube set.

    Iteratively removes cubes with no incoming or no outgoing edge
    inside the set until nothing changes.
    """
    if mv.grid != cubes.grid:
        raise ValueError("map and cube set live on different grids")
    if not len(cubes):
        return cubes
    members, src, dst = _member_edges(cubes, mv)
    n = len(members)
    alive = np.ones(n, dtype=bool)
    while True:
        keep_edge = alive[src] & alive[dst]
        out_deg = np.bincount(src[keep_edge], minlength=n) > 0
        in_deg = np.bincount(dst[keep_edge], minlength=n) > 0
        nxt = alive & out_deg & in_deg
        if (nxt == alive).all():
            break
        alive = nxt
    return CubeSet(cubes.grid, cubes.cubes[alive])


def is_isolating(cubes: CubeSet, mv: MultivaluedMap) -> bool:
    """True when the invariant enclosure avoids the boundary collar.

    An empty cube set is trivially isolating.
    """
    if not len(cubes):
        return True
    inv = invariant_part(cubes, mv)
    if not len(inv):
        return True
    return len(inv.intersection(cubes.boundary_collar())) == 0


@dataclass
class IndexPair:
    """Combinatorial index pair for the discretized flow.

    n0 is positively invariant inside n1 and every combinatorial
    trajectory leaving n1 does so from n0; the invariant enclosure
    stays inside the interior of n1 minus n0.  exit_time_bound caps
    the exit times of the cubes that must leave (those not able to
    dodge n0 forever).
    """

    n1: CubeSet
    n0: CubeSet
    level: TruncationLevel
    regular: bool
    exit_time_bound: float
    spec: object | None = None
    params: FlowParams | None = None
    mvmap: MultivaluedMap | None = None

    def __post_init__(self):
        if self.n1.grid != self.n0.grid:
            raise ValueError("pair members live on different grids")
        if not self.n0.issubset(self.n1):
            raise ValueError("exit set must be contained in the total set")
        if self.n1.grid.level != self.level:
            raise ValueError("pair grid belongs to a different level")

    @property
    def grid(self) -> Grid:
        return self.n1.grid

    def pair(self) -> CubicalPair:
        return CubicalPair(self.n1, self.n0)


def _forward_closure(seed: CubeSet, within: CubeSet, mv: MultivaluedMap) -> CubeSet:
    out = seed
    frontier = seed
    while len(frontier):
        new = mv.image_set(frontier).intersection(within).difference(out)
        out = out.union(new)
        frontier = new
    return out


def _absorption_depth(n1: CubeSet, n0: CubeSet, mv: MultivaluedMap) -> tuple[int, np.ndarray]:
    """Steps until every non-dodging cube is forced into the exit set.

    Returns (depth, step_of) where step_of[i] is the absorption step of
    member i of n1 (-1 when the cube can avoid the exit set forever).
    """
    members, src, dst = _member_edges(n1, mv)
    n = len(members)
    n0_lin = _lin(n1.grid, n0.cubes)
    absorbed = np.isin(members, n0_lin)
    step_of = np.where(absorbed, 0, -1)
    depth = 0
    while True:
        stay = ~absorbed[dst]
        bad = np.bincount(src[stay], minlength=n) > 0
        nxt = absorbed | ~bad
        if (nxt == absorbed).all():
            break
        depth += 1
        step_of[nxt & ~absorbed] = depth
        absorbed = nxt
    return depth, step_of


def build_index_pair(cubes: CubeSet, mv: MultivaluedMap, spec=None) -> IndexPair:
    """Index pair around the invariant part of an isolating cube set.

    The total set is the forward closure (inside the input set) of the
    one-cube neighborhood of the invariant enclosure; the exit set is
    the forward closure of the cubes whose image leaves the total set.
    Raises ValueError when the input is not isolating or when the
    invariant enclosure runs into the exit set.
    """
    if mv.grid != cubes.grid:
        raise ValueError("map and cube set live on different grids")
    level = cubes.grid.level
    inv = invariant_part(cubes, mv)
    if not len(inv):
        collar = cubes.boundary_collar()
        return IndexPair(collar, collar, level, True, 0.0, spec, mv.params, mv)
    if len(inv.intersection(cubes.boundary_collar())):
        raise ValueError("input is not isolating: invariant enclosure meets the boundary collar")

    n1 = _forward_closure(inv.thicken().intersection(cubes), cubes, mv)
    n1_lin = _lin(cubes.grid, n1.cubes)
    leaver_rows = []
    for row, m in zip(n1.cubes, n1_lin):
        img = mv.images(int(m))
        outside = not np.isin(img, n1_lin, assume_unique=False).all()
        if outside or mv.exits[int(m)]:
            leaver_rows.append(row)
    leavers = CubeSet(cubes.grid, np.array(leaver_rows, dtype=np.int64).reshape(-1, cubes.grid.dim))
    n0 = _forward_closure(leavers, n1, mv)

    if len(inv.intersection(n0)):
        raise ValueError("resolution too coarse: invariant enclosure meets the exit set")
    core_collar = n1.difference(n0).boundary_collar()
    if len(inv.intersection(core_collar)):
        raise ValueError("resolution too coarse: invariant enclosure touches the pair boundary")

    depth, _ = _absorption_depth(n1, n0, mv)
    bound = depth * mv.params.map_time
    return IndexPair(n1, n0, level, True, bound, spec, mv.params, mv)


def _cube_of(grid: Grid, x: np.ndarray) -> np.ndarray | None:
    lo = np.array([b[0] for b in grid.box])
    hvec = np.array([grid.h(i) for i in range(grid.dim)])
    k = np.floor((np.asarray(x, float) - lo) / hvec).astype(np.int64)
    res = np.array(grid.resolution)
    if (k < 0).any() or (k >= res).any():
        return None
    return k


def exit_time(pair: IndexPair, x, params: FlowParams | None = None) -> tuple[float, float]:
    """Bracket on the time the trajectory through x takes to leave the pair.

    Leaving means exiting the total set or entering the exit set.
    Points already outside return (0, 0); points that never leave
    within the simulated horizon return an infinite upper bound.
    """
    params = params or pair.params
    if params is None:
        raise ValueError("pair carries no flow parameters")
    if pair.spec is None:
        raise ValueError("pair carries no field to integrate")
    fld = _as_field(pair.spec, pair.level)
    grid = pair.grid
    n1_lin = _lin(grid, pair.n1.cubes)
    n0_lin = _lin(grid, pair.n0.cubes)

    def inside(pt):
        k = _cube_of(grid, pt)
        if k is None:
            return False
        lin = int(np.ravel_multi_index(tuple(k), grid.resolution))
        i = np.searchsorted(n1_lin, lin)
        if i >= len(n1_lin) or n1_lin[i] != lin:
            return False
        j = np.searchsorted(n0_lin, lin)
        return not (j < len(n0_lin) and n0_lin[j] == lin)

    pt = np.asarray(x, dtype=float).reshape(-1)
    if not inside(pt):
        return 0.0, 0.0
    horizon = max(4.0 * pair.exit_time_bound, 20.0 * params.map_time)
    dt = params.time_step
    steps = math.ceil(horizon / dt)
    if steps > _MAX_STEPS:
        raise ValueError("step-size underflow: exit horizon needs too many steps")
    cur = pt[None, :].copy()
    t = 0.0
    for _ in range(steps):
        cur = _rk4(fld.field_many, cur, dt)
        t += dt
        if not inside(cur[0]):
            return max(t - dt, 0.0), t
    return t, math.inf


@dataclass
class ExitTimeField:
    """Per-cube exit time brackets over the total set of a pair.

    lower and upper are aligned with pair.n1.cubes; upper is infinite
    on cubes that can dodge the exit set forever.
    """

    pair: IndexPair
    lower: np.ndarray
    upper: np.ndarray

    def to_csv(self) -> str:
        lines = ["cube,lower,upper"]
        for row, lo, hi in zip(self.pair.n1.cubes, self.lower, self.upper):
            cube = " ".join(str(int(c)) for c in row)
            hi_txt = "inf" if math.isinf(hi) else repr(float(hi))
            lines.append(f"{cube},{repr(float(lo))},{hi_txt}")
        return "\n".join(lines) + "\n"


def exit_time_field(pair: IndexPair) -> ExitTimeField:
    """Combinatorial exit time brackets for every cube of the total set.

    The lower bound counts the shortest chain to the exit set; the
    upper bound counts the step at which every chain from the cube has
    been forced into the exit set (infinite if it never is).
    """
    if pair.mvmap is None:
        raise ValueError("pair carries no combinatorial map")
    mv = pair.mvmap
    members, src, dst = _member_edges(pair.n1, mv)
    n = len(members)
    n0_lin = _lin(pair.grid, pair.n0.cubes)
    in_n0 = np.isin(members, n0_lin)

    dist = np.where(in_n0, 0, -1)
    frontier = in_n0.copy()
    d = 0
    while frontier.any():
        d += 1
        # sources with an edge into the current frontier
        hit = np.zeros(n, dtype=bool)
        sel = frontier[dst]
        hit[src[sel]] = True
        new = hit & (dist < 0)
        dist[new] = d
        frontier = new
    lower = np.where(dist > 0, (dist - 1) * mv.params.map_time, 0.0)
    # no chain reaches the exit set at all: no orbit of the cube leaves
    lower[dist < 0] = math.inf

    _, step_of = _absorption_depth(pair.n1, pair.n0, mv)
    upper = np.where(step_of >= 0, step_of * mv.params.map_time, math.inf)
    return ExitTimeField(pair, lower.astype(float), upper.astype(float))


def squeeze_forward(pair: IndexPair, t: float) -> IndexPair:
    """Shrink the total set to cubes reachable by time-t chains inside it.

    Cubes surviving k = ceil(t / map time) forward image iterations
    within the total set form the new total set; the exit set is cut
    down accordingly.  t = 0 returns the pair unchanged.
    """
    if pair.mvmap is None:
        raise ValueError("pair carries no combinatorial map")
    if t < 0:
        raise ValueError("squeeze time must be nonnegative")
    mv = pair.mvmap
    k = math.ceil(t / mv.params.map_time)
    r = pair.n1
    for _ in range(k):
        r = mv.image_set(r).intersection(pair.n1)
    n0 = pair.n0.intersection(r)
    depth, _ = _absorption_depth(r, n0, mv)
    return IndexPair(r, n0, pair.level, pair.regular, depth * mv.params.map_time,
                     pair.spec, pair.params, mv)


def squeeze_backward(pair: IndexPair, t: float) -> IndexPair:
    """Grow the exit set by cubes forced into it within time t.

    A cube joins the grown exit set when every chain of the map from
    it enters the old exit set within k = ceil(t / map time) steps.
    This inner approximation of the backward-flowed exit set is
    forward-closed by construction (a branch of a forced cube is
    forced one step sooner), so the pair axioms survive the
    multivalued branching.  The total set is unchanged and the exit
    set grows monotonically with t.
    """
    if pair.mvmap is None:
        raise ValueError("pair carries no combinatorial map")
    if t < 0:
        raise ValueError("squeeze time must be nonnegative")
    mv = pair.mvmap
    k = math.ceil(t / mv.params.map_time)
    _, step_of = _absorption_depth(pair.n1, pair.n0, mv)
    mark = (step_of >= 0) & (step_of <= k)
    n0 = CubeSet(pair.grid, pair.n1.cubes[mark])
    depth, _ = _absorption_depth(pair.n1, n0, mv)
    return IndexPair(pair.n1, n0, pair.level, pair.regular, depth * mv.params.map_time,
                     pair.spec, pair.params, mv)


def product_grid(base: Grid, level: TruncationLevel,
                 pos_half: float = 1.0, neg_half: float = 1.0, neg_res: int = 6) -> Grid:
    """Grid of a larger truncation extending a base grid by interval axes.

    New positive axes carry two cubes, new negative axes carry neg_res
    cubes; both are symmetric so the tower can split them at zero.
    """
    bm, bn = base.level.m, base.level.n
    dm, dn = level.m - bm, level.n - bn
    if dm < 0 or dn < 0:
        raise ValueError("target level must dominate the base level")
    if neg_res < 6 or neg_res % 2:
        # the end-cube collar must stay clear of the central splitting
        # slab, which starts at gridline res/2 - 1
        raise ValueError("negative extension needs an even resolution of at least 6")
    box = (base.box[:bm] + ((-pos_half, pos_half),) * dm
           + base.box[bm:] + ((-neg_half, neg_half),) * dn)
    res = (base.resolution[:bm] + (2,) * dm
           + base.resolution[bm:] + (neg_res,) * dn)
    return Grid(level, box, res)


def _suspension_blocks(dm: int, dn: int, neg_res: int):
    """Index blocks of the new axes: positive combos, negative combos,
    and the mask of negative combos touching an end cube."""
    pos = (np.stack(np.meshgrid(*([np.arange(2)] * dm), indexing="ij"),
                    axis=-1).reshape(-1, dm) if dm else np.zeros((1, 0), np.int64))
    neg = (np.stack(np.meshgrid(*([np.arange(neg_res)] * dn), indexing="ij"),
                    axis=-1).reshape(-1, dn) if dn else np.zeros((1, 0), np.int64))
    neg_end = ((neg == 0) | (neg == neg_res - 1)).any(axis=1)
    return pos, neg, neg_end


def _product_rows(rows: np.ndarray, bm: int, pos: np.ndarray, neg: np.ndarray) -> np.ndarray:
    """Cube rows of the product, new positive axes spliced in after the
    base positives, new negative axes appended."""
    if not len(rows):
        return np.zeros((0, rows.shape[1] + pos.shape[1] + neg.shape[1]), np.int64)
    a = np.repeat(rows, len(pos) * len(neg), axis=0)
    b = np.tile(np.repeat(pos, len(neg), axis=0), (len(rows), 1))
    c = np.tile(neg, (len(rows) * len(pos), 1))
    return np.concatenate([a[:, :bm], b, a[:, bm:], c], axis=1)


def product_index_pair(pair: IndexPair, level: TruncationLevel,
                       pos_half: float = 1.0, neg_half: float = 1.0,
                       neg_res: int = 6) -> IndexPair:
    """Suspend a finite-level pair by the extra axes of a larger level.

    The total set is the product with full interval blocks in every
    new coordinate; the exit set additionally picks up the end cubes
    of the new negative axes, so each of them suspends the pair once.
    """
    bm, bn = pair.level.m, pair.level.n
    dm, dn = level.m - bm, level.n - bn
    if dm < 0 or dn < 0:
        raise ValueError("target level must dominate the pair level")
    if dm == 0 and dn == 0:
        return pair
    grid = product_grid(pair.grid, level, pos_half, neg_half, neg_res)
    pos, neg, neg_end = _suspension_blocks(dm, dn, neg_res)

    n1_rows = _product_rows(pair.n1.cubes, bm, pos, neg)
    n0_rows = _product_rows(pair.n0.cubes, bm, pos, neg)
    n1p = CubeSet(grid, n1_rows)
    parts = [n0_rows]
    if dn and neg_end.any():
        parts.append(_product_rows(pair.n1.cubes, bm, pos, neg[neg_end]))
    n0p = CubeSet(grid, np.concatenate(parts, axis=0) if parts else n0_rows)
    return IndexPair(n1p, n0p, level, pair.regular, pair.exit_time_bound,
                     None, pair.params, None)


class _ProductPairFamily:
    def __init__(self, pair: IndexPair, pos_half: float, neg_half: float, neg_res: int):
        self.pair = pair
        self.pos_half = pos_half
        self.neg_half = neg_half
        self.neg_res = neg_res

    def grid(self, level: TruncationLevel) -> Grid:
        return product_grid(self.pair.grid, level, self.pos_half, self.neg_half, self.neg_res)

    def members(self, level: TruncationLevel, grid: Grid) -> tuple[CubeSet, CubeSet]:
        p = product_index_pair(self.pair, level, self.pos_half, self.neg_half, self.neg_res)
        if p.grid != grid:
            raise ValueError("family grid mismatch")
        return p.n1, p.n0


def _as_levels(ladder) -> list[TruncationLevel]:
    out = []
    for p in ladder:
        out.append(p if isinstance(p, TruncationLevel) else TruncationLevel(int(p[0]), int(p[1])))
    return out


def conley_index(pair: IndexPair, ladder, grid=None, window: int = 3) -> ELimit:
    """Stabilized relative index of a finite pair over a truncation ladder.

    The pair is suspended into every ladder level by interval factors,
    the relative tower is run over the refined ladder, and the limit
    is certified over the trailing window.  grid may carry a scheme
    whose half width and resolution shape the new negative axes.
    """
    pts = _as_levels(ladder)
    base = pair.level
    if not pts or pts[0] != base:
        pts = [base] + pts
    for a, b in zip(pts, pts[1:]):
        if not (a <= b) or a == b:
            raise ValueError("ladder must increase strictly from the pair level")
    neg_half, neg_res = 1.0, 6
    if grid is not None:
        neg_half = float(getattr(grid, "half_width"))
        neg_res = int(getattr(grid, "resolution"))
    fam = _ProductPairFamily(pair, 1.0, neg_half, neg_res)
    levels = expand_ladder(pts)
    tower = tower_from_family("middle", fam, levels)
    return stabilized_limit(tower, window=window)


def verify_independence(pair_a: IndexPair, pair_b: IndexPair, ladder,
                        grid=None, window: int = 3) -> bool:
    """True when both pairs certify the same stabilized rank profile."""
    la = conley_index(pair_a, ladder, grid=grid, window=window)
    lb = conley_index(pair_b, ladder, grid=grid, window=window)
    return bool(la.stabilized and lb.stabilized and la.ranks == lb.ranks)


def pair_cohomology(pair: IndexPair):
    """Relative cohomology ranks of the pair at its own level."""
    space = relative_cohomology(pair.pair())
    return {k: space.rank(k) for k in space.degrees() if space.rank(k)}
