"""Direct-limit cohomology over truncation ladders.

A shape is sliced on a grid at every level of a ladder of truncations.
Three towers connect the per-level cohomology groups:

* negative: each step adds one negative coordinate; the connecting map
  is the Mayer-Vietoris coboundary of the split of the new slice into
  its upper and lower halves, composed with the certified
  identification of the central band with the previous slice. Raw
  degree shifts by +1; degrees normalized by the negative dimension
  stay aligned.
* positive: each step adds one positive coordinate; the connecting map
  is induced by the inclusion of the smaller slice and is stored in
  its natural (contravariant) direction, from the larger level to the
  smaller.
* middle: both step kinds, along a ladder monotone in both indices.

A finite run cannot take a true direct limit, so the limit is replaced
by a stabilization certificate: the ranks of the composites of the
last `window` steps must agree at every degree. Classes that keep
drifting in degree or die under the connecting maps contribute nothing
to the certified ranks.

All towers refine the given ladder into unit steps, advancing the
positive index before the negative one when both grow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .cubical import CubeSet, GradedZ2Map, GradedZ2Space, Grid, _mv_guard
from .functional import FunctionalSpec, TruncationLevel, evaluate
from .reduction import Complex, closure_codes, decode, encode, transcode

__all__ = [
    "TowerError",
    "GridScheme",
    "ShapeSpec",
    "HalfSlices",
    "TowerStep",
    "Tower",
    "ELimit",
    "EMorphism",
    "EMorphismReport",
    "slice",
    "half_slices",
    "expand_ladder",
    "tower_negative",
    "tower_positive",
    "tower_middle",
    "stabilized_limit",
    "e_morphism_validate",
    "tower_report",
]


class TowerError(RuntimeError):
    """A tower construction step could not be certified."""


@dataclass(frozen=True)
class GridScheme:
    """Shared grid template: symmetric box, uniform even resolution."""

    half_width: float = 1.5
    resolution: int = 8

    def __post_init__(self):
        if self.resolution < 2 or self.resolution % 2:
            raise ValueError("resolution must be even and at least 2")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    def grid_for(self, level: TruncationLevel) -> Grid:
        return Grid.uniform(level, self.half_width, self.resolution)


@dataclass
class ShapeSpec:
    """Declarative closed bounded set, sliceable at every ladder level.

    Axes are named by signed keys: +1, +2, ... for positive
    coordinates, -1, -2, ... for negative ones, so a shape keeps its
    meaning as the truncation grows. Coordinates outside the named
    support are held at 0; their cubes are the central band.
    """

    family: str
    params: dict
    half_width: float = 1.5
    resolution: int = 8

    @classmethod
    def ball(cls, radius: float, support=None, **kw) -> "ShapeSpec":
        return cls("ball", {"radius": float(radius), "support": support}, **kw)

    @classmethod
    def sphere(cls, radius: float, support=None, **kw) -> "ShapeSpec":
        return cls("sphere", {"radius": float(radius), "support": support}, **kw)

    @classmethod
    def intervals(cls, table: dict[int, tuple[float, float]], **kw) -> "ShapeSpec":
        return cls("intervals", {"intervals": dict(table)}, **kw)

    @classmethod
    def point(cls, **kw) -> "ShapeSpec":
        return cls("intervals", {"intervals": {}}, **kw)

    @classmethod
    def sublevel(cls, spec: FunctionalSpec, cut: float, **kw) -> "ShapeSpec":
        return cls("sublevel", {"spec": spec, "cut": float(cut)}, **kw)

    @classmethod
    def explicit(cls, slices: dict[tuple[int, int], np.ndarray], **kw) -> "ShapeSpec":
        return cls("explicit", {"slices": dict(slices)}, **kw)

    def scheme(self) -> GridScheme:
        return GridScheme(self.half_width, self.resolution)


@dataclass(frozen=True)
class HalfSlices:
    """Upper and lower halves of a slice along its last negative axis.

    hat collects the cubes meeting the closed half-space where the new
    coordinate is nonnegative, check the nonpositive ones. Their union
    is the whole slice; their intersection is the central band around
    the previous slice.
    """

    hat: CubeSet
    check: CubeSet
    axis: int

    def union(self) -> CubeSet:
        return self.hat.union(self.check)

    def core(self) -> CubeSet:
        return self.hat.intersection(self.check)


def _axis_keys(level: TruncationLevel) -> list[int]:
    return [i + 1 for i in range(level.m)] + [-(j + 1) for j in range(level.n)]


def _rows_from_mask(grid: Grid, mask: np.ndarray) -> CubeSet:
    rows = np.argwhere(mask)
    return CubeSet(grid, rows.astype(np.int64))


def _nd_accumulate(vectors, combine, start):
    out = np.array(start)
    for v in vectors:
        out = combine(out[..., None], v)
    return out


def _slice_set(shape: ShapeSpec, grid: Grid) -> CubeSet:
    level = grid.level
    d = level.dim
    keys = _axis_keys(level)
    los, his = [], []
    for a in range(d):
        lo, _ = grid.box[a]
        h = grid.h(a)
        k = np.arange(grid.resolution[a])
        los.append(lo + k * h)
        his.append(lo + (k + 1) * h)

    fam = shape.family
    if fam == "explicit":
        table = shape.params["slices"]
        at = (level.m, level.n)
        if at not in table:
            raise TowerError(f"shape has no slice at level {at}")
        return CubeSet(grid, np.asarray(table[at], dtype=np.int64).reshape(-1, d))

    if fam == "intervals":
        table = shape.params["intervals"]
        for key, (a, b) in table.items():
            if key not in keys and (a > 0 or b < 0):
                return CubeSet.empty(grid)
        masks = []
        for a in range(d):
            iv = table.get(keys[a], (0.0, 0.0))
            masks.append((his[a] >= iv[0]) & (los[a] <= iv[1]))
        nd = _nd_accumulate(masks, np.logical_and, True)
        return _rows_from_mask(grid, nd)

    if fam in ("ball", "sphere"):
        r2 = shape.params["radius"] ** 2
        support = shape.params["support"]
        sup = set(keys) if support is None else set(support)
        min_sq, max_sq, central = [], [], []
        for a in range(d):
            alo, ahi = los[a], his[a]
            inner = np.where((alo <= 0) & (ahi >= 0), 0.0,
                             np.minimum(np.abs(alo), np.abs(ahi))) ** 2
            outer = np.maximum(np.abs(alo), np.abs(ahi)) ** 2
            if keys[a] in sup:
                min_sq.append(inner)
                max_sq.append(outer)
                central.append(np.ones_like(alo, dtype=bool))
            else:
                min_sq.append(np.zeros_like(inner))
                max_sq.append(np.zeros_like(outer))
                central.append((alo <= 0) & (ahi >= 0))
        mn = _nd_accumulate(min_sq, np.add, 0.0)
        ct = _nd_accumulate(central, np.logical_and, True)
        if fam == "ball":
            return _rows_from_mask(grid, (mn <= r2) & ct)
        mx = _nd_accumulate(max_sq, np.add, 0.0)
        return _rows_from_mask(grid, (mn <= r2) & (mx >= r2) & ct)

    if fam == "sublevel":
        fspec: FunctionalSpec = shape.params["spec"]
        cut = shape.params["cut"]
        full = CubeSet.full(grid)
        clo, chi = grid.cube_bounds(full.cubes)
        centers = (clo + chi) / 2.0
        rad = np.linalg.norm((chi - clo) / 2.0, axis=1)
        lip = fspec.lipschitz_field(level)
        keep = np.zeros(len(centers), dtype=bool)
        for i, c in enumerate(centers):
            val, grad, _ = evaluate(fspec, c, level)
            gmax = float(np.linalg.norm(grad)) + lip * rad[i]
            keep[i] = val - gmax * rad[i] <= cut
        return CubeSet(grid, full.cubes[keep])

    raise ValueError(f"unknown shape family {fam!r}")


def slice(shape: ShapeSpec, level: TruncationLevel, grid: Grid) -> CubeSet:
    """Outer cubical approximation of the shape at the given level."""
    if grid.level != level:
        raise ValueError("grid does not belong to the requested level")
    return _slice_set(shape, grid)


def half_slices(shape: ShapeSpec, level: TruncationLevel, grid: Grid | None = None) -> HalfSlices:
    """Split the slice at `level` along its newest negative axis."""
    if level.n < 1:
        raise ValueError("level has no negative coordinate to split on")
    if grid is None:
        grid = shape.scheme().grid_for(level)
    if grid.level != level:
        raise ValueError("grid does not belong to the requested level")
    s = _slice_set(shape, grid)
    ax = level.dim - 1
    return HalfSlices(s.side(ax, +1), s.side(ax, -1), ax)


@dataclass
class TowerStep:
    """One unit step of a tower.

    kind "delta": forward Mayer-Vietoris coboundary, degree shift +1,
    map goes from level `source` to `target` = source + 1.
    kind "incl": inclusion-induced restriction, shift 0, stored
    contravariantly from level `source` = target + 1 down to `target`.
    """

    kind: str
    map: GradedZ2Map
    source: int
    target: int


@dataclass
class Tower:
    kind: str
    levels: list[TruncationLevel]
    grids: list[Grid]
    spaces: list[GradedZ2Space]
    steps: list[TowerStep]

    @property
    def maps(self) -> list[GradedZ2Map]:
        return [s.map for s in self.steps]

    def normalization(self, i: int) -> int:
        return 0 if self.kind == "positive" else self.levels[i].n

    def normalized_ranks(self, i: int) -> dict[int, int]:
        off = self.normalization(i)
        return {k - off: r for k, r in self.spaces[i].ranks.items()}

    def forward_matrix(self, t: int, k: int) -> np.ndarray | None:
        """Matrix of step t at normalized degree k, in the forward
        (limit) direction. Inclusion steps are inverted; a non-square
        or singular inclusion matrix yields None."""
        st = self.steps[t]
        raw = k + self.normalization(st.source)
        mat = st.map.matrix(raw)
        if st.kind == "delta":
            return mat
        if mat.shape[0] != mat.shape[1]:
            return None
        if mat.size == 0:
            return mat
        return gf2.inverse(mat)


@dataclass
class ELimit:
    ranks: dict[int, int]
    stabilized: bool
    certificate: dict


def expand_ladder(points: list[TruncationLevel]) -> list[TruncationLevel]:
    """Refine a monotone ladder into unit steps, alternating +m, +n."""
    if not points:
        raise ValueError("empty ladder")
    out = [points[0]]
    for a, b in zip(points, points[1:]):
        if b.m < a.m or b.n < a.n or (b.m, b.n) == (a.m, a.n):
            raise ValueError("ladder must be strictly monotone in (m, n)")
        m, n = a.m, a.n
        prefer_m = True
        while (m, n) != (b.m, b.n):
            if prefer_m and m < b.m:
                m += 1
            elif n < b.n:
                n += 1
            else:
                m += 1
            prefer_m = not prefer_m
            out.append(TruncationLevel(m, n))
    return out


class _AbsoluteShapeFamily:
    def __init__(self, shape: ShapeSpec, scheme: GridScheme):
        self.shape = shape
        self.scheme = scheme

    def grid(self, level: TruncationLevel) -> Grid:
        return self.scheme.grid_for(level)

    def members(self, level: TruncationLevel, grid: Grid) -> tuple[CubeSet, CubeSet]:
        return _slice_set(self.shape, grid), CubeSet.empty(grid)


def _ranges(counts: np.ndarray) -> np.ndarray:
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    ends = np.cumsum(counts)
    return np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts)


def _faces_stay_inside(cx: Complex, member_codes: np.ndarray) -> bool:
    """True if every face (within cx) of a member cell is a member."""
    if not len(member_codes):
        return True
    ids = cx.ids(member_codes)
    mask = np.zeros(len(cx.codes), dtype=bool)
    mask[ids] = True
    starts = cx.face_ptr[ids]
    counts = cx.face_ptr[ids + 1] - starts
    take = np.repeat(starts, counts) + _ranges(counts)
    return bool(mask[cx.face_idx[take]].all())


def _insert_axis(codes, src_bases, tgt_bases, ins, digit):
    axis_map = [j if j < ins else j + 1 for j in range(len(src_bases))]
    return transcode(codes, src_bases, tgt_bases, axis_map, {ins: digit})


def _drop_axis(codes, src_bases, tgt_bases, drop, expect_digit):
    digits = decode(codes, np.asarray(src_bases))
    if len(codes) and not (digits[:, drop] == expect_digit).all():
        raise TowerError("support leaves the embedded slice")
    digits = np.delete(digits, drop, axis=1)
    return encode(digits, np.asarray(tgt_bases))


def _delta_step(t, levels, grids, pairs, cells, spaces) -> TowerStep:
    ga, gb = grids[t], grids[t + 1]
    ax = gb.dim - 1
    res = gb.resolution[ax]
    tot, sub = pairs[t + 1]
    bases = gb.bases
    sa = closure_codes(bases, tot.side(ax, +1).cubes)
    sb = closure_codes(bases, tot.side(ax, -1).cubes)
    ta = closure_codes(bases, sub.side(ax, +1).cubes)
    tb = closure_codes(bases, sub.side(ax, -1).cubes)
    _mv_guard(sa, ta, sb, tb)
    ra = np.setdiff1d(sa, ta, assume_unique=True)
    rb = np.setdiff1d(sb, tb, assume_unique=True)
    ri = np.intersect1d(ra, rb, assume_unique=True)
    ru = np.union1d(ra, rb)
    if not np.array_equal(ru, cells[t + 1]):
        raise TowerError("half-slices do not reassemble the level")
    sp_prev, sp_next = spaces[t], spaces[t + 1]
    cx_ra = Complex(bases, ra)
    sp_ri = GradedZ2Space.from_cells(bases, ri)

    emb = _insert_axis(cells[t], ga.bases, bases, ax, res)
    if len(np.setdiff1d(emb, ri, assume_unique=True)):
        raise TowerError("previous level does not embed into the splitting band")
    if not _faces_stay_inside(sp_ri._cx, emb):
        raise TowerError("embedded previous level is not closed in the band")

    rinv = {}
    for k in sorted(set(sp_ri.degrees()) | set(sp_prev.degrees())):
        cols = []
        for z in sp_ri.basis(k):
            zz = np.intersect1d(z, emb, assume_unique=True)
            back = _drop_axis(zz, bases, ga.bases, ax, res)
            cols.append(sp_prev.coordinates(back, k))
        m = (np.stack(cols, axis=1) if cols
             else np.zeros((sp_prev.rank(k), 0), dtype=np.uint8))
        if m.shape[0] != m.shape[1]:
            raise TowerError(f"band does not match previous level at degree {k}")
        inv = m if m.size == 0 else gf2.inverse(m)
        if inv is None:
            raise TowerError(f"level identification not invertible at degree {k}")
        rinv[k] = inv

    mats = {}
    for k in sp_prev.degrees():
        cols = []
        for z in sp_ri.basis(k):
            w = cx_ra.coboundary(z)
            if len(np.intersect1d(w, ri, assume_unique=True)):
                raise AssertionError("connecting cochain does not vanish on the band")
            cols.append(sp_next.coordinates(w, k + 1))
        d = (np.stack(cols, axis=1) if cols
             else np.zeros((sp_next.rank(k + 1), 0), dtype=np.uint8))
        mats[k] = gf2.matmul(d, rinv[k])
    return TowerStep("delta", GradedZ2Map(sp_prev, sp_next, 1, mats), t, t + 1)


def _incl_step(t, levels, grids, pairs, cells, spaces) -> TowerStep:
    ga, gb = grids[t], grids[t + 1]
    ins = levels[t].m
    res = gb.resolution[ins]
    emb = _insert_axis(cells[t], ga.bases, gb.bases, ins, res)
    if len(np.setdiff1d(emb, cells[t + 1], assume_unique=True)):
        raise TowerError("smaller level does not embed into the larger level")
    if not _faces_stay_inside(spaces[t + 1]._cx, emb):
        raise TowerError("embedded level is not closed in the larger level")
    sp_small, sp_big = spaces[t], spaces[t + 1]
    mats = {}
    for k in sp_big.degrees():
        cols = []
        for z in sp_big.basis(k):
            zz = np.intersect1d(z, emb, assume_unique=True)
            back = _drop_axis(zz, gb.bases, ga.bases, ins, res)
            cols.append(sp_small.coordinates(back, k))
        mats[k] = (np.stack(cols, axis=1) if cols
                   else np.zeros((sp_small.rank(k), 0), dtype=np.uint8))
    return TowerStep("incl", GradedZ2Map(sp_big, sp_small, 0, mats), t + 1, t)


def tower_from_family(kind: str, family, levels: list[TruncationLevel]) -> Tower:
    """Build a tower over unit-step levels from a pair-valued family."""
    grids = [family.grid(lv) for lv in levels]
    pairs = [family.members(lv, g) for lv, g in zip(levels, grids)]
    cells = []
    for g, (tot, sub) in zip(grids, pairs):
        s = closure_codes(g.bases, tot.cubes)
        u = closure_codes(g.bases, sub.cubes)
        cells.append(np.setdiff1d(s, u, assume_unique=True))
    spaces = [GradedZ2Space.from_cells(g.bases, c) for g, c in zip(grids, cells)]
    steps = []
    for t in range(len(levels) - 1):
        a, b = levels[t], levels[t + 1]
        if (b.m, b.n) == (a.m, a.n + 1):
            steps.append(_delta_step(t, levels, grids, pairs, cells, spaces))
        elif (b.m, b.n) == (a.m + 1, a.n):
            steps.append(_incl_step(t, levels, grids, pairs, cells, spaces))
        else:
            raise ValueError("tower levels must advance by unit steps")
    return Tower(kind, list(levels), grids, spaces, steps)


def _scheme_of(grid, shape: ShapeSpec) -> GridScheme:
    if grid is None:
        return shape.scheme()
    if isinstance(grid, GridScheme):
        return grid
    if isinstance(grid, Grid):
        half = grid.box[0][1]
        res = grid.resolution[0]
        if any(b != (-half, half) for b in grid.box) or any(r != res for r in grid.resolution):
            raise ValueError("tower grids must be symmetric and uniform")
        return GridScheme(half, res)
    raise TypeError("grid must be a Grid, a GridScheme, or None")


def tower_negative(shape: ShapeSpec, ladder, grid=None) -> Tower:
    """Tower along growing negative truncations of a purely negative space."""
    ns = [int(n) for n in ladder]
    if any(b <= a for a, b in zip(ns, ns[1:])) or not ns:
        raise ValueError("ladder must be strictly increasing")
    pts = [TruncationLevel(0, n) for n in ns]
    fam = _AbsoluteShapeFamily(shape, _scheme_of(grid, shape))
    return tower_from_family("negative", fam, expand_ladder(pts))


def tower_positive(shape: ShapeSpec, ladder, grid=None) -> Tower:
    """Tower along growing positive truncations."""
    ms = [int(m) for m in ladder]
    if any(b <= a for a, b in zip(ms, ms[1:])) or not ms:
        raise ValueError("ladder must be strictly increasing")
    pts = [TruncationLevel(m, 0) for m in ms]
    fam = _AbsoluteShapeFamily(shape, _scheme_of(grid, shape))
    return tower_from_family("positive", fam, expand_ladder(pts))


def tower_middle(shape: ShapeSpec, ladder, grid=None) -> Tower:
    """Tower along a ladder growing in both truncation indices."""
    pts = [TruncationLevel(int(m), int(n)) for m, n in ladder]
    fam = _AbsoluteShapeFamily(shape, _scheme_of(grid, shape))
    return tower_from_family("middle", fam, expand_ladder(pts))


def stabilized_limit(tower: Tower, window: int = 3) -> ELimit:
    """Certified direct limit of a tower.

    For each normalized degree the ranks of the composites of the last
    1, 2, ..., `window` steps must all agree; the common value is the
    limit rank. Inclusion steps enter through their inverses and must
    be invertible over the window. A run shorter than the window
    reports the final-level ranks, uncertified.
    """
    if window < 2:
        raise ValueError("window must be at least 2")
    nsteps = len(tower.steps)
    final = tower.normalized_ranks(len(tower.levels) - 1)
    if nsteps < window:
        cert = {"window": window, "levels": [[lv.m, lv.n] for lv in tower.levels],
                "composite_ranks": {}, "failures": ["ladder shorter than window"]}
        return ELimit(dict(final), False, cert)
    lo = nsteps - window
    degs = set()
    for i in range(lo, nsteps + 1):
        degs |= set(tower.normalized_ranks(i))
    comp, failures = {}, []
    stabilized = True
    limit_ranks = {}
    for k in sorted(degs):
        cur = None
        cs = []
        broken = False
        for j in range(1, window + 1):
            t = nsteps - j
            f = tower.forward_matrix(t, k)
            if f is None:
                failures.append(f"inclusion step {t} not invertible at degree {k}")
                broken = True
                break
            cur = f if cur is None else gf2.matmul(cur, f)
            cs.append(gf2.rank(cur))
        comp[k] = cs
        if broken or len(set(cs)) != 1:
            stabilized = False
            continue
        if cs[-1]:
            limit_ranks[k] = cs[-1]
    ranks = limit_ranks if stabilized else dict(final)
    cert = {"window": window,
            "levels": [[lv.m, lv.n] for lv in tower.levels[lo:]],
            "composite_ranks": {str(k): v for k, v in sorted(comp.items())},
            "failures": failures}
    return ELimit(ranks, stabilized, cert)


def tower_report(tower: Tower, limit: ELimit | None = None) -> dict:
    """JSON-ready summary: per-level ranks, per-step ranks, verdict."""
    level_ranks = []
    for i in range(len(tower.levels)):
        level_ranks.append({str(k): r for k, r in sorted(tower.normalized_ranks(i).items())})
    steps = []
    for st in tower.steps:
        off = tower.normalization(st.source)
        prof = {}
        for raw in st.map.source.degrees():
            r = st.map.rank(raw)
            if r:
                prof[str(raw - off)] = r
        steps.append({"kind": st.kind, "shift": st.map.shift,
                      "from": [tower.levels[st.source].m, tower.levels[st.source].n],
                      "to": [tower.levels[st.target].m, tower.levels[st.target].n],
                      "ranks": prof})
    rep = {"kind": tower.kind,
           "levels": [[lv.m, lv.n] for lv in tower.levels],
           "level_ranks": level_ranks,
           "steps": steps}
    if limit is not None:
        rep["limit"] = {"stabilized": limit.stabilized,
                        "ranks": {str(k): v for k, v in sorted(limit.ranks.items())},
                        "certificate": limit.certificate}
    return rep


@dataclass(frozen=True)
class EMorphism:
    """Affine-plus-finite-rank map on the tracked coordinates.

    The linear part scales axis i by diagonal[i] and then applies the
    optional axis permutation; off the tracked coordinates it is the
    identity. The compact part is a finite-rank matrix plus a
    translation.
    """

    diagonal: tuple[float, ...]
    positive_count: int
    permutation: tuple[int, ...] | None = None
    finite_rank: np.ndarray | None = None
    translation: np.ndarray | None = None


@dataclass(frozen=True)
class EMorphismReport:
    ok: bool
    violations: tuple[str, ...]
    preimage_bound: float | None


def e_morphism_validate(mor: EMorphism) -> EMorphismReport:
    """Check the morphism conditions clause by clause.

    The linear part must be an automorphism preserving the positive
    subspace; the perturbation must be finite-rank (compact on bounded
    sets); preimages of bounded sets must be bounded, which follows
    from the lower bound of the linear part.
    """
    d = len(mor.diagonal)
    m = mor.positive_count
    bad: list[str] = []
    if not 0 <= m <= d:
        bad.append("positive_count outside the tracked axis range")
    zeros = [i for i, v in enumerate(mor.diagonal) if v == 0]
    if zeros:
        bad.append(f"linear part is not an automorphism: zero diagonal at axes {zeros}")
    if mor.permutation is not None:
        perm = mor.permutation
        if sorted(perm) != list(range(d)):
            bad.append("axis permutation is not a permutation of the tracked axes")
        elif 0 <= m <= d:
            crossing = [i for i in range(d) if (i < m) != (perm[i] < m)]
            if crossing:
                bad.append("linear part does not preserve the positive subspace: "
                           f"axes {crossing} cross the splitting")
    if mor.finite_rank is not None:
        fr = np.asarray(mor.finite_rank, dtype=float)
        if fr.shape != (d, d):
            bad.append(f"finite-rank part has shape {fr.shape}, expected {(d, d)}")
    if mor.translation is not None:
        tr = np.asarray(mor.translation, dtype=float)
        if tr.shape != (d,):
            bad.append(f"translation has shape {tr.shape}, expected {(d,)}")
    bound = None
    if not zeros:
        c = min([abs(v) for v in mor.diagonal] + [1.0])
        bound = 1.0 / c
    return EMorphismReport(not bad, tuple(bad), bound)
