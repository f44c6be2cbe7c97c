"""Cubical sets on truncation grids and relative cohomology over Z2.

Spaces are unions of full grid cubes; pairs are closed cube-set pairs.
Cohomology of a pair is computed on the cells of cl(X) \\ cl(A). The
module also produces the maps the tower constructions consume: maps
induced by inclusions (cochain restriction), the Mayer-Vietoris
connecting homomorphism of a cube-set cover (computed on cochain
representatives, not just ranks), and the connecting homomorphism of a
triple. All matrices act on the coordinate bases fixed by the
reduction backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .functional import TruncationLevel
from .reduction import Complex, Reduction, closure_codes, cube_codes, decode

__all__ = [
    "Grid",
    "CubeSet",
    "CubicalPair",
    "GradedZ2Space",
    "GradedZ2Map",
    "relative_cohomology",
    "induced_inclusion",
    "mayer_vietoris_delta",
    "mayer_vietoris_sequence",
    "triple_sequence",
    "check_exact",
    "cubeset_to_text",
    "cubeset_from_text",
    "pair_to_text",
    "pair_from_text",
]


@dataclass(frozen=True)
class Grid:
    """Axis-aligned grid over a truncation box.

    Axes are ordered with the positive coordinates first, then the
    negative ones, matching the truncation layout.
    """

    level: TruncationLevel
    box: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]

    def __post_init__(self):
        if len(self.box) != self.level.dim or len(self.resolution) != self.level.dim:
            raise ValueError("box and resolution must match the level dimension")
        if any(r < 1 for r in self.resolution):
            raise ValueError("resolution must be at least 1 per axis")
        if any(hi <= lo for lo, hi in self.box):
            raise ValueError("degenerate box interval")

    @classmethod
    def uniform(cls, level: TruncationLevel, half_width: float, resolution: int) -> "Grid":
        d = level.dim
        return cls(level, tuple((-half_width, half_width) for _ in range(d)),
                   tuple(resolution for _ in range(d)))

    @property
    def dim(self) -> int:
        return self.level.dim

    @property
    def bases(self) -> np.ndarray:
        return np.array([2 * r + 1 for r in self.resolution], dtype=np.int64)

    def h(self, axis: int) -> float:
        lo, hi = self.box[axis]
        return (hi - lo) / self.resolution[axis]

    def cube_bounds(self, cubes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis lower and upper corners for cube index rows."""
        cubes = np.asarray(cubes, dtype=np.int64)
        lo = np.array([b[0] for b in self.box])
        h = np.array([self.h(i) for i in range(self.dim)])
        return lo + cubes * h, lo + (cubes + 1) * h

    def zero_gridline(self, axis: int) -> int:
        """Gridline index sitting exactly at coordinate 0 on the axis."""
        lo, hi = self.box[axis]
        r = self.resolution[axis]
        if lo != -hi or r % 2:
            raise ValueError("axis has no gridline at 0 (need symmetric box, even resolution)")
        return r // 2

    def centers(self, cubes: np.ndarray) -> np.ndarray:
        lo, hi = self.cube_bounds(cubes)
        return (lo + hi) / 2.0


class CubeSet:
    """A finite set of full cubes of a grid, kept in sorted row order."""

    def __init__(self, grid: Grid, cubes: np.ndarray):
        self.grid = grid
        cubes = np.asarray(cubes, dtype=np.int64).reshape(-1, grid.dim)
        if len(cubes):
            if (cubes < 0).any() or (cubes >= np.array(grid.resolution)[None, :]).any():
                raise ValueError("cube index out of grid bounds")
            cubes = np.unique(cubes, axis=0)
        self.cubes = cubes

    @classmethod
    def empty(cls, grid: Grid) -> "CubeSet":
        return cls(grid, np.zeros((0, grid.dim), dtype=np.int64))

    @classmethod
    def full(cls, grid: Grid) -> "CubeSet":
        axes = [np.arange(r) for r in grid.resolution]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.dim)
        return cls(grid, mesh)

    def __len__(self) -> int:
        return len(self.cubes)

    def __eq__(self, other) -> bool:
        return (isinstance(other, CubeSet) and self.grid == other.grid
                and self.cubes.shape == other.cubes.shape
                and bool((self.cubes == other.cubes).all()))

    def codes(self) -> np.ndarray:
        return cube_codes(self.grid.bases, self.cubes)

    def _from_codes(self, codes: np.ndarray) -> "CubeSet":
        digits = decode(codes, self.grid.bases)
        return CubeSet(self.grid, (digits - 1) // 2)

    def _binop(self, other: "CubeSet", op) -> "CubeSet":
        if self.grid != other.grid:
            raise ValueError("cube sets on different grids")
        return self._from_codes(op(self.codes(), other.codes()))

    def union(self, other: "CubeSet") -> "CubeSet":
        return self._binop(other, np.union1d)

    def intersection(self, other: "CubeSet") -> "CubeSet":
        return self._binop(other, lambda a, b: np.intersect1d(a, b, assume_unique=True))

    def difference(self, other: "CubeSet") -> "CubeSet":
        return self._binop(other, lambda a, b: np.setdiff1d(a, b, assume_unique=True))

    def issubset(self, other: "CubeSet") -> bool:
        return len(self.difference(other)) == 0

    def side(self, axis: int, sign: int) -> "CubeSet":
        """Cubes whose closed axis interval meets the half-space sign*x >= 0."""
        g = self.grid.zero_gridline(axis)
        k = self.cubes[:, axis]
        mask = (k + 1 >= g) if sign > 0 else (k <= g)
        return CubeSet(self.grid, self.cubes[mask])

    def thicken(self) -> "CubeSet":
        """This set together with every grid cube touching it."""
        if not len(self):
            return self
        d = self.grid.dim
        deltas = np.stack(np.meshgrid(*([np.array([-1, 0, 1])] * d), indexing="ij"),
                          axis=-1).reshape(-1, d)
        res = np.array(self.grid.resolution)
        out = []
        for delta in deltas:
            nb = self.cubes + delta[None, :]
            inside = ((nb >= 0) & (nb < res[None, :])).all(axis=1)
            out.append(nb[inside])
        return CubeSet(self.grid, np.concatenate(out, axis=0))

    def boundary_collar(self) -> "CubeSet":
        """Cubes touching the boundary of this set within the grid.

        A cube is in the collar if one of its 3^d - 1 neighbours (within
        grid bounds) is missing from the set.
        """
        if not len(self):
            return self
        codes = self.codes()
        d = self.grid.dim
        w = np.ones(d, dtype=np.int64)
        bases = self.grid.bases
        for i in range(d - 2, -1, -1):
            w[i] = w[i + 1] * bases[i + 1]
        deltas = np.stack(np.meshgrid(*([np.array([-1, 0, 1])] * d), indexing="ij"),
                          axis=-1).reshape(-1, d)
        deltas = deltas[(deltas != 0).any(axis=1)]
        res = np.array(self.grid.resolution)
        keep = np.zeros(len(codes), dtype=bool)
        for delta in deltas:
            nb = self.cubes + delta[None, :]
            inside = ((nb >= 0) & (nb < res[None, :])).all(axis=1)
            nb_codes = cube_codes(bases, nb[inside])
            pos = np.searchsorted(codes, nb_codes)
            pos[pos >= len(codes)] = len(codes) - 1
            missing = codes[pos] != nb_codes
            idx = np.nonzero(inside)[0][missing]
            keep[idx] = True
            keep[~inside] = True
        return CubeSet(self.grid, self.cubes[keep])


@dataclass(frozen=True)
class CubicalPair:
    total: CubeSet
    sub: CubeSet

    def __post_init__(self):
        if self.total.grid != self.sub.grid:
            raise ValueError("pair members live on different grids")
        if not self.sub.issubset(self.total):
            raise ValueError("sub is not contained in total")

    @property
    def grid(self) -> Grid:
        return self.total.grid


class GradedZ2Space:
    """Graded Z2 vector space, optionally backed by a cell complex."""

    def __init__(self, ranks: dict[int, int], cx: Complex | None = None,
                 red: Reduction | None = None):
        self.ranks = {int(k): int(v) for k, v in ranks.items() if v}
        self._cx = cx
        self._red = red

    @classmethod
    def from_cells(cls, bases: np.ndarray, codes: np.ndarray) -> "GradedZ2Space":
        cx = Complex(bases, codes)
        red = Reduction(cx)
        return cls(red.ranks, cx, red)

    @classmethod
    def direct_sum(cls, *spaces: "GradedZ2Space") -> "GradedZ2Space":
        ranks: dict[int, int] = {}
        for s in spaces:
            for k, v in s.ranks.items():
                ranks[k] = ranks.get(k, 0) + v
        return cls(ranks)

    def degrees(self) -> list[int]:
        return sorted(self.ranks)

    def rank(self, k: int) -> int:
        return self.ranks.get(k, 0)

    def total_rank(self) -> int:
        return sum(self.ranks.values())

    def basis(self, k: int) -> list[np.ndarray]:
        if self._red is None:
            raise ValueError("space has no cocycle basis attached")
        return self._red.basis(k)

    def coordinates(self, support: np.ndarray, k: int) -> np.ndarray:
        if self._red is None:
            raise ValueError("space has no cocycle basis attached")
        return self._red.coordinates(support, k)

    def restrict_support(self, support: np.ndarray) -> np.ndarray:
        return self._cx.restrict(support)

    def __repr__(self) -> str:
        return f"GradedZ2Space({self.ranks})"


class GradedZ2Map:
    """Degree-shifting graded map; matrices are keyed by source degree."""

    def __init__(self, source: GradedZ2Space, target: GradedZ2Space, shift: int,
                 matrices: dict[int, np.ndarray]):
        self.source = source
        self.target = target
        self.shift = int(shift)
        self.matrices = {}
        for k, m in matrices.items():
            m = np.asarray(m, dtype=np.uint8)
            want = (target.rank(k + shift), source.rank(k))
            if m.shape != want:
                raise ValueError(f"matrix at degree {k} has shape {m.shape}, expected {want}")
            self.matrices[int(k)] = m

    @classmethod
    def identity(cls, space: GradedZ2Space) -> "GradedZ2Map":
        mats = {k: np.eye(r, dtype=np.uint8) for k, r in space.ranks.items()}
        return cls(space, space, 0, mats)

    def matrix(self, k: int) -> np.ndarray:
        if k in self.matrices:
            return self.matrices[k]
        return np.zeros((self.target.rank(k + self.shift), self.source.rank(k)), dtype=np.uint8)

    def then(self, other: "GradedZ2Map") -> "GradedZ2Map":
        """Composite other after self."""
        if other.source is not self.target:
            raise ValueError("maps are not composable")
        from . import gf2
        mats = {}
        for k in self.source.degrees():
            mats[k] = gf2.matmul(other.matrix(k + self.shift), self.matrix(k))
        return GradedZ2Map(self.source, other.target, self.shift + other.shift, mats)

    def rank(self, k: int) -> int:
        from . import gf2
        return gf2.rank(self.matrix(k))

    def rank_profile(self) -> dict[int, int]:
        return {k: r for k in self.source.degrees() if (r := self.rank(k))}

    def is_iso(self) -> bool:
        from . import gf2
        for k in set(self.source.degrees()) | {d - self.shift for d in self.target.degrees()}:
            m = self.matrix(k)
            if m.shape[0] != m.shape[1]:
                return False
            if m.shape[0] and gf2.rank(m) != m.shape[0]:
                return False
        return True


def _pair_cells(pair: CubicalPair) -> tuple[np.ndarray, np.ndarray]:
    bases = pair.grid.bases
    total = closure_codes(bases, pair.total.cubes)
    sub = closure_codes(bases, pair.sub.cubes)
    return total, sub


def relative_cohomology(pair: CubicalPair) -> GradedZ2Space:
    """H^*(X, A; Z2) of a closed cube-set pair."""
    total, sub = _pair_cells(pair)
    codes = np.setdiff1d(total, sub, assume_unique=True)
    return GradedZ2Space.from_cells(pair.grid.bases, codes)


def induced_inclusion(small: CubicalPair, big: CubicalPair,
                      small_space: GradedZ2Space | None = None,
                      big_space: GradedZ2Space | None = None) -> GradedZ2Map:
    """Map on cohomology induced by the inclusion (X,A) into (X',A').

    Contravariant: the returned map goes H(big) -> H(small) by cochain
    restriction. Both pairs must live on the same grid.
    """
    if small.grid != big.grid:
        raise ValueError("pairs live on incompatible grids")
    if not small.total.issubset(big.total) or not small.sub.issubset(big.sub):
        raise ValueError("inclusion preconditions violated")
    sm = small_space if small_space is not None else relative_cohomology(small)
    bg = big_space if big_space is not None else relative_cohomology(big)
    mats = {}
    for k in bg.degrees():
        cols = [sm.coordinates(sm.restrict_support(rep), k) for rep in bg.basis(k)]
        mats[k] = (np.stack(cols, axis=1) if cols
                   else np.zeros((sm.rank(k), 0), dtype=np.uint8))
    return GradedZ2Map(bg, sm, 0, mats)


def _mv_guard(sa, ta, sb, tb) -> None:
    bad_a = np.setdiff1d(np.intersect1d(sa, tb, assume_unique=True), ta, assume_unique=True)
    bad_b = np.setdiff1d(np.intersect1d(sb, ta, assume_unique=True), tb, assume_unique=True)
    if len(bad_a) or len(bad_b):
        raise ValueError(
            "cover is not compatible with the subdivision of the subcomplex; "
            "the Mayer-Vietoris sequence is not defined at the cochain level")


def _relative_mv(bases, sa, ta, sb, tb):
    """Spaces and connecting map of the cover {(A,TA),(B,TB)} at cell level."""
    _mv_guard(sa, ta, sb, tb)
    ra = np.setdiff1d(sa, ta, assume_unique=True)
    rb = np.setdiff1d(sb, tb, assume_unique=True)
    ri = np.intersect1d(ra, rb, assume_unique=True)
    ru = np.union1d(ra, rb)
    cxa = Complex(bases, ra)
    reda = Reduction(cxa)
    space_a = GradedZ2Space(reda.ranks, cxa, reda)
    space_i = GradedZ2Space.from_cells(bases, ri)
    space_u = GradedZ2Space.from_cells(bases, ru)
    cxb = Complex(bases, rb)
    redb = Reduction(cxb)
    space_b = GradedZ2Space(redb.ranks, cxb, redb)
    mats = {}
    for k in space_i.degrees():
        cols = []
        for z in space_i.basis(k):
            w = cxa.coboundary(z)
            if len(np.intersect1d(w, ri, assume_unique=True)):
                raise AssertionError("connecting cochain does not vanish on the intersection")
            cols.append(space_u.coordinates(w, k + 1))
        mats[k] = (np.stack(cols, axis=1) if cols
                   else np.zeros((space_u.rank(k + 1), 0), dtype=np.uint8))
    delta = GradedZ2Map(space_i, space_u, 1, mats)
    return space_a, space_b, space_i, space_u, delta


def mayer_vietoris_delta(whole: CubeSet, part_a: CubeSet, part_b: CubeSet) -> GradedZ2Map:
    """Connecting homomorphism H^k(A n B) -> H^{k+1}(A u B) of a cover."""
    if not part_a.union(part_b) == whole:
        raise ValueError("parts do not cover the whole cube set")
    bases = whole.grid.bases
    empty = np.zeros(0, dtype=np.int64)
    sa = closure_codes(bases, part_a.cubes)
    sb = closure_codes(bases, part_b.cubes)
    _, _, _, _, delta = _relative_mv(bases, sa, empty, sb, empty)
    return delta


def mayer_vietoris_sequence(whole: CubeSet, part_a: CubeSet, part_b: CubeSet):
    """The three maps of the Mayer-Vietoris sequence of a cube-set cover.

    Returns (alpha, beta, delta) with alpha: H(U) -> H(A) + H(B),
    beta: H(A) + H(B) -> H(A n B), delta the connecting map. One full
    period of the sequence; repeat it to check exactness at all nodes.
    """
    if not part_a.union(part_b) == whole:
        raise ValueError("parts do not cover the whole cube set")
    bases = whole.grid.bases
    empty = np.zeros(0, dtype=np.int64)
    sa = closure_codes(bases, part_a.cubes)
    sb = closure_codes(bases, part_b.cubes)
    space_a, space_b, space_i, space_u, delta = _relative_mv(bases, sa, empty, sb, empty)
    space_ab = GradedZ2Space.direct_sum(space_a, space_b)
    alpha_m, beta_m = {}, {}
    for k in space_u.degrees():
        cols = []
        for rep in space_u.basis(k):
            ca = space_a.coordinates(space_a.restrict_support(rep), k)
            cb = space_b.coordinates(space_b.restrict_support(rep), k)
            cols.append(np.concatenate([ca, cb]))
        alpha_m[k] = (np.stack(cols, axis=1) if cols
                      else np.zeros((space_ab.rank(k), 0), dtype=np.uint8))
    for k in space_ab.degrees():
        cols = []
        for rep in space_a.basis(k):
            cols.append(space_i.coordinates(space_i.restrict_support(rep), k))
        for rep in space_b.basis(k):
            cols.append(space_i.coordinates(space_i.restrict_support(rep), k))
        beta_m[k] = (np.stack(cols, axis=1) if cols
                     else np.zeros((space_i.rank(k), 0), dtype=np.uint8))
    alpha = GradedZ2Map(space_u, space_ab, 0, alpha_m)
    beta = GradedZ2Map(space_ab, space_i, 0, beta_m)
    delta = GradedZ2Map(space_i, space_u, 1, delta.matrices)
    return alpha, beta, delta


def triple_sequence(x: CubeSet, b: CubeSet, c: CubeSet):
    """Maps of the long exact sequence of the triple C <= B <= X.

    Returns (incl, restr, delta) with incl: H(X,B) -> H(X,C),
    restr: H(X,C) -> H(B,C), delta: H(B,C) -> H^{+1}(X,B).
    """
    if not (c.issubset(b) and b.issubset(x)):
        raise ValueError("triple is not nested")
    bases = x.grid.bases
    sx = closure_codes(bases, x.cubes)
    sb = closure_codes(bases, b.cubes)
    sc = closure_codes(bases, c.cubes)
    cxb_cells = np.setdiff1d(sx, sb, assume_unique=True)
    cxc_cells = np.setdiff1d(sx, sc, assume_unique=True)
    cbc_cells = np.setdiff1d(sb, sc, assume_unique=True)
    space_xb = GradedZ2Space.from_cells(bases, cxb_cells)
    space_xc = GradedZ2Space.from_cells(bases, cxc_cells)
    space_bc = GradedZ2Space.from_cells(bases, cbc_cells)
    incl_m, restr_m, delta_m = {}, {}, {}
    for k in space_xb.degrees():
        cols = [space_xc.coordinates(rep, k) for rep in space_xb.basis(k)]
        incl_m[k] = np.stack(cols, axis=1)
    for k in space_xc.degrees():
        cols = [space_bc.coordinates(space_bc.restrict_support(rep), k)
                for rep in space_xc.basis(k)]
        restr_m[k] = np.stack(cols, axis=1)
    for k in space_bc.degrees():
        cols = []
        for z in space_bc.basis(k):
            w = space_xc._cx.coboundary(z)
            if len(np.intersect1d(w, cbc_cells, assume_unique=True)):
                raise AssertionError("triple connecting cochain leaks into (B,C)")
            cols.append(space_xb.coordinates(w, k + 1))
        delta_m[k] = (np.stack(cols, axis=1) if cols
                      else np.zeros((space_xb.rank(k + 1), 0), dtype=np.uint8))
    incl = GradedZ2Map(space_xb, space_xc, 0, incl_m)
    restr = GradedZ2Map(space_xc, space_bc, 0, restr_m)
    delta = GradedZ2Map(space_bc, space_xb, 1, delta_m)
    return incl, restr, delta


def check_exact(maps: list[GradedZ2Map]) -> bool:
    """Rank-nullity exactness at every interior node of the map chain."""
    from . import gf2
    for f, g in zip(maps, maps[1:]):
        if f.target is not g.source:
            raise ValueError("consecutive maps are not composable")
        node = f.target
        for t in node.degrees():
            im = gf2.rank(f.matrix(t - f.shift))
            ker = g.source.rank(t) - gf2.rank(g.matrix(t))
            if im != ker:
                return False
    return True


def cubeset_to_text(cs: CubeSet) -> str:
    g = cs.grid
    head = ["grid", str(g.level.m), str(g.level.n)]
    head += [str(r) for r in g.resolution]
    head += [repr(lo) for lo, _ in g.box]
    head += [repr(hi) for _, hi in g.box]
    lines = [" ".join(head)]
    for row in cs.cubes:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def cubeset_from_text(text: str) -> CubeSet:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("grid "):
        raise ValueError("missing grid header line")
    parts = lines[0].split()
    m, n = int(parts[1]), int(parts[2])
    d = m + n
    if len(parts) != 3 + 3 * d:
        raise ValueError("malformed grid header")
    res = tuple(int(v) for v in parts[3 : 3 + d])
    los = [float(v) for v in parts[3 + d : 3 + 2 * d]]
    his = [float(v) for v in parts[3 + 2 * d : 3 + 3 * d]]
    grid = Grid(TruncationLevel(m, n), tuple(zip(los, his)), res)
    rows = [[int(v) for v in ln.split()] for ln in lines[1:]]
    cubes = np.array(rows, dtype=np.int64).reshape(-1, d)
    return CubeSet(grid, cubes)


def pair_to_text(pair: CubicalPair) -> str:
    return "pair\n" + cubeset_to_text(pair.total) + "sub\n" + "\n".join(
        " ".join(str(int(v)) for v in row) for row in pair.sub.cubes) + "\n"


def pair_from_text(text: str) -> CubicalPair:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "pair":
        raise ValueError("missing pair header")
    try:
        split = next(i for i, ln in enumerate(lines) if ln.strip() == "sub")
    except StopIteration:
        raise ValueError("missing sub separator") from None
    total = cubeset_from_text("\n".join(lines[1:split]))
    rows = [[int(v) for v in ln.split()] for ln in lines[split + 1 :] if ln.strip()]
    sub = CubeSet(total.grid, np.array(rows, dtype=np.int64).reshape(-1, total.grid.dim))
    return CubicalPair(total, sub)
