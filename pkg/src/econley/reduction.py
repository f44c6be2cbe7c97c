"""Relative cubical cochain complexes over GF(2) and their reduction.

A cell of a cubical grid is encoded as a single int64 in mixed radix:
axis i with resolution r_i contributes a digit p in [0, 2*r_i], where
even p = 2k is the vertex at gridline k and odd p = 2k+1 is the unit
interval [k, k+1]. A cell is a product of such intervals, so a code is
the digit vector packed against ``bases = 2*res + 1``. Faces and
cofaces of a cell differ from it by +-weight on one axis, which keeps
all incidence computations arithmetic on sorted code arrays.

The homology workhorse is coreduction with transport: removing a pair
(a, b) with current boundary of b equal to {a} preserves cohomology,
and recording the surviving cofaces of a at removal time is enough to
push an arbitrary cocycle down through the whole removal sequence and
read off its class coordinates. Cells that get stuck are handled by
three exact rules: isolated cells (no surviving faces or cofaces)
each carry one class of their dimension; a surviving vertex at a
stall seeds one degree-0 class per component and unlocks the cascade
again; whatever small remainder survives goes through dense GF(2)
elimination.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import gf2

__all__ = ["Complex", "Reduction", "cube_codes", "closure_codes", "transcode", "product_codes"]

_DENSE_LIMIT = 40_000


def _weights(bases: np.ndarray) -> np.ndarray:
    """Row-major strides for the mixed-radix packing; last axis fastest."""
    bases = np.asarray(bases, dtype=np.int64)
    w = np.ones(len(bases), dtype=np.int64)
    for i in range(len(bases) - 2, -1, -1):
        w[i] = w[i + 1] * bases[i + 1]
    if len(bases) and w[0] * bases[0] >= 2**62:
        raise ValueError("grid too large to encode cells in 64 bits")
    return w


def cube_codes(bases: np.ndarray, cubes: np.ndarray) -> np.ndarray:
    """Codes of top-dimensional cells for cube multi-indices (K, d)."""
    bases = np.asarray(bases, dtype=np.int64)
    cubes = np.asarray(cubes, dtype=np.int64)
    if cubes.size == 0:
        return np.zeros(0, dtype=np.int64)
    if cubes.ndim != 2 or cubes.shape[1] != len(bases):
        raise ValueError("cube array shape does not match grid")
    if (cubes < 0).any() or (2 * cubes + 1 >= bases[None, :]).any():
        raise ValueError("cube index out of grid bounds")
    w = _weights(bases)
    return ((2 * cubes + 1) * w[None, :]).sum(axis=1)


def closure_codes(bases: np.ndarray, cubes: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """Sorted codes of all cells in the closure of the given full cubes."""
    bases = np.asarray(bases, dtype=np.int64)
    top = cube_codes(bases, cubes)
    if top.size == 0:
        return top
    d = len(bases)
    w = _weights(bases)
    deltas = np.stack(np.meshgrid(*([np.array([-1, 0, 1])] * d), indexing="ij"), axis=-1).reshape(-1, d)
    offsets = (deltas * w[None, :]).sum(axis=1)
    per = max(1, chunk // len(offsets))
    pieces = []
    for s in range(0, len(top), per):
        block = (top[s : s + per, None] + offsets[None, :]).ravel()
        pieces.append(np.unique(block))
    if len(pieces) == 1:
        return pieces[0]
    return np.unique(np.concatenate(pieces))


def cell_dims(codes: np.ndarray, bases: np.ndarray) -> np.ndarray:
    """Dimension (number of interval axes) of each cell code."""
    bases = np.asarray(bases, dtype=np.int64)
    w = _weights(bases)
    dims = np.zeros(len(codes), dtype=np.uint8)
    for i in range(len(bases)):
        dims += ((codes // w[i]) % bases[i] % 2).astype(np.uint8)
    return dims


def decode(codes: np.ndarray, bases: np.ndarray) -> np.ndarray:
    """Digit matrix (N, d) of the given codes."""
    bases = np.asarray(bases, dtype=np.int64)
    w = _weights(bases)
    out = np.empty((len(codes), len(bases)), dtype=np.int64)
    for i in range(len(bases)):
        out[:, i] = (codes // w[i]) % bases[i]
    return out


def encode(digits: np.ndarray, bases: np.ndarray) -> np.ndarray:
    bases = np.asarray(bases, dtype=np.int64)
    w = _weights(bases)
    return (np.asarray(digits, dtype=np.int64) * w[None, :]).sum(axis=1)


def transcode(
    codes: np.ndarray,
    src_bases: np.ndarray,
    tgt_bases: np.ndarray,
    axis_map: list[int],
    fill: dict[int, int],
) -> np.ndarray:
    """Re-encode cells into a larger grid.

    Source axis i becomes target axis ``axis_map[i]``; every target
    axis not covered by the map takes the constant digit ``fill[j]``.
    """
    src_bases = np.asarray(src_bases, dtype=np.int64)
    tgt_bases = np.asarray(tgt_bases, dtype=np.int64)
    digits = decode(codes, src_bases)
    out = np.empty((len(codes), len(tgt_bases)), dtype=np.int64)
    used = set(axis_map)
    for j in range(len(tgt_bases)):
        if j not in used:
            out[:, j] = fill[j]
    for i, j in enumerate(axis_map):
        out[:, j] = digits[:, i]
    return encode(out, tgt_bases)


def product_codes(codes_a: np.ndarray, bases_a: np.ndarray, codes_b: np.ndarray, bases_b: np.ndarray) -> np.ndarray:
    """Codes of all product cells a x b in the concatenated grid, sorted."""
    bases_b = np.asarray(bases_b, dtype=np.int64)
    shift = int(np.prod(bases_b, dtype=np.int64)) if len(bases_b) else 1
    hi = np.asarray(codes_a, dtype=np.int64) * shift
    out = (hi[:, None] + np.asarray(codes_b, dtype=np.int64)[None, :]).ravel()
    out.sort()
    return out


@njit(cache=True)
def _collect_faces(codes, digits_parity, axis_weight, out_cand, out_src):
    n = 0
    for i in range(len(codes)):
        if digits_parity[i]:
            out_cand[n] = codes[i] - axis_weight
            out_src[n] = i
            n += 1
            out_cand[n] = codes[i] + axis_weight
            out_src[n] = i
            n += 1
    return n


class Complex:
    """Cells of a relative pair on a fixed grid, with CSR incidence."""

    def __init__(self, bases: np.ndarray, codes: np.ndarray):
        self.bases = np.asarray(bases, dtype=np.int64)
        self.codes = np.asarray(codes, dtype=np.int64)
        if len(self.codes) > 1 and not (np.diff(self.codes) > 0).all():
            raise ValueError("cell codes must be strictly sorted")
        self.weights = _weights(self.bases)
        self.dims = cell_dims(self.codes, self.bases)
        self._build_incidence()

    @classmethod
    def from_cubes(cls, bases, cubes, minus_cubes=None) -> "Complex":
        """Complex of cl(X) \\ cl(A) for cube sets X and (optional) A."""
        codes = closure_codes(bases, cubes)
        if minus_cubes is not None and len(minus_cubes):
            drop = closure_codes(bases, minus_cubes)
            codes = np.setdiff1d(codes, drop, assume_unique=True)
        return cls(bases, codes)

    def _build_incidence(self) -> None:
        n = len(self.codes)
        rows_parts, cols_parts = [], []
        for i in range(len(self.bases)):
            w = self.weights[i]
            parity = ((self.codes // w) % self.bases[i] % 2).astype(np.uint8)
            cnt = int(parity.sum())
            if cnt == 0:
                continue
            cand = np.empty(2 * cnt, dtype=np.int64)
            src = np.empty(2 * cnt, dtype=np.int64)
            _collect_faces(self.codes, parity, w, cand, src)
            pos = np.searchsorted(self.codes, cand)
            pos[pos >= n] = n - 1
            ok = self.codes[pos] == cand
            rows_parts.append(src[ok].astype(np.int32))
            cols_parts.append(pos[ok].astype(np.int32))
        if rows_parts:
            rows = np.concatenate(rows_parts)
            cols = np.concatenate(cols_parts)
        else:
            rows = np.zeros(0, dtype=np.int32)
            cols = np.zeros(0, dtype=np.int32)
        order = np.argsort(rows, kind="stable")
        self.face_idx = cols[order]
        self.face_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.face_ptr, rows + 1, 1)
        np.cumsum(self.face_ptr, out=self.face_ptr)
        order2 = np.argsort(cols, kind="stable")
        self.cof_idx = rows[order2]
        self.cof_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.cof_ptr, cols + 1, 1)
        np.cumsum(self.cof_ptr, out=self.cof_ptr)

    def __len__(self) -> int:
        return len(self.codes)

    def ids(self, support: np.ndarray) -> np.ndarray:
        """Positions of the given sorted codes; raises if any is absent."""
        support = np.asarray(support, dtype=np.int64)
        if support.size == 0:
            return np.zeros(0, dtype=np.int64)
        pos = np.searchsorted(self.codes, support)
        if (pos >= len(self.codes)).any() or (self.codes[pos] != support).any():
            raise KeyError("support contains cells outside the complex")
        return pos

    def restrict(self, support: np.ndarray) -> np.ndarray:
        """Part of a sorted support that lies in this complex."""
        return np.intersect1d(np.asarray(support, dtype=np.int64), self.codes, assume_unique=True)

    def coboundary(self, support: np.ndarray) -> np.ndarray:
        """Support of delta(chi_support) within this complex, sorted."""
        ids = self.ids(support)
        if ids.size == 0:
            return np.zeros(0, dtype=np.int64)
        pieces = [self.cof_idx[self.cof_ptr[i] : self.cof_ptr[i + 1]] for i in ids]
        if not pieces:
            return np.zeros(0, dtype=np.int64)
        allc = np.concatenate(pieces)
        vals, counts = np.unique(allc, return_counts=True)
        return self.codes[vals[counts % 2 == 1]]

    def is_cocycle(self, support: np.ndarray) -> bool:
        return len(self.coboundary(support)) == 0


@njit(cache=True)
def _cascade(face_ptr, face_idx, cof_ptr, cof_idx, alive, nface, ncof,
             queue, qlen, pair_a, pair_b, rec_ptr, rec_idx, npairs0, rpos0):
    head = 0
    tail = qlen
    npairs = npairs0
    rpos = rpos0
    while head < tail:
        b = queue[head]
        head += 1
        if alive[b] == 0 or nface[b] != 1:
            continue
        a = -1
        for j in range(face_ptr[b], face_ptr[b + 1]):
            f = face_idx[j]
            if alive[f]:
                a = f
                break
        pair_a[npairs] = a
        pair_b[npairs] = b
        rec_ptr[npairs] = rpos
        alive[a] = 0
        alive[b] = 0
        for j in range(cof_ptr[a], cof_ptr[a + 1]):
            c = cof_idx[j]
            if alive[c]:
                rec_idx[rpos] = c
                rpos += 1
                nface[c] -= 1
                if nface[c] == 1:
                    queue[tail] = c
                    tail += 1
        for j in range(cof_ptr[b], cof_ptr[b + 1]):
            c = cof_idx[j]
            if alive[c]:
                nface[c] -= 1
                if nface[c] == 1:
                    queue[tail] = c
                    tail += 1
        for j in range(face_ptr[a], face_ptr[a + 1]):
            f = face_idx[j]
            if alive[f]:
                ncof[f] -= 1
        for j in range(face_ptr[b], face_ptr[b + 1]):
            f = face_idx[j]
            if alive[f]:
                ncof[f] -= 1
        npairs += 1
    rec_ptr[npairs] = rpos
    return npairs, rpos


@njit(cache=True)
def _component(v, face_ptr, face_idx, cof_ptr, cof_idx, alive, dims, visited, stack):
    head = 0
    tail = 0
    stack[tail] = v
    tail += 1
    visited[v] = 1
    while head < tail:
        u = stack[head]
        head += 1
        for j in range(cof_ptr[u], cof_ptr[u + 1]):
            e = cof_idx[j]
            if alive[e] and dims[e] == 1:
                for k in range(face_ptr[e], face_ptr[e + 1]):
                    w = face_idx[k]
                    if alive[w] and visited[w] == 0:
                        visited[w] = 1
                        stack[tail] = w
                        tail += 1
    return tail


@njit(cache=True)
def _replay(pair_b, rec_ptr, rec_idx, start, stop, phi):
    for i in range(start, stop):
        if phi[pair_b[i]]:
            for j in range(rec_ptr[i], rec_ptr[i + 1]):
                phi[rec_idx[j]] ^= 1


class Reduction:
    """Cohomology of a Complex with class representatives and coordinates.

    ``ranks`` maps degree to rank. ``basis(k)`` returns representative
    cocycles (sorted code arrays) in a fixed order, and
    ``coordinates(support, k)`` expresses any degree-k cocycle in that
    basis. Restricted to cocycles, coordinates are class invariants and
    coordinates of basis(k)[i] give the i-th unit vector.
    """

    def __init__(self, cx: Complex, dense_limit: int = _DENSE_LIMIT):
        self.cx = cx
        n = len(cx)
        self._events: list[tuple] = []
        self._classes: list[tuple[int, int]] = []
        alive = np.ones(n, dtype=np.uint8)
        nface = np.diff(cx.face_ptr).astype(np.int16)
        ncof = np.diff(cx.cof_ptr).astype(np.int16)
        cap = len(cx.cof_idx) + n + 8
        queue = np.empty(cap, dtype=np.int32)
        self._pair_a = np.empty(n // 2 + 1, dtype=np.int32)
        self._pair_b = np.empty(n // 2 + 1, dtype=np.int32)
        self._rec_ptr = np.zeros(n // 2 + 2, dtype=np.int64)
        self._rec_idx = np.empty(len(cx.cof_idx) + 1, dtype=np.int32)
        npairs = 0
        rpos = 0
        if n:
            init = np.nonzero(nface == 1)[0].astype(np.int32)
            queue[: len(init)] = init
            qlen = len(init)
            stack = np.empty(n, dtype=np.int32)
            while True:
                start = npairs
                npairs, rpos = _cascade(
                    cx.face_ptr, cx.face_idx, cx.cof_ptr, cx.cof_idx,
                    alive, nface, ncof, queue, qlen,
                    self._pair_a, self._pair_b, self._rec_ptr, self._rec_idx,
                    npairs, rpos)
                if npairs > start:
                    self._events.append(("pairs", start, npairs))
                qlen = 0
                isolated = np.nonzero(alive.astype(bool) & (nface == 0) & (ncof == 0))[0]
                if len(isolated):
                    for c in isolated:
                        self._events.append(("cls", int(c)))
                        self._classes.append((int(cx.dims[c]), len(self._classes)))
                        alive[c] = 0
                    continue
                verts = np.nonzero(alive.astype(bool) & (cx.dims == 0))[0]
                if len(verts):
                    v = int(verts[0])
                    visited = np.zeros(n, dtype=np.uint8)
                    cnt = _component(v, cx.face_ptr, cx.face_idx, cx.cof_ptr, cx.cof_idx,
                                     alive, cx.dims, visited, stack)
                    comp = np.sort(stack[:cnt].copy())
                    self._events.append(("seed", v, comp))
                    self._classes.append((0, len(self._classes)))
                    alive[v] = 0
                    qlen = 0
                    for j in range(cx.cof_ptr[v], cx.cof_ptr[v + 1]):
                        e = cx.cof_idx[j]
                        if alive[e]:
                            nface[e] -= 1
                            if nface[e] == 1:
                                queue[qlen] = e
                                qlen += 1
                    continue
                break
        self._alive_ids = np.nonzero(alive)[0]
        self._n_event_classes = len(self._classes)
        self._build_dense(dense_limit)
        self.ranks: dict[int, int] = {}
        for d, _ in self._classes:
            self.ranks[d] = self.ranks.get(d, 0) + 1
        self._basis_cache: dict[int, list[np.ndarray]] = {}

    def _build_dense(self, dense_limit: int) -> None:
        cx = self.cx
        ids = self._alive_ids
        if len(ids) > dense_limit:
            raise RuntimeError(f"reduction stalled with {len(ids)} cells remaining")
        self._dense_ids = ids
        self._dense_pos = {int(c): i for i, c in enumerate(ids)}
        self._dense_by_deg: dict[int, np.ndarray] = {}
        self._dense_reps: dict[int, np.ndarray] = {}
        self._dense_solver: dict[int, tuple[np.ndarray, int]] = {}
        if len(ids) == 0:
            return
        degs = cx.dims[ids]
        for k in np.unique(degs):
            self._dense_by_deg[int(k)] = ids[degs == k]
        for k, kcells in sorted(self._dense_by_deg.items()):
            up = self._dense_by_deg.get(k + 1, np.zeros(0, dtype=np.int64))
            down = self._dense_by_deg.get(k - 1, np.zeros(0, dtype=np.int64))
            m_up = self._delta_matrix(kcells, up)
            m_down = self._delta_matrix(down, kcells)
            kernel = gf2.nullspace(m_up)
            _, piv = gf2.rref(m_down)
            image = m_down[:, piv] if len(piv) else np.zeros((len(kcells), 0), dtype=np.uint8)
            iw = image.shape[1]
            _, spiv = gf2.rref(np.concatenate([image, kernel], axis=1))
            sel = [p - iw for p in spiv if p >= iw]
            rep_m = (kernel[:, sel] if sel
                     else np.zeros((len(kcells), 0), dtype=np.uint8))
            self._dense_reps[int(k)] = rep_m
            solver = np.concatenate([rep_m, image], axis=1)
            self._dense_solver[int(k)] = (solver, rep_m.shape[1])
            for j in range(rep_m.shape[1]):
                self._classes.append((int(k), len(self._classes)))

    def _delta_matrix(self, src_ids: np.ndarray, tgt_ids: np.ndarray) -> np.ndarray:
        """Dense coboundary block from degree cells src to cells tgt."""
        cx = self.cx
        m = np.zeros((len(tgt_ids), len(src_ids)), dtype=np.uint8)
        tpos = {int(c): i for i, c in enumerate(tgt_ids)}
        for j, c in enumerate(src_ids):
            for t in cx.cof_idx[cx.cof_ptr[c] : cx.cof_ptr[c + 1]]:
                i = tpos.get(int(t))
                if i is not None:
                    m[i, j] ^= 1
        return m

    def degrees(self) -> list[int]:
        return sorted(self.ranks)

    def rank(self, k: int) -> int:
        return self.ranks.get(k, 0)

    def _class_order(self, k: int) -> list[int]:
        return [i for i, (d, _) in enumerate(self._classes) if d == k]

    def basis(self, k: int) -> list[np.ndarray]:
        """Representative cocycles of degree k as sorted code arrays."""
        if k in self._basis_cache:
            return self._basis_cache[k]
        cx = self.cx
        reps: list[np.ndarray] = []
        ev_class = 0
        by_index: dict[int, np.ndarray] = {}
        for ev in self._events:
            if ev[0] == "cls":
                cell = ev[1]
                if cx.dims[cell] == k:
                    by_index[ev_class] = cx.codes[np.array([cell])]
                ev_class += 1
            elif ev[0] == "seed":
                _, v, comp = ev
                if k == 0:
                    by_index[ev_class] = np.sort(cx.codes[comp])
                ev_class += 1
        rep_m = self._dense_reps.get(k)
        if rep_m is not None and rep_m.shape[1]:
            kcells = self._dense_by_deg[k]
            offset = self._n_event_classes
            for kk in sorted(self._dense_reps):
                if kk == k:
                    break
                offset += self._dense_reps[kk].shape[1]
            for j in range(rep_m.shape[1]):
                by_index[offset + j] = np.sort(cx.codes[kcells[rep_m[:, j].astype(bool)]])
        order = self._class_order(k)
        reps = [by_index[i] for i in order]
        self._basis_cache[k] = reps
        return reps

    def coordinates(self, support: np.ndarray, k: int) -> np.ndarray:
        """Coordinates of a degree-k cocycle in the basis(k) order."""
        cx = self.cx
        n = len(cx)
        coords = np.zeros(len(self._classes), dtype=np.uint8)
        phi = np.zeros(n, dtype=np.uint8)
        ids = cx.ids(np.asarray(support, dtype=np.int64))
        phi[ids] = 1
        ev_class = 0
        for ev in self._events:
            if ev[0] == "pairs":
                _replay(self._pair_b, self._rec_ptr, self._rec_idx, ev[1], ev[2], phi)
            elif ev[0] == "cls":
                coords[ev_class] = phi[ev[1]]
                ev_class += 1
            else:
                coords[ev_class] = phi[ev[1]]
                ev_class += 1
        if len(self._dense_ids):
            for kk, kcells in sorted(self._dense_by_deg.items()):
                vec = phi[kcells]
                if not vec.any():
                    continue
                solver, nreps = self._dense_solver[kk]
                sol = gf2.solve(solver, vec)
                if sol is None:
                    raise ValueError("support is not a cocycle of the complex")
                offset = self._n_event_classes
                for k2 in sorted(self._dense_reps):
                    if k2 == kk:
                        break
                    offset += self._dense_reps[k2].shape[1]
                coords[offset : offset + nreps] = sol[:nreps]
        order = self._class_order(k)
        return coords[order]
