"""Dense linear algebra over GF(2).

Matrices are 2-D numpy arrays of dtype uint8 holding 0/1 entries. All
routines leave their inputs untouched. Sizes here are small (ranks of
cohomology groups, boundary matrices of reduced complexes), so plain
row elimination is enough.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_gf2",
    "matmul",
    "rref",
    "rank",
    "nullspace",
    "solve",
    "inverse",
    "is_invertible",
]


def as_gf2(a) -> np.ndarray:
    """Coerce array-like input to a 2-D uint8 matrix with entries in {0,1}."""
    m = np.asarray(a, dtype=np.int64) & 1
    if m.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    return m.astype(np.uint8)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over GF(2)."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
    return ((a.astype(np.int64) @ b.astype(np.int64)) & 1).astype(np.uint8)


def rref(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form.

    Args:
        a: matrix over GF(2).

    Returns:
        (r, pivots) where r is the reduced form and pivots lists the
        pivot column of each nonzero row in order.

    Rows are bit-packed into uint64 words internally so the row
    operations touch 1/8 of the bytes a uint8 sweep would.
    """
    m = as_gf2(a)
    rows, cols = m.shape
    packed = np.packbits(m, axis=1, bitorder="little")
    word_bytes = ((cols + 63) // 64) * 8
    if packed.shape[1] < word_bytes:
        pad = np.zeros((rows, word_bytes - packed.shape[1]), dtype=np.uint8)
        packed = np.concatenate([packed, pad], axis=1)
    packed = np.ascontiguousarray(packed).view(np.uint64)
    pivots: list[int] = []
    row = 0
    for col in range(cols):
        if row >= rows:
            break
        w, b = col >> 6, np.uint64(col & 63)
        bits = (packed[row:, w] >> b) & np.uint64(1)
        hot = np.nonzero(bits)[0]
        if hot.size == 0:
            continue
        pr = row + hot[0]
        if pr != row:
            packed[[row, pr]] = packed[[pr, row]]
        mask = ((packed[:, w] >> b) & np.uint64(1)).astype(bool)
        mask[row] = False
        if mask.any():
            packed[mask] ^= packed[row]
        pivots.append(col)
        row += 1
    out = np.unpackbits(packed.view(np.uint8), axis=1, bitorder="little")
    return np.ascontiguousarray(out[:, :cols]), pivots


def rank(a: np.ndarray) -> int:
    """Rank of a matrix over GF(2); 0 for matrices with an empty axis."""
    a = as_gf2(a)
    if a.size == 0:
        return 0
    return len(rref(a)[1])


def nullspace(a: np.ndarray) -> np.ndarray:
    """Basis of {x : a @ x = 0}, returned as matrix columns.

    Shape is (n, n - rank) for an (m, n) input; the result may have
    zero columns.
    """
    a = as_gf2(a)
    m, n = a.shape
    r, pivots = rref(a)
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((n, len(free)), dtype=np.uint8)
    for j, fc in enumerate(free):
        basis[fc, j] = 1
        for i, pc in enumerate(pivots):
            basis[pc, j] = r[i, fc]
    return basis


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution x of a @ x = b over GF(2), or None if inconsistent.

    b may be a vector or a matrix of stacked right-hand-side columns;
    the result matches its shape.
    """
    a = as_gf2(a)
    vec = b.ndim == 1
    bm = as_gf2(b.reshape(-1, 1) if vec else b)
    if bm.shape[0] != a.shape[0]:
        raise ValueError("right-hand side has wrong length")
    aug = np.concatenate([a, bm], axis=1)
    r, pivots = rref(aug)
    n = a.shape[1]
    if any(p >= n for p in pivots):
        return None
    x = np.zeros((n, bm.shape[1]), dtype=np.uint8)
    for i, pc in enumerate(pivots):
        x[pc] = r[i, n:]
    return x[:, 0] if vec else x


def inverse(a: np.ndarray) -> np.ndarray | None:
    """Inverse of a square matrix over GF(2), or None if singular."""
    a = as_gf2(a)
    n = a.shape[0]
    if a.shape[1] != n:
        return None
    x = solve(a, np.eye(n, dtype=np.uint8))
    if x is None:
        return None
    return x


def is_invertible(a: np.ndarray) -> bool:
    a = as_gf2(a)
    return a.shape[0] == a.shape[1] and rank(a) == a.shape[0]
