"""The functional f(x) = (1/2)<Lx,x> + b(x) on a split coordinate space.

L is represented spectrally: a list of nonzero eigenvalues, one per
coordinate, with the sign of each eigenvalue tagging the coordinate as
positive (E+) or negative (E-). A truncation level (m, n) retains the
first m positive-tagged and first n negative-tagged coordinates, in
that order, so truncated points are vectors of length m + n with the
positive block first.

The nonlinearity b depends on finitely many leading coordinates and
has globally Lipschitz gradient; its second derivative therefore has
finite rank. Three builtin families are provided. The interesting one
is the double well along the first listed coordinate: with lambda_1 = 1
its restriction to that axis has critical points at exactly -1, 0, 1.
Outside a clamp radius every family's derivative is cut off smoothly
to zero slope, which makes all critical data independent of the
truncation level once the level retains the supporting coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NEWTON_TOL",
    "DEGEN_TOL",
    "DEDUP_TOL",
    "DegeneracyError",
    "SpectralOperator",
    "Nonlinearity",
    "FunctionalSpec",
    "TruncationLevel",
    "CriticalPoint",
    "evaluate",
    "find_critical_points",
    "e_index",
    "vector_field",
]

NEWTON_TOL = 1e-10
DEGEN_TOL = 1e-6
DEDUP_TOL = 1e-6


class DegeneracyError(ValueError):
    """A located critical point has a near-zero Hessian eigenvalue."""


@dataclass(frozen=True)
class TruncationLevel:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError("truncation level must be nonnegative")

    @property
    def dim(self) -> int:
        return self.m + self.n

    def __le__(self, other: "TruncationLevel") -> bool:
        return self.m <= other.m and self.n <= other.n


@dataclass(frozen=True)
class SpectralOperator:
    """Diagonal self-adjoint isomorphism given by its eigenvalue list."""

    eigenvalues: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", tuple(float(v) for v in self.eigenvalues))
        if any(v == 0.0 for v in self.eigenvalues):
            raise ValueError("all eigenvalues must be nonzero")

    @property
    def positive(self) -> list[int]:
        """Listed indices of positive-tagged coordinates, in order."""
        return [i for i, v in enumerate(self.eigenvalues) if v > 0]

    @property
    def negative(self) -> list[int]:
        return [i for i, v in enumerate(self.eigenvalues) if v < 0]

    def level_indices(self, level: TruncationLevel) -> list[int]:
        """Listed index of each truncation coordinate, positives first."""
        pos, neg = self.positive, self.negative
        if level.m > len(pos) or level.n > len(neg):
            raise ValueError(
                f"level ({level.m},{level.n}) exceeds listed spectrum "
                f"({len(pos)} positive, {len(neg)} negative)")
        return pos[: level.m] + neg[: level.n]

    def level_eigenvalues(self, level: TruncationLevel) -> np.ndarray:
        return np.array([self.eigenvalues[i] for i in self.level_indices(level)])


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C^2 ramp: 0 at t<=0, 1 at t>=1."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep_d(t) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return 30.0 * t * t * (1.0 + t * (-2.0 + t))


def _smoothstep_d2(t) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return 60.0 * t * (1.0 + t * (-3.0 + 2.0 * t))


@dataclass(frozen=True)
class Nonlinearity:
    """Builtin nonlinearity families with smoothly clamped derivative.

    family "zero": b = 0, support_dim 0.
    family "double-well": b = b(x_1) with b'(s) = (s^3 - 2s) sigma(s);
        sigma is a C^2 cutoff equal to 1 on |s| <= inner_radius and 0
        beyond clamp_radius, so with lambda_1 = 1 the axis restriction
        has critical points at exactly -1, 0, 1 and no others.
    family "shifted-well": b'(s) = -lambda_1 * c * sigma(s) places a
        single nondegenerate critical point at s = c (|c| < inner_radius);
        params = {"center": c, "lam": lambda_1}.
    """

    family: str
    params: dict = field(default_factory=dict)
    clamp_radius: float = 2.5
    inner_radius: float = 1.5

    def __post_init__(self):
        if self.family not in ("zero", "double-well", "shifted-well"):
            raise ValueError(f"unknown nonlinearity family {self.family!r}")
        if not (0.0 < self.inner_radius < self.clamp_radius):
            raise ValueError("need 0 < inner_radius < clamp_radius")
        if self.family == "shifted-well":
            c = float(self.params.get("center", 0.0))
            if abs(c) >= self.inner_radius:
                raise ValueError("shifted-well center must satisfy |c| < inner_radius")

    @property
    def support_dim(self) -> int:
        return 0 if self.family == "zero" else 1

    def _sigma(self, s):
        t = (self.clamp_radius - np.abs(s)) / (self.clamp_radius - self.inner_radius)
        return _smoothstep(t)

    def _sigma_d(self, s):
        w = self.clamp_radius - self.inner_radius
        t = (self.clamp_radius - np.abs(s)) / w
        return -np.sign(s) * _smoothstep_d(t) / w

    def _sigma_d2(self, s):
        w = self.clamp_radius - self.inner_radius
        t = (self.clamp_radius - np.abs(s)) / w
        return _smoothstep_d2(t) / (w * w)

    def _core(self, s):
        if self.family == "double-well":
            return s * s * s - 2.0 * s
        c = float(self.params.get("center", 0.0))
        lam = float(self.params.get("lam", 1.0))
        return np.full_like(np.asarray(s, dtype=float), -lam * c)

    def _core_d(self, s):
        if self.family == "double-well":
            return 3.0 * s * s - 2.0
        return np.zeros_like(np.asarray(s, dtype=float))

    def _core_d2(self, s):
        if self.family == "double-well":
            return 6.0 * np.asarray(s, dtype=float)
        return np.zeros_like(np.asarray(s, dtype=float))

    def grad1(self, s):
        """b'(s) for the single supporting coordinate."""
        if self.family == "zero":
            return np.zeros_like(np.asarray(s, dtype=float))
        return self._core(s) * self._sigma(s)

    def hess1(self, s):
        if self.family == "zero":
            return np.zeros_like(np.asarray(s, dtype=float))
        return self._core_d(s) * self._sigma(s) + self._core(s) * self._sigma_d(s)

    def value1(self, s) -> float:
        """b(s), integrated numerically outside the inner region.

        On |s| <= inner_radius the integral is closed-form; the cutoff
        band is integrated with a fixed-order Gauss rule, which at these
        polynomial degrees is exact to rounding.
        """
        if self.family == "zero":
            return 0.0
        s = float(s)
        r = self.inner_radius
        sign = 1.0 if s >= 0 else -1.0
        a = min(abs(s), r)
        if self.family == "double-well":
            inner = a**4 / 4.0 - a**2
        else:
            c = float(self.params.get("center", 0.0))
            lam = float(self.params.get("lam", 1.0))
            inner = -lam * c * sign * a
            if abs(s) <= r:
                return -lam * c * s
        if abs(s) <= r:
            return inner
        lo, hi = r, min(abs(s), self.clamp_radius)
        nodes, weights = np.polynomial.legendre.leggauss(24)
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        pts = mid + half * nodes
        tail = float(np.sum(weights * self.grad1(sign * pts) * sign) * half)
        return inner + tail

    def lipschitz_grad(self) -> float:
        """A sound global bound on |b''|.

        |b''| <= max|core'| + max|core| * max|sigma'|, with the core
        maxima taken over the cutoff band where sigma' is supported.
        """
        if self.family == "zero":
            return 0.0
        R, r = self.clamp_radius, self.inner_radius
        smax = 1.875 / (R - r)
        if self.family == "double-well":
            core_d = max(2.0, 3.0 * R * R - 2.0)
            core_m = max(1.09, abs(r**3 - 2 * r), abs(R**3 - 2 * R))
            return core_d + core_m * smax
        c = float(self.params.get("center", 0.0))
        lam = float(self.params.get("lam", 1.0))
        return abs(lam * c) * smax


@dataclass(frozen=True)
class FunctionalSpec:
    operator: SpectralOperator
    nonlinearity: Nonlinearity

    def __post_init__(self):
        if self.nonlinearity.support_dim > len(self.operator.eigenvalues):
            raise ValueError("nonlinearity support exceeds listed spectrum")

    def support_axes(self, level: TruncationLevel) -> list[int]:
        """Truncation axes carrying the nonlinearity; raises if not retained."""
        d = self.nonlinearity.support_dim
        if d == 0:
            return []
        idx = self.operator.level_indices(level)
        axes = []
        for listed in range(d):
            if listed not in idx:
                raise ValueError(
                    f"level ({level.m},{level.n}) does not retain supporting coordinate {listed}")
            axes.append(idx.index(listed))
        return axes

    def lipschitz_field(self, level: TruncationLevel) -> float:
        """Global Lipschitz bound for -grad f on the truncation."""
        lam = self.operator.level_eigenvalues(level)
        return float(np.max(np.abs(lam))) + self.nonlinearity.lipschitz_grad()


@dataclass(frozen=True)
class CriticalPoint:
    coords: tuple[float, ...]
    hessian_signature: tuple[int, int, int]
    e_index: int

    @property
    def point(self) -> np.ndarray:
        return np.array(self.coords)


def _check_dim(x: np.ndarray, level: TruncationLevel) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (level.dim,):
        raise ValueError(f"point of dim {x.shape} does not match level ({level.m},{level.n})")
    return x


def evaluate(spec: FunctionalSpec, x, level: TruncationLevel):
    """Value, gradient and Hessian of f restricted to the truncation."""
    x = _check_dim(x, level)
    lam = spec.operator.level_eigenvalues(level)
    value = 0.5 * float(np.dot(lam * x, x))
    grad = lam * x
    hess = np.diag(lam).astype(float)
    axes = spec.support_axes(level)
    if axes:
        ax = axes[0]
        s = x[ax]
        value += spec.nonlinearity.value1(s)
        grad = grad.copy()
        grad[ax] += float(spec.nonlinearity.grad1(s))
        hess[ax, ax] += float(spec.nonlinearity.hess1(s))
    return value, grad, hess


def vector_field(spec: FunctionalSpec, x, level: TruncationLevel) -> np.ndarray:
    """The gradient-flow field -grad f at x."""
    return -evaluate(spec, x, level)[1]


def _signature(hess: np.ndarray) -> tuple[tuple[int, int, int], np.ndarray]:
    eig = np.linalg.eigvalsh(hess)
    p = int(np.sum(eig > DEGEN_TOL))
    q = int(np.sum(eig < -DEGEN_TOL))
    z = len(eig) - p - q
    return (p, q, z), eig


def find_critical_points(
    spec: FunctionalSpec,
    level: TruncationLevel,
    region: tuple,
    seeds: int = 9,
    max_iter: int = 60,
) -> list[CriticalPoint]:
    """Newton search for critical points of the truncated functional.

    Args:
        region: (lo, hi) arrays bounding the search box.
        seeds: seed count per supporting axis. All critical points have
            zero non-supporting coordinates (those equations are linear
            with nonzero eigenvalue), so seeding is dense only along the
            nonlinearity support.

    Returns:
        Deduplicated critical points inside the region, each verified
        nondegenerate; a degenerate root raises DegeneracyError.
    """
    lo = np.asarray(region[0], dtype=float)
    hi = np.asarray(region[1], dtype=float)
    if lo.shape != (level.dim,) or hi.shape != (level.dim,):
        raise ValueError("region does not match level dimension")
    axes = spec.support_axes(level)
    found: list[np.ndarray] = []
    if axes:
        ax = axes[0]
        seed_vals = np.linspace(lo[ax], hi[ax], seeds)
    else:
        ax, seed_vals = None, np.array([0.0])
    for sv in seed_vals:
        x = np.zeros(level.dim)
        if ax is not None:
            x[ax] = sv
        ok = False
        for _ in range(max_iter):
            _, g, h = evaluate(spec, x, level)
            if np.linalg.norm(g) <= NEWTON_TOL:
                ok = True
                break
            try:
                step = np.linalg.solve(h, g)
            except np.linalg.LinAlgError:
                break
            x = x - step
            if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e6:
                break
        if not ok:
            continue
        if (x < lo - 1e-9).any() or (x > hi + 1e-9).any():
            continue
        if any(np.linalg.norm(x - y) <= DEDUP_TOL for y in found):
            continue
        found.append(x)
    points = []
    for x in sorted(found, key=lambda v: tuple(v)):
        _, _, h = evaluate(spec, x, level)
        sig, eig = _signature(h)
        if sig[2] != 0:
            raise DegeneracyError(
                f"critical point {x} has Hessian eigenvalue within {DEGEN_TOL} of zero: {eig}")
        cp = CriticalPoint(tuple(float(v) for v in x), sig, sig[1] - level.n)
        points.append(cp)
    return points


def e_index(spec: FunctionalSpec, cp: CriticalPoint, level: TruncationLevel) -> int:
    """Relative index: negative Hessian eigenvalue count minus dim E-_n."""
    x = _check_dim(cp.point, level)
    _, _, h = evaluate(spec, x, level)
    sig, eig = _signature(h)
    if sig[2] != 0:
        raise DegeneracyError(f"degenerate Hessian spectrum {eig}")
    return sig[1] - level.n
