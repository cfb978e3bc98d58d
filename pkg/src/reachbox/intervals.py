"""Interval scalars, boxes, interval matrices and the interval matrix exponential.

All types are immutable after construction and all operations are pure, so
values can be shared freely across threads.  Arithmetic is plain floating
point without outward rounding; enclosures are exact up to roundoff, which is
the same soundness caveat that applies to the trajectory integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, DimensionError, DomainError

__all__ = [
    "Interval",
    "Box",
    "IntervalMatrix",
    "box_center_halfwidth",
    "hull",
    "intersect",
    "contains",
    "interval_mat_add",
    "interval_mat_mul",
    "interval_expm",
]


# ---------------------------------------------------------------------------
# Scalar intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Closed real interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        lo = float(self.lo)
        hi = float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise DomainError("interval endpoint is NaN")
        if lo > hi:
            raise DomainError(f"inverted interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other) -> "Interval":
        other = _as_interval(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        other = _as_interval(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other) -> "Interval":
        return _as_interval(other) - self

    def __mul__(self, other) -> "Interval":
        other = _as_interval(other)
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        other = _as_interval(other)
        if other.lo <= 0.0 <= other.hi:
            raise DomainError("interval division by an interval containing 0")
        return self * Interval(1.0 / other.hi, 1.0 / other.lo)

    def __rtruediv__(self, other) -> "Interval":
        return _as_interval(other) / self

    def __abs__(self) -> "Interval":
        if self.lo >= 0.0:
            return self
        if self.hi <= 0.0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def power(self, n: int) -> "Interval":
        """Integer power with the usual even/odd sign analysis."""
        if n == 0:
            return Interval(1.0, 1.0)
        if n < 0:
            return Interval(1.0, 1.0) / self.power(-n)
        if n % 2 == 1 or self.lo >= 0.0:
            return Interval(self.lo ** n, self.hi ** n)
        if self.hi <= 0.0:
            return Interval(self.hi ** n, self.lo ** n)
        return Interval(0.0, max(self.lo ** n, self.hi ** n))

    def exp(self) -> "Interval":
        return Interval(math.exp(self.lo), math.exp(self.hi))

    def log(self) -> "Interval":
        if self.lo <= 0.0:
            raise DomainError("log of an interval reaching into (-inf, 0]")
        return Interval(math.log(self.lo), math.log(self.hi))

    def sqrt(self) -> "Interval":
        if self.lo < 0.0:
            raise DomainError("sqrt of an interval reaching below 0")
        return Interval(math.sqrt(self.lo), math.sqrt(self.hi))

    def sin(self) -> "Interval":
        return _sin_range(self.lo, self.hi)

    def cos(self) -> "Interval":
        # cos(x) = sin(x + pi/2)
        return _sin_range(self.lo + 0.5 * math.pi, self.hi + 0.5 * math.pi)

    @staticmethod
    def minimum(*items: "Interval") -> "Interval":
        return Interval(min(i.lo for i in items), min(i.hi for i in items))

    @staticmethod
    def maximum(*items: "Interval") -> "Interval":
        return Interval(max(i.lo for i in items), max(i.hi for i in items))


def _as_interval(v) -> Interval:
    if isinstance(v, Interval):
        return v
    return Interval(float(v), float(v))


def _sin_range(lo: float, hi: float) -> Interval:
    if hi - lo >= 2.0 * math.pi:
        return Interval(-1.0, 1.0)
    vals = [math.sin(lo), math.sin(hi)]
    # interior extrema at pi/2 + k*pi
    k0 = math.ceil((lo - 0.5 * math.pi) / math.pi)
    k1 = math.floor((hi - 0.5 * math.pi) / math.pi)
    for k in range(k0, k1 + 1):
        vals.append(1.0 if k % 2 == 0 else -1.0)
    return Interval(min(vals), max(vals))


# ---------------------------------------------------------------------------
# Boxes (interval vectors)
# ---------------------------------------------------------------------------

def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Box:
    """Axis-aligned box: componentwise interval [lower, upper] in R^n."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _freeze(np.atleast_1d(self.lower))
        upper = _freeze(np.atleast_1d(self.upper))
        if lower.ndim != 1 or upper.ndim != 1:
            raise DimensionError("box bounds must be vectors")
        if lower.shape != upper.shape:
            raise DimensionError("box bounds differ in length")
        if lower.size < 1:
            raise DimensionError("box must have dimension >= 1")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise DomainError("box bound is NaN")
        if np.any(lower > upper):
            i = int(np.argmax(lower > upper))
            raise DomainError(f"inverted box: lower[{i}]={lower[i]} > upper[{i}]={upper[i]}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def point(cls, x) -> "Box":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x, x)

    @classmethod
    def from_intervals(cls, items) -> "Box":
        return cls([i.lo for i in items], [i.hi for i in items])

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def interval(self, i: int) -> Interval:
        return Interval(self.lower[i], self.upper[i])

    def contains_point(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


def box_center_halfwidth(b: Box) -> tuple[np.ndarray, np.ndarray]:
    """Center and half-width of a box; lower == center - halfwidth holds."""
    center = 0.5 * (b.lower + b.upper)
    halfwidth = center - b.lower
    return center, halfwidth


def hull(a: Box, b: Box) -> Box:
    if a.dim != b.dim:
        raise DimensionError("hull of boxes with different dimensions")
    return Box(np.minimum(a.lower, b.lower), np.maximum(a.upper, b.upper))


def intersect(a: Box, b: Box) -> Box | None:
    """Intersection box, or None when the boxes are disjoint."""
    if a.dim != b.dim:
        raise DimensionError("intersection of boxes with different dimensions")
    lo = np.maximum(a.lower, b.lower)
    hi = np.minimum(a.upper, b.upper)
    if np.any(lo > hi):
        return None
    return Box(lo, hi)


def contains(a: Box, b: Box) -> bool:
    """True when box b lies inside box a (componentwise)."""
    if a.dim != b.dim:
        raise DimensionError("containment of boxes with different dimensions")
    return bool(np.all(a.lower <= b.lower) and np.all(b.upper <= a.upper))


# ---------------------------------------------------------------------------
# Interval matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntervalMatrix:
    """Entrywise interval matrix [lower, upper].

    Storage tolerates +-inf entries (methods that allow unbounded Jacobian
    diagonals keep them here), but every arithmetic operation rejects them;
    callers must mask infinite entries before computing.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _freeze(np.atleast_2d(self.lower))
        upper = _freeze(np.atleast_2d(self.upper))
        if lower.shape != upper.shape or lower.ndim != 2:
            raise DimensionError("interval matrix bounds must be matrices of equal shape")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise DomainError("interval matrix bound is NaN")
        if np.any(lower > upper):
            raise DomainError("inverted interval matrix entry")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_point(cls, m) -> "IntervalMatrix":
        m = np.atleast_2d(np.asarray(m, dtype=float))
        return cls(m, m)

    @classmethod
    def identity(cls, n: int) -> "IntervalMatrix":
        return cls.from_point(np.eye(n))

    @classmethod
    def zeros(cls, shape) -> "IntervalMatrix":
        return cls(np.zeros(shape), np.zeros(shape))

    @property
    def shape(self) -> tuple[int, int]:
        return self.lower.shape

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def center(self) -> np.ndarray:
        if not self.is_finite():
            raise DomainError("center of an interval matrix with infinite entries")
        return 0.5 * (self.lower + self.upper)

    def contains_matrix(self, m, tol: float = 0.0) -> bool:
        m = np.asarray(m, dtype=float)
        return bool(np.all(m >= self.lower - tol) and np.all(m <= self.upper + tol))

    def hull(self, other: "IntervalMatrix") -> "IntervalMatrix":
        if self.shape != other.shape:
            raise DimensionError("hull of interval matrices with different shapes")
        return IntervalMatrix(np.minimum(self.lower, other.lower),
                              np.maximum(self.upper, other.upper))

    def scale(self, s: float) -> "IntervalMatrix":
        """Multiply by a nonnegative scalar."""
        if s < 0.0:
            raise DomainError("scale factor must be nonnegative")
        return IntervalMatrix(self.lower * s, self.upper * s)

    def norm_inf(self) -> float:
        """Sup of the infinity norm over all point matrices in the interval."""
        mag = np.maximum(np.abs(self.lower), np.abs(self.upper))
        return float(np.max(mag.sum(axis=1))) if mag.size else 0.0

    def __add__(self, other: "IntervalMatrix") -> "IntervalMatrix":
        return interval_mat_add(self, other)

    def __matmul__(self, other: "IntervalMatrix") -> "IntervalMatrix":
        return interval_mat_mul(self, other)


def _require_finite(m: IntervalMatrix, op: str):
    if not m.is_finite():
        raise DomainError(f"{op}: interval matrix has infinite entries")


def interval_mat_add(a: IntervalMatrix, b: IntervalMatrix) -> IntervalMatrix:
    _require_finite(a, "add")
    _require_finite(b, "add")
    if a.shape != b.shape:
        raise DimensionError(f"add: shapes {a.shape} and {b.shape} differ")
    return IntervalMatrix(a.lower + b.lower, a.upper + b.upper)


def interval_mat_mul(a: IntervalMatrix, b: IntervalMatrix) -> IntervalMatrix:
    """Interval matrix product with per-entry min/max over endpoint products."""
    _require_finite(a, "mul")
    _require_finite(b, "mul")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"mul: shapes {a.shape} and {b.shape} do not conform")
    al = a.lower[:, :, None]
    au = a.upper[:, :, None]
    bl = b.lower[None, :, :]
    bu = b.upper[None, :, :]
    p1 = al * bl
    p2 = al * bu
    p3 = au * bl
    p4 = au * bu
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4)).sum(axis=1)
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4)).sum(axis=1)
    return IntervalMatrix(lo, hi)


# ---------------------------------------------------------------------------
# Interval matrix exponential
# ---------------------------------------------------------------------------

def _expm_taylor(c: IntervalMatrix, tau: float, order: int) -> IntervalMatrix:
    """Truncated Taylor series of e^{C tau} with a rigorous remainder term.

    Requires ||c||_inf * tau < order + 2 so the Lagrange-style tail bound
    rho = a^(N+1) / ((N+1)! (1 - a/(N+2))) converges; rho inflates every
    entry symmetrically.
    """
    n = c.shape[0]
    m = IntervalMatrix(c.lower * tau, c.upper * tau)
    a = m.norm_inf()
    if a >= order + 2:
        raise ConvergenceError(
            f"interval expm: ||C||*tau = {a:.3g} >= order+2 = {order + 2}; split tau")
    acc_lo = np.eye(n)
    acc_hi = np.eye(n)
    power = IntervalMatrix.identity(n)
    fact = 1.0
    for k in range(1, order + 1):
        power = interval_mat_mul(power, m)
        fact *= k
        acc_lo = acc_lo + power.lower / fact
        acc_hi = acc_hi + power.upper / fact
    tail_fact = fact * (order + 1)
    rho = a ** (order + 1) / (tail_fact * (1.0 - a / (order + 2)))
    return IntervalMatrix(acc_lo - rho, acc_hi + rho)


def interval_expm(c: IntervalMatrix, tau: float, order: int = 20) -> IntervalMatrix:
    """Enclosure of {e^{C tau} : C in c} for a square interval matrix.

    When ||c||_inf * tau >= 1 the time step is split into 2^k equal sub-steps
    and the sub-step enclosures are multiplied back together, which keeps the
    Taylor remainder small.  The result also encloses products of exponentials
    of different members of c, which is what time-varying Jacobians require.
    """
    if c.shape[0] != c.shape[1]:
        raise DimensionError("interval expm needs a square matrix")
    _require_finite(c, "expm")
    if tau < 0.0:
        raise DomainError("interval expm needs tau >= 0")
    a = c.norm_inf() * tau
    splits = 0
    while a / (1 << splits) >= 1.0 and splits < 60:
        splits += 1
    result = _expm_taylor(c, tau / (1 << splits), order)
    for _ in range(splits):
        result = interval_mat_mul(result, result)
    return result
