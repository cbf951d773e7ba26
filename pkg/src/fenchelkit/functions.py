"""Descriptors for the convex functions the toolkit manipulates.

Each descriptor is a frozen dataclass with an ``evaluate`` method mapping
points to extended reals (+inf only; -inf and NaN never appear).  The variant
set is closed under Legendre conjugation: every closed-form variant's
conjugate is again a variant, so repeated conjugation stays exact.
"""

from dataclasses import dataclass, field
from math import inf

import numpy as np

from .grids import Grid1D, GridFunction, as_extended_values

__all__ = [
    "FunctionDescriptor",
    "Quadratic",
    "NormPower",
    "AbsValue",
    "Entropy",
    "MinimalSurface",
    "IndicatorInterval",
    "IndicatorBall",
    "Sampled",
    "AffineTilt",
    "PlusInfinity",
    "ShiftedExp",
    "LowerSemicircle",
    "SupportInterval",
    "ScaledNorm",
    "evaluate",
]

_BALL_NORMS = ("l1", "l2", "linf")
_DUAL_NORM = {"l1": "linf", "l2": "l2", "linf": "l1"}


def _norm(x, kind):
    """Norm along the last axis (plain abs for 1-d input)."""
    if x.ndim == 0:
        return np.abs(x)
    if kind == "l1":
        return np.sum(np.abs(x), axis=-1)
    if kind == "linf":
        return np.max(np.abs(x), axis=-1)
    return np.sqrt(np.sum(x * x, axis=-1))


class FunctionDescriptor:
    """Base class; subclasses carry the payload of one variant."""

    @property
    def dim(self):
        raise NotImplementedError

    def evaluate(self, x):
        raise NotImplementedError


def _as_points(x, d):
    """Normalize x to shape (k, d); scalars allowed when d == 1."""
    arr = np.asarray(x, dtype=float)
    if d == 1:
        flat = np.atleast_1d(arr).reshape(-1)
        return flat.reshape(-1, 1), arr.shape
    if arr.shape == (d,):
        return arr.reshape(1, d), ()
    if arr.ndim >= 1 and arr.shape[-1] == d:
        lead = arr.shape[:-1]
        return arr.reshape(-1, d), lead
    raise ValueError(f"point shape {arr.shape} does not match dimension {d}")


def _shape_back(vals, shape):
    return float(vals[0]) if shape == () else vals.reshape(shape)


@dataclass(frozen=True)
class Quadratic(FunctionDescriptor):
    """f(x) = (1/2) x . A x + b . x + c with A symmetric."""

    A: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
            raise ValueError("quadratic shapes are inconsistent")
        if not np.isfinite(A).all() or not np.isfinite(b).all() or not np.isfinite(self.c):
            raise ValueError("quadratic data must be finite")
        if not np.allclose(A, A.T, atol=1e-12 * (1.0 + np.abs(A).max())):
            raise ValueError("quadratic matrix must be symmetric")
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.b.shape[0]

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dim)
        vals = 0.5 * np.einsum("ki,ij,kj->k", pts, self.A, pts) + pts @ self.b + self.c
        return _shape_back(vals, shape)


@dataclass(frozen=True)
class NormPower(FunctionDescriptor):
    """f(x) = weight * (1/p) * |x|^p with p > 1 (Euclidean norm beyond 1-d)."""

    p: float
    weight: float = 1.0
    ndim: int = 1

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError("norm power needs p > 1")
        if not self.weight > 0.0:
            raise ValueError("norm power needs weight > 0")

    @property
    def dim(self):
        return self.ndim

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dim)
        r = _norm(pts,"l2")
        vals = (self.weight / self.p) * r**self.p
        return _shape_back(vals, shape)


@dataclass(frozen=True)
class AbsValue(FunctionDescriptor):
    """f(x) = |x| on the line."""

    @property
    def dim(self):
        return 1

    def evaluate(self, x):
        pts, shape = _as_points(x, 1)
        return _shape_back(np.abs(pts[:, 0]), shape)


@dataclass(frozen=True)
class Entropy(FunctionDescriptor):
    """f(x) = x log x for x > 0, 0 at x = 0, +inf for x < 0."""

    @property
    def dim(self):
        return 1

    def evaluate(self, x):
        pts, shape = _as_points(x, 1)
        t = pts[:, 0]
        vals = np.full(t.shape, inf)
        vals[t == 0.0] = 0.0
        pos = t > 0.0
        vals[pos] = t[pos] * np.log(t[pos])
        return _shape_back(vals, shape)


@dataclass(frozen=True)
class MinimalSurface(FunctionDescriptor):
    """f(x) = sqrt(1 + |x|^2), the area integrand."""

    ndim: int = 1

    @property
    def dim(self):
        return self.ndim

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dim)
        r = _norm(pts,"l2")
        return _shape_back(np.sqrt(1.0 + r * r), shape)


@dataclass(frozen=True)
class IndicatorInterval(FunctionDescriptor):
    """Indicator of [a, b]: 0 inside, +inf outside."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a <= self.b):
            raise ValueError("indicator interval needs finite a <= b")

    @property
    def dim(self):
        return 1

    def evaluate(self, x):
        pts, shape = _as_points(x, 1)
        t = pts[:, 0]
        vals = np.where((t >= self.a) & (t <= self.b), 0.0, inf)
        return _shape_back(vals, shape)


@dataclass(frozen=True)
class IndicatorBall(FunctionDescriptor):
    """Indicator of the closed norm ball of the given radius."""

    radius: float
    norm: str = "l2"
    ndim: int = 2

    def __post_init__(self):
        if not self.radius > 0.0 or not np.isfinite(self.radius):
            raise ValueError("ball radius must be positive and finite")
        if self.norm not in _BALL_NORMS:
            raise ValueError(f"unknown ball norm {self.norm!r}")

    @property
    def dim(self):
        return self.ndim

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dim)
        r = _norm(pts,self.norm)
        vals = np.where(r <= self.radius, 0.0, inf)
        return _shape_back(vals, shape)


@dataclass(frozen=True)
class Sampled(FunctionDescriptor):
    """A function known through its samples on a grid."""

    fn: GridFunction

    @property
    def dim(self):
        return self.fn.dim

    @property
    def grid(self):
        return self.fn.grid

    @property
    def values(self):
        return self.fn.values

    def evaluate(self, x):
        if self.dim == 1:
            return self.fn.interpolate(x)
        pts, shape = _as_points(x, 2)
        g1, g2 = self.fn.grid
        vals = _bilinear(self.fn.values, g1, g2, pts)
        return _shape_back(vals, shape)


def _bilinear(V, g1, g2, pts):
    """Bilinear interpolation with +inf outside and around +inf corners."""
    out = np.full(pts.shape[0], inf)
    x1 = pts[:, 0]
    x2 = pts[:, 1]
    inside = (x1 >= g1.lo) & (x1 <= g1.hi) & (x2 >= g2.lo) & (x2 <= g2.hi)
    if not inside.any():
        return out
    t1 = (x1[inside] - g1.lo) / g1.h
    t2 = (x2[inside] - g2.lo) / g2.h
    i = np.clip(np.floor(t1).astype(int), 0, g1.n - 2)
    j = np.clip(np.floor(t2).astype(int), 0, g2.n - 2)
    f1 = t1 - i
    f2 = t2 - j
    # snap node hits before looking at the corner values
    f1 = np.where(f1 <= 1e-9, 0.0, np.where(f1 >= 1.0 - 1e-9, 1.0, f1))
    f2 = np.where(f2 <= 1e-9, 0.0, np.where(f2 >= 1.0 - 1e-9, 1.0, f2))
    c00 = V[i, j]
    c10 = V[i + 1, j]
    c01 = V[i, j + 1]
    c11 = V[i + 1, j + 1]
    w00 = (1.0 - f1) * (1.0 - f2)
    w10 = f1 * (1.0 - f2)
    w01 = (1.0 - f1) * f2
    w11 = f1 * f2
    vals = np.full(c00.shape, inf)
    ok = np.ones(c00.shape, dtype=bool)
    for c, w in ((c00, w00), (c10, w10), (c01, w01), (c11, w11)):
        ok &= np.isfinite(c) | (w == 0.0)
    acc = np.zeros(c00.shape)
    for c, w in ((c00, w00), (c10, w10), (c01, w01), (c11, w11)):
        acc[ok] += np.where(w[ok] == 0.0, 0.0, c[ok] * w[ok])
    vals[ok] = acc[ok]
    out[inside] = vals
    return out


@dataclass(frozen=True)
class AffineTilt(FunctionDescriptor):
    """f(x) = inner(x) + slope . x + offset."""

    inner: FunctionDescriptor
    slope: object
    offset: float = 0.0

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.slope, dtype=float))
        if s.shape != (self.inner.dim,):
            raise ValueError("tilt slope dimension does not match the inner function")
        if not np.isfinite(s).all() or not np.isfinite(self.offset):
            raise ValueError("tilt data must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "slope", s)

    @property
    def dim(self):
        return self.inner.dim

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dim)
        base = np.atleast_1d(self.inner.evaluate(pts if self.dim > 1 else pts[:, 0]))
        vals = base + pts @ self.slope + self.offset
        return _shape_back(vals, shape)


@dataclass(frozen=True)
class PlusInfinity(FunctionDescriptor):
    """The improper function identically +inf (conjugate of a function
    with no affine minorant)."""

    ndim: int = 1

    @property
    def dim(self):
        return self.ndim

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dim)
        return _shape_back(np.full(pts.shape[0], inf), shape)


@dataclass(frozen=True)
class ShiftedExp(FunctionDescriptor):
    """f(x) = exp(x - 1), the conjugate of the entropy integrand."""

    @property
    def dim(self):
        return 1

    def evaluate(self, x):
        pts, shape = _as_points(x, 1)
        return _shape_back(np.exp(pts[:, 0] - 1.0), shape)


@dataclass(frozen=True)
class LowerSemicircle(FunctionDescriptor):
    """f(y) = -sqrt(1 - |y|^2) on the unit ball, +inf outside."""

    ndim: int = 1

    @property
    def dim(self):
        return self.ndim

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dim)
        r = _norm(pts,"l2")
        vals = np.full(r.shape, inf)
        ok = r <= 1.0
        vals[ok] = -np.sqrt(np.maximum(0.0, 1.0 - r[ok] * r[ok]))
        return _shape_back(vals, shape)


@dataclass(frozen=True)
class SupportInterval(FunctionDescriptor):
    """Support function of [a, b]: max(a y, b y)."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a <= self.b):
            raise ValueError("support interval needs finite a <= b")

    @property
    def dim(self):
        return 1

    def evaluate(self, x):
        pts, shape = _as_points(x, 1)
        t = pts[:, 0]
        return _shape_back(np.maximum(self.a * t, self.b * t), shape)


@dataclass(frozen=True)
class ScaledNorm(FunctionDescriptor):
    """f(y) = weight * |y|_norm, the support function of a norm ball."""

    weight: float
    norm: str = "l2"
    ndim: int = 2

    def __post_init__(self):
        if not self.weight > 0.0 or not np.isfinite(self.weight):
            raise ValueError("scaled norm needs a positive finite weight")
        if self.norm not in _BALL_NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")

    @property
    def dim(self):
        return self.ndim

    def evaluate(self, x):
        pts, shape = _as_points(x, self.dim)
        r = _norm(pts,self.norm)
        return _shape_back(self.weight * r, shape)


def evaluate(f, x):
    """Evaluate a descriptor at x (scalar, point, or array of points)."""
    return f.evaluate(x)


def dual_ball_norm(norm):
    """Name of the dual norm (l1 <-> linf, l2 self-dual)."""
    return _DUAL_NORM[norm]
