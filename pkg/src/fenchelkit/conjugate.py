"""Legendre-Fenchel conjugation, envelopes, and subdifferentials.

Closed-form descriptors conjugate through an exact pair table; sampled
functions go through the discrete transform: lower convex hull of the finite
samples, then the exact sup over hull vertices on each dual node.  The
discrete sup over hull vertices equals the sup over all finite samples, so
values are exact for the sampled data.
"""

from dataclasses import dataclass
from math import inf, isinf, nan

import numpy as np

from . import _kernels
from .errors import ImproperFunctionError, NoAffineMinorantError
from .functions import (
    AbsValue,
    AffineTilt,
    Entropy,
    FunctionDescriptor,
    IndicatorBall,
    IndicatorInterval,
    LowerSemicircle,
    MinimalSurface,
    NormPower,
    PlusInfinity,
    Quadratic,
    Sampled,
    ScaledNorm,
    ShiftedExp,
    SupportInterval,
    dual_ball_norm,
)
from .grids import Grid1D, GridFunction

__all__ = [
    "conjugate",
    "conjugate_value",
    "biconjugate",
    "subdifferential",
    "SubdiffSet",
    "fenchel_gap",
    "check_min_via_conjugate",
]

# default dual grid for conjugates of closed-form tilted functions
_DEFAULT_SPAN = 5.0
_DEFAULT_NODES = 1001

_EIG_TOL = 1e-12


def _quadratic_conjugate(f):
    scale = 1.0 + float(np.abs(f.A).max())
    eigs = np.linalg.eigvalsh(f.A)
    if eigs.min() < -_EIG_TOL * scale:
        # a negative curvature direction kills every affine minorant gap
        return PlusInfinity(f.dim)
    if eigs.min() <= _EIG_TOL * scale:
        if f.dim == 1 and abs(f.A[0, 0]) <= _EIG_TOL * scale:
            # affine function: conjugate is the indicator of its slope
            return AffineTilt(IndicatorInterval(f.b[0], f.b[0]), 0.0, -f.c)
        raise ValueError("singular quadratic conjugate has no closed form here")
    Ainv = np.linalg.inv(f.A)
    Ainv = 0.5 * (Ainv + Ainv.T)
    bstar = -Ainv @ f.b
    cstar = 0.5 * float(f.b @ (Ainv @ f.b)) - f.c
    return Quadratic(Ainv, bstar, cstar)


def _closed_conjugate(f):
    """Exact conjugate of a closed-form variant, or None for sampled data."""
    if isinstance(f, Quadratic):
        return _quadratic_conjugate(f)
    if isinstance(f, NormPower):
        q = f.p / (f.p - 1.0)
        return NormPower(q, f.weight ** (1.0 - q), f.ndim)
    if isinstance(f, AbsValue):
        return IndicatorInterval(-1.0, 1.0)
    if isinstance(f, Entropy):
        return ShiftedExp()
    if isinstance(f, ShiftedExp):
        return Entropy()
    if isinstance(f, MinimalSurface):
        return LowerSemicircle(f.ndim)
    if isinstance(f, LowerSemicircle):
        return MinimalSurface(f.ndim)
    if isinstance(f, IndicatorInterval):
        return SupportInterval(f.a, f.b)
    if isinstance(f, SupportInterval):
        return IndicatorInterval(f.a, f.b)
    if isinstance(f, IndicatorBall):
        return ScaledNorm(f.radius, dual_ball_norm(f.norm), f.ndim)
    if isinstance(f, ScaledNorm):
        return IndicatorBall(f.weight, dual_ball_norm(f.norm), f.ndim)
    if isinstance(f, PlusInfinity):
        raise ImproperFunctionError("improper function")
    if isinstance(f, AffineTilt) and isinstance(f.inner, Quadratic):
        merged = Quadratic(f.inner.A, f.inner.b + f.slope, f.inner.c + f.offset)
        return _closed_conjugate(merged)
    return None


def _finite_samples(gf):
    xs = gf.grid.nodes()
    mask = np.isfinite(gf.values)
    return xs[mask], gf.values[mask]


def _hull_of(gf):
    xf, yf = _finite_samples(gf)
    idx = _kernels.lower_hull(xf, yf)
    return xf[idx], yf[idx]


def _default_dual_grid(hx, hy, n):
    """Slope range of the hull, widened 10 percent, n nodes."""
    if hx.shape[0] >= 2:
        slopes = np.diff(hy) / np.diff(hx)
        smin, smax = float(slopes.min()), float(slopes.max())
    else:
        smin = smax = 0.0
    r = smax - smin
    if r <= 0.0:
        return Grid1D(smin - 0.5, smax + 0.5, n)
    return Grid1D(smin - 0.05 * r, smax + 0.05 * r, n)


def _transform_1d(gf, dual_grid):
    hx, hy = _hull_of(gf)
    if dual_grid is None:
        dual_grid = _default_dual_grid(hx, hy, gf.grid.n)
    vals = _kernels.legendre_transform(hx, hy, dual_grid.nodes())
    return Sampled(GridFunction(dual_grid, vals))


def _axis_slope_range(V, h, axis):
    a = V if axis == 0 else V.T
    both = np.isfinite(a[:-1, :]) & np.isfinite(a[1:, :])
    if not both.any():
        return 0.0, 0.0
    d = (a[1:, :] - a[:-1, :])[both] / h
    return float(d.min()), float(d.max())


def _widened(smin, smax, n):
    r = smax - smin
    if r <= 0.0:
        return Grid1D(smin - 0.5, smax + 0.5, n)
    return Grid1D(smin - 0.05 * r, smax + 0.05 * r, n)


def _transform_2d(gf, dual_grid):
    g1, g2 = gf.grid
    V = gf.values
    if dual_grid is None:
        d1 = _widened(*_axis_slope_range(V, g1.h, 0), g1.n)
        d2 = _widened(*_axis_slope_range(V, g2.h, 1), g2.n)
    else:
        d1, d2 = dual_grid
    x2 = g2.nodes()
    q2 = d2.nodes()
    # stage one: conjugate in the second variable, row by row; rows that are
    # identically +inf contribute nothing and are tagged with a -inf sentinel
    # that never escapes this routine
    G = np.full((g1.n, d2.n), -inf)
    for i in range(g1.n):
        row = V[i, :]
        mask = np.isfinite(row)
        if not mask.any():
            continue
        xf = x2[mask]
        yf = row[mask]
        idx = _kernels.lower_hull(xf, yf)
        G[i, :] = _kernels.legendre_transform(xf[idx], yf[idx], q2)
    x1 = g1.nodes()
    q1 = d1.nodes()
    out = np.empty((d1.n, d2.n))
    for k2 in range(d2.n):
        u = -G[:, k2]
        mask = np.isfinite(u)
        xf = x1[mask]
        yf = u[mask]
        idx = _kernels.lower_hull(xf, yf)
        out[:, k2] = _kernels.legendre_transform(xf[idx], yf[idx], q1)
    return Sampled(GridFunction((d1, d2), out))


def conjugate(f, dual_grid=None):
    """Legendre-Fenchel conjugate f*(y) = sup_x (x | y) - f(x).

    Closed-form variants return their exact conjugate descriptor (dual_grid
    is ignored for them).  Sampled functions return the discrete conjugate
    sampled on dual_grid; by default the dual grid spans the hull slope
    range widened 10 percent with the primal node count.
    """
    closed = _closed_conjugate(f)
    if closed is not None:
        return closed
    if isinstance(f, Sampled):
        if f.dim == 1:
            return _transform_1d(f.fn, dual_grid)
        return _transform_2d(f.fn, dual_grid)
    if isinstance(f, AffineTilt):
        # f = inner + <s, x> + o, so f*(y) = inner*(y - s) - o
        if f.dim != 1:
            raise NotImplementedError("tilted conjugates are closed-form or 1-d")
        s = float(f.slope[0])
        if isinstance(f.inner, Sampled):
            base = dual_grid.shifted(-s) if dual_grid is not None else None
            inner_star = conjugate(f.inner, base)
            g = inner_star.fn.grid.shifted(s)
            return Sampled(GridFunction(g, inner_star.fn.values - f.offset))
        if dual_grid is None:
            dual_grid = Grid1D(s - _DEFAULT_SPAN, s + _DEFAULT_SPAN, _DEFAULT_NODES)
        vals = conjugate_value(f, dual_grid.nodes())
        return Sampled(GridFunction(dual_grid, vals))
    raise TypeError(f"cannot conjugate {type(f).__name__}")


def conjugate_value(f, y):
    """Exact conjugate value f*(y); accepts scalar y or arrays of points."""
    if isinstance(f, PlusInfinity):
        raise ImproperFunctionError("improper function")
    if isinstance(f, Sampled):
        if f.dim == 1:
            xs, vs = _finite_samples(f.fn)
            ya = np.atleast_1d(np.asarray(y, dtype=float))
            out = np.max(ya[:, None] * xs[None, :] - vs[None, :], axis=1)
            return float(out[0]) if np.asarray(y).ndim == 0 else out
        g1, g2 = f.fn.grid
        X1, X2 = np.meshgrid(g1.nodes(), g2.nodes(), indexing="ij")
        mask = np.isfinite(f.fn.values)
        p1 = X1[mask]
        p2 = X2[mask]
        vv = f.fn.values[mask]
        ya = np.asarray(y, dtype=float)
        pts = ya.reshape(-1, 2)
        out = np.max(pts[:, :1] * p1[None, :] + pts[:, 1:2] * p2[None, :] - vv[None, :], axis=1)
        return float(out[0]) if ya.shape == (2,) else out.reshape(ya.shape[:-1])
    if isinstance(f, AffineTilt):
        inner_c = _closed_conjugate(f)
        if inner_c is not None:
            return inner_c.evaluate(y)
        ya = np.asarray(y, dtype=float)
        shifted = ya - (f.slope[0] if f.dim == 1 else f.slope)
        base = conjugate_value(f.inner, shifted)
        return base - f.offset
    closed = _closed_conjugate(f)
    if closed is None:
        raise TypeError(f"cannot conjugate {type(f).__name__}")
    return closed.evaluate(y)


def biconjugate(f):
    """The closed convex envelope f** = (f*)*.

    For sampled 1-d data this is exact at the nodes (the lower convex hull of
    the finite samples, +inf outside their span).  Closed-form variants are
    already convex and lsc, so they come back unchanged; a quadratic with
    negative curvature has no affine minorant and raises.
    """
    if isinstance(f, PlusInfinity):
        raise ImproperFunctionError("improper function")
    if isinstance(f, Quadratic):
        scale = 1.0 + float(np.abs(f.A).max())
        if np.linalg.eigvalsh(f.A).min() < -_EIG_TOL * scale:
            raise NoAffineMinorantError("no affine minorant")
        return f
    if not isinstance(f, Sampled):
        return f
    if f.dim == 2:
        c1 = conjugate(f)
        return conjugate(c1, dual_grid=f.fn.grid)
    hx, hy = _hull_of(f.fn)
    xs = f.fn.grid.nodes()
    out = np.full(xs.shape, inf)
    span = (xs >= hx[0]) & (xs <= hx[-1])
    if hx.shape[0] == 1:
        out[span] = hy[0]
    else:
        out[span] = np.interp(xs[span], hx, hy)
    return Sampled(GridFunction(f.fn.grid, out))


@dataclass(frozen=True)
class SubdiffSet:
    """A subdifferential: an interval (1-d), a gradient point, a dual-norm
    ball (norms at the origin), or empty.  Interval bounds may be +-inf;
    they describe the set, not function values."""

    kind: str
    lo: float = nan
    hi: float = nan
    vec: object = None
    radius: float = nan
    norm: str = "l2"
    flag: str = ""

    @property
    def is_empty(self):
        return self.kind == "empty"

    def contains(self, s, tol=1e-9):
        if self.kind == "empty":
            return False
        if self.kind == "interval":
            s = float(s)
            return self.lo - tol <= s <= self.hi + tol
        if self.kind == "point":
            d = np.asarray(s, dtype=float) - self.vec
            return float(np.max(np.abs(d))) <= tol
        if self.kind == "ball":
            from .functions import _norm as ball_norm

            return float(ball_norm(np.atleast_1d(np.asarray(s, dtype=float)), self.norm)) <= self.radius + tol
        raise ValueError(f"unknown subdifferential kind {self.kind!r}")


def _interval(lo, hi):
    if lo > hi:
        return SubdiffSet("empty")
    return SubdiffSet("interval", lo=lo, hi=hi)


def _point1(v):
    return SubdiffSet("interval", lo=v, hi=v)


_OUT = SubdiffSet("empty", flag="out of domain")


def _sampled_subdiff(f, x, tol):
    gf = f.fn
    g = gf.grid
    if x < g.lo - tol or x > g.hi + tol:
        return _OUT
    t = (min(max(x, g.lo), g.hi) - g.lo) / g.h
    i = int(np.clip(np.floor(t + 0.5), 0, g.n - 1))
    if abs(t - i) <= 1e-9 * max(1.0, g.n):
        # at node i: one-sided difference quotients bracket the set
        if not np.isfinite(gf.values[i]):
            return _OUT
        if i > 0 and np.isfinite(gf.values[i - 1]):
            lo = (gf.values[i] - gf.values[i - 1]) / g.h
        else:
            lo = -inf
        if i < g.n - 1 and np.isfinite(gf.values[i + 1]):
            hi = (gf.values[i + 1] - gf.values[i]) / g.h
        else:
            hi = inf
        return _interval(lo, hi)
    i0 = int(np.floor(t))
    v0 = gf.values[i0]
    v1 = gf.values[i0 + 1]
    if not (np.isfinite(v0) and np.isfinite(v1)):
        return _OUT
    s = (v1 - v0) / g.h
    return _interval(s, s)


def subdifferential(f, x, tol=1e-9):
    """The subdifferential of f at x as an explicit set.

    Equals {y : f(x) + f*(y) = (x | y)}; empty outside the domain (flagged)
    and at boundary points with infinite one-sided slope.
    """
    if isinstance(f, PlusInfinity):
        return _OUT
    if isinstance(f, Sampled):
        if f.dim != 1:
            raise NotImplementedError("sampled subdifferentials are 1-d")
        return _sampled_subdiff(f, float(x), tol)
    if isinstance(f, AffineTilt):
        if f.dim != 1:
            raise NotImplementedError("tilted subdifferentials are 1-d")
        base = subdifferential(f.inner, x, tol)
        s = float(f.slope[0])
        if base.kind == "interval":
            return _interval(base.lo + s, base.hi + s)
        return base
    if isinstance(f, Quadratic):
        g = f.A @ np.atleast_1d(np.asarray(x, dtype=float)) + f.b
        if f.dim == 1:
            return _point1(float(g[0]))
        return SubdiffSet("point", vec=g)
    if f.dim == 1:
        x = float(x)
        if isinstance(f, NormPower):
            return _point1(f.weight * np.sign(x) * abs(x) ** (f.p - 1.0))
        if isinstance(f, AbsValue):
            if x > tol:
                return _point1(1.0)
            if x < -tol:
                return _point1(-1.0)
            return _interval(-1.0, 1.0)
        if isinstance(f, Entropy):
            if x > tol:
                return _point1(np.log(x) + 1.0)
            if x < -tol:
                return _OUT
            return SubdiffSet("empty")  # slope falls to -inf at 0+
        if isinstance(f, ShiftedExp):
            return _point1(float(np.exp(x - 1.0)))
        if isinstance(f, MinimalSurface):
            return _point1(x / np.sqrt(1.0 + x * x))
        if isinstance(f, LowerSemicircle):
            if abs(x) > 1.0 + tol:
                return _OUT
            if abs(x) >= 1.0 - tol:
                return SubdiffSet("empty")  # vertical tangent at the rim
            return _point1(x / np.sqrt(1.0 - x * x))
        if isinstance(f, (IndicatorInterval, IndicatorBall)):
            a, b = (f.a, f.b) if isinstance(f, IndicatorInterval) else (-f.radius, f.radius)
            if x < a - tol or x > b + tol:
                return _OUT
            lo = -inf if x <= a + tol else 0.0
            hi = inf if x >= b - tol else 0.0
            return _interval(lo, hi)
        if isinstance(f, SupportInterval):
            if x > tol:
                return _point1(f.b)
            if x < -tol:
                return _point1(f.a)
            return _interval(f.a, f.b)
        if isinstance(f, ScaledNorm):
            if x > tol:
                return _point1(f.weight)
            if x < -tol:
                return _point1(-f.weight)
            return _interval(-f.weight, f.weight)
    else:
        pt = np.asarray(x, dtype=float)
        if isinstance(f, NormPower):
            r = float(np.sqrt(pt @ pt))
            if r > tol:
                return SubdiffSet("point", vec=f.weight * r ** (f.p - 2.0) * pt)
            # p > 1 makes the gradient vanish at the origin
            return SubdiffSet("point", vec=np.zeros_like(pt))
        if isinstance(f, MinimalSurface):
            r2 = float(pt @ pt)
            return SubdiffSet("point", vec=pt / np.sqrt(1.0 + r2))
        if isinstance(f, ScaledNorm):
            from .functions import _norm as ball_norm

            if float(ball_norm(pt, f.norm)) > tol:
                raise NotImplementedError("norm subdifferential away from 0 is not provided")
            return SubdiffSet("ball", radius=f.weight, norm=dual_ball_norm(f.norm))
    raise NotImplementedError(f"subdifferential for {type(f).__name__} at this point")


def fenchel_gap(f, x, y):
    """f(x) + f*(y) - (x | y), always >= 0; +inf when either term is."""
    fx = f.evaluate(x)
    fy = conjugate_value(f, y)
    fx = float(fx)
    fy = float(fy)
    if isinf(fx) or isinf(fy):
        return inf
    dot = float(np.dot(np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(y, dtype=float))))
    return fx + fy - dot


def check_min_via_conjugate(f):
    """-inf f, computed as f*(0); +inf means f is unbounded below."""
    z = 0.0 if f.dim == 1 else np.zeros(f.dim)
    return float(np.asarray(conjugate_value(f, z)))
