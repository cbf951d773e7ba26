"""Uniform grids and extended-real grid functions.

Extended reals use the IEEE +inf value as the single infinity token; -inf and
NaN are rejected everywhere.  Arrays stored on frozen containers are marked
read-only so instances stay immutable after construction.
"""

from dataclasses import dataclass, field
from math import inf

import numpy as np

from .errors import GridMismatchError, ImproperFunctionError

__all__ = ["Grid1D", "GridFunction", "as_extended_values", "inf"]


def as_extended_values(values):
    """Validate and copy an array of extended reals (+inf allowed)."""
    arr = np.array(values, dtype=float)
    if np.isnan(arr).any():
        raise ValueError("NaN is not an extended real")
    if np.isneginf(arr).any():
        raise ValueError("-inf is not allowed; only +inf marks emptiness of the domain")
    return arr


def _freeze(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid1D:
    """Uniform one-dimensional grid with n nodes on [lo, hi]."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("grid endpoints must be finite")
        if not self.hi > self.lo:
            raise ValueError("grid needs hi > lo")
        if self.n < 2:
            raise ValueError("grid needs at least 2 nodes")

    @property
    def h(self):
        return (self.hi - self.lo) / (self.n - 1)

    def nodes(self):
        return _freeze(np.linspace(self.lo, self.hi, self.n))

    def shifted(self, t):
        """The same grid translated by t."""
        return Grid1D(self.lo + t, self.hi + t, self.n)


def _same_spacing(g1, g2, rel=1e-12):
    scale = max(abs(g1.h), abs(g2.h))
    return abs(g1.h - g2.h) <= rel * scale


@dataclass(frozen=True)
class GridFunction:
    """Extended-real values sampled on a grid.

    grid is a Grid1D, or a pair of Grid1D for a function on a 2-d product
    grid; values has matching shape (n,) or (n1, n2).  At least one value
    must be finite (proper function).
    """

    grid: object
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = as_extended_values(self.values)
        if self.is_2d:
            g1, g2 = self.grid
            if not (isinstance(g1, Grid1D) and isinstance(g2, Grid1D)):
                raise TypeError("2-d grid must be a pair of Grid1D")
            if vals.shape != (g1.n, g2.n):
                raise ValueError("values shape does not match the grid")
        else:
            if not isinstance(self.grid, Grid1D):
                raise TypeError("grid must be a Grid1D or a pair of Grid1D")
            if vals.shape != (self.grid.n,):
                raise ValueError("values shape does not match the grid")
        if not np.isfinite(vals).any():
            raise ImproperFunctionError("improper function")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def is_2d(self):
        return isinstance(self.grid, tuple)

    @property
    def dim(self):
        return 2 if self.is_2d else 1

    def require_same_spacing(self, other):
        if self.is_2d or other.is_2d:
            raise GridMismatchError("grid mismatch: expected 1-d grids")
        if not _same_spacing(self.grid, other.grid):
            raise GridMismatchError("grid mismatch: spacings differ beyond 1e-12 relative")

    def interpolate(self, x):
        """Piecewise-linear interpolation, +inf outside [lo, hi].

        A query between a finite node and a +inf node is +inf (the convex
        interpolant of an infinite endpoint); exact node hits return the node
        value.  Accepts scalars or arrays.
        """
        if self.is_2d:
            raise NotImplementedError("interpolation is one-dimensional")
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        g = self.grid
        out = np.full(x_arr.shape, inf)
        inside = (x_arr >= g.lo) & (x_arr <= g.hi)
        if inside.any():
            t = (x_arr[inside] - g.lo) / g.h
            i0 = np.clip(np.floor(t).astype(int), 0, g.n - 2)
            frac = t - i0
            v0 = self.values[i0]
            v1 = self.values[i0 + 1]
            vals = np.full(v0.shape, inf)
            both = np.isfinite(v0) & np.isfinite(v1)
            vals[both] = v0[both] * (1.0 - frac[both]) + v1[both] * frac[both]
            # snap near-node queries so roundoff in t cannot leak +inf from a
            # neighbouring infinite node into an exact node hit
            at0 = (frac <= 1e-9) & np.isfinite(v0)
            vals[at0] = v0[at0]
            at1 = (frac >= 1.0 - 1e-9) & np.isfinite(v1)
            vals[at1] = v1[at1]
            out[inside] = vals
        return out[0] if np.isscalar(x) or np.asarray(x).ndim == 0 else out
