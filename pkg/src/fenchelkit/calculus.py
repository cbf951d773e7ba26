"""Duality calculus: infimal convolution, sum rules, and the
Fenchel-Rockafellar pairing with extremality certificates."""

import warnings
from dataclasses import dataclass
from math import inf, isinf

import numpy as np

from . import _kernels
from .conjugate import conjugate, conjugate_value, fenchel_gap
from .errors import GridMismatchError, QualificationError
from .functions import (
    FunctionDescriptor,
    IndicatorBall,
    IndicatorInterval,
    Quadratic,
    Sampled,
)
from .grids import Grid1D, GridFunction

__all__ = [
    "LinearMap",
    "PrimalDualPair",
    "ExtremalityReport",
    "inf_convolution",
    "conjugate_of_sum",
    "fenchel_rockafellar",
    "extremality_check",
]

_DEFAULT_BOX = 10.0
_SEARCH_LEVELS = 6
_SEARCH_NODES = 81


@dataclass(frozen=True)
class LinearMap:
    """A linear operator given by its dense matrix (rows map to the
    codomain; the adjoint is the transpose)."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if not np.isfinite(M).all():
            raise ValueError("linear map entries must be finite")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def shape(self):
        return self.matrix.shape

    def __call__(self, x):
        return self.matrix @ np.atleast_1d(np.asarray(x, dtype=float))

    def adjoint(self, y):
        return self.matrix.T @ np.atleast_1d(np.asarray(y, dtype=float))


@dataclass(frozen=True)
class PrimalDualPair:
    """A primal minimizer and dual maximizer with their values and gap."""

    primal_value: float
    dual_value: float
    gap: float
    primal_point: np.ndarray
    dual_point: np.ndarray
    certified: bool
    status: str


@dataclass(frozen=True)
class ExtremalityReport:
    """Both Fenchel gaps of a primal-dual pair; zero gaps mean the two
    subdifferential inclusions of extremality hold."""

    passed: bool
    gap_primal: float
    gap_dual: float


def inf_convolution(f, g, return_split=False):
    """Min-plus convolution of two grid functions with equal spacing.

    (f # g)(z) = min_{x + y = z} f(x) + g(y) over all node splits; the output
    grid spans [lo_f + lo_g, hi_f + hi_g] with the shared spacing.  With
    return_split=True also returns the attaining f-node index per output node
    (-1 where the value is +inf).
    """
    if not isinstance(f, GridFunction) or not isinstance(g, GridFunction):
        raise TypeError("inf_convolution expects grid functions")
    f.require_same_spacing(g)
    vals, left = _kernels.minplus_convolve(f.values, g.values)
    grid = Grid1D(f.grid.lo + g.grid.lo, f.grid.hi + g.grid.hi, f.grid.n + g.grid.n - 1)
    out = GridFunction(grid, vals)
    if return_split:
        return out, left
    return out


def _resolve_sum_grid(f, g, grid):
    fs = f.grid if isinstance(f, Sampled) else None
    gs = g.grid if isinstance(g, Sampled) else None
    if fs is not None and gs is not None:
        same = abs(fs.lo - gs.lo) <= 1e-12 and abs(fs.hi - gs.hi) <= 1e-12 and fs.n == gs.n
        if not same:
            raise GridMismatchError("grid mismatch: summands live on different grids")
        return fs
    if grid is not None:
        return grid
    if fs is not None:
        return fs
    if gs is not None:
        return gs
    return Grid1D(-5.0, 5.0, 1001)


def conjugate_of_sum(f, g, grid=None, dual_grid=None):
    """(f + g)* on a dual grid, with a qualification check.

    The sum is sampled on a shared primal grid and conjugated; the rule
    (f + g)* = f* # g* needs the domains to overlap in their interiors,
    checked here as three consecutive finite nodes of f + g.
    """
    if f.dim != 1 or g.dim != 1:
        raise NotImplementedError("conjugate_of_sum is one-dimensional")
    pg = _resolve_sum_grid(f, g, grid)
    xs = pg.nodes()
    h = np.asarray(f.evaluate(xs), dtype=float) + np.asarray(g.evaluate(xs), dtype=float)
    finite = np.isfinite(h)
    interior = finite[:-2] & finite[1:-1] & finite[2:]
    if not interior.any():
        raise QualificationError("qualification condition violated")
    return conjugate(Sampled(GridFunction(pg, h)), dual_grid).fn


def _scan_box(dims, box, level_center, span, nodes):
    axes = [np.linspace(level_center[d] - span[d], level_center[d] + span[d], nodes) for d in range(dims)]
    for d in range(dims):
        axes[d] = np.clip(axes[d], box[d][0], box[d][1])
    if dims == 1:
        return axes[0].reshape(-1, 1)
    X1, X2 = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([X1.ravel(), X2.ravel()])


def _multiscale_argmin(objective, dims, box):
    """Coordinate-box multiscale search; returns (point, value)."""
    center = np.array([(b[0] + b[1]) / 2.0 for b in box])
    span = np.array([(b[1] - b[0]) / 2.0 for b in box])
    best_pt = center.copy()
    best_val = inf
    for _ in range(_SEARCH_LEVELS):
        pts = _scan_box(dims, box, center, span, _SEARCH_NODES)
        vals = np.atleast_1d(objective(pts))
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_pt = pts[k].copy()
        center = best_pt.copy()
        span = span * (4.0 / (_SEARCH_NODES - 1))
    return best_pt, best_val


def _descriptor_box(f, fallback):
    if isinstance(f, Sampled) and f.dim == 1:
        return [(f.grid.lo, f.grid.hi)]
    if isinstance(f, Sampled):
        g1, g2 = f.grid
        return [(g1.lo, g1.hi), (g2.lo, g2.hi)]
    return [(-fallback, fallback)] * f.dim


def _qualification_point(phi, psi, A, box):
    """A point with phi finite and psi finite around A u (discrete interior)."""
    pts = _scan_box(phi.dim, box, np.array([(b[0] + b[1]) / 2.0 for b in box]), np.array([(b[1] - b[0]) / 2.0 for b in box]), 65)
    phv = np.atleast_1d(phi.evaluate(pts if phi.dim > 1 else pts[:, 0]))
    Av = pts @ A.matrix.T
    delta = 1e-6
    ok = np.isfinite(phv)
    for shift in _probe_shifts(psi.dim, delta):
        moved = Av + shift
        psv = np.atleast_1d(psi.evaluate(moved if psi.dim > 1 else moved[:, 0]))
        ok &= np.isfinite(psv)
    idx = np.nonzero(ok)[0]
    if idx.size == 0:
        return None
    return pts[idx[0]]


def _probe_shifts(m, delta):
    shifts = [np.zeros(m)]
    for d in range(m):
        e = np.zeros(m)
        e[d] = delta
        shifts.append(e.copy())
        shifts.append(-e)
    return shifts


def _scalar(v):
    # evaluate() yields a float for a bare point but a length-1 array for a
    # (1,)-shaped one; collapse both
    return float(np.asarray(v).reshape(-1)[0])


def _quadratic_pair(phi, psi, A):
    P, p, cp = phi.A, phi.b, phi.c
    Q, q, cq = psi.A, psi.b, psi.c
    M = A.matrix
    H = P + M.T @ Q @ M
    rhs = -(p + M.T @ q)
    u = np.linalg.solve(H, rhs)
    pv = _scalar(phi.evaluate(u)) + _scalar(psi.evaluate(M @ u))
    sigma = Q @ (M @ u) + q
    dv = -_scalar(conjugate_value(phi, -M.T @ sigma)) - _scalar(conjugate_value(psi, sigma))
    return u, pv, sigma, dv


def _slab_project(u, alpha, a, b):
    t = float(alpha @ u)
    tc = min(max(t, a), b)
    if tc == t:
        return u
    return u - ((t - tc) / float(alpha @ alpha)) * alpha


def _projected_gradient_pair(phi, psi, A, tol=1e-10, max_iter=10000):
    alpha = A.matrix[0]
    a, b = psi.a, psi.b
    L = float(np.linalg.eigvalsh(phi.A).max())
    u = _slab_project(np.zeros(phi.dim), alpha, a, b)
    for _ in range(max_iter):
        grad = phi.A @ u + phi.b
        nxt = _slab_project(u - grad / L, alpha, a, b)
        if float(np.max(np.abs(nxt - u))) <= tol * (1.0 + float(np.max(np.abs(u)))):
            u = nxt
            break
        u = nxt
    pv = _scalar(phi.evaluate(u)) + _scalar(psi.evaluate(float(alpha @ u)))
    grad = phi.A @ u + phi.b
    sigma_ls = -float(alpha @ grad) / float(alpha @ alpha)
    t = float(alpha @ u)
    edge = 1e-9 * (1.0 + abs(b - a))
    if t >= b - edge and t <= a + edge:
        sigma = sigma_ls  # degenerate interval [a, a]
    elif t >= b - edge:
        sigma = max(sigma_ls, 0.0)
    elif t <= a + edge:
        sigma = min(sigma_ls, 0.0)
    else:
        sigma = 0.0
    sig = np.array([sigma])
    dv = -_scalar(conjugate_value(phi, -A.matrix.T @ sig)) - _scalar(conjugate_value(psi, sigma))
    return u, pv, sig, dv


def _search_pair(phi, psi, A, box_half):
    n = phi.dim
    m = psi.dim
    M = A.matrix
    ubox = _descriptor_box(phi, box_half)

    def primal_obj(pts):
        ph = np.atleast_1d(phi.evaluate(pts if n > 1 else pts[:, 0]))
        Av = pts @ M.T
        ps = np.atleast_1d(psi.evaluate(Av if m > 1 else Av[:, 0]))
        return ph + ps

    u, pv = _multiscale_argmin(primal_obj, n, ubox)

    sbox = [(-box_half, box_half)] * m

    def dual_neg(pts):
        shifted = -(pts @ M)
        lhs = np.atleast_1d(conjugate_value(phi, shifted if n > 1 else shifted[:, 0]))
        rhs = np.atleast_1d(conjugate_value(psi, pts if m > 1 else pts[:, 0]))
        return lhs + rhs

    sig, neg = _multiscale_argmin(dual_neg, m, sbox)
    dv = -neg
    return u, pv, sig, dv


def fenchel_rockafellar(phi, psi, A, box_half=_DEFAULT_BOX, tol=1e-8):
    """Solve inf_u phi(u) + psi(A u) and its dual sup_s -phi*(-A' s) - psi*(s).

    Dispatch: exact linear algebra when both sides are positive definite
    quadratics; projected gradient when phi is such a quadratic and psi an
    interval indicator of a single row; otherwise a multiscale box search
    (dimensions at most 2 per side).  The dual value always comes from exact
    conjugate evaluations at the dual point, so gap >= 0 up to roundoff.
    """
    if not isinstance(A, LinearMap):
        A = LinearMap(A)
    m, n = A.shape
    if n != phi.dim or m != psi.dim:
        raise ValueError("linear map shape does not match the function dimensions")
    qbox = _descriptor_box(phi, box_half)
    if _qualification_point(phi, psi, A, qbox) is None:
        raise QualificationError("qualification condition violated")

    if isinstance(phi, Quadratic) and isinstance(psi, Quadratic):
        scale_p = 1.0 + float(np.abs(phi.A).max())
        scale_q = 1.0 + float(np.abs(psi.A).max())
        if np.linalg.eigvalsh(phi.A).min() > 1e-10 * scale_p and np.linalg.eigvalsh(psi.A).min() > 1e-10 * scale_q:
            u, pv, sig, dv = _quadratic_pair(phi, psi, A)
        else:
            if n > 2 or m > 2:
                raise ValueError("degenerate quadratic pair beyond search dimensions")
            u, pv, sig, dv = _search_pair(phi, psi, A, box_half)
    elif isinstance(phi, Quadratic) and isinstance(psi, IndicatorInterval) and m == 1 and np.linalg.eigvalsh(phi.A).min() > 1e-10 * (1.0 + float(np.abs(phi.A).max())):
        u, pv, sig, dv = _projected_gradient_pair(phi, psi, A)
    else:
        if n > 2 or m > 2:
            raise ValueError("unsupported dimensions for the search solver")
        u, pv, sig, dv = _search_pair(phi, psi, A, box_half)

    if isinf(pv):
        return PrimalDualPair(pv, dv, inf, np.atleast_1d(u), np.atleast_1d(sig), False, "primal-infeasible")
    gap = pv - dv
    certified = gap <= max(tol, 1e-6 * (1.0 + abs(pv)))
    status = "certified" if certified else "uncertified"
    return PrimalDualPair(pv, dv, gap, np.atleast_1d(u), np.atleast_1d(sig), certified, status)


def extremality_check(phi, psi, A, u, sigma, tol=1e-8):
    """Verify extremality of (u, sigma) through the two Fenchel gaps.

    gap_primal = phi(u) + phi*(-A' sigma) + (u | A' sigma) and
    gap_dual = psi(A u) + psi*(sigma) - (A u | sigma); both vanish exactly
    when -A' sigma is a subgradient of phi at u and sigma one of psi at A u.
    """
    if not isinstance(A, LinearMap):
        A = LinearMap(A)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    at = A.adjoint(sigma)
    g1 = fenchel_gap(phi, u if phi.dim > 1 else float(u[0]), -at if phi.dim > 1 else -float(at[0]))
    Au = A(u)
    g2 = fenchel_gap(psi, Au if psi.dim > 1 else float(Au[0]), sigma if psi.dim > 1 else float(sigma[0]))
    passed = (not isinf(g1)) and (not isinf(g2)) and g1 <= tol and g2 <= tol
    return ExtremalityReport(passed, g1, g2)
