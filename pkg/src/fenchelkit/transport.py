"""Discrete optimal transport: Kantorovich plans, c-concave potentials,
the distance-cost (Lipschitz) case, and geodesic grid costs.

Cost conventions: "euclidean" is |x - y|, "sq_euclidean" is |x - y|^2 / 2
(the factor makes the quadratic-cost potentials Fenchel-conjugate after the
x^2/2 split), "geodesic" is the masked-grid shortest path combined with a
zero-cost set S through c(x, y) = min(d(x, y), d(x, S) + d(y, S)).
"""

from dataclasses import dataclass
from math import inf

import numpy as np

from . import _kernels
from .errors import (
    DomainMaskError,
    MarginalMismatchError,
    NotSemiDistanceError,
)
from .programs import simplex_phase2, _pivot

__all__ = [
    "DiscreteMeasure",
    "CostMatrix",
    "TransportPlan",
    "DualPotentials",
    "GeodesicSpec",
    "BrenierReport",
    "build_cost",
    "solve_kantorovich",
    "c_transform",
    "dual_potentials",
    "kantorovich_rubinstein",
    "kantorovich_norm",
    "brenier_check",
]

_EPS = 1e-10


@dataclass(frozen=True)
class DiscreteMeasure:
    """A probability measure with finitely many atoms in R^d, d <= 2.

    Zero-weight atoms are dropped on construction; weights must be
    nonnegative and sum to 1 within 1e-12.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] not in (1, 2):
            raise ValueError("points must be (n,), (n, 1) or (n, 2)")
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if w.shape[0] != pts.shape[0]:
            raise ValueError("weights length does not match points")
        if not np.isfinite(pts).all() or not np.isfinite(w).all():
            raise ValueError("measure data must be finite")
        if (w < 0.0).any():
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        keep = w > 0.0
        pts = pts[keep].copy()
        w = w[keep].copy()
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class CostMatrix:
    """Nonnegative finite costs between two support sets."""

    entries: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if not np.isfinite(M).all():
            raise ValueError("cost entries must be finite")
        if (M < -1e-12).any():
            raise ValueError("cost entries must be nonnegative")
        M = np.maximum(M, 0.0)
        M.setflags(write=False)
        object.__setattr__(self, "entries", M)

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class TransportPlan:
    """A transport plan with its marginal residuals (sup norm)."""

    gamma: np.ndarray
    row_residual: float
    col_residual: float


@dataclass(frozen=True)
class DualPotentials:
    """A c-concave potential pair: phi_i + psi_j <= c_ij everywhere, with
    equality on the support of an optimal plan (support_residual measures
    the worst violation on the supplied plan's support)."""

    phi: np.ndarray
    psi: np.ndarray
    feasibility_slack: float
    support_residual: float


@dataclass(frozen=True)
class GeodesicSpec:
    """Masked-grid metric: nodes at origin + (i, j) * axis_length inside the
    omega mask; moves cost axis_length (4-neighbour) and diag_length
    (diagonal, skipped when None); sigma marks the zero-cost set."""

    omega: np.ndarray
    sigma: object = None
    axis_length: float = 1.0
    diag_length: object = None
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=bool)
        if om.ndim != 2:
            raise ValueError("omega mask must be 2-d")
        om = om.copy()
        om.setflags(write=False)
        object.__setattr__(self, "omega", om)
        if self.sigma is not None:
            sg = np.asarray(self.sigma, dtype=bool).copy()
            if sg.shape != om.shape:
                raise ValueError("sigma mask shape must match omega")
            if (sg & ~om).any():
                raise ValueError("sigma must lie inside omega")
            sg.setflags(write=False)
            object.__setattr__(self, "sigma", sg)
        if not self.axis_length > 0.0:
            raise ValueError("axis length must be positive")
        if self.diag_length is not None and not self.diag_length > 0.0:
            raise ValueError("diagonal length must be positive")


def _snap_node(spec, pt):
    x0, y0 = spec.origin
    h = spec.axis_length
    fi = (pt[0] - x0) / h
    fj = (pt[1] - y0) / h if pt.shape[0] > 1 else 0.0
    i = int(round(fi))
    j = int(round(fj))
    nx, ny = spec.omega.shape
    if abs(fi - i) > 1e-6 or abs(fj - j) > 1e-6 or not (0 <= i < nx and 0 <= j < ny) or not spec.omega[i, j]:
        raise DomainMaskError("point not in domain")
    return i * ny + j


def _geodesic_cost(X, Y, spec):
    nx, ny = spec.omega.shape
    passable = np.ascontiguousarray(spec.omega.reshape(-1).astype(np.uint8))
    diag_w = -1.0 if spec.diag_length is None else float(spec.diag_length)
    xi = np.array([_snap_node(spec, p) for p in X], dtype=np.int64)
    yi = np.array([_snap_node(spec, p) for p in Y], dtype=np.int64)
    d_sigma = None
    if spec.sigma is not None and spec.sigma.any():
        sources = np.ascontiguousarray(np.nonzero(spec.sigma.reshape(-1))[0].astype(np.int64))
        d_sigma = _kernels.dijkstra_grid(passable, nx, ny, spec.axis_length, diag_w, sources)
    C = np.empty((xi.shape[0], yi.shape[0]))
    cache = {}
    for a, node in enumerate(xi):
        node = int(node)
        if node not in cache:
            src = np.array([node], dtype=np.int64)
            cache[node] = _kernels.dijkstra_grid(passable, nx, ny, spec.axis_length, diag_w, src)
        dist = cache[node]
        row = dist[yi]
        if d_sigma is not None:
            row = np.minimum(row, d_sigma[node] + d_sigma[yi])
        C[a, :] = row
    if not np.isfinite(C).all():
        raise DomainMaskError("point not in domain")
    return C


def build_cost(X, Y, kind, spec=None):
    """Cost matrix between point sets X and Y for the given kind."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("point dimensions differ")
    if kind == "euclidean":
        diff = X[:, None, :] - Y[None, :, :]
        return CostMatrix(np.sqrt(np.sum(diff * diff, axis=2)), kind)
    if kind == "sq_euclidean":
        diff = X[:, None, :] - Y[None, :, :]
        return CostMatrix(0.5 * np.sum(diff * diff, axis=2), kind)
    if kind == "geodesic":
        if spec is None:
            raise ValueError("geodesic cost needs a GeodesicSpec")
        return CostMatrix(_geodesic_cost(X, Y, spec), kind)
    raise ValueError(f"unknown cost kind {kind!r}")


def _northwest_cells(a, b):
    n = a.shape[0]
    m = b.shape[0]
    cells = []
    i = j = 0
    ra = float(a[0])
    rb = float(b[0])
    while True:
        t = min(ra, rb)
        cells.append((i, j, t))
        ra -= t
        rb -= t
        if i == n - 1 and j == m - 1:
            break
        if ra <= 1e-15 and i < n - 1:
            i += 1
            ra = float(a[i])
        elif j < m - 1:
            j += 1
            rb = float(b[j])
        else:
            i += 1
            ra = float(a[i])
    return cells


def _solve_transport(a, b, C, eps=_EPS):
    """Transportation simplex: returns (gamma, value, u, v).

    Equality form with all n row sums and column sums 1..m-1 (column 0 is
    the redundant constraint, so its potential anchors at v_0 = 0); warm
    start from the northwest-corner tree.
    """
    n = a.shape[0]
    m = b.shape[0]
    nrows = n + m - 1
    ncols = n * m

    def col_of(i, j):
        return i * m + j

    E = np.zeros((nrows, ncols))
    d = np.empty(nrows)
    for i in range(n):
        E[i, i * m : (i + 1) * m] = 1.0
        d[i] = a[i]
    for j in range(1, m):
        E[n + j - 1, j::m] = 1.0
        d[n + j - 1] = b[j]

    cells = _northwest_cells(a, b)
    # constraint row owned by each cell: the first cell takes row-sum 0,
    # each move right introduces a column constraint, each move down a row
    rows = [0]
    for k in range(1, len(cells)):
        i, j, _ = cells[k]
        pi, pj, _ = cells[k - 1]
        rows.append(i if i != pi else n + j - 1)

    cost = C.reshape(-1)
    T = np.zeros((nrows + 1, ncols + 1))
    T[:nrows, :ncols] = E
    T[:nrows, ncols] = d
    T[nrows, :ncols] = cost
    basis = np.full(nrows, -1, dtype=np.int64)
    # canonicalize the warm-start basis: pivot each tree cell into its row
    for (i, j, _), r in zip(cells, rows):
        c = col_of(i, j)
        if abs(T[r, c]) <= eps:
            free = [rr for rr in range(nrows) if basis[rr] < 0 and abs(T[rr, c]) > eps]
            r = free[0]
        _pivot(T, basis, r, c)
        basis[r] = c
    status, it = _kernels.simplex_pivot_loop(T, basis, ncols, eps, 100000)
    if status != _kernels.SIMPLEX_OPTIMAL:
        raise RuntimeError("transportation solve did not reach optimality")

    z = np.zeros(ncols)
    z[basis] = T[:nrows, -1]
    gamma = z.reshape(n, m)
    gamma = np.where(np.abs(gamma) < 1e-14, 0.0, gamma)
    value = float(cost @ z)

    # potentials from the optimal basis tree, anchored at v_0 = 0
    u = np.full(n, np.nan)
    v = np.full(m, np.nan)
    v[0] = 0.0
    adj = [[] for _ in range(n + m)]
    for col in basis:
        i, j = divmod(int(col), m)
        adj[i].append(n + j)
        adj[n + j].append(i)
    stack = [n + 0]
    seen = np.zeros(n + m, dtype=bool)
    seen[n] = True
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if not seen[nb]:
                seen[nb] = True
                if nb < n:
                    j = node - n
                    u[nb] = C[nb, j] - v[j]
                else:
                    i = node
                    v[nb - n] = C[i, nb - n] - u[i]
                stack.append(nb)
    u = np.where(np.isnan(u), 0.0, u)
    v = np.where(np.isnan(v), 0.0, v)
    return gamma, value, u, v


def solve_kantorovich(mu, nu, C):
    """Optimal plan and value between two discrete probability measures."""
    if C.shape != (mu.n, nu.n):
        raise ValueError("cost shape does not match the supports")
    total = abs(float(mu.weights.sum()) - float(nu.weights.sum()))
    if total > 1e-9:
        raise MarginalMismatchError("marginal mismatch")
    gamma, value, _, _ = _solve_transport(mu.weights, nu.weights, C.entries)
    rr = float(np.max(np.abs(gamma.sum(axis=1) - mu.weights)))
    cr = float(np.max(np.abs(gamma.sum(axis=0) - nu.weights)))
    return TransportPlan(gamma, rr, cr), value


def c_transform(values, C, direction="x_to_y", return_argmin=False):
    """The c-transform: min_i C[i, j] - phi[i] over the opposite support.

    direction "x_to_y" maps a potential on the row support to one on the
    column support; "y_to_x" goes the other way.
    """
    vals = np.asarray(values, dtype=float)
    if direction == "x_to_y":
        table = C - vals[:, None]
        out = table.min(axis=0)
        arg = table.argmin(axis=0)
    elif direction == "y_to_x":
        table = C - vals[None, :]
        out = table.min(axis=1)
        arg = table.argmin(axis=1)
    else:
        raise ValueError("direction must be 'x_to_y' or 'y_to_x'")
    if return_argmin:
        return out, arg
    return out


def dual_potentials(mu, nu, C, plan=None):
    """c-concave optimal potentials (phi, psi), normalized to phi[0] = 0.

    Starts from the LP duals and applies c-transform sweeps until the pair
    is a fixed point (at most 5 sweeps); support_residual reports
    max |c_ij - phi_i - psi_j| over the supplied (or solved) plan's support.
    """
    if C.shape != (mu.n, nu.n):
        raise ValueError("cost shape does not match the supports")
    gamma, _, u, v = _solve_transport(mu.weights, nu.weights, C.entries)
    if plan is not None:
        gamma = plan.gamma
    phi, psi = u, v
    for _ in range(5):
        psi_new = c_transform(phi, C.entries, "x_to_y")
        phi_new = c_transform(psi_new, C.entries, "y_to_x")
        if np.max(np.abs(phi_new - phi)) <= 1e-13 and np.max(np.abs(psi_new - psi)) <= 1e-13:
            phi, psi = phi_new, psi_new
            break
        phi, psi = phi_new, psi_new
    shift = float(phi[0])
    phi = phi - shift
    psi = psi + shift
    slack = float(np.min(C.entries - phi[:, None] - psi[None, :]))
    support = gamma > 1e-12
    if support.any():
        resid = float(np.max(np.abs((C.entries - phi[:, None] - psi[None, :])[support])))
    else:
        resid = 0.0
    return DualPotentials(phi, psi, slack, resid)


def _check_semi_distance(C, tol=1e-9):
    n, m = C.shape
    if n != m:
        raise NotSemiDistanceError("not a semi-distance")
    if float(np.max(np.abs(np.diag(C)))) > 1e-12:
        raise NotSemiDistanceError("not a semi-distance")
    if float(np.max(np.abs(C - C.T))) > 1e-12:
        raise NotSemiDistanceError("not a semi-distance")
    # vectorized exhaustive triangle inequality scan
    viol = C[:, None, :] > C[:, :, None] + C[None, :, :] + tol
    if viol.any():
        raise NotSemiDistanceError("not a semi-distance")


def kantorovich_rubinstein(mu, nu, C):
    """Distance-cost transport value with its 1-Lipschitz potential.

    C must be a semi-distance on the concatenated supports [mu; nu]
    (checked exhaustively).  Returns (value, u) with u on those n + m
    points, u = phi on the mu side, u = -psi on the nu side, satisfying
    |u_z - u_w| <= C[z, w].
    """
    C = C.entries if isinstance(C, CostMatrix) else np.asarray(C, dtype=float)
    n = mu.n
    m = nu.n
    if C.shape != (n + m, n + m):
        raise ValueError("cost must cover the concatenated supports")
    _check_semi_distance(C)
    Cr = C[:n, n:]
    gamma, value, u0, v0 = _solve_transport(mu.weights, nu.weights, Cr)
    phi = u0
    for _ in range(5):
        psi = c_transform(phi, Cr, "x_to_y")
        phi = c_transform(psi, Cr, "y_to_x")
    # extend to the union through the column-side transform
    u = np.empty(n + m)
    u[:n] = phi
    u[n:] = -psi
    return value, u


def kantorovich_norm(f_plus, f_minus, C):
    """Transport norm of a balanced signed source: T_C(f+, f-).

    f_plus and f_minus are (points, weights) pairs with equal total mass
    (not necessarily 1); the zero source has norm 0.
    """
    pp, wp = f_plus
    pm, wm = f_minus
    wp = np.atleast_1d(np.asarray(wp, dtype=float))
    wm = np.atleast_1d(np.asarray(wm, dtype=float))
    mass_p = float(wp.sum())
    mass_m = float(wm.sum())
    if abs(mass_p - mass_m) > 1e-9 * (1.0 + max(mass_p, mass_m)):
        raise MarginalMismatchError("marginal mismatch")
    if mass_p <= 0.0:
        return 0.0
    Cm = C.entries if isinstance(C, CostMatrix) else np.asarray(C, dtype=float)
    keep_p = wp > 0.0
    keep_m = wm > 0.0
    a = wp[keep_p] / mass_p
    b = wm[keep_m] / mass_m
    _, value, _, _ = _solve_transport(a, b, Cm[np.ix_(keep_p, keep_m)])
    return value * mass_p


@dataclass(frozen=True)
class BrenierReport:
    """Structure checks of a quadratic-cost 1-d plan: support monotonicity,
    convexity of the shifted potential x^2/2 - phi, and the Fenchel
    equality on the support."""

    passed: bool
    monotone: bool
    crossing_pair: object
    phi0_convex: bool
    fenchel_residual: float


def brenier_check(mu, nu, plan, phi, tol=1e-8):
    """Check the quadratic-cost structure of a 1-d optimal pair.

    With c = (x - y)^2 / 2 the potential splits through phi0(x) =
    x^2/2 - phi(x): the plan's support must be monotone, phi0 convex on
    the support, and phi0(x) + phi0*(y) = x y on every support pair.
    """
    x = mu.points[:, 0]
    y = nu.points[:, 0]
    gamma = plan.gamma
    phi = np.asarray(phi, dtype=float)
    phi0 = 0.5 * x * x - phi
    ii, jj = np.nonzero(gamma > 1e-12)
    # monotone support: no strictly crossing pair
    monotone = True
    crossing = None
    xs = x[ii]
    ys = y[jj]
    d = (xs[:, None] - xs[None, :]) * (ys[:, None] - ys[None, :])
    bad = np.argwhere(d < -1e-12)
    if bad.size > 0:
        monotone = False
        k, l = bad[0]
        crossing = ((float(xs[k]), float(ys[k])), (float(xs[l]), float(ys[l])))
    order = np.argsort(x, kind="stable")
    xo = x[order]
    po = phi0[order]
    convex = True
    if xo.shape[0] >= 3:
        dx = np.diff(xo)
        slopes = np.diff(po) / np.where(dx == 0.0, 1.0, dx)
        scale = 1.0 + float(np.max(np.abs(slopes)))
        convex = bool(np.all(np.diff(slopes) >= -tol * scale))
    # Fenchel equality on the support through the discrete conjugate
    psi0 = np.max(x[:, None] * y[None, :] - phi0[:, None], axis=0)
    resid = float(np.max(np.abs(phi0[ii] + psi0[jj] - x[ii] * y[jj]), initial=0.0))
    passed = monotone and convex and resid <= tol
    return BrenierReport(passed, monotone, crossing, convex, resid)
