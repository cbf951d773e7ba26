"""Linear programs with dual certificates, and small convex programs with
KKT certificates via dual ascent.

LP convention: min (c | x) subject to x >= 0 and A x <= b.  The dual is
max -(b | y) over y >= 0 with A' y + c >= 0, reported through the same
min-form container by dual_of.  The simplex is a dense two-phase tableau
method with Bland's rule, so runs are deterministic and cycle-free.
"""

from dataclasses import dataclass
from math import inf

import numpy as np
from scipy.optimize import nnls

from . import _kernels
from .errors import PivotLimitError, SlaterError

__all__ = [
    "LpProblem",
    "LpSolution",
    "ComplementarityReport",
    "solve_lp",
    "dual_of",
    "verify_complementarity",
    "value_function",
    "ConvexProgram",
    "KktCertificate",
    "slater_check",
    "solve_convex_program",
]

_EPS = 1e-10
_MAX_PIVOTS = 100000


@dataclass(frozen=True)
class LpProblem:
    """min (c | x) subject to x >= 0 and A x <= b."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape != (b.shape[0], c.shape[0]):
            raise ValueError("LP shapes are inconsistent")
        for arr in (c, A, b):
            if not np.isfinite(arr).all():
                raise ValueError("LP data must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def shape(self):
        return self.A.shape


@dataclass(frozen=True)
class LpSolution:
    """Solver outcome; x, y and the values are meaningful when optimal."""

    status: str
    x: np.ndarray
    y: np.ndarray
    primal_value: float
    dual_value: float
    slack_residuals: tuple


def _pivot(T, basis, i, j):
    """One tableau pivot, elementwise identical to the kernel's."""
    piv = T[i, j]
    T[i, :] /= piv
    factors = T[:, j].copy()
    factors[i] = 0.0
    T -= np.outer(factors, T[i, :])
    T[:, j] = 0.0
    T[i, j] = 1.0
    basis[i] = j


def _reduce_objective(T, basis):
    m = T.shape[0] - 1
    for i in range(m):
        factor = T[m, basis[i]]
        if factor != 0.0:
            T[m, :] -= factor * T[i, :]


def simplex_phase2(cost, E, d, basis, eps=_EPS, max_iter=_MAX_PIVOTS, ncols_enter=None):
    """Bland-rule pivoting for min cost . z with E z = d, z >= 0 from a
    feasible starting basis.  Returns (status, T, basis, iterations)."""
    m, N = E.shape
    if ncols_enter is None:
        ncols_enter = N
    T = np.zeros((m + 1, N + 1))
    T[:m, :N] = E
    T[:m, N] = d
    T[m, :N] = cost
    basis = np.asarray(basis, dtype=np.int64).copy()
    _reduce_objective(T, basis)
    status, it = _kernels.simplex_pivot_loop(T, basis, ncols_enter, eps, max_iter)
    if status == _kernels.SIMPLEX_PIVOT_LIMIT:
        raise PivotLimitError("pivot limit")
    return status, T, basis, it


def solve_lp(problem, eps=_EPS, max_iter=_MAX_PIVOTS):
    """Two-phase dense simplex; duals come from the slack reduced costs.

    Returns an LpSolution with status "optimal", "infeasible" or
    "unbounded"; raises PivotLimitError when the pivot budget runs out.
    """
    c = problem.c
    A = problem.A
    b = problem.b
    m, n = A.shape
    sign = np.where(b < 0.0, -1.0, 1.0)
    E = np.hstack([A * sign[:, None], np.diag(sign)])
    d = b * sign
    neg_rows = np.nonzero(sign < 0.0)[0]
    n_art = neg_rows.size
    N = n + m
    total_it = 0

    if n_art > 0:
        E1 = np.hstack([E, np.zeros((m, n_art))])
        basis = np.empty(m, dtype=np.int64)
        basis[:] = np.arange(n, n + m)
        for k, r in enumerate(neg_rows):
            E1[r, N + k] = 1.0
            basis[r] = N + k
        cost1 = np.zeros(N + n_art)
        cost1[N:] = 1.0
        status, T, basis, it = simplex_phase2(cost1, E1, d, basis, eps, max_iter)
        total_it += it
        phase1_value = -T[m, -1]
        if phase1_value > 1e-9 * (1.0 + np.abs(b).max()):
            empty = np.zeros(0)
            return LpSolution("infeasible", empty, empty, inf, inf, (inf, inf))
        # drive leftover basic artificials onto structural columns; rows with
        # no pivot available are redundant and stay inert at value zero
        for i in range(m):
            if basis[i] >= N:
                row = T[i, :N]
                cand = np.nonzero(np.abs(row) > eps)[0]
                if cand.size > 0:
                    _pivot(T, basis, i, int(cand[0]))
        cost2 = np.zeros(N + n_art)
        cost2[:n] = c
        T[m, :-1] = cost2
        T[m, -1] = 0.0
        _reduce_objective(T, basis)
        status, it = _kernels.simplex_pivot_loop(T, basis, N, eps, max_iter - total_it)
        total_it += it
        if status == _kernels.SIMPLEX_PIVOT_LIMIT:
            raise PivotLimitError("pivot limit")
    else:
        basis = np.arange(n, n + m, dtype=np.int64)
        cost2 = np.zeros(N)
        cost2[:n] = c
        status, T, basis, it = simplex_phase2(cost2, E, d, basis, eps, max_iter)
        total_it += it

    if status == _kernels.SIMPLEX_UNBOUNDED:
        empty = np.zeros(0)
        return LpSolution("unbounded", empty, empty, -inf, -inf, (inf, inf))

    mrow = T.shape[0] - 1
    z = np.zeros(T.shape[1] - 1)
    z[basis] = T[:mrow, -1]
    x = z[:n].copy()
    x[(x < 0.0) & (x > -1e-9)] = 0.0
    y = T[mrow, n : n + m].copy()
    y[(y < 0.0) & (y > -1e-9)] = 0.0
    primal = float(problem.c @ x)
    dual = -float(problem.b @ y)
    r1 = float((A @ x - b) @ y)
    r2 = float((A.T @ y + c) @ x)
    return LpSolution("optimal", x, y, primal, dual, (abs(r1), abs(r2)))


def dual_of(problem):
    """The dual LP in the same min-form container.

    The dual max -(b | y) with y >= 0, A' y + c >= 0 reads as
    min (b | y) with y >= 0, -A' y <= c, whose optimal value is the negative
    of the dual optimum; dual_of(dual_of(p)) restores p exactly.
    """
    return LpProblem(problem.b, -problem.A.T, problem.c)


@dataclass(frozen=True)
class ComplementarityReport:
    passed: bool
    primal_feasibility: float
    dual_feasibility: float
    complementarity: tuple
    strong_duality_residual: float


def verify_complementarity(problem, x, y, tol=1e-8):
    """Check feasibility, the two complementary slackness products, and
    value agreement (c | x) = -(b | y) for a candidate pair."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A, b, c = problem.A, problem.b, problem.c
    pf = max(float(np.max(A @ x - b, initial=0.0)), float(np.max(-x, initial=0.0)))
    df = max(float(np.max(-(A.T @ y + c), initial=0.0)), float(np.max(-y, initial=0.0)))
    r1 = abs(float((A @ x - b) @ y))
    r2 = abs(float((A.T @ y + c) @ x))
    sd = abs(float(c @ x + b @ y))
    passed = pf <= tol and df <= tol and r1 <= tol and r2 <= tol and sd <= tol
    return ComplementarityReport(passed, pf, df, (r1, r2), sd)


def value_function(problem, perturbation):
    """h(u) = inf { (c | x) : x >= 0, A x <= b + u }.

    Convex in u; +inf when the perturbed program is infeasible and -inf when
    it is unbounded below.
    """
    u = np.atleast_1d(np.asarray(perturbation, dtype=float))
    pert = LpProblem(problem.c, problem.A, problem.b + u)
    sol = solve_lp(pert)
    if sol.status == "infeasible":
        return inf
    if sol.status == "unbounded":
        return -inf
    return sol.primal_value


@dataclass(frozen=True)
class ConvexProgram:
    """min f(x) subject to g_j(x) <= 0 over a coordinate box."""

    objective: object
    constraints: tuple
    box: tuple

    def __post_init__(self):
        cons = tuple(self.constraints)
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        d = self.objective.dim
        if len(box) != d:
            raise ValueError("box does not match the problem dimension")
        for lo, hi in box:
            if not hi > lo:
                raise ValueError("box intervals need hi > lo")
        for g in cons:
            if g.dim != d:
                raise ValueError("constraint dimension mismatch")
        object.__setattr__(self, "constraints", cons)
        object.__setattr__(self, "box", box)

    @property
    def dim(self):
        return self.objective.dim


@dataclass(frozen=True)
class KktCertificate:
    """A primal-dual candidate with its KKT residuals."""

    x: np.ndarray
    lam: np.ndarray
    primal_value: float
    dual_value: float
    gap: float
    stationarity_residual: float
    complementarity_residuals: np.ndarray
    slater_point: np.ndarray


def _eval_at(f, pts):
    return np.atleast_1d(f.evaluate(pts if f.dim > 1 else pts[:, 0]))


def _box_mesh(box, nodes):
    axes = [np.linspace(lo, hi, nodes) for lo, hi in box]
    if len(axes) == 1:
        return axes[0].reshape(-1, 1)
    X1, X2 = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([X1.ravel(), X2.ravel()])


def _refined_argmin(fun, box, levels=6, nodes=129):
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    center = 0.5 * (lo + hi)
    span = 0.5 * (hi - lo)
    best_pt = center.copy()
    best_val = inf
    for _ in range(levels):
        local = [
            (max(lo[d], center[d] - span[d]), min(hi[d], center[d] + span[d]))
            for d in range(lo.shape[0])
        ]
        pts = _box_mesh(local, nodes)
        vals = fun(pts)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_pt = pts[k].copy()
        center = best_pt.copy()
        span = span * (4.0 / (nodes - 1))
    return best_pt, best_val


def slater_check(cp, margin=1e-9):
    """A strictly feasible point of the program, or None.

    Scans the box for the point with the largest constraint margin among
    those where the objective is finite; certifies Slater when the margin
    clears the threshold.
    """
    pts = _box_mesh(cp.box, 257)
    fv = _eval_at(cp.objective, pts)
    worst = np.full(pts.shape[0], -inf)
    ok = np.isfinite(fv)
    if cp.constraints:
        worst = np.max(np.column_stack([_eval_at(g, pts) for g in cp.constraints]), axis=1)
    else:
        worst = np.zeros(pts.shape[0]) - 1.0
    worst = np.where(ok, worst, inf)
    k = int(np.argmin(worst))
    if worst[k] < -margin:
        return pts[k]
    return None


def _lagrangian_argmin(cp, lam, levels=6):
    def fun(pts):
        vals = _eval_at(cp.objective, pts)
        for lj, g in zip(lam, cp.constraints):
            if lj != 0.0:
                vals = vals + lj * _eval_at(g, pts)
        return vals

    return _refined_argmin(fun, cp.box, levels=levels)


def _constrained_argmin(cp, levels=9):
    """Primal recovery: minimize f over the feasible mesh points.  The
    Lagrangian can be flat along the active face, so its own argmin may
    be infeasible; this search cannot be."""

    def fun(pts):
        vals = _eval_at(cp.objective, pts)
        if cp.constraints:
            worst = np.max(np.column_stack([_eval_at(g, pts) for g in cp.constraints]), axis=1)
            vals = np.where(worst <= 1e-12, vals, inf)
        return vals

    return _refined_argmin(fun, cp.box, levels=levels)


def _central_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty(x.shape[0])
    for d in range(x.shape[0]):
        e = np.zeros(x.shape[0])
        e[d] = h
        fp = float(f.evaluate(x + e if f.dim > 1 else float(x[0] + h)))
        fm = float(f.evaluate(x - e if f.dim > 1 else float(x[0] - h)))
        g[d] = (fp - fm) / (2.0 * h)
    return g


def solve_convex_program(cp, max_ascent=200, tol=1e-10):
    """Dual ascent with a Polyak step plus an active-set least-squares
    polish of the multipliers; returns a KktCertificate.

    Raises SlaterError when no strictly feasible point is found, since the
    zero-gap certificate is only guaranteed under strict feasibility.
    """
    x0 = slater_check(cp)
    if x0 is None:
        raise SlaterError("qualification (slater) not verified")
    mcon = len(cp.constraints)
    lam = np.zeros(mcon)
    best_q = -inf
    lam_best = lam.copy()
    upper = inf
    for k in range(1, max_ascent + 1):
        xk, q = _lagrangian_argmin(cp, lam)
        if q > best_q:
            best_q = q
            lam_best = lam.copy()
        if mcon == 0:
            break
        s = np.array([float(g.evaluate(xk if cp.dim > 1 else float(xk[0]))) for g in cp.constraints])
        if np.max(s) <= 1e-9:
            upper = min(upper, float(cp.objective.evaluate(xk if cp.dim > 1 else float(xk[0]))))
        sn = float(s @ s)
        if sn <= 1e-18:
            break
        if np.isfinite(upper) and upper - q > 1e-15:
            step = (upper - q) / sn
        else:
            step = 1.0 / (k * np.sqrt(sn))
        lam = np.maximum(0.0, lam + step * s)

    xbar, _ = _constrained_argmin(cp)
    gx = np.array([float(g.evaluate(xbar if cp.dim > 1 else float(xbar[0]))) for g in cp.constraints])
    grad_f = _central_gradient(cp.objective, xbar)
    lam_pol = np.zeros(mcon)
    active = np.nonzero(gx >= -1e-5 * (1.0 + np.abs(gx)))[0]
    if active.size > 0:
        G = np.column_stack([_central_gradient(cp.constraints[j], xbar) for j in active])
        sol, _ = nnls(G, -grad_f)
        lam_pol[active] = sol
    # keep whichever multipliers make the KKT residuals smaller
    candidates = [lam_pol, lam_best]
    best = None
    for cand in candidates:
        station = grad_f.copy()
        for lj, g in zip(cand, cp.constraints):
            if lj != 0.0:
                station = station + lj * _central_gradient(g, xbar)
        st = float(np.max(np.abs(station))) if station.size else 0.0
        comp = np.abs(cand * gx) if mcon else np.zeros(0)
        score = max(st, float(np.max(comp, initial=0.0)))
        if best is None or score < best[0]:
            best = (score, cand, st, comp)
    _, lam_fin, st_res, comp_res = best
    _, qfin = _lagrangian_argmin(cp, lam_fin, levels=7)
    pval = float(cp.objective.evaluate(xbar if cp.dim > 1 else float(xbar[0])))
    return KktCertificate(
        x=xbar,
        lam=lam_fin,
        primal_value=pval,
        dual_value=qfin,
        gap=pval - qfin,
        stationarity_residual=st_res,
        complementarity_residuals=comp_res,
        slater_point=x0,
    )
