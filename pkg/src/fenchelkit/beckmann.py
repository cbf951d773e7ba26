"""Beckmann minimal-flow problems on masked staggered grids.

Node potentials live at cell centers, flows on the edges between
horizontally or vertically adjacent nodes.  The divergence and gradient
below are exact negative adjoints of each other under the h^2-weighted
inner products, so the discrete duality

    min { sum |sigma| h^2 : div sigma + f = 0, free nodes }
      = max { sum u f h^2 : |grad u| <= 1 edgewise, u = 0 on the
                            zero-potential set }

holds with no consistency error.  The minimizer is approached through the
anisotropic p-Laplacian (each edge penalized separately), p -> infinity.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve

from .errors import MarginalMismatchError, PSolveError

__all__ = [
    "GridDomain",
    "FlowField",
    "PotentialField",
    "W1Result",
    "BeckmannReport",
    "divergence",
    "gradient",
    "solve_p_laplace",
    "continuation_to_w1",
    "optimality_residuals",
    "entropy_functional",
    "rho_k_functional",
]

_DELTA = 1e-8
_DIAG_SHIFT = 1e-12


@dataclass(frozen=True)
class GridDomain:
    """Rectangular grid of spacing h with a node mask omega, an optional
    zero-potential node set sigma inside it, and a source f supported on
    omega.  Without sigma the source must balance: sum f h^2 = 0."""

    nx: int
    ny: int
    h: float
    omega: np.ndarray
    f: np.ndarray
    sigma: object = None

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have at least one node")
        if not self.h > 0.0:
            raise ValueError("spacing must be positive")
        om = np.asarray(self.omega, dtype=bool)
        if om.shape != (self.nx, self.ny):
            raise ValueError("omega shape must be (nx, ny)")
        if not om.any():
            raise ValueError("omega mask is empty")
        f = np.asarray(self.f, dtype=float)
        if f.shape != (self.nx, self.ny):
            raise ValueError("source shape must be (nx, ny)")
        if not np.isfinite(f).all():
            raise ValueError("source must be finite")
        f = np.where(om, f, 0.0)
        om = om.copy()
        om.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "f", f)
        if self.sigma is not None:
            sg = np.asarray(self.sigma, dtype=bool)
            if sg.shape != om.shape:
                raise ValueError("sigma shape must match omega")
            if (sg & ~om).any():
                raise ValueError("sigma must lie inside omega")
            if not sg.any():
                object.__setattr__(self, "sigma", None)
            else:
                sg = sg.copy()
                sg.setflags(write=False)
                object.__setattr__(self, "sigma", sg)
        if self.sigma is None:
            total = float(f.sum()) * self.h * self.h
            scale = 1.0 + float(np.abs(f).sum()) * self.h * self.h
            if abs(total) > 1e-12 * scale:
                raise MarginalMismatchError("marginal mismatch")

    def edge_masks(self):
        """Boolean masks of the active horizontal and vertical edges
        (both endpoints inside omega)."""
        hor = self.omega[:-1, :] & self.omega[1:, :]
        ver = self.omega[:, :-1] & self.omega[:, 1:]
        return hor, ver


@dataclass(frozen=True)
class FlowField:
    """Edge flow: hor[i, j] sits between nodes (i, j) and (i+1, j),
    ver[i, j] between (i, j) and (i, j+1)."""

    hor: np.ndarray
    ver: np.ndarray

    def __post_init__(self):
        hor = np.asarray(self.hor, dtype=float)
        ver = np.asarray(self.ver, dtype=float)
        if hor.ndim != 2 or ver.ndim != 2:
            raise ValueError("flow components must be 2-d")
        if hor.shape[0] + 1 != ver.shape[0] or hor.shape[1] != ver.shape[1] + 1:
            raise ValueError("flow component shapes are inconsistent")
        object.__setattr__(self, "hor", hor)
        object.__setattr__(self, "ver", ver)

    def total_mass(self, h):
        return (float(np.abs(self.hor).sum()) + float(np.abs(self.ver).sum())) * h * h


@dataclass(frozen=True)
class PotentialField:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("potential must be 2-d")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class W1Result:
    """Continuation output: the flow value sum |sigma| h^2, the clipped
    1-Lipschitz potential, the weak-duality gap, the final conservation
    residual, and one (p, iterations, residual, value) record per stage."""

    value: float
    flow: FlowField
    potential: PotentialField
    gap: float
    residual: float
    history: tuple


@dataclass(frozen=True)
class BeckmannReport:
    """Optimality residuals: conservation off the zero-potential set,
    the eikonal defect |grad u| = 1 on edges carrying flow, the Lipschitz
    excess max(|grad u| - 1), and max |u| on the zero-potential set."""

    conservation: float
    eikonal: float
    lip_excess: float
    sigma_boundary: float


def divergence(domain, flow):
    """Node divergence of an edge flow: inflow minus outflow over h."""
    nx, ny, h = domain.nx, domain.ny, domain.h
    hor_m, ver_m = domain.edge_masks()
    sh = np.where(hor_m, flow.hor, 0.0)
    sv = np.where(ver_m, flow.ver, 0.0)
    div = np.zeros((nx, ny))
    div[:-1, :] += sh
    div[1:, :] -= sh
    div[:, :-1] += sv
    div[:, 1:] -= sv
    div /= h
    return np.where(domain.omega, div, 0.0)


def gradient(domain, values):
    """Edge gradient of a node field; inactive edges carry 0."""
    h = domain.h
    u = values.values if isinstance(values, PotentialField) else np.asarray(values, dtype=float)
    hor_m, ver_m = domain.edge_masks()
    gh = np.where(hor_m, (u[1:, :] - u[:-1, :]) / h, 0.0)
    gv = np.where(ver_m, (u[:, 1:] - u[:, :-1]) / h, 0.0)
    return FlowField(gh, gv)


def _free_mask(domain):
    free = domain.omega.copy()
    anchor = None
    if domain.sigma is not None:
        free &= ~domain.sigma
    else:
        # pure balance problem: potentials are defined up to a constant,
        # so one node is pinned to remove the null space
        ij = np.argwhere(domain.omega)[0]
        anchor = (int(ij[0]), int(ij[1]))
        free[anchor] = False
    return free, anchor


def _edge_flux(gh, gv, p):
    sh = np.abs(gh) ** (p - 2) * gh if p != 2.0 else gh.copy()
    sv = np.abs(gv) ** (p - 2) * gv if p != 2.0 else gv.copy()
    return sh, sv


def _newton_matrix(domain, free_idx, nf, wh, wv):
    nx, ny, h = domain.nx, domain.ny, domain.h
    hor_m, ver_m = domain.edge_masks()
    rows = []
    cols = []
    vals = []
    diag = np.full(nf, _DIAG_SHIFT)

    def couple(ia, ja, ib, jb, w):
        a = free_idx[ia, ja]
        b = free_idx[ib, jb]
        if a >= 0:
            diag[a] += w
        if b >= 0:
            diag[b] += w
        if a >= 0 and b >= 0:
            rows.append(a)
            cols.append(b)
            vals.append(-w)
            rows.append(b)
            cols.append(a)
            vals.append(-w)

    h2 = h * h
    for i, j in np.argwhere(hor_m):
        couple(i, j, i + 1, j, wh[i, j] / h2)
    for i, j in np.argwhere(ver_m):
        couple(i, j, i, j + 1, wv[i, j] / h2)
    rows += list(range(nf))
    cols += list(range(nf))
    vals += list(diag)
    return csr_matrix((vals, (rows, cols)), shape=(nf, nf))


def solve_p_laplace(domain, p, u0=None, tol=1e-10, max_iter=60):
    """Damped Newton solve of the edgewise p-Laplace balance equation
    div(|grad u|^(p-2) grad u) + f = 0 on the free nodes, u = 0 on the
    zero-potential set.  Returns (PotentialField, FlowField, residual,
    iterations); the flow is the true (unregularized) edge flux.
    """
    if p < 2.0:
        raise ValueError("exponent must be at least 2")
    # positive homogeneity: flux for s*f is s times the flux for f with the
    # potential scaled by s^(1/(p-1)), so normalize to unit supply and the
    # Newton damping always sees O(1) data
    s = 0.5 * float(np.abs(domain.f).sum()) * domain.h * domain.h
    if s <= 0.0 or abs(s - 1.0) <= 1e-12:
        sdom, a, stol = domain, 1.0, tol
    else:
        sdom = GridDomain(domain.nx, domain.ny, domain.h, domain.omega,
                          domain.f / s, domain.sigma)
        a = s ** (1.0 / (p - 1.0))
        stol = tol / s
    if u0 is None:
        u0s = None
    else:
        u0s = np.array(u0.values if isinstance(u0, PotentialField) else u0,
                       dtype=float) / a
    if u0s is None and p > 2.0:
        # cold starts stall for large p (the Jacobian degenerates at u = 0),
        # so walk up from the linear case
        q = 2.0
        while q < p:
            u0s = _p_laplace_newton(sdom, q, u0s, max(stol, 1e-8), max_iter)[0].values
            q *= 2.0
    pot, flow, res, it = _p_laplace_newton(sdom, p, u0s, stol, max_iter)
    if sdom is domain:
        return pot, flow, res, it
    return (PotentialField(pot.values * a),
            FlowField(flow.hor * s, flow.ver * s), res * s, it)


def _p_laplace_newton(domain, p, u0, tol, max_iter):
    if p < 2.0:
        raise ValueError("exponent must be at least 2")
    nx, ny = domain.nx, domain.ny
    free, _ = _free_mask(domain)
    free_idx = np.full((nx, ny), -1, dtype=np.int64)
    nf = int(free.sum())
    free_idx[free] = np.arange(nf)

    if u0 is None:
        u = np.zeros((nx, ny))
    else:
        u = np.array(u0.values if isinstance(u0, PotentialField) else u0, dtype=float)
        u = np.where(domain.omega, u, 0.0)
    u[~free] = 0.0

    def residual_of(uu):
        g = gradient(domain, uu)
        sh, sv = _edge_flux(g.hor, g.ver, p)
        F = divergence(domain, FlowField(sh, sv)) + domain.f
        return np.where(free, F, 0.0)

    F = residual_of(u)
    res = float(np.max(np.abs(F)))
    it = 0
    while res > tol and it < max_iter:
        g = gradient(domain, u)
        wh = (p - 1.0) * (g.hor * g.hor + _DELTA * _DELTA) ** ((p - 2.0) / 2.0)
        wv = (p - 1.0) * (g.ver * g.ver + _DELTA * _DELTA) ** ((p - 2.0) / 2.0)
        L = _newton_matrix(domain, free_idx, nf, wh, wv)
        rhs = F[free]
        du = spsolve(L, rhs)
        if not np.isfinite(du).all():
            raise PSolveError("p-solve failed")
        step = np.zeros((nx, ny))
        step[free] = du
        t = 1.0
        accepted = False
        while t >= 2.0 ** -30:
            Ft = residual_of(u + t * step)
            rt = float(np.max(np.abs(Ft)))
            if rt <= (1.0 - 1e-4 * t) * res:
                u = u + t * step
                F = Ft
                res = rt
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        it += 1
    if res > tol:
        raise PSolveError("p-solve failed")
    g = gradient(domain, u)
    sh, sv = _edge_flux(g.hor, g.ver, p)
    return PotentialField(u), FlowField(sh, sv), res, it


def _min_plus_sweeps(domain, v):
    """Relax v <- min(v, neighbour + h) over active edges to a fixed point:
    the largest edgewise 1-Lipschitz function below the input."""
    nx, ny, h = domain.nx, domain.ny, domain.h
    hor_m, ver_m = domain.edge_masks()
    sweeps = max(50, nx + ny + 10)
    for _ in range(sweeps):
        w = v.copy()
        cand = np.full((nx, ny), np.inf)
        cand[:-1, :] = np.where(hor_m, v[1:, :] + h, np.inf)
        w = np.minimum(w, cand)
        cand = np.full((nx, ny), np.inf)
        cand[1:, :] = np.where(hor_m, v[:-1, :] + h, np.inf)
        w = np.minimum(w, cand)
        cand = np.full((nx, ny), np.inf)
        cand[:, :-1] = np.where(ver_m, v[:, 1:] + h, np.inf)
        w = np.minimum(w, cand)
        cand = np.full((nx, ny), np.inf)
        cand[:, 1:] = np.where(ver_m, v[:, :-1] + h, np.inf)
        w = np.minimum(w, cand)
        if np.array_equal(w, v):
            return w
        v = w
    return v


def _lipschitz_clip(domain, u):
    """Project u to a 1-Lipschitz function that vanishes exactly on the
    zero-potential set: first the largest Lipschitz minorant (min-plus
    sweeps), then a raise by max(. , -dist_to_sigma), which restores 0 on
    the set without leaving the Lipschitz cone (max of Lipschitz maps)."""
    v = np.where(domain.omega, u, np.inf)
    if domain.sigma is not None:
        v = np.where(domain.sigma, np.minimum(v, 0.0), v)
    v = _min_plus_sweeps(domain, v)
    if domain.sigma is not None:
        d = np.where(domain.sigma, 0.0, np.inf)
        d = _min_plus_sweeps(domain, d)
        v = np.maximum(v, np.where(np.isfinite(d), -d, v))
    return np.where(domain.omega, v, 0.0)


def continuation_to_w1(domain, schedule=(2, 4, 8, 16, 32, 64), tol=1e-10):
    """March the p-Laplace solves along the schedule with warm starts and
    read off the minimal-flow value at the largest exponent.

    The reported potential is a clipped rescale of the final iterate: each
    candidate alpha * u is projected onto the 1-Lipschitz cone (zero on the
    zero-potential set), all candidates are dual feasible, and the best one
    is kept, so gap = value - sum u f h^2 >= 0 up to rounding.  Scaling by
    1/(1 + lip_excess) matters because the finite-p potential has slightly
    super-unit slopes on strong channels, which the plain minorant clip
    would propagate into remote potential values.
    """
    u = None
    history = []
    pot = flow = None
    res = np.inf
    # tol is relative to the supply scale; the inner solves take an absolute
    # residual bound, which would be unreachable in doubles for large masses
    mass = 0.5 * float(np.abs(domain.f).sum()) * domain.h * domain.h
    tol_abs = tol * (1.0 + mass)
    for p in schedule:
        pot, flow, res, it = solve_p_laplace(domain, float(p), u0=u, tol=tol_abs)
        u = pot
        value_p = flow.total_mass(domain.h)
        history.append((float(p), it, res, value_p))
    value = flow.total_mass(domain.h)
    h2 = domain.h * domain.h
    g = gradient(domain, pot.values)
    hor_m, ver_m = domain.edge_masks()
    slopes = np.concatenate([np.abs(g.hor[hor_m]), np.abs(g.ver[ver_m])])
    smax = float(slopes.max(initial=0.0))
    lip = max(smax - 1.0, 0.0)
    alphas = {1.0, 1.0 / (1.0 + lip), 1.0 / (1.0 + 0.5 * lip)}
    flux = np.concatenate([np.abs(flow.hor[hor_m]), np.abs(flow.ver[ver_m])])
    act = slopes[flux > 1e-9 * (1.0 + flux.max(initial=0.0))]
    if act.size:
        # the clip keeps every rescale dual feasible, so sweep inflations
        # matched to the slope spread of the flux-carrying edges
        for q in (0.0, 0.25, 0.5, 0.75, 1.0):
            s_q = float(np.quantile(act, q))
            if s_q > 0.0:
                alphas.add(1.0 / s_q)
    best_dual = -np.inf
    best = None
    for alpha in sorted(alphas):
        clipped = _lipschitz_clip(domain, alpha * pot.values)
        dual = float(np.sum(clipped * domain.f)) * h2
        if dual > best_dual:
            best_dual = dual
            best = clipped
    return W1Result(value, flow, PotentialField(best), value - best_dual, res, tuple(history))


def optimality_residuals(domain, flow, potential, eps=1e-3):
    """Primal-dual residuals of a flow/potential pair: conservation off
    the zero-potential set, |grad u| = 1 where |sigma| > eps, the overall
    Lipschitz excess, and |u| on the zero-potential set."""
    u = potential.values if isinstance(potential, PotentialField) else np.asarray(potential, dtype=float)
    free, _ = _free_mask(domain)
    cons = divergence(domain, flow) + domain.f
    conservation = float(np.max(np.abs(np.where(free, cons, 0.0))))
    g = gradient(domain, u)
    hor_m, ver_m = domain.edge_masks()
    sh = np.where(hor_m, flow.hor, 0.0)
    sv = np.where(ver_m, flow.ver, 0.0)
    eik = 0.0
    act_h = np.abs(sh) > eps
    act_v = np.abs(sv) > eps
    if act_h.any():
        eik = max(eik, float(np.max(np.abs(np.abs(g.hor[act_h]) - 1.0))))
    if act_v.any():
        eik = max(eik, float(np.max(np.abs(np.abs(g.ver[act_v]) - 1.0))))
    lip = 0.0
    if hor_m.any():
        lip = max(lip, float(np.max(np.abs(g.hor[hor_m]))) - 1.0)
    if ver_m.any():
        lip = max(lip, float(np.max(np.abs(g.ver[ver_m]))) - 1.0)
    lip = max(lip, 0.0)
    if domain.sigma is not None:
        boundary = float(np.max(np.abs(u[domain.sigma])))
    else:
        boundary = 0.0
    return BeckmannReport(conservation, eik, lip, boundary)


def entropy_functional(domain, flow):
    """Edge entropy sum |sigma| log |sigma| h^2 with 0 log 0 = 0."""
    hor_m, ver_m = domain.edge_masks()
    vals = np.concatenate([np.abs(flow.hor[hor_m]), np.abs(flow.ver[ver_m])])
    pos = vals > 0.0
    return float(np.sum(vals[pos] * np.log(vals[pos]))) * domain.h * domain.h


def rho_k_functional(domain, flow, gauge="euclidean"):
    """Gauge mass of the flow: each edge carries an axis-aligned vector
    (hor edges along x, ver edges along y), so the euclidean, l1 and linf
    gauges all reduce to |sigma| and agree with the Beckmann value."""
    hor_m, ver_m = domain.edge_masks()
    vh = np.stack([flow.hor[hor_m], np.zeros(int(hor_m.sum()))], axis=1)
    vv = np.stack([np.zeros(int(ver_m.sum())), flow.ver[ver_m]], axis=1)
    V = np.concatenate([vh, vv], axis=0)
    if gauge == "euclidean":
        g = np.sqrt(np.sum(V * V, axis=1))
    elif gauge == "l1":
        g = np.sum(np.abs(V), axis=1)
    elif gauge == "linf":
        g = np.max(np.abs(V), axis=1)
    else:
        raise ValueError(f"unknown gauge {gauge!r}")
    return float(g.sum()) * domain.h * domain.h
