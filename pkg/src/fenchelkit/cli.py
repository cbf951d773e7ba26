"""Command line front end.

`fenchelkit run problem.json ...` solves each problem file and writes a
result envelope; `fenchelkit emit result.json --series NAME` extracts a
stored series as CSV.

Result files are canonical: keys sorted, one key per line, every float
rendered as a '.17g' decimal string ("inf"/"-inf" for infinities, NaN
refused), so reruns are byte-identical except for the wall_time_s line.

Exit codes: 0 when every problem certified, 1 for infeasible, unbounded,
uncertified or domain-error outcomes, 2 for malformed problem files.
"""

import argparse
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from math import inf, isinf, isnan

import numpy as np

from . import beckmann, functions, grids, programs, transport
from .conjugate import biconjugate as _biconjugate
from .conjugate import conjugate as _conjugate
from .conjugate import conjugate_value as _conjugate_value
from .conjugate import fenchel_gap as _fenchel_gap
from .conjugate import subdifferential as _subdifferential
from .errors import FenchelkitError, ProblemFileError

_VERSION = "0.1.0"


# canonical serialization


def _canonical(obj):
    """Floats to '.17g' strings, infinities to 'inf'/'-inf', arrays to
    lists; NaN is refused so results stay parseable everywhere."""
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if isnan(x):
            raise ValueError("NaN has no canonical form")
        if isinf(x):
            return "inf" if x > 0 else "-inf"
        if x == 0.0:
            return "0"
        return format(x, ".17g")
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_result(path, envelope):
    text = json.dumps(_canonical(envelope), sort_keys=True, indent=1) + "\n"
    _atomic_write(path, text)


def _parse_float(v, where):
    if isinstance(v, str):
        if v == "inf":
            return inf
        if v == "-inf":
            return -inf
        try:
            return float(v)
        except ValueError:
            raise ProblemFileError(f"field {where}: bad number {v!r}")
    if isinstance(v, (int, float)):
        x = float(v)
        if isnan(x):
            raise ProblemFileError(f"field {where}: NaN is not allowed")
        return x
    raise ProblemFileError(f"field {where}: expected a number")


def _need(d, key, where):
    if not isinstance(d, dict):
        raise ProblemFileError(f"field {where}: expected an object")
    if key not in d:
        raise ProblemFileError(f"field {where}: missing required key {key!r}")
    return d[key]


def _float_list(v, where):
    if not isinstance(v, list):
        raise ProblemFileError(f"field {where}: expected a list")
    return [_parse_float(t, where) for t in v]


def _float_matrix(v, where):
    if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
        raise ProblemFileError(f"field {where}: expected a list of lists")
    return [[_parse_float(t, where) for t in r] for r in v]


def _parse_grid(spec, where):
    lo = _parse_float(_need(spec, "lo", where), where + ".lo")
    hi = _parse_float(_need(spec, "hi", where), where + ".hi")
    n = _need(spec, "n", where)
    if not isinstance(n, int):
        raise ProblemFileError(f"field {where}.n: expected an integer")
    try:
        return grids.Grid1D(lo, hi, n)
    except ValueError as e:
        raise ProblemFileError(f"field {where}: {e}")


def parse_function(spec, where="function"):
    """Function descriptor from its JSON form."""
    kind = _need(spec, "type", where)
    try:
        if kind == "quadratic":
            A = _float_matrix(_need(spec, "A", where), where + ".A")
            b = _float_list(_need(spec, "b", where), where + ".b")
            c = _parse_float(spec.get("c", 0.0), where + ".c")
            return functions.Quadratic(np.array(A), np.array(b), c)
        if kind == "norm_power":
            p = _parse_float(_need(spec, "p", where), where + ".p")
            w = _parse_float(spec.get("weight", 1.0), where + ".weight")
            d = spec.get("dim", 1)
            return functions.NormPower(p, w, int(d))
        if kind == "abs":
            return functions.AbsValue()
        if kind == "entropy":
            return functions.Entropy()
        if kind == "minimal_surface":
            return functions.MinimalSurface()
        if kind == "indicator_interval":
            a = _parse_float(_need(spec, "a", where), where + ".a")
            b = _parse_float(_need(spec, "b", where), where + ".b")
            return functions.IndicatorInterval(a, b)
        if kind == "indicator_ball":
            r = _parse_float(_need(spec, "radius", where), where + ".radius")
            nm = spec.get("norm", "l2")
            d = spec.get("dim", 2)
            return functions.IndicatorBall(r, nm, int(d))
        if kind == "sampled":
            grid = _parse_grid(_need(spec, "grid", where), where + ".grid")
            vals = _float_list(_need(spec, "values", where), where + ".values")
            return functions.Sampled(grids.GridFunction(grid, np.array(vals)))
        if kind == "affine_tilt":
            inner = parse_function(_need(spec, "inner", where), where + ".inner")
            slope = _float_list(_need(spec, "slope", where), where + ".slope")
            off = _parse_float(spec.get("offset", 0.0), where + ".offset")
            return functions.AffineTilt(inner, np.array(slope), off)
    except (ValueError, FenchelkitError) as e:
        raise ProblemFileError(f"field {where}: {e}")
    raise ProblemFileError(f"field {where}.type: unknown function type {kind!r}")


# problem handlers: each returns (status, values, certificates,
# diagnostics, series)


def _run_lp(payload):
    c = _float_list(_need(payload, "c", "lp"), "lp.c")
    A = _float_matrix(_need(payload, "A", "lp"), "lp.A")
    b = _float_list(_need(payload, "b", "lp"), "lp.b")
    try:
        problem = programs.LpProblem(np.array(c), np.array(A), np.array(b))
    except ValueError as e:
        raise ProblemFileError(f"field lp: {e}")
    sol = programs.solve_lp(problem)
    if sol.status != "optimal":
        val = inf if sol.status == "infeasible" else -inf
        return (sol.status, {"primal": val, "dual": val, "gap": None},
                {}, {"solver_status": sol.status}, {})
    rep = programs.verify_complementarity(problem, sol.x, sol.y)
    gap = sol.primal_value - sol.dual_value
    certified = rep.passed
    values = {"primal": sol.primal_value, "dual": sol.dual_value, "gap": gap}
    certs = {
        "primal_feasibility": rep.primal_feasibility,
        "dual_feasibility": rep.dual_feasibility,
        "complementarity": list(rep.complementarity),
        "strong_duality_residual": rep.strong_duality_residual,
    }
    diag = {"x": list(sol.x), "y": list(sol.y)}
    return ("certified" if certified else "solved", values, certs, diag, {})


def _run_conjugate(payload):
    f = parse_function(_need(payload, "function", "conjugate"), "function")
    dual_grid = None
    if "dual_grid" in payload:
        dual_grid = _parse_grid(payload["dual_grid"], "dual_grid")
    fstar = _conjugate(f, dual_grid) if dual_grid is not None else _conjugate(f)
    if dual_grid is None and isinstance(fstar, functions.Sampled) and fstar.dim == 1:
        dual_grid = fstar.grid
    if dual_grid is None:
        dual_grid = grids.Grid1D(-5.0, 5.0, 257)
    ys = dual_grid.nodes()
    vals = _conjugate_value(f, ys) if f.dim == 1 else None
    if vals is None:
        raise ProblemFileError("field function: conjugate series needs a 1-d function")
    # certificate: Fenchel inequality on a probe mesh
    probe = np.linspace(-3.0, 3.0, 41)
    fx = functions.evaluate(f, probe)
    worst = 0.0
    for y, fy in zip(ys, vals):
        if not np.isfinite(fy):
            continue
        gaps = fx + fy - probe * y
        ok = np.isfinite(gaps)
        if ok.any():
            worst = min(worst, float(np.min(gaps[ok])))
    series = {"dual_curve": {"columns": ["y", "conjugate"],
                             "rows": [[float(y), float(v)] for y, v in zip(ys, vals)]}}
    status = "certified" if worst >= -1e-9 else "solved"
    return (status, {"primal": None, "dual": None, "gap": None},
            {"fenchel_inequality_min": worst}, {"dual_grid": [dual_grid.lo, dual_grid.hi, dual_grid.n]}, series)


def _run_envelope(payload):
    f = parse_function(_need(payload, "function", "envelope"), "function")
    if not isinstance(f, functions.Sampled) or f.dim != 1:
        raise ProblemFileError("field function: envelope needs a 1-d sampled function")
    env = _biconjugate(f)
    xs = f.grid.nodes()
    fv = f.values
    ev = env.values
    excess = float(np.max(np.where(np.isfinite(fv), ev - fv, 0.0)))
    env2 = _biconjugate(env)
    idem = float(np.max(np.abs(np.where(np.isfinite(ev), env2.values - ev, 0.0))))
    rows = [[float(x), float(a), float(b)] for x, a, b in zip(xs, fv, ev)]
    series = {"envelope_curve": {"columns": ["x", "function", "envelope"], "rows": rows}}
    status = "certified" if excess <= 1e-9 and idem <= 1e-9 else "solved"
    return (status, {"primal": None, "dual": None, "gap": None},
            {"majorization_excess": excess, "idempotency_residual": idem}, {}, series)


def _run_subdiff(payload):
    f = parse_function(_need(payload, "function", "subdiff"), "function")
    x = _need(payload, "x", "subdiff")
    if isinstance(x, list):
        xv = np.array(_float_list(x, "subdiff.x"))
    else:
        xv = _parse_float(x, "subdiff.x")
    tol = _parse_float(payload.get("tol", 1e-9), "subdiff.tol")
    s = _subdifferential(f, xv, tol)
    diag = {"kind": s.kind}
    certified = True
    if s.kind == "interval":
        diag["lo"] = s.lo
        diag["hi"] = s.hi
        probe = [t for t in (s.lo, s.hi, 0.5 * (s.lo + s.hi)) if np.isfinite(t)]
        for t in probe:
            if _fenchel_gap(f, xv, t) > max(tol, 1e-7):
                certified = False
    elif s.kind == "point":
        diag["gradient"] = list(np.atleast_1d(s.vec))
        certified = _fenchel_gap(f, xv, s.vec) <= max(tol, 1e-7)
    elif s.kind == "ball":
        diag["radius"] = s.radius
        diag["norm"] = s.norm
    return ("certified" if certified else "solved",
            {"primal": None, "dual": None, "gap": None}, {}, diag, {})


def _run_cp(payload):
    obj = parse_function(_need(payload, "objective", "cp"), "objective")
    cons = [parse_function(g, f"constraints[{k}]")
            for k, g in enumerate(_need(payload, "constraints", "cp"))]
    box = _float_matrix(_need(payload, "box", "cp"), "cp.box")
    try:
        cp = programs.ConvexProgram(obj, tuple(cons), tuple((lo, hi) for lo, hi in box))
    except ValueError as e:
        raise ProblemFileError(f"field cp: {e}")
    cert = programs.solve_convex_program(cp)
    scale = 1.0 + abs(cert.primal_value)
    certified = (abs(cert.gap) <= 1e-3 * scale
                 and cert.stationarity_residual <= 1e-3 * scale
                 and float(np.max(np.abs(cert.complementarity_residuals), initial=0.0)) <= 1e-3 * scale)
    values = {"primal": cert.primal_value, "dual": cert.dual_value, "gap": cert.gap}
    certs = {
        "stationarity_residual": cert.stationarity_residual,
        "complementarity_residuals": list(cert.complementarity_residuals),
        "multipliers": list(cert.lam),
        "slater_point": list(cert.slater_point),
    }
    return ("certified" if certified else "solved", values, certs, {"x": list(cert.x)}, {})


def _parse_measure(spec, where):
    pts = _need(spec, "points", where)
    w = _float_list(_need(spec, "weights", where), where + ".weights")
    if isinstance(pts, list) and pts and isinstance(pts[0], list):
        P = np.array(_float_matrix(pts, where + ".points"))
    else:
        P = np.array(_float_list(pts, where + ".points"))
    try:
        return transport.DiscreteMeasure(P, np.array(w))
    except ValueError as e:
        raise ProblemFileError(f"field {where}: {e}")


def _parse_cost(spec, mu, nu, where):
    kind = _need(spec, "kind", where)
    if kind == "custom":
        M = np.array(_float_matrix(_need(spec, "entries", where), where + ".entries"))
        try:
            return transport.CostMatrix(M, "custom")
        except ValueError as e:
            raise ProblemFileError(f"field {where}: {e}")
    if kind in ("euclidean", "sq_euclidean"):
        return transport.build_cost(mu.points, nu.points, kind)
    if kind == "geodesic":
        omega = np.array(_need(spec, "omega", where), dtype=bool)
        sigma = np.array(spec["sigma"], dtype=bool) if "sigma" in spec else None
        h = _parse_float(_need(spec, "axis_length", where), where + ".axis_length")
        diag = spec.get("diag_length")
        diag = _parse_float(diag, where + ".diag_length") if diag is not None else None
        origin = tuple(_float_list(spec.get("origin", [0.0, 0.0]), where + ".origin"))
        try:
            gs = transport.GeodesicSpec(omega, sigma, h, diag, origin)
        except ValueError as e:
            raise ProblemFileError(f"field {where}: {e}")
        return transport.build_cost(mu.points, nu.points, "geodesic", gs)
    raise ProblemFileError(f"field {where}.kind: unknown cost kind {kind!r}")


def _run_ot(payload):
    mu = _parse_measure(_need(payload, "mu", "ot"), "mu")
    nu = _parse_measure(_need(payload, "nu", "ot"), "nu")
    C = _parse_cost(_need(payload, "cost", "ot"), mu, nu, "cost")
    plan, value = transport.solve_kantorovich(mu, nu, C)
    pots = transport.dual_potentials(mu, nu, C, plan)
    dual = float(mu.weights @ pots.phi + nu.weights @ pots.psi)
    gap = value - dual
    certified = (abs(gap) <= 1e-8 * (1.0 + abs(value))
                 and pots.feasibility_slack >= -1e-9
                 and pots.support_residual <= 1e-8
                 and plan.row_residual <= 1e-9 and plan.col_residual <= 1e-9)
    rows = [[0, int(i), float(v)] for i, v in enumerate(pots.phi)]
    rows += [[1, int(j), float(v)] for j, v in enumerate(pots.psi)]
    series = {"potentials": {"columns": ["side", "index", "value"], "rows": rows}}
    values = {"primal": value, "dual": dual, "gap": gap}
    certs = {
        "feasibility_slack": pots.feasibility_slack,
        "support_residual": pots.support_residual,
        "marginal_residuals": [plan.row_residual, plan.col_residual],
    }
    return ("certified" if certified else "solved", values, certs, {}, series)


def _parse_points(v, where):
    if not isinstance(v, list) or not v:
        raise ProblemFileError(f"field {where}: expected a nonempty list")
    if isinstance(v[0], list):
        return np.array(_float_matrix(v, where))
    return np.array(_float_list(v, where))


def _run_krnorm(payload):
    pp = _need(payload, "f_plus", "krnorm")
    pm = _need(payload, "f_minus", "krnorm")
    Pp = _parse_points(_need(pp, "points", "f_plus"), "f_plus.points")
    Wp = np.array(_float_list(_need(pp, "weights", "f_plus"), "f_plus.weights"))
    Pm = _parse_points(_need(pm, "points", "f_minus"), "f_minus.points")
    Wm = np.array(_float_list(_need(pm, "weights", "f_minus"), "f_minus.weights"))
    spec = _need(payload, "cost", "krnorm")
    kind = _need(spec, "kind", "cost")
    if kind == "custom":
        C = transport.CostMatrix(np.array(_float_matrix(_need(spec, "entries", "cost"), "cost.entries")))
    elif kind in ("euclidean", "sq_euclidean"):
        C = transport.build_cost(Pp, Pm, kind)
    else:
        raise ProblemFileError(f"field cost.kind: unknown cost kind {kind!r}")
    value = transport.kantorovich_norm((Pp, Wp), (Pm, Wm), C)
    return ("certified", {"primal": value, "dual": None, "gap": None},
            {"mass": float(np.sum(Wp))}, {}, {})


def _run_flow(payload):
    nx = _need(payload, "nx", "flow")
    ny = _need(payload, "ny", "flow")
    h = _parse_float(_need(payload, "h", "flow"), "flow.h")
    f = np.array(_float_matrix(_need(payload, "f", "flow"), "flow.f"))
    omega = np.array(payload["omega"], dtype=bool) if "omega" in payload else np.ones((nx, ny), dtype=bool)
    sigma = np.array(payload["sigma"], dtype=bool) if "sigma" in payload else None
    schedule = tuple(payload.get("schedule", (2, 4, 8, 16, 32, 64)))
    try:
        dom = beckmann.GridDomain(int(nx), int(ny), h, omega, f, sigma)
    except ValueError as e:
        raise ProblemFileError(f"field flow: {e}")
    res = beckmann.continuation_to_w1(dom, schedule)
    rep = beckmann.optimality_residuals(dom, res.flow, res.potential, eps=0.05)
    scale = 1.0 + abs(res.value)
    certified = (res.residual <= 1e-8 * scale
                 and -1e-9 * scale <= res.gap <= 0.02 * scale
                 and rep.lip_excess <= 1e-9)
    rows = [[p, int(it), r, v] for (p, it, r, v) in res.history]
    series = {"gap_vs_p": {"columns": ["p", "iterations", "residual", "value"], "rows": rows}}
    values = {"primal": res.value, "dual": res.value - res.gap, "gap": res.gap}
    certs = {
        "conservation": rep.conservation,
        "eikonal": rep.eikonal,
        "lip_excess": rep.lip_excess,
        "sigma_boundary": rep.sigma_boundary,
    }
    return ("certified" if certified else "solved", values, certs, {}, series)


_HANDLERS = {
    "lp": _run_lp,
    "conjugate": _run_conjugate,
    "envelope": _run_envelope,
    "subdiff": _run_subdiff,
    "cp": _run_cp,
    "ot": _run_ot,
    "krnorm": _run_krnorm,
    "flow": _run_flow,
}


def _load_problem(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ProblemFileError(f"cannot read problem file {path}: {e.strerror}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFileError(f"problem file {path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    if not isinstance(doc, dict):
        raise ProblemFileError(f"problem file {path}: top level must be an object")
    kind = _need(doc, "kind", "problem")
    if kind not in _HANDLERS:
        raise ProblemFileError(f"field kind: unknown problem kind {kind!r}")
    return kind, doc


def run_problem(path, out_path=None, seed=None):
    """Solve one problem file; returns (exit_code, envelope)."""
    kind, doc = _load_problem(path)
    t0 = time.perf_counter()
    try:
        status, values, certs, diag, series = _HANDLERS[kind](doc)
    except ProblemFileError:
        raise
    except FenchelkitError as e:
        status = "failed"
        values = {"primal": None, "dual": None, "gap": None}
        certs = {}
        diag = {"error": type(e).__name__, "message": str(e)}
        series = {}
    wall = time.perf_counter() - t0
    if seed is not None:
        diag = dict(diag)
        diag["seed"] = int(seed)
    envelope = {
        "kind": kind,
        "toolkit_version": _VERSION,
        "status": status,
        "values": values,
        "certificates": certs,
        "diagnostics": diag,
        "series": series,
        "wall_time_s": wall,
    }
    if out_path is None:
        out_path = path + ".result.json"
    write_result(out_path, envelope)
    code = 0 if status == "certified" else 1
    return code, envelope


def _run_worker(args):
    path, out, seed = args
    try:
        code, _ = run_problem(path, out, seed)
        return code, path, None
    except ProblemFileError as e:
        return 2, path, str(e)


def _cmd_run(ns):
    jobs = []
    for path in ns.problems:
        out = ns.out if ns.out and len(ns.problems) == 1 else None
        jobs.append((path, out, ns.seed))
    worst = 0
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            results = list(pool.map(_run_worker, jobs))
    else:
        results = [_run_worker(j) for j in jobs]
    for code, path, msg in results:
        if msg is not None:
            print(f"{path}: {msg}", file=sys.stderr)
        worst = max(worst, code)
    return worst


def _cmd_emit(ns):
    try:
        with open(ns.result) as fh:
            doc = json.load(fh)
    except OSError as e:
        print(f"cannot read {ns.result}: {e.strerror}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(f"{ns.result}: invalid JSON at line {e.lineno}: {e.msg}", file=sys.stderr)
        return 2
    series = doc.get("series", {})
    if ns.series not in series:
        known = ", ".join(sorted(series)) or "none"
        print(f"{ns.result}: no series {ns.series!r} (has: {known})", file=sys.stderr)
        return 1
    block = series[ns.series]
    lines = [",".join(block["columns"])]
    for row in block["rows"]:
        lines.append(",".join(str(v) for v in row))
    text = "\n".join(lines) + "\n"
    if ns.out:
        _atomic_write(ns.out, text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="fenchelkit",
                                 description="convex duality and transport solvers")
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="solve problem files")
    p_run.add_argument("problems", nargs="+", help="problem JSON files")
    p_run.add_argument("--out", help="result path (single problem only)")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_run.add_argument("--seed", type=int, default=None, help="recorded in diagnostics")
    p_emit = sub.add_parser("emit", help="extract a stored series as CSV")
    p_emit.add_argument("result", help="result JSON file")
    p_emit.add_argument("--series", required=True, help="series name")
    p_emit.add_argument("--out", help="CSV output path (default stdout)")
    ns = ap.parse_args(argv)
    try:
        if ns.command == "run":
            return _cmd_run(ns)
        return _cmd_emit(ns)
    except ProblemFileError as e:
        print(str(e), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
