"""Problem-file driver: schemas, exit codes, deterministic output."""

import json
import subprocess
import sys

import numpy as np
import pytest

from fenchelkit.cli import main


def run_json(tmp_path, payload, name="prob.json", args=()):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    out = tmp_path / (name + ".result.json")
    code = main(["run", str(path), *args])
    return code, out


def load(out):
    return json.loads(out.read_text())


LP_OK = {
    "kind": "lp",
    "c": [-1.0, -2.0],
    "A": [[1.0, 1.0], [1.0, 3.0]],
    "b": [4.0, 6.0],
}


class TestRunKinds:
    def test_lp_certified(self, tmp_path):
        code, out = run_json(tmp_path, LP_OK)
        r = load(out)
        assert code == 0
        assert r["status"] == "certified"
        assert float(r["values"]["primal"]) == pytest.approx(-5.0)
        assert float(r["values"]["dual"]) == pytest.approx(-5.0)

    def test_lp_unbounded_exit_one(self, tmp_path):
        code, out = run_json(tmp_path, {
            "kind": "lp", "c": [-1.0], "A": [[-1.0]], "b": [-1.0]})
        r = load(out)
        assert code == 1
        assert r["status"] == "unbounded"

    def test_conjugate_table(self, tmp_path):
        code, out = run_json(tmp_path, {
            "kind": "conjugate",
            "function": {"type": "norm_power", "p": 2.0},
            "dual_grid": {"lo": -2.0, "hi": 2.0, "n": 5}})
        r = load(out)
        assert code == 0
        rows = r["series"]["dual_curve"]["rows"]
        ys = [float(a) for a, _ in rows]
        vs = [float(b) for _, b in rows]
        assert np.allclose(ys, [-2, -1, 0, 1, 2])
        assert np.allclose(vs, [2.0, 0.5, 0.0, 0.5, 2.0])

    def test_envelope_certified(self, tmp_path):
        code, out = run_json(tmp_path, {
            "kind": "envelope",
            "function": {"type": "sampled",
                         "grid": {"lo": -1.0, "hi": 1.0, "n": 5},
                         "values": [1.0, 0.8, 0.0, 0.8, 1.0]}})
        r = load(out)
        assert code == 0
        assert float(r["certificates"]["majorization_excess"]) <= 1e-9

    def test_subdiff_interval(self, tmp_path):
        code, out = run_json(tmp_path, {
            "kind": "subdiff", "function": {"type": "abs"}, "x": 0.0})
        r = load(out)
        assert code == 0
        assert r["diagnostics"]["kind"] == "interval"
        assert float(r["diagnostics"]["lo"]) == -1.0
        assert float(r["diagnostics"]["hi"]) == 1.0

    def test_cp_kkt(self, tmp_path):
        code, out = run_json(tmp_path, {
            "kind": "cp",
            "objective": {"type": "quadratic", "A": [[2.0]], "b": [0.0]},
            "constraints": [
                {"type": "quadratic", "A": [[0.0]], "b": [-1.0], "c": 1.0}],
            "box": [[-5.0, 5.0]]})
        r = load(out)
        assert code == 0
        assert float(r["values"]["primal"]) == pytest.approx(1.0, abs=1e-6)
        assert float(r["certificates"]["multipliers"][0]) == pytest.approx(2.0, abs=1e-3)

    def test_ot_with_potentials_series(self, tmp_path):
        code, out = run_json(tmp_path, {
            "kind": "ot",
            "mu": {"points": [[0.0], [1.0]], "weights": [0.5, 0.5]},
            "nu": {"points": [[0.25], [0.75]], "weights": [0.5, 0.5]},
            "cost": {"kind": "euclidean"}})
        r = load(out)
        assert code == 0
        assert r["status"] == "certified"
        assert float(r["values"]["primal"]) == pytest.approx(0.25)
        assert "potentials" in r["series"]

    def test_krnorm_value(self, tmp_path):
        code, out = run_json(tmp_path, {
            "kind": "krnorm",
            "f_plus": {"points": [[0.0], [1.0]], "weights": [1.0, 1.0]},
            "f_minus": {"points": [[0.5]], "weights": [2.0]},
            "cost": {"kind": "euclidean"}})
        r = load(out)
        assert code == 0
        assert float(r["values"]["primal"]) == pytest.approx(1.0)

    def test_flow_certified_with_gap_series(self, tmp_path):
        omega = [[True] * 9 for _ in range(9)]
        f = [[0.0] * 9 for _ in range(9)]
        f[0][0] = 1.0 / 0.125**2
        f[8][8] = -1.0 / 0.125**2
        code, out = run_json(tmp_path, {
            "kind": "flow", "nx": 9, "ny": 9, "h": 0.125,
            "omega": omega, "f": f})
        r = load(out)
        assert code == 0
        assert r["status"] == "certified"
        assert "gap_vs_p" in r["series"]
        gap = float(r["values"]["gap"])
        assert abs(gap) <= 0.02 * abs(float(r["values"]["primal"]))


class TestFailureEnvelopes:
    def test_malformed_json_exit_two(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["run", str(path)]) == 2

    def test_missing_field_names_path(self, tmp_path, capsys):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"kind": "lp", "c": [1.0]}))
        code = main(["run", str(path)])
        err = capsys.readouterr().err
        assert code == 2
        assert "A" in err

    def test_unknown_kind_exit_two(self, tmp_path):
        path = tmp_path / "k.json"
        path.write_text(json.dumps({"kind": "nope"}))
        assert main(["run", str(path)]) == 2

    def test_solver_error_becomes_failed_status(self, tmp_path):
        # unbalanced flow source without an absorbing set
        omega = [[True] * 3 for _ in range(3)]
        f = [[0.0] * 3 for _ in range(3)]
        f[1][1] = 1.0
        code, out = run_json(tmp_path, {
            "kind": "flow", "nx": 3, "ny": 3, "h": 0.5,
            "omega": omega, "f": f})
        r = load(out)
        assert code == 1
        assert r["status"] == "failed"
        assert r["diagnostics"]["error"] == "MarginalMismatchError"
        assert "marginal mismatch" in r["diagnostics"]["message"]


class TestDeterminism:
    def test_rerun_identical_modulo_walltime(self, tmp_path):
        _, out = run_json(tmp_path, LP_OK)
        first = out.read_text().splitlines()
        _, out = run_json(tmp_path, LP_OK)
        second = out.read_text().splitlines()
        assert len(first) == len(second)
        diff = [(a, b) for a, b in zip(first, second) if a != b]
        for a, b in diff:
            assert "wall_time_s" in a and "wall_time_s" in b

    def test_seed_recorded(self, tmp_path):
        _, out = run_json(tmp_path, LP_OK, args=("--seed", "42"))
        assert load(out)["diagnostics"]["seed"] == 42

    def test_floats_serialized_as_strings(self, tmp_path):
        _, out = run_json(tmp_path, LP_OK)
        r = load(out)
        assert isinstance(r["values"]["primal"], str)

    def test_parallel_jobs_match_serial(self, tmp_path):
        pa = tmp_path / "a.json"
        pb = tmp_path / "b.json"
        pa.write_text(json.dumps(LP_OK))
        pb.write_text(json.dumps({
            "kind": "subdiff", "function": {"type": "abs"}, "x": 0.0}))
        assert main(["run", str(pa), str(pb), "--jobs", "2"]) == 0
        serial_a = json.loads((tmp_path / "a.json.result.json").read_text())
        assert serial_a["status"] == "certified"

    def test_out_flag_single_file(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps(LP_OK))
        target = tmp_path / "custom.json"
        assert main(["run", str(path), "--out", str(target)]) == 0
        assert target.exists()


class TestEmit:
    def test_dual_curve_csv(self, tmp_path, capsys):
        _, out = run_json(tmp_path, {
            "kind": "conjugate",
            "function": {"type": "norm_power", "p": 2.0},
            "dual_grid": {"lo": -1.0, "hi": 1.0, "n": 3}})
        assert main(["emit", str(out), "--series", "dual_curve"]) == 0
        got = capsys.readouterr().out.strip().splitlines()
        assert got[0] == "y,conjugate"
        assert got[1].startswith("-1,")

    def test_missing_series_errors(self, tmp_path, capsys):
        _, out = run_json(tmp_path, LP_OK)
        assert main(["emit", str(out), "--series", "dual_curve"]) == 1
        assert "no series" in capsys.readouterr().err


def test_module_entrypoint_subprocess(tmp_path):
    path = tmp_path / "lp.json"
    path.write_text(json.dumps(LP_OK))
    proc = subprocess.run(
        [sys.executable, "-m", "fenchelkit", "run", str(path)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    r = json.loads((tmp_path / "lp.json.result.json").read_text())
    assert r["status"] == "certified"
