import json
import math
import subprocess
import sys

import numpy as np
import pytest

from lindcollapse.cli import main
from lindcollapse.dynamics import DensityMatrix
from lindcollapse.liouvillian import LindbladSystem
from lindcollapse.measurement import MeasurementBasis
from lindcollapse.scenario_io import Scenario, builtin_scenario, load_scenario, load_trajectory, save_scenario

from conftest import I2, SIGMA1, SIGMA3


def write(tmp_path, sc):
    p = tmp_path / f"{sc.name}.json"
    save_scenario(sc, p)
    return str(p)


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture
def files(tmp_path):
    plus = DensityMatrix(0.5 * (I2 + SIGMA1))
    std2 = MeasurementBasis.standard(2)
    out = {
        "class_violation": Scenario(
            "class-violation", LindbladSystem(np.zeros((4, 4)), (np.diag([1.0, 2.0, -1.0, -1.0]),)),
            DensityMatrix(np.eye(4) / 4), 1.0, 0.01, MeasurementBasis.standard(4, [(0, 1), (2, 3)])),
        "unstable": Scenario("unstable", LindbladSystem(np.zeros((2, 2)), (10 * SIGMA3,)), plus, 1.0, 0.05, std2),
        "undeclared": Scenario(
            "undeclared", LindbladSystem(np.zeros((3, 3)), (np.diag([1.0, 1.0, -1.0]),)),
            DensityMatrix(np.full((3, 3), 1 / 3)), 1.0, 0.01, MeasurementBasis.standard(3)),
        "nobasis": Scenario("nobasis", LindbladSystem(np.zeros((2, 2)), (SIGMA3,)), plus, 1.0, 0.01),
        "diagonal": Scenario("diagonal", LindbladSystem(np.zeros((2, 2)), (SIGMA3,)),
                             DensityMatrix(np.diag([0.3, 0.7])), 1.0, 0.01, std2),
        "instant": Scenario("instant", LindbladSystem(np.zeros((2, 2)), (SIGMA3,)), plus, 0.0, 0.01, std2),
    }
    paths = {k: write(tmp_path, v) for k, v in out.items()}
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x", ')
    paths["bad"] = str(bad)
    return paths


# scripted exit-code matrix over built-in scenarios
@pytest.mark.parametrize("argv, code", [
    (["certify", "--builtin", "qubit-l1-h0"], 0),
    (["certify", "--builtin", "qubit-l1-h1"], 1),
    (["certify", "--builtin", "two-spin-first-spin"], 0),
    (["certify", "--builtin", "random-apparatus-d3-n2-seed20160117"], 0),
    (["certify", "--builtin", "random-open-d3-n2-seed4242424242"], 1),
    (["certify", "--builtin", "raising-operator"], 2),
    (["collapse", "--builtin", "qubit-l1-h0"], 0),
    (["collapse", "--builtin", "qubit-l1-h1"], 1),
    (["collapse", "--builtin", "two-spin-first-spin"], 0),
    (["collapse", "--builtin", "qubit-l1-h0", "--t-factor", "1"], 1),
    (["collapse", "--builtin", "qubit-l1-h0", "--t-factor", "-1"], 2),
    (["entropy-check", "--builtin", "qubit-l1-h1"], 0),
    (["entropy-check", "--builtin", "raising-operator"], 0),
    (["entropy-check", "--builtin", "null-d2"], 0),
    (["spectrum", "--builtin", "null-d2"], 0),
    (["evolve", "--builtin", "qubit-l1-h1", "--method", "closed-form"], 1),
    (["evolve", "--builtin", "qubit-l1-h0", "--method", "closed-form"], 0),
    (["demo-qubit"], 0),
    ([], 2),
    (["bogus"], 2),
    (["spectrum"], 2),
    (["spectrum", "--builtin", "no-such-scenario"], 2),
    (["evolve", "--builtin", "qubit-l1-h0", "--method", "euler"], 2),
])
def test_exit_codes_builtin(argv, code, capsys):
    assert main(argv) == code


@pytest.mark.parametrize("cmd, key, code", [
    (["certify"], "class_violation", 1),
    (["evolve"], "unstable", 3),
    (["entropy-check"], "unstable", 3),
    (["collapse"], "undeclared", 3),
    (["certify"], "nobasis", 2),
    (["collapse"], "nobasis", 2),
    (["evolve", "--method", "closed-form"], "nobasis", 2),
    (["spectrum"], "bad", 2),
    (["collapse"], "diagonal", 0),
    (["evolve"], "instant", 0),
])
def test_exit_codes_files(cmd, key, code, files, capsys):
    assert main([*cmd, "--scenario", files[key]]) == code


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert main(["spectrum", "--scenario", str(tmp_path / "none.json")]) == 2
    assert main(["spectrum", "--scenario", "x", "--builtin", "null-d2"]) == 2


def test_spectrum_qubit_json(capsys):
    code, doc = run_json(capsys, "spectrum", "--builtin", "qubit-l1-h1")
    assert code == 0
    got = sorted(complex(*z).imag for z in doc["eigenvalues"])
    r3 = math.sqrt(3)
    assert np.allclose(got, [-r3, 0, 0, r3], atol=1e-8)
    want = [0, -2, complex(-1, r3), complex(-1, -r3)]
    for w in want:
        assert min(abs(complex(*z) - w) for z in doc["eigenvalues"]) <= 1e-8
    assert doc["decay_gap"] == pytest.approx(1.0)
    assert doc["entropy_condition_holds"] is True


def test_spectrum_null_gap_infinite(capsys):
    code, doc = run_json(capsys, "spectrum", "--builtin", "null-d2")
    assert code == 0
    assert doc["decay_gap"] is None
    assert all(z == [0.0, 0.0] for z in doc["eigenvalues"])
    main(["spectrum", "--builtin", "null-d2"])
    assert "decay gap: inf" in capsys.readouterr().out


def test_spectrum_random_identity_deviations(capsys):
    code, doc = run_json(capsys, "spectrum", "--builtin", "random-open-d3-n2-seed4242424242")
    assert code == 0
    assert len(doc["eigenvalues"]) == 9
    assert max(c["deviation"] for c in doc["identity_check"]) <= 1e-7
    assert doc["entropy_condition_holds"] is False


def test_certify_reports_hamiltonian_defect(capsys):
    code, doc = run_json(capsys, "certify", "--builtin", "qubit-l1-h1")
    assert code == 1
    assert doc["verdict"] == "fail"
    assert doc["defects"]["hamiltonian_reconstruction"] == pytest.approx(math.sqrt(2))


def test_collapse_report(capsys):
    code, doc = run_json(capsys, "collapse", "--builtin", "qubit-l1-h0")
    assert code == 0
    assert doc["born_probabilities"] == pytest.approx([0.5, 0.5])
    assert doc["deviation"] <= 1e-6
    assert doc["t"] == pytest.approx(40 / doc["gap"])


def test_collapse_already_at_limit(files, capsys):
    code, doc = run_json(capsys, "collapse", "--scenario", files["diagonal"])
    assert code == 0 and doc["initial_deviation"] == 0.0


def test_collapse_class_limit(capsys):
    sc = builtin_scenario("two-spin-first-spin")
    code, doc = run_json(capsys, "collapse", "--builtin", sc.name)
    assert code == 0 and doc["complete"] is False
    limit = np.array([[complex(*z) for z in row] for row in doc["predicted_limit"]])
    blocks = sc.basis.same_class_mask()
    assert np.array_equal(limit[~blocks], np.zeros(np.count_nonzero(~blocks)))
    assert np.allclose(limit[blocks], sc.initial_state.matrix[blocks], atol=1e-15)


@pytest.mark.parametrize("method", ["integrate", "spectral", "closed-form"])
def test_evolve_methods_agree(method, tmp_path, capsys):
    sc = builtin_scenario("random-apparatus-d3-n2-seed20160117")
    ref_path, out = tmp_path / "ref.csv", tmp_path / f"{method}.csv"
    assert main(["evolve", "--builtin", sc.name, "--method", "closed-form", "--out", str(ref_path)]) == 0
    assert main(["evolve", "--builtin", sc.name, "--method", method, "--out", str(out)]) == 0
    a, b = load_trajectory(ref_path), load_trajectory(out)
    assert np.allclose(a.times, b.times)
    assert np.max(np.linalg.norm(a.states - b.states, axis=(1, 2))) <= 1e-6


def test_evolve_closed_form_decay_in_file(tmp_path, capsys):
    out = tmp_path / "q.json"
    assert main(["evolve", "--builtin", "qubit-l1-h0", "--method", "closed-form", "--out", str(out)]) == 0
    traj = load_trajectory(out)
    assert np.allclose(traj.states[:, 0, 1].real, 0.5 * np.exp(-2 * traj.times), rtol=1e-12, atol=1e-300)


def test_evolve_zero_duration(files, tmp_path, capsys):
    out = tmp_path / "z.csv"
    assert main(["evolve", "--scenario", files["instant"], "--out", str(out)]) == 0
    traj = load_trajectory(out)
    assert len(traj) == 1 and traj.times[0] == 0
    assert np.array_equal(traj.states[0], load_scenario(files["instant"]).initial_state.matrix)


def test_entropy_check_reports(capsys):
    code, doc = run_json(capsys, "entropy-check", "--builtin", "qubit-l1-h1")
    assert code == 0 and doc["min_entropy_step"] >= -1e-8
    assert doc["final_entropy"] == pytest.approx(math.log(2), abs=1e-6)
    code, doc = run_json(capsys, "entropy-check", "--builtin", "raising-operator")
    assert doc["entropy_condition_holds"] is False
    assert doc["final_entropy"] < doc["initial_entropy"]
    code, doc = run_json(capsys, "entropy-check", "--builtin", "null-d2")
    assert doc["min_entropy_step"] == 0.0


def test_demo_qubit_writes_scenarios(tmp_path, capsys):
    assert main(["demo-qubit", "--out", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.glob("*.json"))
    assert names == ["qubit-l1-h0.4.json", "qubit-l1-h0.json", "qubit-l1-h1.json"]
    capsys.readouterr()
    code, doc = run_json(capsys, "demo-qubit")
    for s in doc["scenarios"]:
        got = np.array([complex(*z) for z in s["eigenvalues"]])
        want = np.array([complex(*z) for z in s["expected_eigenvalues"]])
        assert np.max(np.abs(got - want)) <= 1e-8


def test_human_output_six_digits(capsys):
    main(["collapse", "--builtin", "qubit-l1-h0"])
    text = capsys.readouterr().out
    assert "gap: 2  t = 40/gap = 20" in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lindcollapse", "certify", "--builtin", "qubit-l1-h1"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "verdict: fail" in proc.stdout
