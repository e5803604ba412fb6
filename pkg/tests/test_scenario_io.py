import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lindcollapse.dynamics import DensityMatrix, Trajectory, integrate
from lindcollapse.liouvillian import entropy_condition_holds
from lindcollapse.measurement import certify
from lindcollapse.scenario_io import (
    Lcg64,
    Scenario,
    ScenarioError,
    builtin_scenario,
    builtin_scenarios,
    dumps_scenario,
    load_scenario,
    load_trajectory,
    random_apparatus,
    random_system,
    save_scenario,
    save_trajectory,
    scenario_from_dict,
    scenario_to_dict,
    trajectory_columns,
)

from conftest import SIGMA3

DEMO = """{
  "name": "demo-qubit",
  "dim": 2,
  "hamiltonian": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
  "jumps": [[[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]],
  "basis_vectors": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
  "classes": [[1], [2]],
  "initial_state": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]],
  "t_end": 10.0,
  "dt": 0.001
}"""


def same_scenario(a: Scenario, b: Scenario) -> bool:
    eq = np.array_equal
    parts = [
        a.name == b.name, a.t_end == b.t_end, a.dt == b.dt,
        eq(a.system.hamiltonian, b.system.hamiltonian),
        len(a.system.jumps) == len(b.system.jumps),
        all(eq(x, y) for x, y in zip(a.system.jumps, b.system.jumps)),
        eq(a.initial_state.matrix, b.initial_state.matrix),
        (a.basis is None) == (b.basis is None),
    ]
    if a.basis is not None and b.basis is not None:
        parts += [eq(a.basis.vectors, b.basis.vectors), a.basis.classes == b.basis.classes]
    return all(parts)


def test_load_demo_document():
    sc = load_scenario(DEMO)
    assert sc.dim == 2 and sc.t_end == 10.0 and sc.dt == 1e-3
    assert np.array_equal(sc.system.jumps[0], SIGMA3)
    assert np.array_equal(sc.system.hamiltonian, np.zeros((2, 2)))
    assert sc.basis.classes == ((0,), (1,))
    assert certify(sc.system, sc.basis).passed


def test_load_from_path(tmp_path):
    p = tmp_path / "demo.json"
    p.write_text(DEMO)
    assert same_scenario(load_scenario(p), load_scenario(DEMO))
    assert same_scenario(load_scenario(str(p)), load_scenario(DEMO))


def test_non_hermitian_hamiltonian_rejected():
    doc = json.loads(DEMO)
    doc["hamiltonian"] = [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert err.value.field == "hamiltonian"
    assert err.value.defect == pytest.approx(2**0.5)


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.update(dim=3), None),
    (lambda d: d.update(t_end=-1.0), "t_end"),
    (lambda d: d.update(dt=0.0), "dt"),
    (lambda d: d.update(classes=[[1, 2], [2]]), "classes"),
    (lambda d: d.update(initial_state=[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]), "initial_state"),
    (lambda d: d.update(basis_vectors=[[[1, 0], [0, 0]], [[1, 0], [0, 0]]]), "basis_vectors"),
    (lambda d: d.update(surprise=1), None),
    (lambda d: d.pop("hamiltonian"), None),
])
def test_invalid_documents_rejected(mutate, field):
    doc = json.loads(DEMO)
    mutate(doc)
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    if field is not None:
        assert err.value.field == field


def test_parse_error_reports_position():
    with pytest.raises(ScenarioError, match=r"line 3, column"):
        load_scenario('{\n  "name": "x",\n  "dim": ,\n}')


@pytest.mark.parametrize("sc", builtin_scenarios(), ids=lambda s: s.name)
def test_builtin_round_trip_bit_exact(sc, tmp_path):
    p = tmp_path / "sc.json"
    save_scenario(sc, p)
    back = load_scenario(p)
    assert same_scenario(sc, back)
    assert dumps_scenario(back) == dumps_scenario(sc)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(1, 4), st.integers(0, 3))
def test_random_round_trip_bit_exact(seed, d, n):
    sys = random_system(seed, d, n)
    rho = Lcg64(seed ^ 0x5DEECE66D).density_matrix(d)
    sc = Scenario(f"r{seed}", sys, rho, 1.0 / 3.0, 0.1 / 7.0)
    back = scenario_from_dict(json.loads(json.dumps(scenario_to_dict(sc))))
    assert same_scenario(sc, back)


@pytest.mark.parametrize("sc", builtin_scenarios(), ids=lambda s: s.name)
def test_builtin_certification_verdicts(sc):
    if sc.expected_certification is None:
        assert sc.basis is None
        return
    assert certify(sc.system, sc.basis).passed is sc.expected_certification


def test_builtin_catalogue():
    names = [s.name for s in builtin_scenarios()]
    assert len(names) == len(set(names))
    for want in ("qubit-l1-h0", "qubit-l1-h1", "qubit-l1-h0.4", "two-spin-first-spin"):
        assert want in names
    assert any("seed" in n and "apparatus" in n for n in names)
    sc = builtin_scenario("two-spin-first-spin")
    assert sc.dim == 4 and sc.basis.classes == ((0, 1), (2, 3))
    with pytest.raises(KeyError):
        builtin_scenario("nope")


def test_random_open_system_violates_balance():
    sc = [s for s in builtin_scenarios() if s.name.startswith("random-open")][0]
    assert not entropy_condition_holds(sc.system)
    assert not certify(sc.system, sc.basis).passed


# -- trajectories

def small_traj():
    sc = builtin_scenario("qubit-l1-h1")
    return integrate(sc.system, sc.initial_state, 0.1, 0.05)


def test_trajectory_csv_layout(tmp_path):
    traj = small_traj()
    times = traj.times[:2]
    two = Trajectory.from_states(times, traj.states[:2], traj.trace_defect[:2], traj.hermiticity_defect[:2])
    p = tmp_path / "t.csv"
    save_trajectory(two, "csv", p)
    rows = list(csv.reader(p.open()))
    assert rows[0] == trajectory_columns(2)
    assert len(rows[0]) == 2 * 3 + 4
    assert len(rows) == 3


def test_empty_trajectory_header_only(tmp_path):
    empty = Trajectory.from_states(np.empty(0), np.empty((0, 2, 2), dtype=complex))
    p = tmp_path / "e.csv"
    save_trajectory(empty, "csv", p)
    assert p.read_text().strip().splitlines() == [",".join(trajectory_columns(2))]
    assert len(load_trajectory(p)) == 0


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_trajectory_round_trip(fmt, tmp_path):
    traj = small_traj()
    p = tmp_path / f"t.{fmt}"
    save_trajectory(traj, fmt, p)
    back = load_trajectory(p)
    assert back.dim == traj.dim
    for a, b in [(traj.times, back.times), (traj.states, back.states), (traj.trace_defect, back.trace_defect),
                 (traj.min_eigenvalue, back.min_eigenvalue), (traj.entropy, back.entropy)]:
        assert np.max(np.abs(a - b)) <= 1e-15


def test_trajectory_json_field_order(tmp_path):
    p = tmp_path / "t.json"
    save_trajectory(small_traj(), "json", p)
    doc = json.loads(p.read_text())
    assert doc["columns"] == trajectory_columns(2)
    assert list(doc["rows"][0]) == trajectory_columns(2)


def test_unknown_trajectory_format(tmp_path):
    with pytest.raises(ValueError):
        save_trajectory(small_traj(), "xml", tmp_path / "t.xml")


# -- seeded generator

def test_lcg_reference_values():
    g = Lcg64(0)
    assert g.next_u64() == 1442695040888963407
    assert g.next_u64() == (6364136223846793005 * 1442695040888963407 + 1442695040888963407) % 2**64
    u = Lcg64(1).uniform()
    assert u == ((6364136223846793005 + 1442695040888963407) % 2**64 >> 11) * 2.0**-53


@given(st.integers(0, 2**64 - 1))
def test_lcg_ranges(seed):
    g = Lcg64(seed)
    for _ in range(20):
        assert 0.0 <= g.uniform() < 1.0
        assert abs(g.unit_disc()) <= 1.0


def test_random_apparatus_deterministic():
    c1, b1 = random_apparatus(7, 3, 2)
    c2, b2 = random_apparatus(7, 3, 2)
    assert np.array_equal(c1.ell, c2.ell) and np.array_equal(c1.h, c2.h)
    assert np.array_equal(b1.vectors, b2.vectors)
    c3, _ = random_apparatus(8, 3, 2)
    assert not np.array_equal(c1.ell, c3.ell)
    assert np.all(np.abs(c1.ell) <= 1) and np.all(np.abs(c1.h) <= 1)


def test_lcg_density_matrix_valid():
    rho = Lcg64(99).density_matrix(4)
    assert isinstance(rho, DensityMatrix) and rho.dim == 4
