"""Command-line front end.

Exit codes: 0 success or passing verdict, 1 failing verdict, 2 usage error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from ._backend import BACKEND
from ._config import TOL
from .dynamics import (
    IllConditionedError,
    OscillatoryModesError,
    PositivityViolation,
    Trajectory,
    asymptotic_state,
    integrate,
    sample_times,
    spectral_states,
    von_neumann_entropy,
)
from .liouvillian import (
    build_superoperator,
    decay_gap,
    eigenvalue_clusters,
    eigenvalue_identity_check,
    entropy_condition_defect,
    entropy_condition_holds,
    oscillating_stationary_modes,
    spectrum,
)
from .matrixcore import EigenConvergenceError, frobenius_norm, sort_eigenvalues
from .measurement import (
    MeasurementDegeneracyWarning,
    born_probabilities,
    certify,
    class_collapse,
    closed_form_states,
    collapse_gap,
    decay_matrix,
)
from .scenario_io import (
    Scenario,
    ScenarioError,
    builtin_scenario,
    load_scenario,
    qubit_scenarios,
    save_scenario,
    save_trajectory,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

NUMERIC_ERRORS = (EigenConvergenceError, PositivityViolation, IllConditionedError, OscillatoryModesError)


class UsageError(Exception):
    pass


def _g(x: float) -> str:
    return f"{x:.6g}"


def _c(z: complex) -> str:
    z = complex(z)
    if abs(z.imag) < 5e-7 * max(1.0, abs(z.real)):
        return _g(z.real)
    sign = "+" if z.imag >= 0 else "-"
    return f"{_g(z.real)}{sign}{_g(abs(z.imag))}i"


def _cj(z: complex) -> list[float]:
    return [float(complex(z).real), float(complex(z).imag)]


def _finite_or_none(x: float):
    return None if math.isinf(x) else float(x)


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=1))


def _load(args) -> Scenario:
    if args.builtin and args.scenario:
        raise UsageError("give either --scenario or --builtin, not both")
    if args.builtin:
        try:
            return builtin_scenario(args.builtin)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from exc
    if not args.scenario:
        raise UsageError("a scenario is required (--scenario PATH or --builtin NAME)")
    try:
        return load_scenario(Path(args.scenario))
    except FileNotFoundError as exc:
        raise UsageError(f"cannot read scenario: {exc}") from exc
    except ScenarioError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        raise UsageError(f"invalid scenario{where}: {exc}") from exc


# -- commands --------------------------------------------------------------

def cmd_spectrum(args) -> int:
    sc = _load(args)
    sup = build_superoperator(sc.system)
    modes = spectrum(sc.system, sup)
    checks = [eigenvalue_identity_check(sc.system, m) for m in modes]
    gap = decay_gap(modes)
    defect = entropy_condition_defect(sc.system)
    clusters = eigenvalue_clusters(modes)
    flagged = oscillating_stationary_modes(modes, sup.norm)
    if args.json:
        _emit({
            "scenario": sc.name,
            "superoperator_norm": sup.norm,
            "eigenvalues": [_cj(m.eigenvalue) for m in modes],
            "residuals": [m.residual for m in modes],
            "decay_gap": _finite_or_none(gap),
            "entropy_condition_defect": defect,
            "entropy_condition_holds": entropy_condition_holds(sc.system),
            "identity_check": [
                {"rhs_real": r, "rhs_imag": i, "deviation": dev} for r, i, dev in checks
            ],
            "clusters": clusters,
            "oscillating_stationary_modes": flagged,
        })
        return EXIT_OK
    print(f"scenario: {sc.name}  (d={sc.dim}, ||L||_F={_g(sup.norm)})")
    print(f"{'k':>3}  {'eigenvalue':>24}  {'residual':>11}  {'identity dev':>12}")
    for k, (m, (_, _, dev)) in enumerate(zip(modes, checks)):
        print(f"{k:>3}  {_c(m.eigenvalue):>24}  {m.residual:11.3e}  {dev:12.3e}")
    print(f"decay gap: {_g(gap)}")
    print(f"entropy-condition defect: {defect:.3e} "
          f"({'holds' if entropy_condition_holds(sc.system) else 'fails'})")
    if clusters:
        print(f"eigenvalue clusters (within {TOL.eigen_cluster:g}): {clusters}")
    if flagged:
        print(f"oscillating modes with Re ~ 0: {flagged}")
    return EXIT_OK


def _final_summary(sc: Scenario, traj: Trajectory) -> None:
    final = traj.final
    print(f"samples: {len(traj)}  t_end: {_g(traj.times[-1])}")
    print(f"final entropy: {_g(traj.entropy[-1])}  min eigenvalue: {_g(traj.min_eigenvalue[-1])}")
    if sc.basis is not None:
        diag = np.diag(sc.basis.to_basis(final)).real
        print("final diagonal in basis: " + ", ".join(_g(x) for x in diag))


def _trajectory_for(sc: Scenario, method: str) -> Trajectory:
    if sc.t_end == 0:
        return Trajectory.from_states([0.0], [sc.initial_state.matrix])
    if method == "integrate":
        return integrate(sc.system, sc.initial_state, sc.t_end, min(sc.dt, sc.t_end))
    times = sample_times(sc.t_end, min(sc.dt, sc.t_end))
    if method == "spectral":
        states = spectral_states(build_superoperator(sc.system), sc.initial_state, times)
    else:
        report = certify(sc.system, sc.basis)
        states = closed_form_states(report.coefficients, sc.basis, sc.initial_state, times)
    return Trajectory.from_states(times, states)


def cmd_evolve(args) -> int:
    sc = _load(args)
    if args.method == "closed-form":
        if sc.basis is None:
            raise UsageError("closed-form evolution needs a scenario with basis_vectors")
        report = certify(sc.system, sc.basis)
        if not report.passed:
            print(f"certification failed ({', '.join(report.failures())}); "
                  "closed form does not apply", file=sys.stderr)
            return EXIT_FAIL
    traj = _trajectory_for(sc, args.method)
    if args.out:
        fmt = args.format or ("json" if str(args.out).endswith(".json") else "csv")
        save_trajectory(traj, fmt, args.out)
    print(f"scenario: {sc.name}  method: {args.method}  backend: {BACKEND}")
    _final_summary(sc, traj)
    return EXIT_OK


def cmd_certify(args) -> int:
    sc = _load(args)
    if sc.basis is None:
        raise UsageError("certify needs a scenario with basis_vectors")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MeasurementDegeneracyWarning)
        report = certify(sc.system, sc.basis)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.json:
        _emit({"scenario": sc.name, **report.to_dict()})
    else:
        print(f"scenario: {sc.name}")
        for k, v in report.defects.items():
            flag = "ok" if v <= report.tolerance else "FAIL"
            print(f"  {k:<28} {v:12.6g}  {flag}")
        print(f"  tolerance {report.tolerance:.3e}")
        print(f"verdict: {'pass' if report.passed else 'fail'}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_collapse(args) -> int:
    sc = _load(args)
    if sc.basis is None:
        raise UsageError("collapse needs a scenario with basis_vectors")
    if not args.t_factor > 0:
        raise UsageError("--t-factor must be positive")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MeasurementDegeneracyWarning)
        report = certify(sc.system, sc.basis)
    if not report.passed:
        print(f"certification failed ({', '.join(report.failures())})", file=sys.stderr)
        return EXIT_FAIL
    coeffs, basis, rho0 = report.coefficients, sc.basis, sc.initial_state
    gap = collapse_gap(decay_matrix(coeffs), basis)
    if gap == 0.0:
        print("some coherence between different classes never decays "
              f"(undeclared degeneracy {report.undeclared_degeneracies})", file=sys.stderr)
        return EXIT_NUMERIC
    predicted = class_collapse(basis, rho0).matrix
    t = 0.0 if math.isinf(gap) else args.t_factor / gap
    late = closed_form_states(coeffs, basis, rho0, [t])[0]
    deviation = frobenius_norm(late - predicted)
    initial_deviation = frobenius_norm(rho0.matrix - predicted)
    p_born = born_probabilities(basis, rho0).p
    p_late = np.diag(basis.to_basis(late)).real
    ok = deviation <= TOL.collapse
    if args.json:
        _emit({
            "scenario": sc.name,
            "complete": basis.complete,
            "gap": _finite_or_none(gap),
            "t": t,
            "deviation": deviation,
            "initial_deviation": initial_deviation,
            "born_probabilities": [float(x) for x in p_born],
            "late_probabilities": [float(x) for x in p_late],
            "predicted_limit": [[_cj(z) for z in row] for row in predicted],
            "verdict": "pass" if ok else "fail",
        })
    else:
        kind = "complete" if basis.complete else f"classes {[[a + 1 for a in c] for c in basis.classes]}"
        print(f"scenario: {sc.name}  ({kind})")
        print(f"gap: {_g(gap)}  t = {_g(args.t_factor)}/gap = {_g(t)}")
        print(f"deviation from predicted limit: {deviation:.3e} (at t=0: {initial_deviation:.3e})")
        print("p (late)  : " + ", ".join(_g(x) for x in p_late))
        print("<a|rho0|a>: " + ", ".join(_g(x) for x in p_born))
        print(f"verdict: {'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_entropy_check(args) -> int:
    sc = _load(args)
    defect = entropy_condition_defect(sc.system)
    holds = entropy_condition_holds(sc.system)
    traj = _trajectory_for(sc, "integrate")
    steps = np.diff(traj.entropy)
    min_step = float(steps.min()) if len(steps) else 0.0
    ok = (not holds) or min_step >= -TOL.entropy_step
    if args.json:
        _emit({
            "scenario": sc.name,
            "entropy_condition_defect": defect,
            "entropy_condition_holds": holds,
            "min_entropy_step": min_step,
            "initial_entropy": float(traj.entropy[0]),
            "final_entropy": float(traj.entropy[-1]),
            "verdict": "pass" if ok else "fail",
        })
    else:
        print(f"scenario: {sc.name}")
        print(f"entropy-condition defect: {defect:.3e} ({'holds' if holds else 'fails'})")
        print(f"entropy: {_g(traj.entropy[0])} -> {_g(traj.entropy[-1])}  "
              f"min step change: {min_step:.3e}")
        print(f"verdict: {'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_demo_qubit(args) -> int:
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    rows = []
    for sc in qubit_scenarios():
        ell = sc.system.jumps[0][0, 0].real
        h = sc.system.hamiltonian[0, 1].real
        modes = spectrum(sc.system)
        root = complex(ell ** 4 - 4 * h * h) ** 0.5
        expected = np.array([0.0, -2 * ell ** 2, -ell ** 2 + root, -ell ** 2 - root])
        expected = expected[sort_eigenvalues(expected)]
        report = certify(sc.system, sc.basis)
        limit = asymptotic_state(sc.system, sc.initial_state)
        rows.append((sc, modes, expected, report, limit))
        if out is not None:
            save_scenario(sc, out / f"{sc.name}.json")
    if args.json:
        _emit({"scenarios": [{
            "name": sc.name,
            "eigenvalues": [_cj(m.eigenvalue) for m in modes],
            "expected_eigenvalues": [_cj(z) for z in expected],
            "certification": "pass" if report.passed else "fail",
            "asymptotic_state": [[_cj(z) for z in row] for row in limit.matrix],
            "asymptotic_entropy": von_neumann_entropy(limit),
        } for sc, modes, expected, report, limit in rows]})
        return EXIT_OK
    for sc, modes, expected, report, limit in rows:
        print(f"{sc.name}: L = {_g(sc.system.jumps[0][0, 0].real)} sigma3, "
              f"H = {_g(sc.system.hamiltonian[0, 1].real)} sigma1")
        print("  eigenvalues: " + ", ".join(_c(m.eigenvalue) for m in modes))
        print("  expected   : " + ", ".join(_c(z) for z in expected))
        print(f"  sigma3 measurement certifies: {'pass' if report.passed else 'fail'}")
        print("  late-time state from (1+sigma1)/2: diag "
              + ", ".join(_g(x) for x in np.diag(limit.matrix).real)
              + f", entropy {_g(von_neumann_entropy(limit))}")
    if out is not None:
        print(f"wrote {len(rows)} scenarios to {out}")
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lindcollapse",
        description="Lindblad evolution, measurement certification and collapse checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p, json_flag=True):
        p.add_argument("--scenario", metavar="PATH", help="scenario JSON file")
        p.add_argument("--builtin", metavar="NAME", help="use a built-in scenario by name")
        if json_flag:
            p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("spectrum", help="superoperator eigenvalues and cross-checks")
    scenario_args(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("evolve", help="evolve the initial state and write a trajectory")
    scenario_args(p, json_flag=False)
    p.add_argument("--out", metavar="PATH", help="trajectory file (.csv or .json)")
    p.add_argument("--format", choices=("csv", "json"), help="override the format implied by --out")
    p.add_argument("--method", choices=("integrate", "spectral", "closed-form"), default="integrate")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("certify", help="check that the jumps and Hamiltonian implement the measurement")
    scenario_args(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("collapse", help="compare the late-time state with the collapse prediction")
    scenario_args(p)
    p.add_argument("--t-factor", type=float, default=40.0, metavar="K",
                   help="evolve to t = K / gap (default 40)")
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("entropy-check", help="entropy-balance condition and observed entropy change")
    scenario_args(p)
    p.set_defaults(func=cmd_entropy_check)

    p = sub.add_parser("demo-qubit", help="the single-qubit sigma3 measurement example")
    p.add_argument("--out", metavar="DIR", help="also write the scenarios as JSON files")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_demo_qubit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
