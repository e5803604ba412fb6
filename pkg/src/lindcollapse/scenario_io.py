"""Scenario documents, trajectory files and built-in scenarios.

Scenario JSON layout (UTF-8)::

    {
      "name": str,
      "dim": int,
      "hamiltonian": [[[re, im], ...], ...],       # row-major d x d
      "jumps": [matrix, ...],
      "basis_vectors": [[[re, im], ...], ...] | null,   # one ket per row
      "classes": [[1, 2], [3, 4]] | null,          # 1-based labels
      "initial_state": matrix,
      "t_end": float,
      "dt": float
    }

Floats are written with ``repr`` so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import DensityMatrix, InvalidStateError, Trajectory
from .liouvillian import LindbladSystem, build_superoperator
from .matrixcore import NotHermitianError
from .measurement import ApparatusCoefficients, MeasurementBasis, apparatus_system

SCENARIO_KEYS = ("name", "dim", "hamiltonian", "jumps", "basis_vectors", "classes",
                 "initial_state", "t_end", "dt")


class ScenarioError(ValueError):
    """Malformed or invalid scenario document."""

    def __init__(self, message: str, field: str | None = None, defect: float | None = None):
        self.field = field
        self.defect = defect
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    system: LindbladSystem
    initial_state: DensityMatrix
    t_end: float
    dt: float
    basis: MeasurementBasis | None = None
    # verdict the built-in generators promise; not part of the file format
    expected_certification: bool | None = field(default=None, compare=False)

    def __post_init__(self):
        d = self.system.dim
        if self.initial_state.dim != d:
            raise ScenarioError(f"initial_state has dim {self.initial_state.dim}, expected {d}",
                                "initial_state")
        if self.basis is not None and self.basis.dim != d:
            raise ScenarioError(f"basis has dim {self.basis.dim}, expected {d}", "basis_vectors")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ScenarioError(f"t_end must be non-negative, got {self.t_end}", "t_end")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ScenarioError(f"dt must be positive, got {self.dt}", "dt")

    @property
    def dim(self) -> int:
        return self.system.dim


# -- JSON encoding ---------------------------------------------------------

def _enc_matrix(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _dec_complex(x, where: str) -> complex:
    if (not isinstance(x, list) or len(x) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x)):
        raise ScenarioError(f"{where}: expected [re, im], got {x!r}", where)
    return complex(float(x[0]), float(x[1]))


def _dec_matrix(x, d: int, where: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != d or any(not isinstance(r, list) or len(r) != d for r in x):
        raise ScenarioError(f"{where}: expected a {d}x{d} array of [re, im] pairs", where)
    return np.array([[_dec_complex(z, f"{where}[{i}][{j}]") for j, z in enumerate(row)]
                     for i, row in enumerate(x)], dtype=np.complex128)


def scenario_to_dict(sc: Scenario) -> dict:
    b = sc.basis
    return {
        "name": sc.name,
        "dim": sc.dim,
        "hamiltonian": _enc_matrix(sc.system.hamiltonian),
        "jumps": [_enc_matrix(l) for l in sc.system.jumps],
        "basis_vectors": None if b is None else _enc_matrix(b.vectors),
        "classes": None if b is None else [[a + 1 for a in c] for c in b.classes],
        "initial_state": _enc_matrix(sc.initial_state.matrix),
        "t_end": float(sc.t_end),
        "dt": float(sc.dt),
    }


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=1)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(sc) + "\n", encoding="utf-8")


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    missing = [k for k in ("name", "dim", "hamiltonian", "initial_state", "t_end", "dt") if k not in doc]
    if missing:
        raise ScenarioError(f"missing keys: {missing}", missing[0])
    unknown = sorted(set(doc) - set(SCENARIO_KEYS))
    if unknown:
        raise ScenarioError(f"unknown keys: {unknown}", unknown[0])
    d = doc["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ScenarioError(f"dim must be a positive integer, got {d!r}", "dim")
    name = doc["name"]
    if not isinstance(name, str):
        raise ScenarioError("name must be a string", "name")
    ham = _dec_matrix(doc["hamiltonian"], d, "hamiltonian")
    jumps_doc = doc.get("jumps") or []
    if not isinstance(jumps_doc, list):
        raise ScenarioError("jumps must be a list of matrices", "jumps")
    jumps = [_dec_matrix(l, d, f"jumps[{n}]") for n, l in enumerate(jumps_doc)]
    try:
        system = LindbladSystem(ham, tuple(jumps))
    except NotHermitianError as exc:
        raise ScenarioError(str(exc), "hamiltonian", exc.defect) from exc

    try:
        rho0 = DensityMatrix(_dec_matrix(doc["initial_state"], d, "initial_state"))
    except InvalidStateError as exc:
        raise ScenarioError(f"initial_state: {exc}", "initial_state") from exc

    basis = None
    if doc.get("basis_vectors") is not None:
        vecs = _dec_matrix(doc["basis_vectors"], d, "basis_vectors")
        classes = doc.get("classes")
        if classes is not None:
            if not isinstance(classes, list) or not all(
                    isinstance(c, list) and all(isinstance(a, int) and not isinstance(a, bool) for a in c)
                    for c in classes):
                raise ScenarioError("classes must be a list of lists of 1-based integers", "classes")
            classes = [[a - 1 for a in c] for c in classes]
        try:
            basis = MeasurementBasis(vecs, classes)
        except ValueError as exc:
            field_name = "classes" if "class" in str(exc) else "basis_vectors"
            raise ScenarioError(f"{field_name}: {exc}", field_name) from exc
    elif doc.get("classes") is not None:
        raise ScenarioError("classes given without basis_vectors", "classes")

    for key in ("t_end", "dt"):
        if not isinstance(doc[key], (int, float)) or isinstance(doc[key], bool):
            raise ScenarioError(f"{key} must be a number", key)
    return Scenario(name, system, rho0, float(doc["t_end"]), float(doc["dt"]), basis)


def load_scenario(source) -> Scenario:
    """Load from a path or from JSON text.

    Strings that look like a JSON object (leading ``{``) are parsed directly;
    anything else is treated as a path.
    """
    if isinstance(source, (str, os.PathLike)) and not str(source).lstrip().startswith("{"):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(doc)


# -- trajectories ----------------------------------------------------------

def _pairs(d: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(d) for j in range(i, d)]


def trajectory_columns(d: int) -> list[str]:
    cols = ["t"]
    for i, j in _pairs(d):
        cols += [f"re_rho_{i}_{j}", f"im_rho_{i}_{j}"]
    return cols + ["trace_defect", "min_eig", "entropy"]


def _rows(traj: Trajectory):
    pairs = _pairs(traj.dim)
    for k in range(len(traj)):
        s = traj.states[k]
        row = [float(traj.times[k])]
        for i, j in pairs:
            row += [float(s[i, j].real), float(s[i, j].imag)]
        row += [float(traj.trace_defect[k]), float(traj.min_eigenvalue[k]), float(traj.entropy[k])]
        yield row


def trajectory_to_dict(traj: Trajectory) -> dict:
    cols = trajectory_columns(traj.dim)
    return {"dim": traj.dim, "columns": cols, "rows": [dict(zip(cols, r)) for r in _rows(traj)]}


def save_trajectory(traj: Trajectory, fmt: str, path) -> None:
    """Write ``traj`` as ``csv`` or ``json``; columns in a fixed order."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(trajectory_columns(traj.dim))
        for r in _rows(traj):
            w.writerow([repr(x) for x in r])
        Path(path).write_text(buf.getvalue(), encoding="utf-8")
    elif fmt == "json":
        Path(path).write_text(json.dumps(trajectory_to_dict(traj), indent=1) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown trajectory format {fmt!r}")


def _trajectory_from_table(d: int, rows: list[list[float]]) -> Trajectory:
    pairs = _pairs(d)
    n = len(rows)
    times = np.array([r[0] for r in rows], dtype=float)
    states = np.zeros((n, d, d), dtype=np.complex128)
    for k, r in enumerate(rows):
        for p, (i, j) in enumerate(pairs):
            z = complex(r[1 + 2 * p], r[2 + 2 * p])
            states[k, i, j] = z
            states[k, j, i] = z.conjugate() if i != j else z
    tail = np.array([r[-3:] for r in rows], dtype=float).reshape(n, 3)
    return Trajectory(d, times, states, tail[:, 0], np.array([np.linalg.norm(s - s.conj().T) for s in states]),
                      tail[:, 1], tail[:, 2])


def load_trajectory(path, fmt: str | None = None) -> Trajectory:
    """Read a trajectory file written by :func:`save_trajectory`.

    The Hermiticity defect is not stored; it is recomputed from the states.
    """
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    if fmt == "json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        d, cols = doc["dim"], doc["columns"]
        rows = [[row[c] for c in cols] for row in doc["rows"]]
        return _trajectory_from_table(d, rows)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        npairs = (len(header) - 4) // 2
        d = int(round((math.sqrt(8 * npairs + 1) - 1) / 2))
        if trajectory_columns(d) != header:
            raise ValueError(f"{path}: unrecognized trajectory header")
        rows = [[float(x) for x in r] for r in reader if r]
    return _trajectory_from_table(d, rows)


# -- seeded generation -----------------------------------------------------

class Lcg64:
    """64-bit linear congruential generator.

    ``state <- (6364136223846793005 * state + 1442695040888963407) mod 2**64``
    (Knuth's MMIX constants). Uniform doubles take the top 53 bits of the
    updated state: ``(state >> 11) * 2**-53``. The initial state is the seed.
    """

    A = 6364136223846793005
    C = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u64(self) -> int:
        self.state = (self.A * self.state + self.C) & self.MASK
        return self.state

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0 ** -53)

    def unit_disc(self) -> complex:
        """Uniform point in the closed complex unit disc (polar method)."""
        r = math.sqrt(self.uniform())
        theta = 2.0 * math.pi * self.uniform()
        return complex(r * math.cos(theta), r * math.sin(theta))

    def complex_gaussian_like(self, shape) -> np.ndarray:
        """Entries uniform in the square [-1, 1] + i[-1, 1], row-major order."""
        n = int(np.prod(shape))
        vals = [complex(self.uniform(-1, 1), self.uniform(-1, 1)) for _ in range(n)]
        return np.array(vals, dtype=np.complex128).reshape(shape)

    def unitary(self, d: int) -> np.ndarray:
        """Columns from modified Gram-Schmidt on random complex vectors."""
        cols: list[np.ndarray] = []
        while len(cols) < d:
            v = self.complex_gaussian_like(d)
            for q in cols:
                v = v - np.vdot(q, v) * q
            nrm = np.linalg.norm(v)
            if nrm > 1e-6:
                cols.append(v / nrm)
        return np.array(cols).T

    def density_matrix(self, d: int) -> DensityMatrix:
        a = self.complex_gaussian_like((d, d))
        m = a @ a.conj().T
        m = m / m.trace().real
        return DensityMatrix(0.5 * (m + m.conj().T))


def random_apparatus(seed: int, d: int, n_jumps: int, classes=None, basis_random: bool = True
                     ) -> tuple[ApparatusCoefficients, MeasurementBasis]:
    """Seeded measuring apparatus built directly as ``sum_a ell[n,a] P_a``.

    Draw order: basis unitary (if ``basis_random``), then ``ell`` row-major,
    then ``h``. With non-singleton ``classes`` the first member of each class
    supplies the value for the whole class.
    """
    rng = Lcg64(seed)
    u = rng.unitary(d) if basis_random else np.eye(d, dtype=np.complex128)
    basis = MeasurementBasis(u.T, classes)
    ell = np.array([[rng.unit_disc() for _ in range(d)] for _ in range(n_jumps)],
                   dtype=np.complex128).reshape(n_jumps, d)
    h = np.array([rng.uniform(-1.0, 1.0) for _ in range(d)])
    for c in basis.classes:
        ell[:, list(c)] = ell[:, [c[0]]]
        h[list(c)] = h[c[0]]
    return ApparatusCoefficients(ell, h), basis


def random_system(seed: int, d: int, n_jumps: int) -> LindbladSystem:
    """Generic Hermitian H and unconstrained jumps (violates entropy balance)."""
    rng = Lcg64(seed)
    a = rng.complex_gaussian_like((d, d))
    h = 0.5 * (a + a.conj().T)
    jumps = tuple(rng.complex_gaussian_like((d, d)) for _ in range(n_jumps))
    return LindbladSystem(h, jumps)


# -- built-ins -------------------------------------------------------------

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
I2 = np.eye(2, dtype=np.complex128)

RANDOM_APPARATUS_SEED = 20160117
RANDOM_SYSTEM_SEED = 4242424242


def _dt_for(sys: LindbladSystem) -> float:
    norm = build_superoperator(sys).norm
    return 1e-2 if norm == 0 else min(1e-2, 0.1 / norm)


def qubit_system(ell: complex, h: float) -> LindbladSystem:
    """L = ell sigma_3, H = h sigma_1."""
    return LindbladSystem(h * SIGMA1, (ell * SIGMA3,))


def _fmt(x) -> str:
    return f"{x:g}"


def qubit_scenario(ell: float = 1.0, h: float = 0.0, t_end: float = 10.0) -> Scenario:
    sys = qubit_system(ell, h)
    return Scenario(
        name=f"qubit-l{_fmt(ell)}-h{_fmt(h)}",
        system=sys,
        initial_state=DensityMatrix(0.5 * (I2 + SIGMA1)),
        t_end=t_end,
        dt=_dt_for(sys),
        basis=MeasurementBasis.standard(2),
        expected_certification=(h == 0),
    )


def class_scenario(a: complex = 1.0, b: complex = -0.5 + 0.5j, g: float = 0.3, g2: float = -0.7,
                   seed: int = 7) -> Scenario:
    """Two spins, only the first measured: classes {1,2} and {3,4}."""
    sys = LindbladSystem(np.diag([g, g, g2, g2]).astype(np.complex128),
                         (np.diag([a, a, b, b]).astype(np.complex128),))
    return Scenario(
        name="two-spin-first-spin",
        system=sys,
        initial_state=Lcg64(seed).density_matrix(4),
        t_end=20.0,
        dt=_dt_for(sys),
        basis=MeasurementBasis.standard(4, [(0, 1), (2, 3)]),
        expected_certification=True,
    )


def random_apparatus_scenario(seed: int = RANDOM_APPARATUS_SEED, d: int = 3, n_jumps: int = 2) -> Scenario:
    coeffs, basis = random_apparatus(seed, d, n_jumps)
    sys = apparatus_system(coeffs, basis)
    return Scenario(
        name=f"random-apparatus-d{d}-n{n_jumps}-seed{seed}",
        system=sys,
        initial_state=Lcg64(seed ^ 0x5DEECE66D).density_matrix(d),
        t_end=10.0,
        dt=_dt_for(sys),
        basis=basis,
        expected_certification=True,
    )


def random_system_scenario(seed: int = RANDOM_SYSTEM_SEED, d: int = 3, n_jumps: int = 2) -> Scenario:
    sys = random_system(seed, d, n_jumps)
    return Scenario(
        name=f"random-open-d{d}-n{n_jumps}-seed{seed}",
        system=sys,
        initial_state=DensityMatrix.maximally_mixed(d),
        t_end=5.0,
        dt=_dt_for(sys),
        basis=MeasurementBasis.standard(d),
        expected_certification=False,
    )


def lowering_scenario() -> Scenario:
    """Single jump |0><1| from the maximally mixed state; entropy can fall."""
    sys = LindbladSystem(np.zeros((2, 2)), (np.array([[0, 1], [0, 0]], dtype=np.complex128),))
    return Scenario("raising-operator", sys, DensityMatrix.maximally_mixed(2), 10.0, 1e-2,
                    basis=None)


def null_scenario(d: int = 2) -> Scenario:
    """Zero generator: every state is stationary."""
    rho0 = DensityMatrix(0.5 * (I2 + 0.6 * SIGMA1 + 0.2 * SIGMA3)) if d == 2 else DensityMatrix.maximally_mixed(d)
    return Scenario(f"null-d{d}", LindbladSystem.zero(d), rho0, 1.0, 1e-2)


def qubit_scenarios() -> list[Scenario]:
    return [qubit_scenario(1.0, h) for h in (0.0, 1.0, 0.4)]


def builtin_scenarios() -> list[Scenario]:
    return [
        *qubit_scenarios(),
        class_scenario(),
        random_apparatus_scenario(),
        random_system_scenario(),
        lowering_scenario(),
        null_scenario(),
    ]


def builtin_scenario(name: str) -> Scenario:
    for sc in builtin_scenarios():
        if sc.name == name:
            return sc
    raise KeyError(f"no built-in scenario named {name!r}; "
                   f"choose from {[s.name for s in builtin_scenarios()]}")
