"""Time evolution of density matrices under a fixed Lindblad generator.

Two independent routes are provided: :func:`integrate` (classical RK4 on the
vectorized equation, compiled when available) and :func:`propagate_spectral`
(eigen-expansion of the superoperator). Each serves as the other's oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import rk4_run
from ._config import TOL
from .liouvillian import LindbladSystem, Superoperator, build_superoperator, unvec, vec
from .matrixcore import (
    as_matrix,
    check_hermitian,
    frobenius_norm,
    hermiticity_defect as _herm_defect,
)

MAX_SAMPLES = 1001


class InvalidStateError(ValueError):
    """Matrix violates a density-matrix invariant."""


class PositivityViolation(ArithmeticError):
    """Integrated state developed an eigenvalue below the abort threshold."""

    def __init__(self, time: float, min_eigenvalue: float):
        self.time = time
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"positivity violated at t={time:.6g}: min eigenvalue {min_eigenvalue:.3e}"
        )


class IllConditionedError(ArithmeticError):
    """Superoperator eigenbasis is too close to defective for spectral propagation."""


class OscillatoryModesError(ArithmeticError):
    """Stationary subspace contains purely oscillating modes."""


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, "density matrix")
        try:
            check_hermitian(m, "density matrix")
        except ValueError as exc:
            raise InvalidStateError(str(exc)) from exc
        tr = m.trace()
        if abs(tr - 1.0) > TOL.trace:
            raise InvalidStateError(f"density matrix trace {tr:.12g} differs from 1")
        lo = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if lo < -TOL.min_eigenvalue:
            raise InvalidStateError(f"density matrix has eigenvalue {lo:.3e} < 0")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d, dtype=np.complex128) / d)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled states plus per-sample diagnostics.

    ``trace_defect`` and ``hermiticity_defect`` are measured before the
    per-step correction (maximum over the steps since the previous sample).
    States are kept as a raw ``(n, d, d)`` array; use :meth:`density` for a
    validated :class:`DensityMatrix`.
    """

    dim: int
    times: np.ndarray
    states: np.ndarray
    trace_defect: np.ndarray
    hermiticity_defect: np.ndarray
    min_eigenvalue: np.ndarray
    entropy: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        for name in ("states", "trace_defect", "hermiticity_defect", "min_eigenvalue", "entropy"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"trajectory field {name} has length != {n}")
        if n and (self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0)):
            raise ValueError("trajectory times must start at 0 and increase strictly")

    def __len__(self) -> int:
        return len(self.times)

    def density(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.states[i])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @classmethod
    def from_states(cls, times, states, trace_defect=None, hermiticity_defect=None) -> "Trajectory":
        """Build a trajectory, computing eigenvalue diagnostics for each state."""
        times = np.asarray(times, dtype=float)
        states = np.asarray(states, dtype=np.complex128)
        n = len(times)
        d = states.shape[-1] if states.ndim == 3 else 0
        mins = np.empty(n)
        ents = np.empty(n)
        for i, s in enumerate(states):
            p = np.linalg.eigvalsh(0.5 * (s + s.conj().T))
            mins[i] = p[0]
            ents[i] = _entropy_from_eigenvalues(np.clip(p, 0.0, None))
        if trace_defect is None:
            trace_defect = np.array([abs(s.trace() - 1.0) for s in states])
        if hermiticity_defect is None:
            hermiticity_defect = np.array([_herm_defect(s) for s in states])
        return cls(d, times, states, np.asarray(trace_defect, float),
                   np.asarray(hermiticity_defect, float), mins, ents)


def _entropy_from_eigenvalues(p: np.ndarray) -> float:
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p))) + 0.0  # no negative zero


def von_neumann_entropy(rho: DensityMatrix | np.ndarray) -> float:
    """-Tr(rho ln rho) in nats; eigenvalues in [-1e-9, 0) count as zero."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else check_hermitian(rho, "rho")
    p = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if p[0] < -TOL.min_eigenvalue:
        raise InvalidStateError(f"eigenvalue {p[0]:.3e} is below -{TOL.min_eigenvalue}")
    return _entropy_from_eigenvalues(np.clip(p, 0.0, None))


def default_dt(superop: Superoperator) -> float:
    if superop.norm == 0.0:
        return 1e-2
    return min(1e-2, 0.1 / superop.norm)


def step_plan(t_end: float, dt: float) -> tuple[int, float, int]:
    """(number of steps, actual step, record interval) for a fixed-step run."""
    nsteps = max(1, math.ceil(t_end / dt - 1e-9))
    return nsteps, t_end / nsteps, math.ceil(nsteps / (MAX_SAMPLES - 1))


def sample_times(t_end: float, dt: float) -> np.ndarray:
    """Times at which :func:`integrate` records samples."""
    nsteps, h, every = step_plan(t_end, dt)
    steps = list(range(0, nsteps + 1, every))
    if steps[-1] != nsteps:
        steps.append(nsteps)
    times = np.array(steps, dtype=float) * h
    times[-1] = t_end
    return times


def integrate(sys: LindbladSystem, rho0: DensityMatrix, t_end: float, dt: float | None = None,
              superop: Superoperator | None = None) -> Trajectory:
    """Fixed-step RK4 integration of d(rho)/dt = L(rho) from 0 to ``t_end``.

    The step count is ``ceil(t_end / dt)`` and the step is shrunk to land on
    ``t_end`` exactly. Every step is re-Hermitized and trace-renormalized.
    Samples are kept every ``ceil(nsteps / 1000)`` steps plus the last one.
    """
    superop = superop or build_superoperator(sys)
    if dt is None:
        dt = default_dt(superop)
    if not (t_end > 0.0):
        raise ValueError(f"t_end must be positive, got {t_end}")
    if not (0.0 < dt <= t_end):
        raise ValueError(f"dt must satisfy 0 < dt <= t_end, got dt={dt}")
    if rho0.dim != sys.dim:
        raise ValueError(f"rho0 has dim {rho0.dim}, system has dim {sys.dim}")
    nsteps, h, every = step_plan(t_end, dt)
    steps, states, tdef, hdef = rk4_run(superop.matrix, vec(rho0.matrix), sys.dim, h, nsteps, every)
    d = sys.dim
    mats = states.reshape(-1, d, d).transpose(0, 2, 1)  # column-stacked -> matrix
    times = steps * h
    times[-1] = t_end
    traj = Trajectory.from_states(times, mats, tdef, hdef)
    bad = np.nonzero(traj.min_eigenvalue < -TOL.positivity_abort)[0]
    if len(bad):
        i = int(bad[0])
        raise PositivityViolation(float(traj.times[i]), float(traj.min_eigenvalue[i]))
    return traj


def _eigenbasis(superop: Superoperator):
    eb = superop.eigenbasis
    if not math.isfinite(eb.condition) or eb.condition > TOL.condition_max:
        raise IllConditionedError(
            f"superoperator eigenvector matrix has condition number {eb.condition:.3e} "
            f"> {TOL.condition_max:.0e}; use integrate() instead"
        )
    return eb


def spectral_states(superop: Superoperator, rho0: DensityMatrix, times) -> np.ndarray:
    """Raw ``(len(times), d, d)`` array of eigen-expansion states."""
    eb = _eigenbasis(superop)
    coeffs = np.linalg.solve(eb.vectors, vec(rho0.matrix))
    out = []
    for t in np.asarray(times, dtype=float):
        m = unvec(eb.vectors @ (coeffs * np.exp(eb.values * t)), superop.dim)
        out.append(0.5 * (m + m.conj().T))
    return np.array(out).reshape(-1, superop.dim, superop.dim)


def propagate_spectral(superop: Superoperator, rho0: DensityMatrix, t: float) -> DensityMatrix:
    """rho(t) from the eigen-expansion of vec(rho0) in superoperator modes."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return rho0
    return DensityMatrix(spectral_states(superop, rho0, [t])[0])


def asymptotic_state(sys: LindbladSystem, rho0: DensityMatrix,
                     superop: Superoperator | None = None) -> DensityMatrix:
    """Late-time limit: spectral projection of rho0 onto the stationary modes."""
    superop = superop or build_superoperator(sys)
    eb = _eigenbasis(superop)
    tol = TOL.stationary * superop.norm
    stationary = np.abs(eb.values.real) <= tol
    if np.any(np.abs(eb.values[stationary].imag) > tol):
        raise OscillatoryModesError(
            "stationary subspace has modes with nonzero imaginary eigenvalue; "
            "no time-independent limit exists"
        )
    coeffs = np.linalg.solve(eb.vectors, vec(rho0.matrix))
    y = eb.vectors[:, stationary] @ coeffs[stationary]
    m = unvec(y, superop.dim)
    return DensityMatrix(0.5 * (m + m.conj().T))


def trajectory_max_deviation(a: Trajectory, b_states: np.ndarray) -> float:
    """Largest Frobenius distance between matching samples."""
    return max(frobenius_norm(x - y) for x, y in zip(a.states, b_states))
