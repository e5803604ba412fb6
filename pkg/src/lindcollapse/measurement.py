"""Projective measurement bases, apparatus certification and collapse limits.

A measuring apparatus is a Lindblad system whose jumps and Hamiltonian are
diagonal in the measured basis, ``L_n = sum_a ell[n, a] P_a`` and
``H = sum_a h[a] P_a``. For such systems the equation is solved in closed form
entry by entry in the basis: the coherence between ``a`` and ``b`` is
multiplied by ``exp(lam[a, b] t)``.

Class indices are 0-based here; :mod:`lindcollapse.scenario_io` converts to
the 1-based labels used in scenario files.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._config import TOL
from .dynamics import DensityMatrix
from .liouvillian import LindbladSystem
from .matrixcore import DimensionError, commutator, frobenius_norm


class MeasurementDegeneracyWarning(UserWarning):
    """Apparatus cannot tell apart two states that were declared distinct."""


def _normalize_classes(classes, d: int) -> tuple[tuple[int, ...], ...]:
    if classes is None:
        return tuple((a,) for a in range(d))
    out = []
    seen: set[int] = set()
    for c in classes:
        c = tuple(int(a) for a in c)
        if not c:
            raise ValueError("measurement classes must be non-empty")
        for a in c:
            if not 0 <= a < d:
                raise ValueError(f"class index {a} outside 0..{d - 1}")
            if a in seen:
                raise ValueError(f"class index {a} appears more than once")
            seen.add(a)
        out.append(c)
    if len(seen) != d:
        missing = sorted(set(range(d)) - seen)
        raise ValueError(f"classes do not cover indices {missing}")
    return tuple(out)


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Rank-one projectors onto an orthonormal basis, grouped into classes.

    ``vectors`` holds the basis kets as rows, exactly as supplied. The kets are
    Loewdin-orthonormalized before the projectors are formed, so the projector
    algebra holds to rounding even when the input is only orthonormal to 1e-8.
    """

    vectors: np.ndarray
    classes: tuple[tuple[int, ...], ...]
    unitary: np.ndarray = field(init=False, repr=False)     # kets as columns
    projectors: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.complex128)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise DimensionError(f"need d vectors of length d, got shape {v.shape}")
        d = v.shape[0]
        gram = v.conj() @ v.T
        defect = float(np.max(np.abs(gram - np.eye(d))))
        if defect > TOL.orthonormal_input:
            raise ValueError(f"basis vectors are not orthonormal: Gram defect {defect:.3e}")
        w, q = np.linalg.eigh(gram)
        u = v.T @ (q @ np.diag(w ** -0.5) @ q.conj().T)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "classes", _normalize_classes(self.classes, d))
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "projectors", tuple(np.outer(u[:, a], u[:, a].conj()) for a in range(d)))

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def complete(self) -> bool:
        return all(len(c) == 1 for c in self.classes)

    def class_projectors(self) -> list[np.ndarray]:
        return [sum(self.projectors[a] for a in c) for c in self.classes]

    def class_of(self) -> np.ndarray:
        label = np.empty(self.dim, dtype=int)
        for k, c in enumerate(self.classes):
            label[list(c)] = k
        return label

    def same_class_mask(self) -> np.ndarray:
        label = self.class_of()
        return label[:, None] == label[None, :]

    def to_basis(self, m) -> np.ndarray:
        """Matrix elements <a|m|b>."""
        return self.unitary.conj().T @ np.asarray(m) @ self.unitary

    def from_basis(self, m) -> np.ndarray:
        return self.unitary @ np.asarray(m) @ self.unitary.conj().T

    @classmethod
    def standard(cls, d: int, classes=None) -> "MeasurementBasis":
        return cls(np.eye(d, dtype=np.complex128), classes)


def basis_from_vectors(vectors: Sequence, classes=None) -> MeasurementBasis:
    return MeasurementBasis(np.array([np.asarray(v, dtype=np.complex128) for v in vectors]), classes)


@dataclass(frozen=True, eq=False)
class ApparatusCoefficients:
    """``ell`` is N x d complex, ``h`` has d real entries."""

    ell: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(-1)
        ell = np.asarray(self.ell, dtype=np.complex128)
        if ell.ndim == 1:
            ell = ell.reshape(1, -1)
        if ell.size == 0:
            ell = ell.reshape(0, len(h))
        if ell.ndim != 2 or ell.shape[1] != len(h):
            raise DimensionError(f"ell has shape {ell.shape}, expected (N, {len(h)})")
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "h", h)

    @property
    def dim(self) -> int:
        return len(self.h)


@dataclass(frozen=True, eq=False)
class DecayMatrix:
    lam: np.ndarray
    c: np.ndarray


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p[(p < 0) & (p >= -TOL.probability_clamp)] = 0.0
        if np.any(p < 0):
            raise ValueError(f"negative probability {p.min():.3e}")
        if abs(p.sum() - 1.0) > TOL.probability_sum:
            raise ValueError(f"probabilities sum to {p.sum():.12g}")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True, eq=False)
class CertificationReport:
    commutator_defects: np.ndarray         # per jump, max over projectors
    hamiltonian_commutator_defect: float
    jump_reconstruction_defects: np.ndarray
    hamiltonian_reconstruction_defect: float
    ell_class_defect: float
    h_class_defect: float
    h_imag_defect: float
    coefficients: ApparatusCoefficients
    tolerance: float
    undeclared_degeneracies: list[tuple[int, int]]

    @property
    def defects(self) -> dict[str, float]:
        return {
            "commutator": float(np.max(self.commutator_defects, initial=0.0)),
            "hamiltonian_commutator": self.hamiltonian_commutator_defect,
            "jump_reconstruction": float(np.max(self.jump_reconstruction_defects, initial=0.0)),
            "hamiltonian_reconstruction": self.hamiltonian_reconstruction_defect,
            "ell_class": self.ell_class_defect,
            "h_class": self.h_class_defect,
            "h_imag": self.h_imag_defect,
        }

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.defects.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.defects.items() if v > self.tolerance]

    def to_dict(self) -> dict:
        co = self.coefficients
        return {
            "verdict": "pass" if self.passed else "fail",
            "tolerance": self.tolerance,
            "defects": self.defects,
            "commutator_defects": [float(x) for x in self.commutator_defects],
            "jump_reconstruction_defects": [float(x) for x in self.jump_reconstruction_defects],
            "ell": [[[z.real, z.imag] for z in row] for row in co.ell],
            "h": [float(x) for x in co.h],
            "undeclared_degeneracies": [list(p) for p in self.undeclared_degeneracies],
        }


def _class_spread(values: np.ndarray, classes) -> float:
    """Largest difference between entries of the same class (last axis)."""
    worst = 0.0
    for c in classes:
        if len(c) > 1:
            block = values[..., list(c)]
            worst = max(worst, float(np.max(np.abs(block - block[..., :1]), initial=0.0)))
    return worst


def degenerate_pairs(coeffs: ApparatusCoefficients) -> list[tuple[int, int]]:
    """Pairs a < b whose ``ell`` columns coincide within tolerance."""
    ell = coeffs.ell
    scale = 1.0 + (float(np.max(np.abs(ell))) if ell.size else 0.0)
    tol = TOL.degeneracy * scale
    d = coeffs.dim
    pairs = []
    for a in range(d):
        for b in range(a + 1, d):
            diff = float(np.max(np.abs(ell[:, a] - ell[:, b]), initial=0.0))
            if diff <= tol:
                pairs.append((a, b))
    return pairs


def _undeclared(coeffs, basis) -> list[tuple[int, int]]:
    label = basis.class_of()
    return [(a, b) for a, b in degenerate_pairs(coeffs) if label[a] != label[b]]


def extract_coefficients(sys: LindbladSystem, basis: MeasurementBasis) -> tuple[ApparatusCoefficients, float]:
    """Diagonal matrix elements <a|L_n|a>, <a|H|a>; also the max |Im h|."""
    ell = np.array([np.diag(basis.to_basis(l)) for l in sys.jumps]).reshape(len(sys.jumps), basis.dim)
    hd = np.diag(basis.to_basis(sys.hamiltonian))
    return ApparatusCoefficients(ell, hd.real), float(np.max(np.abs(hd.imag)))


def apparatus_system(coeffs: ApparatusCoefficients, basis: MeasurementBasis) -> LindbladSystem:
    """Build ``L_n = sum_a ell[n, a] P_a`` and ``H = sum_a h[a] P_a``."""
    if coeffs.dim != basis.dim:
        raise DimensionError(f"coefficients have dim {coeffs.dim}, basis has dim {basis.dim}")
    u = basis.unitary
    jumps = tuple(u @ np.diag(row) @ u.conj().T for row in coeffs.ell)
    h = u @ np.diag(coeffs.h.astype(np.complex128)) @ u.conj().T
    return LindbladSystem(0.5 * (h + h.conj().T), jumps)


def certify(sys: LindbladSystem, basis: MeasurementBasis) -> CertificationReport:
    """Measure how far ``sys`` is from a measuring apparatus for ``basis``.

    A failing apparatus yields a failing report, never an exception.
    """
    if sys.dim != basis.dim:
        raise DimensionError(f"system dim {sys.dim} != basis dim {basis.dim}")
    coeffs, h_imag = extract_coefficients(sys, basis)
    comm = np.array([
        max(frobenius_norm(commutator(l, p)) for p in basis.projectors) for l in sys.jumps
    ])
    h_comm = max(frobenius_norm(commutator(sys.hamiltonian, p)) for p in basis.projectors)
    rebuilt = apparatus_system(coeffs, basis)
    jump_rec = np.array([frobenius_norm(l - r) for l, r in zip(sys.jumps, rebuilt.jumps)])
    h_rec = frobenius_norm(sys.hamiltonian - rebuilt.hamiltonian)
    scale = 1.0 + max([frobenius_norm(sys.hamiltonian)] + [frobenius_norm(l) for l in sys.jumps])
    undeclared = _undeclared(coeffs, basis)
    if undeclared:
        warnings.warn(
            f"apparatus does not distinguish basis states {undeclared} declared in different "
            "classes; the effective measurement is coarser than declared",
            MeasurementDegeneracyWarning,
            stacklevel=2,
        )
    return CertificationReport(
        commutator_defects=comm,
        hamiltonian_commutator_defect=h_comm,
        jump_reconstruction_defects=jump_rec,
        hamiltonian_reconstruction_defect=h_rec,
        ell_class_defect=_class_spread(coeffs.ell, basis.classes),
        h_class_defect=_class_spread(coeffs.h, basis.classes),
        h_imag_defect=h_imag,
        coefficients=coeffs,
        tolerance=TOL.certify * scale,
        undeclared_degeneracies=undeclared,
    )


def decay_matrix(coeffs: ApparatusCoefficients) -> DecayMatrix:
    """Coherence decay rates lam[a, b] and overlaps C[a, b] = sum_n ell[n,a] ell[n,b]^*.

    The rates are evaluated as
    ``-1/2 sum_n |ell_na - ell_nb|^2 + i Im C_ab - i (h_a - h_b)`` and checked
    against the equivalent ``C_ab - C_aa/2 - C_bb/2 - i (h_a - h_b)``.
    """
    ell, h = coeffs.ell, coeffs.h
    c = ell.T @ ell.conj()
    diff = ell[:, :, None] - ell[:, None, :]
    dh = h[:, None] - h[None, :]
    lam = -0.5 * np.sum(np.abs(diff) ** 2, axis=0) + 1j * c.imag - 1j * dh
    cd = np.diag(c)
    alt = c - 0.5 * cd[:, None] - 0.5 * cd[None, :] - 1j * dh
    gap = float(np.max(np.abs(lam - alt), initial=0.0))
    if gap > TOL.decay_selfcheck * (1.0 + float(np.max(np.abs(c), initial=0.0))):
        raise ArithmeticError(f"decay-rate self-check failed: forms differ by {gap:.3e}")
    np.fill_diagonal(lam, 0.0)
    return DecayMatrix(lam, c)


def _check_dims(coeffs, basis, rho0):
    if not coeffs.dim == basis.dim == rho0.dim:
        raise DimensionError(
            f"dims disagree: coefficients {coeffs.dim}, basis {basis.dim}, state {rho0.dim}"
        )


def closed_form_states(coeffs: ApparatusCoefficients, basis: MeasurementBasis,
                       rho0: DensityMatrix, times) -> np.ndarray:
    """Raw ``(len(times), d, d)`` array of closed-form states."""
    _check_dims(coeffs, basis, rho0)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    lam = decay_matrix(coeffs).lam
    r = basis.to_basis(rho0.matrix)
    u = basis.unitary
    out = np.empty((len(times), basis.dim, basis.dim), dtype=np.complex128)
    for k, t in enumerate(times):
        m = u @ (r * np.exp(lam * t)) @ u.conj().T
        out[k] = 0.5 * (m + m.conj().T)
    return out


def closed_form_evolve(coeffs: ApparatusCoefficients, basis: MeasurementBasis,
                       rho0: DensityMatrix, t: float) -> DensityMatrix:
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return rho0
    return DensityMatrix(closed_form_states(coeffs, basis, rho0, [t])[0])


def born_probabilities(basis: MeasurementBasis, rho0: DensityMatrix) -> ProbabilityVector:
    """p_a = <a|rho0|a>."""
    return ProbabilityVector(np.diag(basis.to_basis(rho0.matrix)).real)


def born_collapse(basis: MeasurementBasis, rho0: DensityMatrix) -> tuple[DensityMatrix, ProbabilityVector]:
    probs = born_probabilities(basis, rho0)
    limit = sum(p * proj for p, proj in zip(probs.p, basis.projectors))
    return DensityMatrix(limit), probs


def class_collapse(basis: MeasurementBasis, rho0: DensityMatrix) -> DensityMatrix:
    """sum_C P_C rho0 P_C, the class-resolved late-time limit."""
    kept = basis.to_basis(rho0.matrix) * basis.same_class_mask()
    m = basis.from_basis(kept)
    return DensityMatrix(0.5 * (m + m.conj().T))


def collapse_gap(decay: DecayMatrix, basis: MeasurementBasis) -> float:
    """Slowest decay rate among coherences between different classes.

    Returns 0.0 when some cross-class coherence does not decay, and ``inf``
    for a single-class basis.
    """
    cross = ~basis.same_class_mask()
    if not np.any(cross):
        return float("inf")
    rates = -decay.lam.real[cross]
    gap = float(rates.min())
    return 0.0 if gap <= TOL.decaying else gap
