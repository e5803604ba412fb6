"""Lindblad generator, its d^2 x d^2 matrix form, and spectral diagnostics.

Vectorization is column stacking throughout, ``vec(A X B) = (B^T kron A) vec(X)``,
so ``vec(X) = X.reshape(-1, order="F")``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from ._config import TOL
from .matrixcore import (
    DimensionError,
    as_matrix,
    check_hermitian,
    commutator,
    frobenius_norm,
    general_eigen,
    identity,
)


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.complex128).reshape(-1, order="F")


def unvec(y: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(y).reshape(d, d, order="F")


@dataclass(frozen=True, eq=False)
class LindbladSystem:
    """Hamiltonian plus jump operators; hbar = 1."""

    hamiltonian: np.ndarray
    jumps: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        h = check_hermitian(self.hamiltonian, "hamiltonian")
        d = h.shape[0]
        jumps = []
        for n, l in enumerate(self.jumps):
            l = as_matrix(l, f"jumps[{n}]")
            if l.shape != (d, d):
                raise DimensionError(f"jumps[{n}] has shape {l.shape}, expected {(d, d)}")
            jumps.append(l)
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", tuple(jumps))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @classmethod
    def zero(cls, d: int) -> "LindbladSystem":
        return cls(np.zeros((d, d), dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class Superoperator:
    dim: int
    matrix: np.ndarray

    @cached_property
    def norm(self) -> float:
        return frobenius_norm(self.matrix)

    @cached_property
    def eigenbasis(self) -> "Eigenbasis":
        """Raw LAPACK eigendecomposition with the eigenvector condition number."""
        w, v = np.linalg.eig(self.matrix)
        return Eigenbasis(w, v, float(np.linalg.cond(v)))

    def apply(self, v: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(v), self.dim)


@dataclass(frozen=True, eq=False)
class Eigenbasis:
    values: np.ndarray
    vectors: np.ndarray  # columns
    condition: float


@dataclass(frozen=True, eq=False)
class SpectralMode:
    eigenvalue: complex
    eigenmatrix: np.ndarray
    residual: float


def apply_liouvillian(sys: LindbladSystem, v) -> np.ndarray:
    """-i[H, v] + sum_n (L v L^H - 1/2 L^H L v - 1/2 v L^H L), term by term."""
    v = as_matrix(v, "v")
    if v.shape[0] != sys.dim:
        raise DimensionError(f"v has dim {v.shape[0]}, system has dim {sys.dim}")
    out = -1j * commutator(sys.hamiltonian, v)
    for l in sys.jumps:
        ld = l.conj().T
        ldl = ld @ l
        out += l @ v @ ld - 0.5 * (ldl @ v) - 0.5 * (v @ ldl)
    return out


def build_superoperator(sys: LindbladSystem) -> Superoperator:
    d = sys.dim
    eye = identity(d)
    h = sys.hamiltonian
    m = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for l in sys.jumps:
        ldl = l.conj().T @ l
        m += np.kron(l.conj(), l) - 0.5 * np.kron(eye, ldl) - 0.5 * np.kron(ldl.T, eye)
    return Superoperator(d, m)


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    flat = v.reshape(-1)  # row-major
    k = int(np.argmax(np.abs(flat)))
    return v * (abs(flat[k]) / flat[k])


def spectrum(sys: LindbladSystem, superop: Superoperator | None = None) -> list[SpectralMode]:
    """All d^2 eigenmodes sorted by descending real part.

    Eigenmatrices have unit Frobenius norm and their largest-modulus entry
    made real positive. Residuals are recomputed with the term-by-term
    generator rather than the matrix form.
    """
    superop = superop or build_superoperator(sys)
    eig = general_eigen(superop.matrix)
    modes = []
    for lam, y in zip(eig.eigenvalues, eig.eigenvectors.T):
        v = _canonical_phase(unvec(y, sys.dim))
        lam = complex(lam)
        res = frobenius_norm(apply_liouvillian(sys, v) - lam * v)
        modes.append(SpectralMode(lam, v, res))
    return modes


def eigenvalue_clusters(modes: Sequence[SpectralMode], tol: float = TOL.eigen_cluster) -> list[list[int]]:
    """Group mode indices whose eigenvalues lie within ``tol`` of each other.

    Clusters flag possible degeneracy (and Jordan structure); they are
    reported only, never resolved.
    """
    lams = np.array([m.eigenvalue for m in modes])
    parent = list(range(len(lams)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(lams)):
        for j in range(i + 1, len(lams)):
            if abs(lams[i] - lams[j]) <= tol:
                parent[find(j)] = find(i)
    groups: dict[int, list[int]] = {}
    for i in range(len(lams)):
        groups.setdefault(find(i), []).append(i)
    return [g for g in groups.values() if len(g) > 1]


def oscillating_stationary_modes(modes: Sequence[SpectralMode], norm: float) -> list[int]:
    """Indices of modes with Re lambda ~ 0 but Im lambda != 0."""
    tol = TOL.stationary * norm
    return [
        k for k, m in enumerate(modes)
        if abs(m.eigenvalue.real) <= tol and abs(m.eigenvalue.imag) > tol
    ]


def entropy_condition_defect(sys: LindbladSystem) -> float:
    """||sum_n L_n^H L_n - sum_n L_n L_n^H||_F."""
    acc = np.zeros((sys.dim, sys.dim), dtype=np.complex128)
    for l in sys.jumps:
        acc += l.conj().T @ l - l @ l.conj().T
    return frobenius_norm(acc)


def entropy_condition_holds(sys: LindbladSystem) -> bool:
    scale = 1.0 + sum(frobenius_norm(l) ** 2 for l in sys.jumps)
    return entropy_condition_defect(sys) <= TOL.entropy_condition * scale


def identity_terms(sys: LindbladSystem, v) -> tuple[float, float]:
    """Real and imaginary parts of Tr(v^H L v) via the commutator identities.

    Returns ``(real_part, imag_part)`` *not* divided by Tr(v^H v).
    """
    v = as_matrix(v, "v")
    vd = v.conj().T
    dissip = 0.0
    unbalanced = np.zeros_like(v)
    im_jump = 0.0
    for l in sys.jumps:
        ld = l.conj().T
        c = commutator(v, ld)
        dissip += np.trace(c.conj().T @ c).real
        unbalanced += ld @ l - l @ ld
        im_jump += np.trace(l @ vd @ c).imag
    real = -0.5 * dissip - 0.5 * np.trace(v @ vd @ unbalanced).real
    imag = im_jump - np.trace(vd @ commutator(sys.hamiltonian, v)).real
    return float(real), float(imag)


def eigenvalue_identity_check(sys: LindbladSystem, mode: SpectralMode) -> tuple[float, float, float]:
    """Recover (Re lambda, Im lambda) of a mode from the commutator identities.

    Returns ``(rhs_real, rhs_imag, max_deviation)``.
    """
    v = mode.eigenmatrix
    nrm2 = float(np.vdot(v, v).real)
    if nrm2 == 0.0:
        raise ValueError("eigenmatrix has zero norm")
    real, imag = identity_terms(sys, v)
    rhs_real, rhs_imag = real / nrm2, imag / nrm2
    dev = max(abs(rhs_real - mode.eigenvalue.real), abs(rhs_imag - mode.eigenvalue.imag))
    return rhs_real, rhs_imag, dev


def decay_gap(modes: Sequence[SpectralMode]) -> float:
    if not modes:
        raise ValueError("decay_gap needs at least one mode")
    rates = [-m.eigenvalue.real for m in modes if m.eigenvalue.real < -TOL.decaying]
    return min(rates) if rates else math.inf
