"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; :func:`as_matrix`
is the single entry point that validates shape and converts. The supported
envelope is ``d <= 32`` so nothing here bothers with sparse storage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._config import TOL

MAX_DIM = 32


class DimensionError(ValueError):
    """Operands have incompatible or invalid shapes."""


class NotHermitianError(ValueError):
    """A matrix expected to be Hermitian is not, within tolerance."""

    def __init__(self, defect: float, limit: float, name: str = "matrix"):
        self.defect = defect
        self.limit = limit
        self.name = name
        super().__init__(
            f"{name} is not Hermitian: ||A - A^H||_F = {defect:.3e} > {limit:.3e}"
        )


class EigenConvergenceError(ArithmeticError):
    """General eigensolver failed or missed its residual contract."""

    def __init__(self, message: str, residuals: np.ndarray | None = None):
        self.residuals = np.empty(0) if residuals is None else np.asarray(residuals)
        super().__init__(message)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a square complex128 array, validating its shape."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    return m


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.complex128)


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return a @ b - b @ a


def frobenius_inner(a, b) -> complex:
    """Tr(A^H B)."""
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return complex(np.vdot(a, b))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(a))


def hermiticity_defect(a) -> float:
    a = as_matrix(a)
    return float(np.linalg.norm(a - a.conj().T))


def check_hermitian(a, name: str = "matrix", rtol: float = TOL.hermitian) -> np.ndarray:
    """Validate Hermiticity relative to ``1 + ||A||_F`` and return the array."""
    a = as_matrix(a, name)
    defect = hermiticity_defect(a)
    limit = rtol * (1.0 + frobenius_norm(a))
    if defect > limit:
        raise NotHermitianError(defect, limit, name)
    return a


@dataclass(frozen=True)
class HermitianEigenSystem:
    eigenvalues: np.ndarray   # ascending, real
    eigenvectors: np.ndarray  # columns


@dataclass(frozen=True)
class GeneralEigenSystem:
    eigenvalues: np.ndarray   # sorted: descending real part, then ascending imaginary
    eigenvectors: np.ndarray  # columns, unit 2-norm
    residuals: np.ndarray     # ||A v - lambda v||_2 per pair


def hermitian_eigen(a) -> HermitianEigenSystem:
    a = check_hermitian(a)
    # symmetrize so the solver sees an exactly Hermitian input
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return HermitianEigenSystem(w, v)


def min_eigenvalue_hermitian(a) -> float:
    a = check_hermitian(a)
    return float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])


def sort_eigenvalues(w, scale: float = 1.0) -> np.ndarray:
    """Index order: descending real part, then ascending imaginary part.

    Real parts within ``1e-8 * (1 + scale)`` of the first member of a run
    count as ties.
    """
    w = np.asarray(w, dtype=np.complex128)
    order = sorted(range(len(w)), key=lambda k: -w[k].real)
    tol = TOL.eig_residual * (1.0 + scale)
    out: list[int] = []
    group = [order[0]] if order else []
    for k in order[1:]:
        if abs(w[k].real - w[group[0]].real) <= tol:
            group.append(k)
        else:
            out.extend(sorted(group, key=lambda j: w[j].imag))
            group = [k]
    out.extend(sorted(group, key=lambda j: w[j].imag))
    return np.array(out, dtype=int)


def general_eigen(a: np.ndarray) -> GeneralEigenSystem:
    """Right eigenpairs of a general square matrix with recorded residuals.

    Backed by LAPACK ``geev``. Every pair's residual is recomputed and checked
    against ``1e-8 * ||A||_F``; failures raise :class:`EigenConvergenceError`
    carrying the residuals that were obtained.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise EigenConvergenceError("matrix has non-finite entries")
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(f"eigensolver did not converge: {exc}") from exc
    v = v / np.linalg.norm(v, axis=0)
    residuals = np.linalg.norm(a @ v - v * w, axis=0)
    norm = frobenius_norm(a)
    order = sort_eigenvalues(w, norm)
    w, v, residuals = w[order], v[:, order], residuals[order]
    if np.any(residuals > TOL.eig_residual * norm + 1e-300):
        raise EigenConvergenceError(
            f"residual contract violated: max residual {residuals.max():.3e} "
            f"> {TOL.eig_residual * norm:.3e}",
            residuals,
        )
    return GeneralEigenSystem(w, v, residuals)
