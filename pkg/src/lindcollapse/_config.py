"""Numerical tolerances shared by every module.

All thresholds live here so that the numerical contract can be audited in one
place. Values are dimensionless unless stated otherwise.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10          # relative, ||A - A^H||_F <= tol * (1 + ||A||_F)
    eig_gram: float = 1e-10           # orthonormality of Hermitian eigenvectors
    eig_residual: float = 1e-8        # general eigensolver, relative to ||A||_F
    stationary: float = 1e-8          # |Re lambda| <= tol * ||L|| counts as stationary
    decaying: float = 1e-8            # absolute, Re lambda < -tol counts as decaying
    eigen_cluster: float = 1e-6       # eigenvalues this close are reported as a cluster
    condition_max: float = 1e8        # eigenvector matrix condition number limit
    trace: float = 1e-10              # density matrix unit trace
    min_eigenvalue: float = 1e-9      # density matrix positivity slack
    positivity_abort: float = 1e-6    # integrator aborts below -tol
    entropy_condition: float = 1e-10  # relative to 1 + sum ||L_n||_F^2
    entropy_step: float = 1e-8        # allowed entropy decrease per recorded step
    projector: float = 1e-10          # measurement projector algebra
    orthonormal_input: float = 1e-8   # Gram defect allowed for basis vectors
    certify: float = 1e-8             # relative to 1 + operator scale
    degeneracy: float = 1e-8          # relative to 1 + max |ell|
    decay_selfcheck: float = 1e-12    # Eq-form vs C-form decay rates
    probability_clamp: float = 1e-12
    probability_sum: float = 1e-10
    collapse: float = 1e-6            # late-time deviation accepted by the CLI


TOL = Tolerances()
