"""Lindblad dynamics of finite-dimensional density matrices and measurement collapse."""

from ._backend import BACKEND
from .dynamics import (
    DensityMatrix,
    Trajectory,
    asymptotic_state,
    integrate,
    propagate_spectral,
    von_neumann_entropy,
)
from .liouvillian import (
    LindbladSystem,
    SpectralMode,
    Superoperator,
    apply_liouvillian,
    build_superoperator,
    decay_gap,
    eigenvalue_identity_check,
    entropy_condition_defect,
    spectrum,
)
from .measurement import (
    ApparatusCoefficients,
    DecayMatrix,
    MeasurementBasis,
    ProbabilityVector,
    basis_from_vectors,
    born_collapse,
    certify,
    class_collapse,
    closed_form_evolve,
    decay_matrix,
)
from .scenario_io import Scenario, builtin_scenarios, load_scenario, save_trajectory

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DensityMatrix",
    "Trajectory",
    "asymptotic_state",
    "integrate",
    "propagate_spectral",
    "von_neumann_entropy",
    "LindbladSystem",
    "SpectralMode",
    "Superoperator",
    "apply_liouvillian",
    "build_superoperator",
    "decay_gap",
    "eigenvalue_identity_check",
    "entropy_condition_defect",
    "spectrum",
    "ApparatusCoefficients",
    "DecayMatrix",
    "MeasurementBasis",
    "ProbabilityVector",
    "basis_from_vectors",
    "born_collapse",
    "certify",
    "class_collapse",
    "closed_form_evolve",
    "decay_matrix",
    "Scenario",
    "builtin_scenarios",
    "load_scenario",
    "save_trajectory",
]
