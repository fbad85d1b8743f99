"""Numerical study of relativistic and nonrelativistic Thomas-Fermi stars."""

from .errors import (
    ConfigError,
    CriticalMassExceeded,
    DomainError,
    FitDomainError,
    NonConvergenceError,
    ParameterError,
    SolverError,
    StarlabError,
    UnsupportedModelError,
)
from .model import INFINITY, DensityProfile, ModelParams, StarSolution
from .solver import SolverConfig, limit_rescale, picard_solve, solve_star, verify_c_scaling

__version__ = "0.1.0"

__all__ = [
    "INFINITY",
    "ConfigError",
    "CriticalMassExceeded",
    "DensityProfile",
    "DomainError",
    "FitDomainError",
    "ModelParams",
    "NonConvergenceError",
    "ParameterError",
    "SolverConfig",
    "SolverError",
    "StarSolution",
    "StarlabError",
    "UnsupportedModelError",
    "limit_rescale",
    "picard_solve",
    "solve_star",
    "verify_c_scaling",
]
