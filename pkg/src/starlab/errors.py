"""Exception hierarchy shared by the kernel, the solvers and the CLI."""

from __future__ import annotations


class StarlabError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(StarlabError, ValueError):
    """Invalid model or configuration parameters."""


class ConfigError(StarlabError, ValueError):
    """Invalid run configuration (bad keys, ladders, spans, tolerances)."""


class DomainError(StarlabError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedModelError(StarlabError):
    """The operation has no meaning for the selected model (finite c vs limit)."""


class SolverError(StarlabError):
    """Base class for failures while computing a minimizer."""


class NoBoundaryError(SolverError):
    """Shooting never reached u = 0 before the safeguard radius."""


class StiffnessError(SolverError):
    """The ODE integrator failed (step-size underflow or similar)."""


class BracketError(SolverError):
    """The outer root find could not bracket the target."""


class NonConvergenceError(SolverError):
    """Fixed-point iteration stalled or oscillated."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class CriticalMassExceeded(SolverError):
    """Target mass is at or above the collapse threshold of the finite-c model.

    ``largest_mass`` is the largest mass reached by the solver and is a lower
    estimate of the threshold.
    """

    def __init__(self, message: str, largest_mass: float):
        super().__init__(message)
        self.largest_mass = largest_mass


class FitDomainError(StarlabError, ValueError):
    """A power-law fit was asked for data it cannot handle."""
