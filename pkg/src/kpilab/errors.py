"""Exception types shared across the package."""

from __future__ import annotations


class KPILabError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(KPILabError, ValueError):
    """A scalar argument is outside its admissible range."""


class DimensionError(KPILabError, ValueError):
    """Array shape or grid dimensionality does not match the operation."""


class ConstraintError(KPILabError, ValueError):
    """A field violates a structural constraint (for example nonzero x-mean)."""


class TruncationError(KPILabError, ValueError):
    """The grid frequency window is too small for the requested object.

    Carries ``required_nx`` with the smallest admissible sample count.
    """

    def __init__(self, message: str, required_nx: int | None = None):
        super().__init__(message)
        self.required_nx = required_nx


class NumericalConsistencyError(KPILabError, RuntimeError):
    """An internal cross-check failed beyond its tolerance (CLI exit code 3)."""


class NonConvergenceError(KPILabError, RuntimeError):
    """Iterative solve stagnated. Carries the residual history."""

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class ConfigError(KPILabError, ValueError):
    """Malformed experiment configuration (CLI exit code 2)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
