"""Exception hierarchy for solver, data and configuration failures."""
from typing import Optional


class UCWhittleError(Exception):
    """Base class for all package errors."""


class ConvergenceError(UCWhittleError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, residual: float, iterations: int, message: Optional[str] = None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            message or f"no convergence after {iterations} iterations (residual={residual:.3e})"
        )


class BracketError(UCWhittleError):
    """The index search interval does not bracket a sign change of the action gap."""

    def __init__(self, lower_gap: float, upper_gap: float):
        self.lower_gap = lower_gap
        self.upper_gap = upper_gap
        super().__init__(
            f"gap has the same sign at both ends of the search interval "
            f"(lower={lower_gap:.6f}, upper={upper_gap:.6f}); arm may be non-indexable"
        )


class DatasetSchemaError(UCWhittleError):
    """A dataset row failed schema or validity checks."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class ConfigError(UCWhittleError):
    """An experiment configuration could not be loaded or validated."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")
