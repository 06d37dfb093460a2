"""
Exceptions raised by hessenv.

Everything derives from :class:`HessenvError`. Input problems (bad parameters,
points outside a cone, mismatched grids, bad config) are :class:`DomainError`
and map to exit code 2 in the CLI; solver failures map to exit code 3.
"""

from typing import Any


class HessenvError(Exception):
    """Base class for all hessenv errors."""


class DomainError(HessenvError, ValueError):
    """An argument is outside the domain of the operation."""


class ConeViolation(DomainError):
    """An eigenvalue vector is not strictly inside the required cone."""

    def __init__(
        self,
        message: str,
        inequality: str,
        margin: float,
        witness: tuple[int, ...] | None = None,
    ):
        super().__init__(message)
        self.inequality = inequality
        self.margin = margin
        self.witness = witness

    def to_dict(self) -> dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "inequality": self.inequality,
            "margin": self.margin,
            "witness": list(self.witness) if self.witness is not None else None,
        }


class GridMismatch(DomainError):
    """Fields passed together live on different grids."""


class ConfigError(DomainError):
    """A run configuration failed to parse or validate."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class InsufficientData(DomainError):
    """Not enough samples (e.g. penalization rungs) for a fit."""


class DivergenceError(HessenvError):
    """Newton iterate left the cone and damping could not bring it back."""

    def __init__(self, message: str, witness: tuple[int, ...] | None, report=None):
        super().__init__(message)
        self.witness = witness
        self.report = report


class NonConvergenceError(HessenvError):
    """An iteration exhausted its budget before reaching the tolerance."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
