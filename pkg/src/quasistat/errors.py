"""Exception hierarchy shared by all quasistat modules."""

from __future__ import annotations


class QuasistatError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(QuasistatError, ValueError):
    """Input vectors do not match the system's declared dimensions."""


class EvaluationError(QuasistatError, ArithmeticError):
    """A potential evaluation produced non-finite values."""


class NonConvergence(QuasistatError):
    """Newton iteration did not reach the requested tolerance.

    The last iterate and its residual are kept so callers can inspect
    how far the solver got.
    """

    def __init__(self, message: str, z_last=None, residual: float = float("nan")):
        super().__init__(message)
        self.z_last = z_last
        self.residual = residual


class SingularJacobian(QuasistatError, ArithmeticError):
    """The internal-state Hessian could not be factorized."""


class CriticalControl(QuasistatError, ValueError):
    """Control sits on the critical point of an analytic model."""


class DegenerateBoundary(QuasistatError, ValueError):
    """Boundary data of the Euler-Lagrange problem is not solvable."""


class InvalidPath(QuasistatError, ValueError):
    """A discrete path has too few points."""


class InvalidBounds(QuasistatError, ValueError):
    """Grid bounds or resolution are degenerate."""


class NoPath(QuasistatError):
    """The goal node cannot be reached from the start node."""

    def __init__(self, message: str, reachable: int = 0):
        super().__init__(message)
        self.reachable = reachable


class ConfigError(QuasistatError, ValueError):
    """Configuration file or option failed validation."""
