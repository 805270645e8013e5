"""Exception hierarchy.

Two families matter to callers: ``InputError`` (the request itself is bad,
CLI exit 2) and ``ConsistencyError`` (a numerical identity or theorem-backed
postcondition failed, CLI exit 3).  Everything else is a ``TminlagError``.
"""

from __future__ import annotations


class TminlagError(Exception):
    """Base class for all package errors."""


class InputError(TminlagError, ValueError):
    """Malformed or inconsistent user input (dimension mismatch, bad spec)."""


class UnsupportedInputError(InputError):
    """Input is well formed but outside what an operation supports."""


class DomainError(TminlagError, ValueError):
    """A point lies on or outside the polytope boundary."""

    def __init__(self, message: str, min_value: float | None = None):
        super().__init__(message)
        self.min_value = min_value


class ProfileDomainError(DomainError):
    """A profile function was evaluated outside its interval."""


class DegeneracyError(TminlagError, ArithmeticError):
    """The Hessian of the potential is not positive definite."""


class PreconditionError(TminlagError, ValueError):
    """An operation's precondition does not hold (e.g. point not critical)."""


class ConstructionError(TminlagError):
    """A metric construction could not satisfy its own requirements."""


class StiffnessError(TminlagError):
    """Adaptive integration collapsed its step size.

    ``partial`` carries whatever trajectory was accepted before the failure.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ConsistencyError(TminlagError):
    """An internal invariant or identity check failed."""

    def __init__(self, message: str, check: str = ""):
        super().__init__(message)
        self.check = check
