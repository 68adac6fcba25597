"""Exception types shared across the package.

The CLI maps ValidationError to exit status 1 and NumericalError to exit
status 2, so new error types should subclass whichever of the two fits.
"""
from __future__ import annotations


class MibvpError(Exception):
    """Base class for all package errors."""


class ValidationError(MibvpError):
    """Bad configuration, expression, or out-of-domain input."""


class ExpressionError(ValidationError):
    """Expression text failed to parse or referenced an unknown name."""


class NumericalError(MibvpError):
    """A numerical procedure failed."""


class DegenerateKernelError(NumericalError):
    """The kernel normalization is too close to zero (resonant shift)."""


class DivergenceError(NumericalError):
    """An iterate left the inflated initial bracket."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class OracleError(NumericalError):
    """The finite-difference reference solver failed."""
