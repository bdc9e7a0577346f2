"""Exception hierarchy for specflow.

All errors derive from ValueError so callers that only know about bad
inputs keep working; the CLI maps each class to an exit code.
"""

from __future__ import annotations

from typing import Optional


class SpecflowError(ValueError):
    """Base class for every error raised by the library."""


class InsufficientQuotients(SpecflowError):
    """The partial-quotient stream cannot supply the requested terms."""


class PrecisionExhausted(SpecflowError):
    """A comparison could not be decided at the working precision."""

    def __init__(self, message: str, value=None, error_bound=None, precision_bits: Optional[int] = None):
        super().__init__(message)
        self.value = value
        self.error_bound = error_bound
        self.precision_bits = precision_bits


class NonHermitianCoefficients(SpecflowError):
    """Roof coefficients do not describe a real-valued function."""


class InvalidRoof(SpecflowError):
    """A roof constructor precondition does not hold."""


class ReductionRefused(SpecflowError):
    """A coboundary reduction was requested without its hypotheses."""


class PlanError(SpecflowError):
    """A Birkhoff plan cannot be built at the requested horizon."""

    def __init__(self, message: str, hint: str = ""):
        super().__init__(message)
        self.hint = hint


class ConfigError(SpecflowError):
    """Malformed experiment configuration."""


class InvalidQuotients(SpecflowError):
    """A partial quotient (or a growth rule output) is out of range."""
