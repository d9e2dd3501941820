"""Exception hierarchy.

Everything raised on bad input derives from :class:`ValidationError`;
everything raised because a computation went numerically wrong derives
from :class:`NumericalError`.  The command line maps the two families onto
different exit codes.
"""


class JumpEntropyError(Exception):
    """Base class for all package errors."""


class ValidationError(JumpEntropyError, ValueError):
    """Invalid input: shapes, Hermiticity, parameter ranges."""


class ModelValidationError(ValidationError):
    """A Lindblad model failed one of its structural checks."""


class InvalidStateError(ValidationError):
    """A density matrix or state vector is not physical."""


class NumericalError(JumpEntropyError, RuntimeError):
    """A numerical procedure failed."""


class IntegrationError(NumericalError):
    """Master-equation integration lost positivity (step too large)."""


class NoStationaryStateError(NumericalError):
    """Long-time integration did not settle within the time cap."""


class StepSizeError(NumericalError):
    """Trajectory step too large for the jump scheme."""


class ImpossibleJumpError(NumericalError):
    """A jump was requested onto a zero-norm target."""
