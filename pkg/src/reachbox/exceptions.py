"""Exception hierarchy shared across the package."""


class ReachboxError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(ReachboxError):
    """Operands have incompatible shapes or dimensions."""


class DomainError(ReachboxError):
    """An evaluation left the mathematical domain of an operation."""


class ExprSyntaxError(ReachboxError):
    """Expression source failed to parse."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ConvergenceError(ReachboxError):
    """A truncated series or iteration failed its convergence precondition."""


class DivergenceError(ReachboxError):
    """A trajectory produced non-finite state."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class CapabilityError(ReachboxError):
    """A method was requested without the system data it requires."""


class SoundnessError(ReachboxError):
    """A method produced an internally inconsistent result.

    Usually indicates that user-supplied capability data (contraction matrix,
    Jacobian or sensitivity bounds) does not actually hold for the system.
    """


class InputError(ReachboxError):
    """A problem document or CLI input is malformed."""


class SoundnessWarning(UserWarning):
    """A self-check found evidence that capability data may be unsound."""
