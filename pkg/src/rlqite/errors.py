"""Exception types shared across the package."""


class RlqiteError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(RlqiteError):
    """An argument violates a documented precondition."""


class CapacityExceededError(RlqiteError):
    """Problem size exceeds the dense-simulation limits."""


class DegenerateInputError(RlqiteError):
    """Input has no usable overlap with the requested target."""


class InternalInconsistencyError(RlqiteError):
    """A quantity that must be real/consistent came out otherwise."""


class StepIntervalTooLargeError(RlqiteError):
    """The first-order norm estimate went non-positive in strict mode."""


class ParseError(RlqiteError):
    """A schedule table or config file could not be parsed."""


class LoadError(RlqiteError):
    """A checkpoint file is missing, truncated, or version-incompatible."""


class NumericError(RlqiteError):
    """A non-finite value appeared where finite math was required."""


class NotConvergedError(RlqiteError):
    """An iterative solver exhausted its budget without bracketing."""


class InvalidStateError(RlqiteError):
    """An operation was called in a state that forbids it."""
