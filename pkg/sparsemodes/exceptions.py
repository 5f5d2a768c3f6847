"""Exceptions and warnings raised by sparse-modes."""


class SparseModesError(Exception):
    """Base class for all sparse-modes errors."""


class ValidationError(SparseModesError, ValueError):
    """
    Invalid input or configuration.

    Accepts either a plain message or a mapping of field name to message,
    the latter being available as ``message_dict``.
    """

    def __init__(self, message):
        if isinstance(message, dict):
            self.message_dict = dict(message)
            message = "; ".join(f"{field}: {msg}" for field, msg in self.message_dict.items())
        else:
            self.message_dict = {}
        super().__init__(message)


class DimensionMismatch(ValidationError):
    pass


class NonFiniteEntry(ValidationError):
    pass


class InvalidShape(ValidationError):
    pass


class EmptyInterval(ValidationError):
    pass


class InvalidBlockSpec(ValidationError):
    pass


class InvalidWaveformShape(ValidationError):
    pass


class IndexOutOfRange(SparseModesError, IndexError):
    pass


class DegenerateData(SparseModesError):
    pass


class DegenerateGamma(SparseModesError):
    pass


class EmptyChain(SparseModesError):
    pass


class NumericalUnderflow(SparseModesError, ArithmeticError):
    pass


class MaxIterationsExceeded(UserWarning):
    """An iterative solver stopped at its iteration cap; the best iterate is returned."""


class DegenerateVariance(UserWarning):
    """A sampled coordinate has zero variance; its correlations are reported as 0."""
