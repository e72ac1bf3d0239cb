"""Exception types shared across the library.

The CLI maps these onto exit codes: config errors -> 1, data errors -> 2,
numerical failures -> 3.
"""


class DimensionError(ValueError):
    """Tensor/layer shape mismatch."""


class DataFormatError(ValueError):
    """A dataset file does not match its published binary format."""


class StateError(RuntimeError):
    """An operation was called in an invalid order (e.g. backward twice)."""


class NumericalError(ArithmeticError):
    """Training produced a non-finite loss or similar numerical failure."""


class ConfigError(ValueError):
    """An experiment configuration is invalid or unsupported."""
