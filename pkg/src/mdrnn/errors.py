"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/configuration problems exit 1,
data and file-format problems exit 2, numerical failures exit 3.
"""


class MdrnnError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MdrnnError):
    """Inconsistent widths, shapes, or option values."""


class DataError(MdrnnError):
    """Bad dataset contents (labels out of range, unknown colors, empty sets)."""


class FormatError(DataError):
    """Malformed binary file. `offset` is the byte position of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class TrainingError(MdrnnError):
    """Numerical failure during optimization (non-finite loss or gradients)."""
