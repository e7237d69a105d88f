"""Exception types shared across the package."""


class CatgainError(Exception):
    """Base class for all package errors."""


class SchemaError(CatgainError, ValueError):
    """A record, file, or model does not conform to the feature schema."""


class EncodingError(CatgainError, ValueError):
    """Invalid input to an encode/fuzzify/decode operation."""


class DataParseError(CatgainError, ValueError):
    """Malformed cell in a data file; carries the offending location."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{', '.join(loc)}: {message}" if loc else message)
        self.row = row
        self.column = column


class ConfigError(CatgainError, ValueError):
    """Invalid run configuration (unknown key, out-of-range value, ...)."""


class NumericError(CatgainError, RuntimeError):
    """A numeric routine failed to converge or produced non-finite values."""


class DivergenceError(NumericError):
    """Training produced a non-finite loss or gradient.

    Carries the epoch at which it happened and the loss trace recorded so far.
    """

    def __init__(self, message: str, epoch: int, trace=None):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch
        self.trace = trace
