"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError (and
OSError) -> 2, anything else that escapes -> 3.
"""


class Error(Exception):
    """Base class for all package errors."""


class ConfigError(Error):
    """Bad configuration file or unusable option value."""


class DataError(Error):
    """Input data that cannot be used (files, rows, labels, URLs)."""


class MalformedUrl(DataError):
    """URL string from which no hostname can be identified."""


class SchemaError(DataError):
    """CSV file whose header or row shape is wrong."""


class LabelError(DataError):
    """Label outside the binary {0, 1} convention."""


class EmptyAfterCleaning(DataError):
    """Preprocessing removed every record."""


class ArgError(Error, ValueError):
    """Argument outside its documented domain."""


class RateError(ArgError):
    """Poison rate outside [0, 1]."""


class RatioError(ArgError):
    """Split ratio outside (0, 1)."""


class KError(ArgError):
    """Neighbor count that is even, < 1, or larger than the reference allows."""


class DimensionError(ArgError):
    """Vector or matrix whose shape disagrees with the model or dataset."""


class LengthError(ArgError):
    """Paired vectors of unequal or zero length."""


class EmptyMatrixError(ArgError):
    """Confusion matrix with no counted samples."""


class InvariantError(Error):
    """Internal consistency check failed; indicates a bug, not bad input."""
