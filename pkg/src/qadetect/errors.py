"""Exception hierarchy. The CLI maps each family to an exit code."""


class QadError(Exception):
    exit_code = 1


class ConfigurationError(QadError, ValueError):
    """Invalid circuit, qubit index, or experiment configuration."""

    exit_code = 2


class UsageError(QadError, ValueError):
    """A function was called with mismatched or unsupported arguments."""

    exit_code = 2


class DataError(QadError, ValueError):
    """Input data cannot be processed (e.g. an all-zero image)."""

    exit_code = 3


class FormatError(DataError):
    """A file on disk does not follow its declared format."""


class NumericError(QadError, ArithmeticError):
    """A computation produced a non-finite value."""

    exit_code = 4
