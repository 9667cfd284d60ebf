"""Exception types raised by the package."""


class Error(Exception):
    """Base class for all package errors."""


class ConfigError(Error):
    """Invalid configuration value or combination."""


class UnsupportedConfigurationError(ConfigError):
    """Configuration is well-formed but not supported by the requested operation."""


class DataError(Error):
    """Input data violates a precondition (empty class, missing labels, ...)."""


class SparseFormatError(Error):
    """Malformed sparse text input.

    ``line_number`` is 1-based; ``None`` for file-level problems.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"{message} at line {line_number}"
        super().__init__(message)
        self.line_number = line_number
