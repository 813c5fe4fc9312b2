"""Exception types raised by the toolkit."""


class URAError(Exception):
    """Base class for all toolkit errors."""


class InvalidDimensionsError(URAError, ValueError):
    pass


class InvalidParameterError(URAError, ValueError):
    pass


class InvalidAllocationError(URAError, ValueError):
    pass


class BudgetExceededError(URAError, RuntimeError):
    """An oracle was asked to work beyond its enforced size caps."""


class ConfigError(URAError, ValueError):
    pass


class TableParseError(URAError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(URAError, ValueError):
    """A binary file does not follow the expected layout."""
