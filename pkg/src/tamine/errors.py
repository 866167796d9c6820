"""Exception hierarchy shared by every stage of the pipeline."""


class TamineError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TamineError):
    """A configuration or library file could not be parsed."""


class ValidationError(TamineError):
    """A parsed object violates one of its invariants."""


class ConfigError(TamineError):
    """Mining or skyline thresholds are inconsistent."""


class FormatError(TamineError):
    """A data file row is malformed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyLibraryError(TamineError):
    """Skyline detection was requested with no normal patterns."""


class UnknownFactWarning(UserWarning):
    """A library pattern refers to a fact the item-list database never saw."""
