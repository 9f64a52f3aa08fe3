"""Exception hierarchy shared by all reinsopt modules."""


class ReinsoptError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ReinsoptError):
    """A file could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ReinsoptError):
    """An input value violates a documented invariant."""


class GridError(ReinsoptError):
    """An attachment or limit does not lie on the store's threshold grid."""


class ConfigurationError(ReinsoptError):
    """A run configuration is inconsistent or infeasible."""
