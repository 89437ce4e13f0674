"""Common exception types."""


class TaxonormError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TaxonormError):
    """Malformed input row; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
