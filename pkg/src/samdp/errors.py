"""Exception types shared across the toolkit.

All user-input and data-validation failures derive from SamdpError so the
CLI can map them to exit code 2; anything else is an internal error (exit 1).
"""


class SamdpError(Exception):
    """Base class for all toolkit errors caused by bad input or bad data."""


class ParseError(SamdpError):
    """A file did not parse under its documented format.

    Carries the 1-based line number where parsing failed.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(SamdpError):
    """Parsed data violates a dataset or model invariant."""
