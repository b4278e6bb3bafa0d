"""Exception types shared across the package."""


class TextRkmError(Exception):
    """Base class for all package-specific errors."""


class DataError(TextRkmError):
    """Bad input data: missing paths, malformed files, impossible splits."""


class InvariantError(TextRkmError):
    """An internal consistency check failed; indicates a bug, not bad input."""
