class UsageError(ValueError):
    """Raised when an operation is called outside its contract (mixed quantales,
    carrier mismatches, malformed input, ...)."""


class CapExceeded(UsageError):
    """An enumeration or iteration cap was hit before the answer was known."""
