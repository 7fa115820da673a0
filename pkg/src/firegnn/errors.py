"""Shared exception types.

ValidationError covers bad arguments, violated invariants, and config
problems (CLI exit code 1). FormatError covers unreadable or malformed
files (CLI exit code 2).
"""


class ValidationError(ValueError):
    pass


class ShapeError(ValidationError):
    pass


class FormatError(RuntimeError):
    pass
