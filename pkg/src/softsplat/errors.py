"""Exception hierarchy for the softsplat package.

Every error raised deliberately by this package derives from SplatError, so
callers can catch one type at the boundary.  The concrete classes also derive
from the closest builtin (ValueError / RuntimeError) to stay friendly to
generic handlers.
"""


class SplatError(Exception):
    """Base class for all errors raised by softsplat."""


class InvalidArgumentError(SplatError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class FormatError(SplatError, ValueError):
    """A file being read is malformed or uses an unsupported variant."""


class AmbiguousInputError(SplatError, ValueError):
    """The requested operation has no unique answer for this input."""


class InternalError(SplatError, RuntimeError):
    """An internal invariant broke; the message carries diagnostics."""
