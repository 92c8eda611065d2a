"""Exception types shared across the package.

The CLI and service map these onto stable exit codes / error kinds:
usage -> 2, parse -> 3, invariant -> 4, tolerance -> 5.
"""


class GlroughError(Exception):
    """Base class for package errors."""

    kind = "error"


class DomainError(GlroughError, ValueError):
    """An operation was called outside its stated precondition."""

    kind = "usage"


class ParseError(GlroughError, ValueError):
    """Text input did not match the grammar.  Carries a 0-based position."""

    kind = "parse"

    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text!r}")


class InvariantViolation(GlroughError, ValueError):
    """A loaded artifact or constructed value failed an invariant check."""

    kind = "invariant"


class ToleranceError(GlroughError, ValueError):
    """A numerical check command exceeded its tolerance."""

    kind = "tolerance"
