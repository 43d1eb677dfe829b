"""Exception hierarchy; the CLI maps each class to an exit code."""
from __future__ import annotations


class TracelabError(Exception):
    pass


class ParseError(TracelabError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class WellFormednessError(TracelabError):
    """Syntactically valid input that violates a static requirement."""


class RestrictionError(WellFormednessError):
    """A formula outside the fragment an operation accepts."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


class SemanticsError(TracelabError):
    """A statement or formula an evaluator cannot interpret (missing binding and so on)."""


class BoundsInsufficient(TracelabError):
    """The configured budget could not establish a verdict."""
