"""Finite-trace semantics workbench for a small recursive imperative language."""

__version__ = "0.1.0"

from .parser import parse_formula, parse_program, parse_statement  # noqa: E402
from .syntax import show_formula, show_program, show_stmt  # noqa: E402
from .traces import Bounds  # noqa: E402

__all__ = [
    "Bounds", "parse_formula", "parse_program", "parse_statement",
    "show_formula", "show_program", "show_stmt",
]
