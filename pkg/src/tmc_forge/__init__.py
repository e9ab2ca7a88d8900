"""Tail-modulo-cons transformation workbench for a small first-order language."""

from .ir import Program, well_formed
from .surface import ParseError, parse_program, print_program
from .transform import TransformError, transform_program

__all__ = [
    "ParseError",
    "Program",
    "TransformError",
    "parse_program",
    "print_program",
    "transform_program",
    "well_formed",
]
