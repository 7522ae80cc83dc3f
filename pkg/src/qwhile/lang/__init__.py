"""Syntax, typing and static analysis of quantum while-programs."""

from qwhile.lang.ast import (
    Init,
    Measure,
    Program,
    Seq,
    Skip,
    SourceUnit,
    Unitary,
    While,
    children,
    free_vars,
    seq,
    subprogram,
    walk,
)
from qwhile.lang.parser import parse, parse_file
from qwhile.lang.printer import format_program, format_unit
from qwhile.lang.typecheck import Diagnostic, TypedUnit, typecheck


def load(path, cfg=None) -> TypedUnit:
    """Parse and typecheck a ``.qw`` file."""
    from qwhile.config import DEFAULT_CONFIG

    return typecheck(parse_file(path), cfg or DEFAULT_CONFIG)


def loads(text: str, cfg=None) -> TypedUnit:
    from qwhile.config import DEFAULT_CONFIG

    return typecheck(parse(text), cfg or DEFAULT_CONFIG)


__all__ = [
    "Skip", "Init", "Unitary", "Seq", "Measure", "While", "Program", "SourceUnit",
    "children", "free_vars", "seq", "subprogram", "walk",
    "parse", "parse_file", "format_program", "format_unit",
    "Diagnostic", "TypedUnit", "typecheck", "load", "loads",
]
