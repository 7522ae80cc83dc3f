from __future__ import annotations


class QWhileError(Exception):
    """Base class of all errors raised by the toolchain."""


class DimensionError(QWhileError, ValueError):
    """Operator and space dimensions do not fit together."""


class FormatError(QWhileError, ValueError):
    """A JSON matrix, state, predicate or proof file is malformed."""


class ParseError(QWhileError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class TypeCheckError(QWhileError):
    """Raised with every diagnostic found while typechecking a unit."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.message for d in self.diagnostics))


class ProofScriptError(QWhileError):
    """Structural problem in a proof script (cycle, dangling premise, bad path)."""
