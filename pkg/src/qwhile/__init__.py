"""Verification toolchain for quantum while-programs.

Programs act on density operators over the tensor product of their declared
variables. The package provides the operational and denotational semantics,
weakest (liberal) precondition transformers, semantic Hoare-triple checks and a
checker for proof scripts in the partial and total correctness calculi.
"""

from qwhile.config import EvalConfig
from qwhile.errors import (
    DimensionError,
    FormatError,
    ParseError,
    ProofScriptError,
    QWhileError,
    TypeCheckError,
)
from qwhile.linalg import SpaceShape

__all__ = [
    "EvalConfig",
    "SpaceShape",
    "QWhileError",
    "DimensionError",
    "FormatError",
    "ParseError",
    "TypeCheckError",
    "ProofScriptError",
]

__version__ = "0.1.0"
