from __future__ import annotations

import re

import numpy as np

_S = 1 / np.sqrt(2)

FIXED_GATES = {
    "H": np.array([[_S, _S], [_S, -_S]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}

BUILTIN_NAMES = frozenset(FIXED_GATES) | {"I", "SHIFT"}

_SHIFT = re.compile(r"^SHIFT\((-?\d+)\)$")


def shift(dim: int, k: int) -> np.ndarray:
    """Cyclic k-translation ``|n> -> |n+k mod dim>``."""
    out = np.zeros((dim, dim), dtype=complex)
    for n in range(dim):
        out[(n + k) % dim, n] = 1.0
    return out


def shift_amount(gate: str):
    m = _SHIFT.match(gate)
    return int(m.group(1)) if m else None


def builtin_matrix(gate: str, dim: int):
    """Matrix of a builtin gate on a register of dimension ``dim``, or None."""
    if gate in FIXED_GATES:
        return FIXED_GATES[gate]
    if gate == "I":
        return np.eye(dim, dtype=complex)
    k = shift_amount(gate)
    if k is not None:
        return shift(dim, k)
    return None


def is_builtin(gate: str) -> bool:
    return gate in FIXED_GATES or gate == "I" or shift_amount(gate) is not None
