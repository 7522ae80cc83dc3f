"""Dense complex matrix kernel.

Operators on the global space are plain ``numpy`` arrays of complex dtype. The
global space is the tensor product of the declared variables in declaration
order, the first variable being the most significant index (the ``np.kron``
convention).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from qwhile.config import DEFAULT_CONFIG
from qwhile.errors import DimensionError

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SpaceShape:
    """Ordered ``(variable, dimension)`` factors of a tensor-product space."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.factors]
        if len(set(names)) != len(names):
            raise DimensionError(f"duplicate variable in shape: {names}")
        for name, dim in self.factors:
            if not isinstance(dim, (int, np.integer)) or dim < 2:
                raise DimensionError(f"variable {name!r} has dimension {dim}; need >= 2")

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "SpaceShape":
        return cls(tuple((str(n), int(d)) for n, d in pairs))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DimensionError(f"unknown variable {name!r}") from None

    def dim_of(self, name: str) -> int:
        return self.factors[self.index(name)][1]

    def register_dim(self, register: Iterable[str]) -> int:
        return int(np.prod([self.dim_of(q) for q in register], dtype=np.int64))

    def restrict(self, keep: Iterable[str]) -> "SpaceShape":
        keep = set(keep)
        return SpaceShape(tuple(f for f in self.factors if f[0] in keep))

    def to_json(self) -> list:
        return [[n, d] for n, d in self.factors]


def check_cap(dim: int, cap: int | None = None):
    cap = DEFAULT_CONFIG.dim_cap if cap is None else cap
    if dim > cap:
        raise DimensionError(f"total dimension {dim} exceeds cap {cap}")


def tensor(a: np.ndarray, b: np.ndarray, cap: int | None = None) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    check_cap(max(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]), cap)
    return np.kron(a, b)


def tensor_all(ops: Sequence[np.ndarray], cap: int | None = None) -> np.ndarray:
    return reduce(lambda x, y: tensor(x, y, cap), ops, np.ones((1, 1), dtype=complex))


def _register_axes(register: Sequence[str], shape: SpaceShape) -> list[int]:
    axes = [shape.index(q) for q in register]
    if len(set(axes)) != len(axes):
        raise DimensionError(f"register {list(register)} repeats a variable")
    return axes


def _check_local(op: np.ndarray, register: Sequence[str], shape: SpaceShape):
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError(f"operator must be square, got shape {op.shape}")
    want = shape.register_dim(register)
    if op.shape[0] != want:
        raise DimensionError(
            f"operator of dimension {op.shape[0]} applied to register "
            f"{list(register)} of dimension {want}"
        )


def embed(op: np.ndarray, register: Sequence[str], shape: SpaceShape,
          cap: int | None = None) -> np.ndarray:
    """Cylinder extension ``op ⊗ I`` of a register operator to the whole space.

    The register may list variables in any order; the tensor factors of
    ``op`` follow the register order, the result follows ``shape``.
    """
    op = np.asarray(op, dtype=complex)
    axes = _register_axes(register, shape)
    _check_local(op, register, shape)
    check_cap(shape.total_dim, cap)
    n = len(shape.factors)
    rest = [i for i in range(n) if i not in axes]
    rest_dim = int(np.prod([shape.dims[i] for i in rest], dtype=np.int64))
    full = np.kron(op, np.eye(rest_dim, dtype=complex))
    order = axes + rest
    dims = [shape.dims[i] for i in order]
    full = full.reshape(dims + dims)
    # axis k of the reshaped array is variable order[k]; undo that permutation
    inv = np.argsort(order)
    full = full.transpose(list(inv) + [n + i for i in inv])
    d = shape.total_dim
    return np.ascontiguousarray(full.reshape(d, d))


def apply_left(op: np.ndarray, register: Sequence[str], a: np.ndarray,
               shape: SpaceShape) -> np.ndarray:
    """``embed(op) @ a`` computed without forming the embedded operator."""
    axes = _register_axes(register, shape)
    n = len(shape.factors)
    k = len(axes)
    dims = list(shape.dims)
    reg_dims = [dims[i] for i in axes]
    t = a.reshape(dims + [a.shape[1]])
    o = op.reshape(reg_dims + reg_dims)
    t = np.tensordot(o, t, axes=(list(range(k, 2 * k)), axes))
    # result axes: register axes (in register order), remaining row axes, column
    rest = [i for i in range(n) if i not in axes]
    order = axes + rest
    t = np.moveaxis(t, list(range(n)), order)
    return t.reshape(a.shape)


def apply_right(a: np.ndarray, op: np.ndarray, register: Sequence[str],
                shape: SpaceShape) -> np.ndarray:
    """``a @ embed(op)``."""
    return apply_left(op.T, register, a.T, shape).T


def conjugate(op: np.ndarray, register: Sequence[str], a: np.ndarray,
              shape: SpaceShape) -> np.ndarray:
    """``E a E†`` with ``E`` the cylinder extension of ``op``."""
    left = apply_left(op, register, a, shape)
    return apply_right(left, op.conj().T, register, shape)


def conjugate_adjoint(op: np.ndarray, register: Sequence[str], a: np.ndarray,
                      shape: SpaceShape) -> np.ndarray:
    """``E† a E`` with ``E`` the cylinder extension of ``op``."""
    return conjugate(op.conj().T, register, a, shape)


def partial_trace(a: np.ndarray, traced: Iterable[str], shape: SpaceShape) -> np.ndarray:
    """Trace out ``traced``; the result acts on the remaining factors in shape order."""
    a = np.asarray(a)
    traced = set(traced)
    for q in traced:
        shape.index(q)
    d = shape.total_dim
    if a.shape != (d, d):
        raise DimensionError(f"operator of shape {a.shape} on space of dimension {d}")
    if not traced:
        return a.copy()
    t = a.reshape(list(shape.dims) * 2)
    # trace the highest axes first so lower indices stay valid
    for i in sorted((shape.index(q) for q in traced), reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    keep = shape.total_dim // shape.register_dim(traced)
    return t.reshape(keep, keep)


def _require_finite(a: np.ndarray):
    if not np.all(np.isfinite(a)):
        raise np.linalg.LinAlgError("matrix has non-finite entries")


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def is_hermitian(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"operator must be square, got shape {a.shape}")
    _require_finite(a)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def min_eigenvalue(a: np.ndarray) -> float:
    a = np.asarray(a)
    _require_finite(a)
    return float(np.linalg.eigvalsh(hermitian_part(a))[0])


def is_psd(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    if not is_hermitian(a, tol):
        return False
    return min_eigenvalue(a) >= -tol


def loewner_leq(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """``a ⊑ b`` in the Löwner order: ``b - a`` is positive semidefinite."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare shapes {a.shape} and {b.shape}")
    return is_psd(b - a, tol)


def loewner_gap(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Least eigenvalue of ``b - a`` and a unit eigenvector attaining it."""
    diff = hermitian_part(np.asarray(b) - np.asarray(a))
    _require_finite(diff)
    vals, vecs = np.linalg.eigh(diff)
    return float(vals[0]), vecs[:, 0]


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def is_unitary(u: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    u = np.asarray(u)
    return max_abs(u.conj().T @ u - np.eye(u.shape[0])) <= tol


def completeness_defect(ops: Iterable[np.ndarray]) -> float:
    """``‖Σ M†M − I‖_max`` of a family of measurement operators."""
    ops = list(ops)
    total = sum(m.conj().T @ m for m in ops)
    return max_abs(total - np.eye(ops[0].shape[0]))


def basis_projector(dim: int, k: int) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    out[k, k] = 1.0
    return out


def ket(dim: int, k: int) -> np.ndarray:
    out = np.zeros(dim, dtype=complex)
    out[k] = 1.0
    return out


def projector(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(vec, vec.conj())
