"""Quantum predicates and the weakest (liberal) precondition transformers.

``wp`` and ``wlp`` follow the structure of the program; loops are the limits
of the monotone sequences started at ``0`` (wp, increasing) and ``I`` (wlp,
decreasing). ``wp_oracle`` reaches the same operator by a different road: it
builds the program's superoperator from denotations of a spanning family of
density operators and takes its adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from qwhile.config import DEFAULT_CONFIG, EvalConfig
from qwhile.errors import DimensionError
from qwhile.lang import ast
from qwhile.linalg import (
    SpaceShape,
    conjugate_adjoint,
    embed,
    hermitian_part,
    is_hermitian,
    loewner_leq,
    max_abs,
)
from qwhile.semantics import LoopStats, denote_matrix, init_adjoint


@dataclass
class FixpointReport:
    loops: int = 0
    iterations: int = 0
    max_iterations: int = 0
    unconverged: int = 0
    max_delta: float = 0.0

    @property
    def converged(self) -> bool:
        return self.unconverged == 0

    def merge(self, other: "FixpointReport"):
        self.loops += other.loops
        self.iterations += other.iterations
        self.max_iterations = max(self.max_iterations, other.max_iterations)
        self.unconverged += other.unconverged
        self.max_delta = max(self.max_delta, other.max_delta)

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "loops_evaluated": self.loops,
            "iterations": self.iterations,
            "max_iterations": self.max_iterations,
            "unconverged_loops": self.unconverged,
            "max_delta": self.max_delta,
        }


@dataclass(frozen=True, eq=False)
class QuantumPredicate:
    matrix: np.ndarray
    shape: SpaceShape
    report: Optional[FixpointReport] = field(default=None, compare=False)

    def __post_init__(self):
        d = self.shape.total_dim
        if self.matrix.shape != (d, d):
            raise DimensionError(f"predicate of shape {self.matrix.shape} on a space of dimension {d}")

    @classmethod
    def on(cls, local: np.ndarray, register: Sequence[str], shape: SpaceShape) -> "QuantumPredicate":
        """Cylinder extension of a predicate given on a sub-register."""
        return cls(embed(local, register, shape), shape)

    @classmethod
    def identity(cls, shape: SpaceShape) -> "QuantumPredicate":
        return cls(np.eye(shape.total_dim, dtype=complex), shape)

    @classmethod
    def zero(cls, shape: SpaceShape) -> "QuantumPredicate":
        d = shape.total_dim
        return cls(np.zeros((d, d), dtype=complex), shape)

    def is_valid(self, tol: float = 1e-9) -> bool:
        eye = np.eye(self.shape.total_dim)
        return (is_hermitian(self.matrix, tol)
                and loewner_leq(np.zeros_like(eye), self.matrix, tol)
                and loewner_leq(self.matrix, eye, tol))

    def expectation(self, rho: np.ndarray) -> float:
        return float(np.trace(self.matrix @ rho).real)


# structural transformers

def _transform(s, p: np.ndarray, shape: SpaceShape, cfg: EvalConfig, liberal: bool,
               report: FixpointReport) -> np.ndarray:
    if isinstance(s, ast.Skip):
        return p
    if isinstance(s, ast.Init):
        return init_adjoint(p, s.var, shape)
    if isinstance(s, ast.Unitary):
        return conjugate_adjoint(s.matrix, s.register, p, shape)
    if isinstance(s, ast.Seq):
        inner = _transform(s.second, p, shape, cfg, liberal, report)
        return _transform(s.first, inner, shape, cfg, liberal, report)
    if isinstance(s, ast.Measure):
        total = np.zeros_like(p)
        for (_, arm), op in zip(s.arms, s.ops):
            arm_pre = _transform(arm, p, shape, cfg, liberal, report)
            total = total + conjugate_adjoint(op, s.register, arm_pre, shape)
        return total
    if isinstance(s, ast.While):
        return loop_fixpoint(s, p, shape, cfg, liberal, report)[0]
    raise TypeError(f"not a program node: {s!r}")


def loop_step(s: ast.While, p: np.ndarray, x: np.ndarray, shape: SpaceShape, cfg: EvalConfig,
              liberal: bool, report: FixpointReport) -> np.ndarray:
    """One application of ``X ↦ M0† P M0 + M1† T(body, X) M1``."""
    m0, m1 = s.ops
    exit_part = conjugate_adjoint(m0, s.register, p, shape)
    body_pre = _transform(s.body, x, shape, cfg, liberal, report)
    return exit_part + conjugate_adjoint(m1, s.register, body_pre, shape)


def loop_fixpoint(s: ast.While, p: np.ndarray, shape: SpaceShape, cfg: EvalConfig,
                  liberal: bool, report: FixpointReport) -> tuple[np.ndarray, bool]:
    m0, m1 = s.ops
    exit_part = conjugate_adjoint(m0, s.register, p, shape)
    d = shape.total_dim
    x = np.eye(d, dtype=complex) if liberal else np.zeros((d, d), dtype=complex)
    inner = FixpointReport()
    converged = False
    n = 0
    delta = 0.0
    while n < cfg.max_iter:
        body_pre = _transform(s.body, x, shape, cfg, liberal, inner)
        nxt = exit_part + conjugate_adjoint(m1, s.register, body_pre, shape)
        n += 1
        delta = max_abs(nxt - x)
        x = nxt
        if delta < cfg.tol_fix:
            converged = True
            break
    # inner loops are re-evaluated every outer iteration; count their work once per pass
    report.loops += 1
    report.iterations += n + inner.iterations
    report.max_iterations = max(report.max_iterations, n, inner.max_iterations)
    report.max_delta = max(report.max_delta, inner.max_delta, 0.0 if converged else delta)
    if inner.unconverged:
        report.unconverged += 1
    if not converged:
        report.unconverged += 1
    return x, converged


def transform_matrix(s: ast.Program, p: np.ndarray, shape: SpaceShape, cfg: EvalConfig = DEFAULT_CONFIG,
                     liberal: bool = False, report: Optional[FixpointReport] = None) -> np.ndarray:
    return _transform(s, p, shape, cfg, liberal, report if report is not None else FixpointReport())


def _finish(s, p: QuantumPredicate, cfg: EvalConfig, liberal: bool) -> QuantumPredicate:
    report = FixpointReport()
    out = _transform(s, p.matrix, p.shape, cfg, liberal, report)
    return QuantumPredicate(hermitian_part(out), p.shape, report)


def wp(s: ast.Program, p: QuantumPredicate, cfg: EvalConfig = DEFAULT_CONFIG) -> QuantumPredicate:
    """Weakest precondition. An unconverged loop yields an under-approximation."""
    return _finish(s, p, cfg, liberal=False)


def wlp(s: ast.Program, p: QuantumPredicate, cfg: EvalConfig = DEFAULT_CONFIG) -> QuantumPredicate:
    """Weakest liberal precondition. An unconverged loop yields an over-approximation."""
    return _finish(s, p, cfg, liberal=True)


# superoperator oracle

def spanning_family(dim: int) -> list[tuple[str, int, int, np.ndarray]]:
    """Density operators spanning all Hermitian ``dim x dim`` matrices.

    ``|i><i|``, then for ``i < j`` the projectors onto ``(|i>+|j>)/√2`` and
    ``(|i>+i|j>)/√2``. Entries are ``(kind, i, j, matrix)``.
    """
    out = []
    for i in range(dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[i, i] = 1.0
        out.append(("diag", i, i, m))
    for i in range(dim):
        for j in range(i + 1, dim):
            v = np.zeros(dim, dtype=complex)
            v[i], v[j] = 1.0, 1.0
            out.append(("re", i, j, np.outer(v, v.conj()) / 2))
            w = np.zeros(dim, dtype=complex)
            w[i], w[j] = 1.0, 1j
            out.append(("im", i, j, np.outer(w, w.conj()) / 2))
    return out


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation."""
    return a.reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return v.reshape((dim, dim), order="F")


@dataclass(frozen=True, eq=False)
class SuperOperatorMatrix:
    matrix: np.ndarray  # d² x d², acts on column-stacked operators
    shape: SpaceShape
    residual: float = 0.0

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.shape.total_dim
        return unvec(self.matrix @ vec(rho), d)

    def adjoint_apply(self, p: np.ndarray) -> np.ndarray:
        d = self.shape.total_dim
        return unvec(self.matrix.conj().T @ vec(p), d)


def superoperator_of(fn: Callable[[np.ndarray], np.ndarray], shape: SpaceShape,
                     cap: int = DEFAULT_CONFIG.oracle_cap) -> np.ndarray:
    """Matrix of a linear map known only on density operators.

    ``fn`` is evaluated on the spanning family; images of the matrix units
    ``|i><j|`` follow by linearity.
    """
    d = shape.total_dim
    if d > cap:
        raise DimensionError(f"superoperator of a {d}-dimensional space exceeds oracle cap {cap}")
    diag = {}
    re_, im_ = {}, {}
    for kind, i, j, rho in spanning_family(d):
        img = fn(rho)
        {"diag": diag, "re": re_, "im": im_}[kind][(i, j)] = img
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        out[:, i + i * d] = vec(diag[(i, i)])
    for i in range(d):
        for j in range(i + 1, d):
            base = diag[(i, i)] + diag[(j, j)]
            x = 2 * re_[(i, j)] - base  # image of |i><j| + |j><i|
            y = 2 * im_[(i, j)] - base  # image of -i|i><j| + i|j><i|
            out[:, i + j * d] = vec((x + 1j * y) / 2)
            out[:, j + i * d] = vec((x - 1j * y) / 2)
    return out


def build_superoperator(s: ast.Program, shape: SpaceShape,
                        cfg: EvalConfig = DEFAULT_CONFIG) -> SuperOperatorMatrix:
    stats = LoopStats()
    mat = superoperator_of(lambda rho: denote_matrix(s, rho, shape, cfg, stats), shape, cfg.oracle_cap)
    return SuperOperatorMatrix(mat, shape, stats.residual)


def wp_oracle(s: ast.Program, p: QuantumPredicate, cfg: EvalConfig = DEFAULT_CONFIG) -> QuantumPredicate:
    """Adjoint of the program's superoperator applied to ``p``."""
    sop = build_superoperator(s, p.shape, cfg)
    return QuantumPredicate(hermitian_part(sop.adjoint_apply(p.matrix)), p.shape)
