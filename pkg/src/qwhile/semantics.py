"""Operational and denotational semantics on partial density operators."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from qwhile.config import DEFAULT_CONFIG, EvalConfig
from qwhile.errors import DimensionError
from qwhile.lang import ast
from qwhile.linalg import SpaceShape, conjugate, is_psd, max_abs

# target states at or below this max-abs entry are discarded by the stepper
ZERO_STATE = 1e-15


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    shape: SpaceShape

    def __post_init__(self):
        d = self.shape.total_dim
        if self.matrix.shape != (d, d):
            raise DimensionError(f"state of shape {self.matrix.shape} on a space of dimension {d}")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def is_valid(self, tol: float = 1e-9) -> bool:
        return is_psd(self.matrix, tol) and self.trace <= 1 + tol

    def check(self, tol: float = 1e-9) -> "DensityOperator":
        if not self.is_valid(tol):
            raise ValueError("not a partial density operator (needs PSD with trace <= 1)")
        return self

    @classmethod
    def basis(cls, shape: SpaceShape, labels: dict | None = None) -> "DensityOperator":
        """Pure computational-basis state; unnamed variables are set to 0."""
        labels = labels or {}
        idx = 0
        for name, dim in shape.factors:
            idx = idx * dim + int(labels.get(name, 0))
        m = np.zeros((shape.total_dim, shape.total_dim), dtype=complex)
        m[idx, idx] = 1.0
        return cls(m, shape)


class _Terminated:
    """The empty program E."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "E"


E = _Terminated()


# register-local primitives shared with the predicate transformers

def _axis_slices(shape: SpaceShape, var: str, row: int | slice, col: int | slice) -> tuple:
    n = len(shape.factors)
    i = shape.index(var)
    idx = [slice(None)] * (2 * n)
    idx[i] = row
    idx[i + n] = col
    return tuple(idx)


def init_forward(rho: np.ndarray, var: str, shape: SpaceShape) -> np.ndarray:
    """``Σ_n |0><n| ρ |n><0|`` on variable ``var``."""
    n = len(shape.factors)
    i = shape.index(var)
    t = rho.reshape(list(shape.dims) * 2)
    reduced = np.trace(t, axis1=i, axis2=i + n)
    out = np.zeros_like(t)
    out[_axis_slices(shape, var, 0, 0)] = reduced
    return out.reshape(rho.shape)


def init_adjoint(p: np.ndarray, var: str, shape: SpaceShape) -> np.ndarray:
    """``Σ_n |n><0| P |0><n|`` on variable ``var``, i.e. ``I_q ⊗ <0|P|0>``."""
    t = p.reshape(list(shape.dims) * 2)
    block = t[_axis_slices(shape, var, 0, 0)]
    out = np.zeros_like(t)
    for k in range(shape.dim_of(var)):
        out[_axis_slices(shape, var, k, k)] = block
    return out.reshape(p.shape)


# operational semantics

@dataclass(frozen=True, eq=False)
class Configuration:
    remainder: object  # a program node or E
    state: DensityOperator

    @property
    def terminated(self) -> bool:
        return self.remainder is E


def _successors(s, rho: np.ndarray, shape: SpaceShape) -> list[tuple[object, np.ndarray]]:
    if isinstance(s, ast.Skip):
        return [(E, rho)]
    if isinstance(s, ast.Init):
        return [(E, init_forward(rho, s.var, shape))]
    if isinstance(s, ast.Unitary):
        return [(E, conjugate(s.matrix, s.register, rho, shape))]
    if isinstance(s, ast.Seq):
        out = []
        for rem, state in _successors(s.first, rho, shape):
            out.append((s.second if rem is E else ast.Seq(rem, s.second), state))
        return out
    if isinstance(s, ast.Measure):
        return [(arm, conjugate(op, s.register, rho, shape))
                for (_, arm), op in zip(s.arms, s.ops)]
    if isinstance(s, ast.While):
        m0, m1 = s.ops
        return [(E, conjugate(m0, s.register, rho, shape)),
                (ast.Seq(s.body, s), conjugate(m1, s.register, rho, shape))]
    raise TypeError(f"not a program node: {s!r}")


def step(c: Configuration) -> list[Configuration]:
    """All one-step transitions from ``c``, dropping those into the zero operator."""
    if c.terminated:
        return []
    shape = c.state.shape
    return [Configuration(rem, DensityOperator(state, shape))
            for rem, state in _successors(c.remainder, c.state.matrix, shape)
            if max_abs(state) > ZERO_STATE]


@dataclass(eq=False)
class TreeNode:
    config: Configuration
    depth: int
    children: list["TreeNode"] = field(default_factory=list)
    # terminated, live (depth cap reached), vanished (all successors were zero) or inner
    status: str = "inner"


@dataclass(eq=False)
class ComputationTree:
    root: TreeNode
    max_depth: int

    def leaves(self) -> list[TreeNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.children:
                stack.extend(reversed(node.children))
            else:
                out.append(node)
        return out

    def terminated_leaves(self) -> list[TreeNode]:
        return [n for n in self.leaves() if n.status == "terminated"]

    def live_leaves(self) -> list[TreeNode]:
        return [n for n in self.leaves() if n.status == "live"]

    def terminated_sum(self) -> np.ndarray:
        d = self.root.config.state.shape.total_dim
        total = np.zeros((d, d), dtype=complex)
        for leaf in self.terminated_leaves():
            total = total + leaf.config.state.matrix
        return total


def run_tree(s: ast.Program, rho: DensityOperator, max_depth: int) -> ComputationTree:
    """Breadth-first expansion of all computations of ``s`` from ``rho``."""
    root = TreeNode(Configuration(s, rho), 0)
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node.config.terminated:
            node.status = "terminated"
            continue
        if node.depth >= max_depth:
            node.status = "live"
            continue
        succ = step(node.config)
        if not succ:
            node.status = "vanished"
            continue
        node.children = [TreeNode(c, node.depth + 1) for c in succ]
        queue.extend(node.children)
    return ComputationTree(root, max_depth)


# denotational semantics

@dataclass
class LoopStats:
    loops: int = 0
    iterations: int = 0
    max_iterations: int = 0
    residual: float = 0.0
    plateau_mass: float = 0.0
    capped: int = 0
    plateaus: int = 0

    def to_json(self) -> dict:
        return {
            "loops_evaluated": self.loops,
            "iterations": self.iterations,
            "max_iterations": self.max_iterations,
            "residual": self.residual,
            "plateau_mass": self.plateau_mass,
            "capped_loops": self.capped,
            "plateau_loops": self.plateaus,
        }


class Denotation(NamedTuple):
    state: DensityOperator
    residual: float
    stats: LoopStats


def _denote(s, rho: np.ndarray, shape: SpaceShape, cfg: EvalConfig, stats: LoopStats) -> np.ndarray:
    if isinstance(s, ast.Skip):
        return rho
    if isinstance(s, ast.Init):
        return init_forward(rho, s.var, shape)
    if isinstance(s, ast.Unitary):
        return conjugate(s.matrix, s.register, rho, shape)
    if isinstance(s, ast.Seq):
        return _denote(s.second, _denote(s.first, rho, shape, cfg, stats), shape, cfg, stats)
    if isinstance(s, ast.Measure):
        total = np.zeros_like(rho)
        for (_, arm), op in zip(s.arms, s.ops):
            total = total + _denote(arm, conjugate(op, s.register, rho, shape), shape, cfg, stats)
        return total
    if isinstance(s, ast.While):
        return _denote_loop(s, rho, shape, cfg, stats)
    raise TypeError(f"not a program node: {s!r}")


def _denote_loop(s: ast.While, rho, shape, cfg, stats) -> np.ndarray:
    m0, m1 = s.ops
    out = np.zeros_like(rho)
    t = rho
    history = []
    stats.loops += 1
    n = 0
    while True:
        out = out + conjugate(m0, s.register, t, shape)
        t = _denote(s.body, conjugate(m1, s.register, t, shape), shape, cfg, stats)
        n += 1
        mass = float(np.trace(t).real)
        if mass < cfg.tol_loop:
            break
        history.append(mass)
        w = cfg.plateau_window
        if len(history) > w and history[-w - 1] - mass < cfg.tol_loop:
            stats.plateaus += 1
            stats.plateau_mass += mass
            stats.residual += mass
            break
        if n >= cfg.max_iter:
            stats.capped += 1
            stats.residual += mass
            break
    stats.iterations += n
    stats.max_iterations = max(stats.max_iterations, n)
    return out


def denote(s: ast.Program, rho: DensityOperator, cfg: EvalConfig = DEFAULT_CONFIG) -> Denotation:
    """Semantic function applied to ``rho``.

    Loops are summed until the live mass drops below ``cfg.tol_loop``; when
    iteration stops early (cap or plateau) the remaining live mass is added
    to ``residual``, which bounds the trace of everything left out.
    """
    stats = LoopStats()
    out = _denote(s, rho.matrix, rho.shape, cfg, stats)
    return Denotation(DensityOperator(out, rho.shape), stats.residual, stats)


def denote_matrix(s: ast.Program, rho: np.ndarray, shape: SpaceShape,
                  cfg: EvalConfig = DEFAULT_CONFIG, stats: Optional[LoopStats] = None) -> np.ndarray:
    return _denote(s, rho, shape, cfg, stats if stats is not None else LoopStats())


def termination_probability(s: ast.Program, rho: DensityOperator,
                            cfg: EvalConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """``(p_term, p_div_lower)``: termination probability and a divergence lower bound."""
    result = denote(s, rho, cfg)
    p_term = result.state.trace
    p_div = rho.trace - p_term - result.residual
    return min(max(p_term, 0.0), 1.0), min(max(p_div, 0.0), 1.0)
