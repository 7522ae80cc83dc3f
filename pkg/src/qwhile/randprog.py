"""Random programs, states and predicates for property-based harnesses.

Everything is drawn from an explicit ``numpy.random.Generator`` so suites are
reproducible from a seed. Programs are produced as source units and run
through the typechecker, so they are exactly what the parser would build.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qwhile.config import DEFAULT_CONFIG, EvalConfig
from qwhile.lang import ast
from qwhile.lang.typecheck import TypedUnit, typecheck
from qwhile.linalg import SpaceShape

DIM_CHOICES = (2, 2, 3, 4)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_measurement(rng: np.random.Generator, d: int, outcomes: int) -> list[np.ndarray]:
    """Kraus operators ``M_m`` with ``Σ M_m† M_m = I`` cut from a random isometry."""
    v = random_unitary(rng, d * outcomes)[:, :d]
    return [v[m * d:(m + 1) * d, :] for m in range(outcomes)]


def random_guard(rng: np.random.Generator, d: int, max_continue: float = 0.7) -> tuple[np.ndarray, np.ndarray]:
    """Yes-no measurement whose continue branch keeps at most ``max_continue`` of the mass."""
    w = random_unitary(rng, d)
    c = rng.uniform(0.0, max_continue, size=d)
    m1 = random_unitary(rng, d) @ np.diag(np.sqrt(c)) @ w
    m0 = random_unitary(rng, d) @ np.diag(np.sqrt(1 - c)) @ w
    return m0, m1


def random_shape(rng: np.random.Generator, max_dim: int = 16, max_vars: int = 3) -> SpaceShape:
    factors = []
    total = 1
    for k in range(int(rng.integers(1, max_vars + 1))):
        options = [d for d in DIM_CHOICES if total * d <= max_dim]
        if not options:
            break
        d = int(rng.choice(options))
        factors.append((f"x{k}", d))
        total *= d
    return SpaceShape(tuple(factors))


def random_density(rng: np.random.Generator, d: int, rank: int | None = None, trace: float = 1.0) -> np.ndarray:
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return trace * rho / np.trace(rho).real


def random_predicate(rng: np.random.Generator, d: int) -> np.ndarray:
    """Hermitian ``P`` with ``0 ⊑ P ⊑ I``: random eigenbasis, eigenvalues uniform in [0, 1]."""
    u = random_unitary(rng, d)
    m = (u * rng.uniform(0.0, 1.0, size=d)) @ u.conj().T
    return (m + m.conj().T) / 2


@dataclass
class ProgramSpec:
    max_depth: int = 4
    max_loops: int = 2
    allow_loops: bool = True
    max_register: int = 2
    max_continue: float = 0.7


class _Builder:
    def __init__(self, rng: np.random.Generator, shape: SpaceShape, spec: ProgramSpec):
        self.rng = rng
        self.shape = shape
        self.spec = spec
        self.gates: list[ast.GateDecl] = []
        self.meas: list[ast.MeasDecl] = []
        self.loops = 0

    def register(self) -> tuple[str, ...]:
        names = list(self.shape.names)
        k = int(self.rng.integers(1, min(self.spec.max_register, len(names)) + 1))
        picked = self.rng.choice(len(names), size=k, replace=False)
        return tuple(names[i] for i in picked)

    def atom(self) -> ast.Program:
        r = self.rng.random()
        if r < 0.1:
            return ast.Skip()
        if r < 0.3:
            return ast.Init(str(self.rng.choice(list(self.shape.names))))
        reg = self.register()
        name = f"G{len(self.gates)}"
        self.gates.append(ast.GateDecl(name, random_unitary(self.rng, self.shape.register_dim(reg))))
        return ast.Unitary(reg, name)

    def program(self, depth: int) -> ast.Program:
        if depth <= 1 or self.rng.random() < 0.25:
            return self.atom()
        r = self.rng.random()
        if r < 0.45:
            return ast.Seq(self.program(depth - 1), self.program(depth - 1))
        if r < 0.7 or not self.spec.allow_loops or self.loops >= self.spec.max_loops:
            reg = self.register()
            k = int(self.rng.integers(2, 4))
            ops = random_measurement(self.rng, self.shape.register_dim(reg), k)
            name = f"M{len(self.meas)}"
            self.meas.append(ast.MeasDecl(name, tuple(enumerate(ops))))
            return ast.Measure(name, reg, tuple((m, self.program(depth - 1)) for m in range(k)))
        self.loops += 1
        reg = self.register()
        m0, m1 = random_guard(self.rng, self.shape.register_dim(reg), self.spec.max_continue)
        name = f"M{len(self.meas)}"
        self.meas.append(ast.MeasDecl(name, ((0, m0), (1, m1))))
        return ast.While(name, reg, self.program(depth - 1))


def random_unit(rng: np.random.Generator, shape: SpaceShape | None = None, spec: ProgramSpec | None = None,
                cfg: EvalConfig = DEFAULT_CONFIG) -> TypedUnit:
    spec = spec or ProgramSpec()
    shape = shape or random_shape(rng)
    b = _Builder(rng, shape, spec)
    main = b.program(spec.max_depth)
    variables = tuple(ast.VarDecl(n, "bool" if d == 2 else "int", d) for n, d in shape.factors)
    src = ast.SourceUnit(variables, tuple(b.gates), tuple(b.meas), main)
    return typecheck(src, cfg)


def loop_free_spec(max_depth: int = 4) -> ProgramSpec:
    return ProgramSpec(max_depth=max_depth, allow_loops=False)


def has_loop(s: ast.Program) -> bool:
    return any(isinstance(n, ast.While) for _, n in ast.walk(s))
