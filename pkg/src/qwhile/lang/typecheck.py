from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from qwhile.config import DEFAULT_CONFIG, EvalConfig
from qwhile.errors import TypeCheckError
from qwhile.lang import ast
from qwhile.lang.builtins import builtin_matrix, shift_amount
from qwhile.linalg import SpaceShape, check_cap, completeness_defect, max_abs


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # dimension, unitarity, completeness, guard
    message: str
    name: str | None = None
    pos: tuple | None = None
    defect: float | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "message": self.message}
        if self.name is not None:
            out["name"] = self.name
        if self.pos is not None:
            out["line"], out["col"] = self.pos
        if self.defect is not None:
            out["defect"] = self.defect
        return out


@dataclass(frozen=True, eq=False)
class TypedUnit:
    """A typechecked unit whose AST carries resolved operators."""

    source: ast.SourceUnit
    shape: SpaceShape
    main: ast.Program
    gates: dict = field(default_factory=dict)
    measurements: dict = field(default_factory=dict)

    def kind_of(self, var: str) -> str:
        return next(v.kind for v in self.source.variables if v.name == var)


def unitarity_defect(u: np.ndarray) -> float:
    return max_abs(u.conj().T @ u - np.eye(u.shape[0]))


class _Checker:
    def __init__(self, unit: ast.SourceUnit, cfg: EvalConfig):
        self.unit = unit
        self.cfg = cfg
        self.diags: list[Diagnostic] = []
        self.var_dims = {v.name: v.dim for v in unit.variables}
        self.gates = {g.name: g for g in unit.gates}
        self.meas = {m.name: m for m in unit.measurements}

    def reg_dim(self, register) -> int:
        return int(np.prod([self.var_dims[q] for q in register]))

    def check_decls(self):
        tol = self.cfg.tol_eq
        for g in self.unit.gates:
            d = unitarity_defect(g.matrix)
            if d > tol:
                self.diags.append(Diagnostic(
                    "unitarity", f"gate {g.name!r} is not unitary: ||U^dag U - I||_max = {d:.3g}",
                    g.name, g.pos, d))
        for m in self.unit.measurements:
            dims = {op.shape[0] for _, op in m.ops}
            if len(dims) != 1:
                self.diags.append(Diagnostic(
                    "dimension", f"measurement {m.name!r} mixes operator dimensions {sorted(dims)}",
                    m.name, m.pos))
                continue
            d = completeness_defect(op for _, op in m.ops)
            if d > tol:
                self.diags.append(Diagnostic(
                    "completeness",
                    f"measurement {m.name!r} is incomplete: ||sum M^dag M - I||_max = {d:.3g}",
                    m.name, m.pos, d))

    def resolve(self, s: ast.Program) -> ast.Program:
        if isinstance(s, ast.Skip):
            return s
        if isinstance(s, ast.Init):
            return replace(s, dim=self.var_dims[s.var])
        if isinstance(s, ast.Unitary):
            dim = self.reg_dim(s.register)
            if s.gate in self.gates:
                mat = self.gates[s.gate].matrix
            else:
                if shift_amount(s.gate) is not None and len(s.register) != 1:
                    self.diags.append(Diagnostic(
                        "dimension", f"{s.gate} acts on a single variable, not {list(s.register)}",
                        s.gate, s.pos))
                    return s
                mat = builtin_matrix(s.gate, dim)
            if mat.shape[0] != dim:
                self.diags.append(Diagnostic(
                    "dimension",
                    f"gate {s.gate!r} has dimension {mat.shape[0]} but register "
                    f"{list(s.register)} has dimension {dim}", s.gate, s.pos))
                return s
            return replace(s, matrix=mat)
        if isinstance(s, ast.Seq):
            return replace(s, first=self.resolve(s.first), second=self.resolve(s.second))
        if isinstance(s, ast.Measure):
            decl = self.meas[s.meas]
            ops = dict(decl.ops)
            arms = tuple((m, self.resolve(prog)) for m, prog in s.arms)
            if not self._meas_fits(decl, s.register, s.pos):
                return replace(s, arms=arms)
            return replace(s, arms=arms, ops=tuple(ops[m] for m, _ in s.arms))
        if isinstance(s, ast.While):
            decl = self.meas[s.meas]
            ops = dict(decl.ops)
            body = self.resolve(s.body)
            if sorted(ops) != [0, 1]:
                self.diags.append(Diagnostic(
                    "guard", f"loop guard {s.meas!r} must have outcomes 0 and 1", s.meas, s.pos))
                return replace(s, body=body)
            if not self._meas_fits(decl, s.register, s.pos):
                return replace(s, body=body)
            return replace(s, body=body, ops=(ops[0], ops[1]))
        raise TypeError(f"not a program node: {s!r}")

    def _meas_fits(self, decl: ast.MeasDecl, register, pos) -> bool:
        dim = self.reg_dim(register)
        have = decl.ops[0][1].shape[0]
        if have != dim:
            self.diags.append(Diagnostic(
                "dimension",
                f"measurement {decl.name!r} has dimension {have} but register "
                f"{list(register)} has dimension {dim}", decl.name, pos))
            return False
        return True


def typecheck(unit: ast.SourceUnit, cfg: EvalConfig = DEFAULT_CONFIG) -> TypedUnit:
    """Check dimensions, unitarity and completeness; raise ``TypeCheckError`` on failure."""
    chk = _Checker(unit, cfg)
    chk.check_decls()
    main = chk.resolve(unit.main)
    shape = SpaceShape.of(*[(v.name, v.dim) for v in unit.variables])
    try:
        check_cap(shape.total_dim, cfg.dim_cap)
    except ValueError as exc:
        chk.diags.append(Diagnostic("dimension", str(exc)))
    if chk.diags:
        raise TypeCheckError(chk.diags)
    return TypedUnit(
        source=unit,
        shape=shape,
        main=main,
        gates={g.name: g.matrix for g in unit.gates},
        measurements={m.name: dict(m.ops) for m in unit.measurements},
    )
