from __future__ import annotations

import numpy as np

from qwhile.lang import ast
from qwhile.lang.builtins import shift_amount


def format_number(z: complex) -> str:
    re_, im = float(z.real), float(z.imag)
    if im == 0.0:
        return repr(re_)
    if re_ == 0.0:
        return f"{im!r}i"
    sign = "-" if im < 0 or (im == 0.0 and np.signbit(im)) else "+"
    return f"{re_!r}{sign}{abs(im)!r}i"


def format_matrix(a: np.ndarray) -> str:
    rows = ", ".join("[" + ", ".join(format_number(z) for z in row) + "]" for row in a)
    return f"[{rows}]"


def _stmts(s: ast.Program) -> list[ast.Program]:
    out = []
    while isinstance(s, ast.Seq):
        out.extend(_stmts(s.first))
        s = s.second
    out.append(s)
    return out


def _reg(register) -> str:
    return ", ".join(register)


def format_program(s: ast.Program, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    stmts = _stmts(s)
    for i, st in enumerate(stmts):
        text = _format_stmt(st, indent)
        sep = ";" if i < len(stmts) - 1 else ""
        lines.append(pad + text + sep)
    return "\n".join(lines)


def _format_stmt(s: ast.Program, indent: int) -> str:
    pad = "  " * indent
    if isinstance(s, ast.Skip):
        return "skip"
    if isinstance(s, ast.Init):
        return f"{s.var} := 0"
    if isinstance(s, ast.Unitary):
        k = shift_amount(s.gate)
        if k is not None and len(s.register) == 1:
            q = s.register[0]
            return f"{q} := {q} + {k}" if k >= 0 else f"{q} := {q} - {-k}"
        return f"[{_reg(s.register)}] *= {s.gate}"
    if isinstance(s, ast.Measure):
        parts = [f"measure {s.meas}[{_reg(s.register)}] {{"]
        for m, arm in s.arms:
            parts.append(f"{pad}  {m} -> {{")
            parts.append(format_program(arm, indent + 2))
            parts.append(f"{pad}  }}")
        parts.append(f"{pad}}}")
        return "\n".join(parts)
    if isinstance(s, ast.While):
        return "\n".join([
            f"while {s.meas}[{_reg(s.register)}] = 1 do {{",
            format_program(s.body, indent + 1),
            f"{pad}}}",
        ])
    if isinstance(s, ast.Seq):
        return format_program(s, indent)
    raise TypeError(f"not a program node: {s!r}")


def format_unit(unit: ast.SourceUnit) -> str:
    lines = []
    for v in unit.variables:
        ty = "bool" if v.kind == "bool" else f"int[{v.dim}]"
        lines.append(f"var {v.name} : {ty};")
    for g in unit.gates:
        lines.append(f"unitary {g.name} = {format_matrix(g.matrix)};")
    for m in unit.measurements:
        ops = ", ".join(f"{k}: {format_matrix(op)}" for k, op in m.ops)
        lines.append(f"measurement {m.name} = {{ {ops} }};")
    if lines:
        lines.append("")
    lines.append(format_program(unit.main))
    return "\n".join(lines) + "\n"
