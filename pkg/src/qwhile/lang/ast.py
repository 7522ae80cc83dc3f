from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

Pos = Optional[tuple]


@dataclass(frozen=True)
class Skip:
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Init:
    var: str
    pos: Pos = field(default=None, compare=False, repr=False)
    # set by the typechecker: dimension of ``var``
    dim: Optional[int] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Unitary:
    register: tuple[str, ...]
    gate: str
    pos: Pos = field(default=None, compare=False, repr=False)
    matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq:
    first: "Program"
    second: "Program"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Measure:
    meas: str
    register: tuple[str, ...]
    arms: tuple[tuple[int, "Program"], ...]
    pos: Pos = field(default=None, compare=False, repr=False)
    # outcome -> operator, in arm order
    ops: Optional[tuple[np.ndarray, ...]] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class While:
    meas: str
    register: tuple[str, ...]
    body: "Program"
    pos: Pos = field(default=None, compare=False, repr=False)
    # (M0, M1)
    ops: Optional[tuple[np.ndarray, np.ndarray]] = field(default=None, compare=False, repr=False)


Program = Union[Skip, Init, Unitary, Seq, Measure, While]


@dataclass(frozen=True)
class VarDecl:
    name: str
    kind: str  # "bool" or "int"
    dim: int
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class GateDecl:
    name: str
    matrix: np.ndarray
    pos: Pos = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class MeasDecl:
    name: str
    ops: tuple[tuple[int, np.ndarray], ...]
    pos: Pos = field(default=None, repr=False)

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(m for m, _ in self.ops)


@dataclass(frozen=True, eq=False)
class SourceUnit:
    variables: tuple[VarDecl, ...]
    gates: tuple[GateDecl, ...]
    measurements: tuple[MeasDecl, ...]
    main: Program


def children(s: Program) -> tuple[Program, ...]:
    if isinstance(s, Seq):
        return (s.first, s.second)
    if isinstance(s, Measure):
        return tuple(prog for _, prog in s.arms)
    if isinstance(s, While):
        return (s.body,)
    return ()


def subprogram(s: Program, path: str) -> Program:
    """Follow a dotted child-index path such as ``"1.0.2"``; ``""`` is the root."""
    node = s
    if path == "":
        return node
    for part in path.split("."):
        kids = children(node)
        try:
            idx = int(part)
        except ValueError:
            raise KeyError(f"bad path component {part!r} in {path!r}") from None
        if not 0 <= idx < len(kids):
            raise KeyError(f"path {path!r} does not resolve: {type(node).__name__} has {len(kids)} children")
        node = kids[idx]
    return node


def child_path(path: str, idx: int) -> str:
    return str(idx) if path == "" else f"{path}.{idx}"


def walk(s: Program, path: str = "") -> Iterator[tuple[str, Program]]:
    yield path, s
    for i, kid in enumerate(children(s)):
        yield from walk(kid, child_path(path, i))


def seq(*stmts: Program) -> Program:
    """Right-nested sequence of one or more statements."""
    if not stmts:
        raise ValueError("empty sequence")
    out = stmts[-1]
    for st in reversed(stmts[:-1]):
        out = Seq(st, out)
    return out


def free_vars(s: Program) -> frozenset[str]:
    if isinstance(s, Skip):
        return frozenset()
    if isinstance(s, Init):
        return frozenset([s.var])
    if isinstance(s, Unitary):
        return frozenset(s.register)
    if isinstance(s, Seq):
        return free_vars(s.first) | free_vars(s.second)
    if isinstance(s, Measure):
        out = frozenset(s.register)
        for _, arm in s.arms:
            out |= free_vars(arm)
        return out
    if isinstance(s, While):
        return frozenset(s.register) | free_vars(s.body)
    raise TypeError(f"not a program node: {s!r}")


def size(s: Program) -> int:
    return 1 + sum(size(k) for k in children(s))
