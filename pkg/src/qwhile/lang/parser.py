"""Recursive-descent parser for ``.qw`` source files.

Example::

    var q : bool;
    measurement M = { 0: [[1, 0], [0, 0]], 1: [[0, 0], [0, 1]] };
    q := 0;
    [q] *= H;
    measure M[q] { 0 -> { skip } 1 -> { [q] *= X } }
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from qwhile.errors import ParseError
from qwhile.lang import ast
from qwhile.lang.builtins import BUILTIN_NAMES

KEYWORDS = {"var", "unitary", "measurement", "skip", "measure", "while", "do", "bool", "int"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>:=|\*=|->|[;:,\[\]{}()=+\-])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, sym, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", line, i - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, i - line_start + 1))
        i = m.end()
    out.append(Token("eof", "", line, i - line_start + 1))
    return out


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.vars: dict[str, ast.VarDecl] = {}
        self.gates: dict[str, ast.GateDecl] = {}
        self.meas: dict[str, ast.MeasDecl] = {}

    # token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "ident") and self.tok.text == text

    def advance(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
            raise self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def integer(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        tok = self.tok
        if tok.kind != "num" or not tok.text.isdigit():
            raise self.error(f"expected an integer, found {tok.text or 'end of input'!r}")
        self.advance()
        return -int(tok.text) if neg else int(tok.text)

    # unit

    def parse_unit(self) -> ast.SourceUnit:
        while self.tok.kind == "ident" and self.tok.text in ("var", "unitary", "measurement"):
            self.declaration()
        main = self.program(top=True)
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after program")
        return ast.SourceUnit(
            variables=tuple(self.vars.values()),
            gates=tuple(self.gates.values()),
            measurements=tuple(self.meas.values()),
            main=main,
        )

    def _declare(self, tok: Token):
        name = tok.text
        if name in self.vars or name in self.gates or name in self.meas:
            raise self.error(f"duplicate declaration of {name!r}", tok)
        if name in BUILTIN_NAMES:
            raise self.error(f"{name!r} is a builtin gate name", tok)

    def declaration(self):
        kw = self.advance()
        name_tok = self.ident("a name")
        self._declare(name_tok)
        pos = (name_tok.line, name_tok.col)
        name = name_tok.text
        if kw.text == "var":
            self.expect(":")
            if self.at("bool"):
                self.advance()
                decl = ast.VarDecl(name, "bool", 2, pos)
            elif self.at("int"):
                self.advance()
                self.expect("[")
                dtok = self.tok
                d = self.integer()
                self.expect("]")
                if d < 2:
                    raise self.error(f"integer truncation dimension must be >= 2, got {d}", dtok)
                decl = ast.VarDecl(name, "int", d, pos)
            else:
                raise self.error("expected type 'bool' or 'int[d]'")
            self.vars[name] = decl
        elif kw.text == "unitary":
            self.expect("=")
            self.gates[name] = ast.GateDecl(name, self.matrix(), pos)
        else:
            self.expect("=")
            self.expect("{")
            ops = []
            while not self.at("}"):
                otok = self.tok
                m = self.integer()
                if any(m == k for k, _ in ops):
                    raise self.error(f"duplicate outcome {m}", otok)
                self.expect(":")
                ops.append((m, self.matrix()))
                if not self.at("}"):
                    self.expect(",")
            self.expect("}")
            if not ops:
                raise self.error(f"measurement {name!r} has no outcomes", name_tok)
            self.meas[name] = ast.MeasDecl(name, tuple(ops), pos)
        self.expect(";")

    # matrix literals

    def matrix(self) -> np.ndarray:
        start = self.expect("[")
        rows = []
        while True:
            self.expect("[")
            row = [self.numeral()]
            while self.at(","):
                self.advance()
                row.append(self.numeral())
            self.expect("]")
            rows.append(row)
            if self.at(","):
                self.advance()
                continue
            break
        self.expect("]")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise self.error("ragged matrix literal", start)
        if len(rows) != width:
            raise self.error(f"matrix literal must be square, got {len(rows)}x{width}", start)
        return np.array(rows, dtype=complex)

    def _term(self) -> complex:
        sign = 1.0
        if self.at("+") or self.at("-"):
            sign = -1.0 if self.advance().text == "-" else 1.0
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            nxt = self.tok
            if (nxt.kind == "ident" and nxt.text == "i" and nxt.line == tok.line
                    and nxt.col == tok.col + len(tok.text)):
                self.advance()
                return sign * 1j * value
            return complex(sign * value)
        if tok.kind == "ident" and tok.text == "i":
            self.advance()
            return sign * 1j
        raise self.error(f"expected a number, found {tok.text or 'end of input'!r}")

    def numeral(self) -> complex:
        value = self._term()
        if self.at("+") or self.at("-"):
            value += self._term()
        return value

    # statements

    def program(self, top: bool = False) -> ast.Program:
        stmts = [self.statement()]
        while self.at(";"):
            self.advance()
            if self.at("}") or self.tok.kind == "eof":
                break
            stmts.append(self.statement())
        return ast.seq(*stmts)

    def block(self) -> ast.Program:
        self.expect("{")
        body = self.program()
        self.expect("}")
        return body

    def variable(self) -> str:
        tok = self.ident("a variable")
        if tok.text not in self.vars:
            raise self.error(f"unknown identifier {tok.text!r}", tok)
        return tok.text

    def register(self, closing: str = "]") -> tuple[str, ...]:
        start = self.tok
        reg = [self.variable()]
        while self.at(","):
            self.advance()
            reg.append(self.variable())
        self.expect(closing)
        if len(set(reg)) != len(reg):
            raise self.error(f"register {reg} repeats a variable", start)
        return tuple(reg)

    def measurement_ref(self) -> tuple[ast.MeasDecl, tuple]:
        tok = self.ident("a measurement")
        if tok.text not in self.meas:
            raise self.error(f"unknown identifier {tok.text!r}", tok)
        self.expect("[")
        return self.meas[tok.text], self.register()

    def statement(self) -> ast.Program:
        tok = self.tok
        pos = (tok.line, tok.col)
        if self.at("skip"):
            self.advance()
            return ast.Skip(pos)
        if self.at("["):
            self.advance()
            reg = self.register()
            self.expect("*=")
            return ast.Unitary(reg, self.gate_ref(), pos)
        if self.at("measure"):
            self.advance()
            decl, reg = self.measurement_ref()
            self.expect("{")
            arms = {}
            while not self.at("}"):
                otok = self.tok
                m = self.integer()
                if m not in decl.outcomes:
                    raise self.error(f"measurement {decl.name!r} has no outcome {m}", otok)
                if m in arms:
                    raise self.error(f"duplicate arm for outcome {m}", otok)
                self.expect("->")
                arms[m] = self.block()
            close = self.expect("}")
            missing = [m for m in decl.outcomes if m not in arms]
            if missing:
                raise self.error(f"measure on {decl.name!r} lacks arms for outcomes {missing}", close)
            return ast.Measure(decl.name, reg, tuple((m, arms[m]) for m in decl.outcomes), pos)
        if self.at("while"):
            self.advance()
            decl, reg = self.measurement_ref()
            if sorted(decl.outcomes) != [0, 1]:
                raise self.error(f"loop guard {decl.name!r} must be a yes-no measurement with outcomes 0 and 1", tok)
            self.expect("=")
            one = self.tok
            if one.text != "1":
                raise self.error("loop guard must test outcome 1", one)
            self.advance()
            self.expect("do")
            return ast.While(decl.name, reg, self.block(), pos)
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            var = self.variable()
            self.expect(":=")
            rhs = self.tok
            if rhs.kind == "num":
                if rhs.text != "0":
                    raise self.error("only initialisation to 0 is supported", rhs)
                self.advance()
                return ast.Init(var, pos)
            other = self.variable()
            if other != var:
                raise self.error(f"shift must update its own variable: {var} := {var} + k", rhs)
            if not (self.at("+") or self.at("-")):
                raise self.error("expected '+' or '-'")
            sign = -1 if self.advance().text == "-" else 1
            k = self.integer()
            return ast.Unitary((var,), f"SHIFT({sign * k})", pos)
        raise self.error(f"expected a statement, found {tok.text or 'end of input'!r}")

    def gate_ref(self) -> str:
        tok = self.ident("a gate")
        if tok.text == "SHIFT":
            self.expect("(")
            k = self.integer()
            self.expect(")")
            return f"SHIFT({k})"
        if tok.text in BUILTIN_NAMES or tok.text in self.gates:
            return tok.text
        raise self.error(f"unknown identifier {tok.text!r}", tok)


def parse(text: str) -> ast.SourceUnit:
    return Parser(text).parse_unit()


def parse_file(path) -> ast.SourceUnit:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
