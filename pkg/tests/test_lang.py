import numpy as np
import pytest

from conftest import CORPUS, load_corpus
from qwhile.errors import ParseError, TypeCheckError
from qwhile.lang import ast, format_unit, free_vars, loads, parse, typecheck
from qwhile.lang.builtins import shift
from qwhile.randprog import random_unit

BIT_MEAS = "measurement M = { 0: [[1, 0], [0, 0]], 1: [[0, 0], [0, 1]] };"


def test_skip_only():
    assert parse("skip").main == ast.Skip()


def test_measured_loop_structure():
    unit = load_corpus("measured_loop.qw")
    main = unit.main
    stmts = []
    node = main
    while isinstance(node, ast.Seq):
        stmts.append(node.first)
        node = node.second
    stmts.append(node)
    assert [type(s).__name__ for s in stmts] == ["Init", "Init", "Unitary", "Unitary", "Measure"]
    assert stmts[3].gate == "SHIFT(2)"
    meas = stmts[4]
    assert [m for m, _ in meas.arms] == [0, 1]
    assert isinstance(meas.arms[0][1], ast.Skip)
    assert isinstance(meas.arms[1][1], ast.While)
    assert unit.shape.total_dim == 10


def test_paths_and_subprograms():
    unit = load_corpus("measured_loop.qw")
    assert isinstance(ast.subprogram(unit.main, "1.1.1.1"), ast.Measure)
    assert isinstance(ast.subprogram(unit.main, "1.1.1.1.1"), ast.While)
    assert isinstance(ast.subprogram(unit.main, "1.1.1.1.1.0"), ast.Unitary)
    with pytest.raises(KeyError):
        ast.subprogram(unit.main, "0.0")
    paths = [p for p, _ in ast.walk(unit.main)]
    assert paths[0] == "" and len(paths) == ast.size(unit.main)


def test_parse_error_positions():
    with pytest.raises(ParseError) as exc:
        parse("var q : bool;\n[q] *= FOO")
    assert (exc.value.line, exc.value.col) == (2, 8)
    assert "unknown" in str(exc.value)
    with pytest.raises(ParseError):
        parse("var q : bool;\nq := ")
    with pytest.raises(ParseError):
        parse("var q : bool; var q : bool; skip")


@pytest.mark.parametrize("arms", [
    "0 -> { skip }",
    "0 -> { skip } 1 -> { skip } 2 -> { skip }",
    "0 -> { skip } 0 -> { skip }",
    "1 -> { skip } 2 -> { skip }",
])
def test_measure_arms_must_match_declaration(arms):
    with pytest.raises(ParseError):
        parse(f"var q : bool; {BIT_MEAS} measure M[q] {{ {arms} }}")


def test_repeated_register_variable_rejected():
    with pytest.raises(ParseError):
        parse("var q : bool; [q, q] *= CNOT")


def test_loop_guard_must_be_yes_no():
    src = "var q : int[3]; measurement T = { 0: [[1,0,0],[0,0,0],[0,0,0]], 1: [[0,0,0],[0,1,0],[0,0,0]], 2: [[0,0,0],[0,0,0],[0,0,1]] };"
    with pytest.raises((ParseError, TypeCheckError)):
        loads(src + " while T[q] = 1 do { skip }")


def test_hadamard_types():
    loads("var q : bool; [q] *= H")
    with pytest.raises(TypeCheckError) as exc:
        loads("var p : int[16]; [p] *= H")
    assert exc.value.diagnostics[0].kind == "dimension"


def test_bit_measurement_is_complete():
    unit = loads(f"var q : bool; {BIT_MEAS} measure M[q] {{ 0 -> {{ skip }} 1 -> {{ skip }} }}")
    assert set(unit.measurements["M"]) == {0, 1}


def test_non_unitary_gate_diagnostic():
    with pytest.raises(TypeCheckError) as exc:
        loads("var q : bool; unitary G = [[1, 0.1], [0, 1]]; [q] *= G")
    (diag,) = exc.value.diagnostics
    assert diag.kind == "unitarity" and diag.name == "G"
    assert diag.defect == pytest.approx(0.1)


def test_incomplete_measurement_diagnostic():
    with pytest.raises(TypeCheckError) as exc:
        loads("var q : bool; measurement N = { 0: [[1, 0], [0, 0]], 1: [[0, 0], [0, 0.5]] }; "
              "measure N[q] { 0 -> { skip } 1 -> { skip } }")
    (diag,) = exc.value.diagnostics
    assert diag.kind == "completeness" and diag.defect == pytest.approx(0.75)


def test_unitarity_threshold_is_tol_eq():
    eps = 1e-10
    loads(f"var q : bool; unitary G = [[1, {eps}], [0, 1]]; [q] *= G")
    with pytest.raises(TypeCheckError):
        loads("var q : bool; unitary G = [[1, 1e-8], [0, 1]]; [q] *= G")


def test_shift_sugar_and_cyclic_shift():
    unit = loads("var p : int[4]; p := p + 1; p := p - 3")
    first = unit.main.first
    assert first.gate == "SHIFT(1)"
    np.testing.assert_array_equal(first.matrix, shift(4, 1))
    np.testing.assert_array_equal(shift(4, 1) @ np.eye(4)[3], np.eye(4)[0])
    np.testing.assert_array_equal(unit.main.second.matrix, shift(4, -3))
    np.testing.assert_array_equal(shift(4, -3), shift(4, 1))
    with pytest.raises(TypeCheckError):
        loads("var p : int[2]; var r : int[2]; [p, r] *= SHIFT(1)")


def test_free_vars_clauses():
    assert free_vars(ast.Skip()) == frozenset()
    assert free_vars(ast.Init("q")) == {"q"}
    loop = ast.While("M", ("a",), ast.Unitary(("b", "c"), "CNOT"))
    assert free_vars(loop) == {"a", "b", "c"}
    unit = load_corpus("measured_loop.qw")
    assert free_vars(unit.main) == {"q1", "q2"}


def test_free_vars_of_seq_is_union(rng):
    for _ in range(30):
        a, b = random_unit(rng).main, random_unit(rng).main
        assert free_vars(ast.Seq(a, b)) == free_vars(a) | free_vars(b)


def test_seq_helper_is_right_nested():
    s = ast.seq(ast.Skip(), ast.Init("q"), ast.Skip())
    assert s == ast.Seq(ast.Skip(), ast.Seq(ast.Init("q"), ast.Skip()))


def test_complex_numerals():
    unit = parse("var q : bool; unitary G = [[0.5+0.5i, 0.5-0.5i], [0.5-0.5i, 0.5+0.5i]]; [q] *= G")
    g = unit.gates[0].matrix
    assert g[0, 0] == 0.5 + 0.5j and g[0, 1] == 0.5 - 0.5j
    assert parse("unitary G = [[i]]; skip").gates[0].matrix[0, 0] == 1j
    assert parse("unitary G = [[-i]]; skip").gates[0].matrix[0, 0] == -1j
    assert parse("unitary G = [[1e-3]]; skip").gates[0].matrix[0, 0] == 1e-3


@pytest.mark.parametrize("name", sorted(p.name for p in CORPUS.glob("*.qw")))
def test_corpus_roundtrip(name):
    text = (CORPUS / name).read_text()
    unit = parse(text)
    again = parse(format_unit(unit))
    assert again.main == unit.main
    assert [v.name for v in again.variables] == [v.name for v in unit.variables]
    for a, b in zip(unit.measurements, again.measurements):
        assert a.outcomes == b.outcomes
        for (_, x), (_, y) in zip(a.ops, b.ops):
            np.testing.assert_array_equal(x, y)


def right_nested(s):
    """Same program with every sequence re-associated to the right."""
    if isinstance(s, ast.Seq):
        first, second = right_nested(s.first), right_nested(s.second)
        if isinstance(first, ast.Seq):
            return right_nested(ast.Seq(first.first, ast.Seq(first.second, second)))
        return ast.Seq(first, second)
    if isinstance(s, ast.Measure):
        return ast.Measure(s.meas, s.register, tuple((m, right_nested(a)) for m, a in s.arms))
    if isinstance(s, ast.While):
        return ast.While(s.meas, s.register, right_nested(s.body))
    return s


def test_random_roundtrip(rng):
    for _ in range(40):
        t = random_unit(rng)
        again = typecheck(parse(format_unit(t.source)))
        assert again.main == right_nested(t.main)
        for g in t.source.gates:
            np.testing.assert_array_equal(again.gates[g.name], g.matrix)
