import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwhile.errors import DimensionError
from qwhile.formats import matrix_from_json, matrix_to_json, state_from_json, state_to_json
from qwhile.lang.builtins import FIXED_GATES
from qwhile.linalg import (
    SpaceShape,
    apply_left,
    apply_right,
    check_cap,
    conjugate,
    conjugate_adjoint,
    embed,
    is_hermitian,
    is_psd,
    loewner_gap,
    loewner_leq,
    partial_trace,
    tensor,
)
from qwhile.randprog import random_density, random_predicate, random_unitary

H = FIXED_GATES["H"]
X = FIXED_GATES["X"]
CNOT = FIXED_GATES["CNOT"]


def embed_oracle(op, register, shape):
    """Entry-by-entry definition of A ⊗ I over the global basis."""
    names, dims = shape.names, shape.dims
    pos = [names.index(r) for r in register]
    rest = [i for i in range(len(names)) if i not in pos]
    basis = list(itertools.product(*[range(d) for d in dims]))
    out = np.zeros((len(basis), len(basis)), dtype=complex)

    def local_index(t):
        idx = 0
        for p in pos:
            idx = idx * dims[p] + t[p]
        return idx

    for a, ta in enumerate(basis):
        for b, tb in enumerate(basis):
            if all(ta[i] == tb[i] for i in rest):
                out[a, b] = op[local_index(ta), local_index(tb)]
    return out


@st.composite
def shapes_and_registers(draw):
    n = draw(st.integers(1, 3))
    dims = draw(st.lists(st.sampled_from([2, 3]), min_size=n, max_size=n))
    shape = SpaceShape(tuple((f"v{i}", d) for i, d in enumerate(dims)))
    k = draw(st.integers(1, n))
    reg = draw(st.permutations(shape.names))[:k]
    return shape, list(reg)


def test_tensor_examples():
    np.testing.assert_array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))
    hi = tensor(H, np.eye(2))
    np.testing.assert_allclose(hi[0], np.array([1, 0, 1, 0]) / np.sqrt(2))
    np.testing.assert_allclose(hi[3], np.array([0, 1, 0, -1]) / np.sqrt(2))
    np.testing.assert_array_equal(tensor(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]))


def test_cap_rejects_large_products():
    with pytest.raises(DimensionError):
        tensor(np.eye(64), np.eye(128), cap=4096)
    check_cap(4096, 4096)


def test_embed_examples():
    one = SpaceShape.of(("q", 2))
    np.testing.assert_array_equal(embed(X, ["q"], one), X)
    two = SpaceShape.of(("q1", 2), ("q2", 2))
    np.testing.assert_array_equal(embed(np.diag([1, 0]), ["q1"], two), np.diag([1, 1, 0, 0]))
    swap = np.eye(4)[[0, 2, 1, 3]]
    np.testing.assert_array_equal(embed(CNOT, ["q2", "q1"], two), swap @ embed(CNOT, ["q1", "q2"], two) @ swap)


def test_embed_identity_is_identity():
    shape = SpaceShape.of(("a", 2), ("b", 3), ("c", 2))
    np.testing.assert_array_equal(embed(np.eye(6), ["c", "b"], shape), np.eye(12))


def test_embed_errors():
    shape = SpaceShape.of(("a", 2), ("b", 3))
    with pytest.raises(DimensionError, match="unknown variable"):
        embed(X, ["z"], shape)
    with pytest.raises(DimensionError):
        embed(X, ["b"], shape)


@settings(max_examples=60, deadline=None)
@given(shapes_and_registers(), st.integers(0, 2**32 - 1))
def test_embed_matches_entrywise_definition(sr, seed):
    shape, reg = sr
    rng = np.random.default_rng(seed)
    d = shape.register_dim(reg)
    op = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    np.testing.assert_array_equal(embed(op, reg, shape), embed_oracle(op, reg, shape))


@settings(max_examples=60, deadline=None)
@given(shapes_and_registers(), st.integers(0, 2**32 - 1))
def test_local_application_equals_embedded_products(sr, seed):
    shape, reg = sr
    rng = np.random.default_rng(seed)
    d, n = shape.register_dim(reg), shape.total_dim
    op = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    e = embed(op, reg, shape)
    np.testing.assert_allclose(apply_left(op, reg, a, shape), e @ a, atol=1e-12)
    np.testing.assert_allclose(apply_right(a, op, reg, shape), a @ e, atol=1e-12)
    np.testing.assert_allclose(conjugate(op, reg, a, shape), e @ a @ e.conj().T, atol=1e-11)
    np.testing.assert_allclose(conjugate_adjoint(op, reg, a, shape), e.conj().T @ a @ e, atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(shapes_and_registers(), st.integers(0, 2**32 - 1))
def test_embed_is_multiplicative(sr, seed):
    shape, reg = sr
    rng = np.random.default_rng(seed)
    d = shape.register_dim(reg)
    u, v = random_unitary(rng, d), random_unitary(rng, d)
    np.testing.assert_allclose(embed(u, reg, shape) @ embed(v, reg, shape), embed(u @ v, reg, shape), atol=1e-10)


def test_partial_trace_examples():
    shape = SpaceShape.of(("a", 2), ("b", 3))
    rng = np.random.default_rng(3)
    rho, sigma = random_density(rng, 2), random_density(rng, 3, trace=0.5)
    np.testing.assert_allclose(partial_trace(np.kron(rho, sigma), ["b"], shape), 0.5 * rho, atol=1e-12)
    np.testing.assert_allclose(partial_trace(np.kron(rho, sigma), ["a"], shape), sigma, atol=1e-12)
    bell = np.zeros(4)
    bell[[0, 3]] = 1 / np.sqrt(2)
    two = SpaceShape.of(("q1", 2), ("q2", 2))
    np.testing.assert_allclose(partial_trace(np.outer(bell, bell), ["q2"], two), np.eye(2) / 2, atol=1e-15)
    a = rng.standard_normal((6, 6))
    np.testing.assert_array_equal(partial_trace(a, [], shape), a)
    with pytest.raises(DimensionError):
        partial_trace(a, ["zz"], shape)


def test_partial_trace_middle_factor():
    shape = SpaceShape.of(("a", 2), ("b", 3), ("c", 2))
    rng = np.random.default_rng(4)
    x, y, z = random_density(rng, 2), random_density(rng, 3), random_density(rng, 2)
    full = np.kron(np.kron(x, y), z)
    np.testing.assert_allclose(partial_trace(full, ["b"], shape), np.kron(x, z), atol=1e-12)
    np.testing.assert_allclose(partial_trace(full, ["a", "c"], shape), y, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(shapes_and_registers(), st.integers(0, 2**32 - 1))
def test_partial_trace_preserves_trace(sr, seed):
    shape, reg = sr
    rng = np.random.default_rng(seed)
    n = shape.total_dim
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert abs(np.trace(partial_trace(a, reg, shape)) - np.trace(a)) < 1e-10


def test_psd_examples(rng):
    assert is_psd(np.eye(3))
    assert not is_psd(-np.eye(3))
    for _ in range(20):
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert is_psd(b.conj().T @ b)
    assert not is_psd(np.array([[0, 1], [0, 0]]))  # not Hermitian
    with pytest.raises(np.linalg.LinAlgError):
        is_hermitian(np.array([[np.nan, 0], [0, 1]]))


def test_loewner_examples(rng):
    p = random_predicate(rng, 4)
    assert loewner_leq(np.zeros((4, 4)), p)
    assert not loewner_leq(np.eye(2), np.eye(2) / 2)
    gap, vec = loewner_gap(np.eye(2), np.eye(2) / 2)
    assert gap == pytest.approx(-0.5)
    assert np.linalg.norm(vec) == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        loewner_leq(np.eye(2), np.eye(3))


def test_loewner_agrees_with_trace_test(rng):
    for _ in range(30):
        a, b = random_predicate(rng, 3), random_predicate(rng, 3)
        leq = loewner_leq(a, b)
        values = [np.trace((b - a) @ random_density(rng, 3)).real for _ in range(200)]
        if leq:
            assert min(values) >= -1e-8
        # a violation shows up on the eigenvector of the negative part
        gap, v = loewner_gap(a, b)
        rho = np.outer(v, v.conj())
        assert np.trace((b - a) @ rho).real == pytest.approx(gap, abs=1e-12)


def test_loewner_reflexive_and_transitive(rng):
    for _ in range(30):
        a = random_predicate(rng, 4)
        assert loewner_leq(a, a)
        b = a + random_predicate(rng, 4) * 0.3
        c = b + random_predicate(rng, 4) * 0.3
        assert loewner_leq(a, b) and loewner_leq(b, c) and loewner_leq(a, c)


def test_space_shape_validation():
    with pytest.raises(DimensionError):
        SpaceShape.of(("a", 2), ("a", 3))
    with pytest.raises(DimensionError):
        SpaceShape.of(("a", 1))
    s = SpaceShape.of(("a", 2), ("b", 3))
    assert s.total_dim == 6 and s.register_dim(["b", "a"]) == 6
    assert SpaceShape(()).total_dim == 1


def test_matrix_json_roundtrip(rng):
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    np.testing.assert_array_equal(matrix_from_json(matrix_to_json(a)), a)
    shape = SpaceShape.of(("a", 3))
    m, s = state_from_json(state_to_json(a, shape))
    assert s == shape
    np.testing.assert_array_equal(m, a)


@pytest.mark.parametrize("obj", [
    {"dim": 2, "rows": [[[1, 0], [0, 0]], [[0, 0]]]},          # ragged
    {"dim": 2, "rows": [[[1, 0], [0, 0]], [[0, 0], [1]]]},     # bad pair
    {"dim": 3, "rows": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]},  # dim mismatch
    {"rows": [[["a", 0]]]},
    {"rows": []},
    [1, 2],
])
def test_matrix_json_rejects_malformed(obj):
    from qwhile.errors import FormatError

    with pytest.raises(FormatError):
        matrix_from_json(obj)


def test_matrix_json_rejects_non_finite():
    from qwhile.errors import FormatError

    with pytest.raises(FormatError):
        matrix_from_json({"rows": [[[float("inf"), 0]]]})
