"""
Тесты арифметики джетов
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ArgumentError, DomainError
from jet_arithmetic import (
    Jet, contract, extract_partial, get_basis, jet_apply, seed_variable, seed_vector,
)

finite = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=0.2, max_value=3.0, allow_nan=False, allow_infinity=False)


def test_seed_variable_is_coordinate_function():
    u = seed_variable(2.0, 0, 2, 2)
    assert extract_partial(u, ()) == 2.0
    assert extract_partial(u, (0,)) == 1.0
    assert extract_partial(u, (1,)) == 0.0
    for second in [(0, 0), (0, 1), (1, 1)]:
        assert extract_partial(u, second) == 0.0


def test_seed_variable_first_order():
    u = seed_variable(0.0, 1, 2, 1)
    assert u.value == 0.0
    np.testing.assert_allclose(u.gradient([0, 1]).value, [0.0, 1.0])


@pytest.mark.parametrize("args", [(1.0, 3, 2, 2), (1.0, -1, 2, 2), (1.0, 0, 2, 0), (1.0, 0, 2, 5)])
def test_seed_variable_rejects_out_of_range(args):
    with pytest.raises(ArgumentError):
        seed_variable(*args)


def test_cube_derivatives():
    u = seed_variable(2.0, 0, 1, 3)
    cube = jet_apply("pow_int", [u], exponent=3)
    assert extract_partial(cube, ()) == pytest.approx(8.0)
    assert extract_partial(cube, (0,)) == pytest.approx(12.0)
    assert extract_partial(cube, (0, 0)) == pytest.approx(12.0)
    assert extract_partial(cube, (0, 0, 0)) == pytest.approx(6.0)


def test_sine_derivatives_at_zero():
    u = seed_variable(0.0, 0, 1, 3)
    s = jet_apply("sin", [u])
    values = [extract_partial(s, (0,) * k) for k in range(4)]
    np.testing.assert_allclose(values, [0.0, 1.0, 0.0, -1.0], atol=1e-15)


def test_mixed_partial_of_polynomial():
    a = seed_variable(3.0, 0, 2, 3)
    b = seed_variable(2.0, 1, 2, 3)
    f = a * b * b
    assert extract_partial(f, ()) == pytest.approx(12.0)
    assert extract_partial(f, (0, 1, 1)) == pytest.approx(2.0)
    assert extract_partial(f, (1, 0, 1)) == pytest.approx(2.0)
    assert extract_partial(f, (1, 1)) == pytest.approx(6.0)


def test_extract_partial_rejects_excess_degree():
    u = seed_variable(1.0, 0, 2, 2)
    with pytest.raises(ArgumentError):
        extract_partial(u * u, (0, 0, 1))


@pytest.mark.parametrize("op, value", [("sqrt", -1.0), ("log", 0.0), ("log", -2.0), ("sqrt", 0.0)])
def test_domain_errors(op, value):
    u = seed_variable(value, 0, 1, 2)
    with pytest.raises(DomainError):
        jet_apply(op, [u])


def test_division_by_zero_valued_jet():
    u = seed_variable(0.0, 0, 1, 2)
    with pytest.raises(DomainError):
        jet_apply("div", [Jet.constant(1.0, u.basis), u])
    with pytest.raises(DomainError):
        u / 0.0


def test_jet_apply_rejects_bad_calls():
    u = seed_variable(1.0, 0, 1, 2)
    with pytest.raises(ArgumentError):
        jet_apply("tan", [u])
    with pytest.raises(ArgumentError):
        jet_apply("add", [u])
    with pytest.raises(ArgumentError):
        jet_apply("pow_int", [u])


def test_incompatible_bases():
    with pytest.raises(ArgumentError):
        seed_variable(1.0, 0, 2, 2) + seed_variable(1.0, 0, 2, 3)


def test_basis_is_cached_and_graded():
    basis = get_basis(3, 2)
    assert get_basis(3, 2) is basis
    assert basis.size == 10
    assert basis.monomials[0] == ()
    assert all(len(m) <= 2 for m in basis.monomials)
    assert get_basis(3, 1).monomials == basis.monomials[:4]


def test_gradient_and_truncate():
    x = seed_variable(1.0, 0, 2, 3)
    y = seed_variable(2.0, 1, 2, 3)
    f = x * x * y
    grad = f.gradient([0, 1])
    assert grad.shape == (2,)
    assert grad.max_order == 2
    np.testing.assert_allclose(grad.value, [4.0, 1.0])
    hessian = grad.gradient([0, 1])
    np.testing.assert_allclose(hessian.value, [[4.0, 2.0], [2.0, 0.0]])
    assert f.truncate(1).max_order == 1
    with pytest.raises(ArgumentError):
        f.truncate(1).truncate(2)


def test_contract_matches_einsum_on_values():
    v = seed_vector([1.0, 2.0], 0, 2, 2)
    matrix = np.array([[1.0, 2.0], [3.0, 4.0]])
    result = contract("ab,b->a", matrix, v)
    np.testing.assert_allclose(result.value, matrix @ [1.0, 2.0])
    outer = contract("a,b->ab", v, v)
    np.testing.assert_allclose(outer.value, np.outer([1.0, 2.0], [1.0, 2.0]))
    with pytest.raises(ArgumentError):
        contract("aZ,a->Z", v, v)


def test_tensor_jets_reject_numpy_ufuncs():
    v = seed_vector([1.0, 2.0], 0, 2, 1)
    result = np.ones(2) * v
    assert isinstance(result, Jet)


@given(a=finite, b=finite)
@settings(max_examples=50, deadline=None)
def test_product_rule(a, b):
    x = seed_variable(a, 0, 2, 2)
    y = seed_variable(b, 1, 2, 2)
    f = x.sin() * y.exp()
    assert extract_partial(f, (0,)) == pytest.approx(math.cos(a) * math.exp(b), abs=1e-12)
    assert extract_partial(f, (1,)) == pytest.approx(math.sin(a) * math.exp(b), abs=1e-12)
    assert extract_partial(f, (0, 1)) == pytest.approx(math.cos(a) * math.exp(b), abs=1e-12)


@given(value=positive)
@settings(max_examples=50, deadline=None)
def test_inverse_functions_compose_to_identity(value):
    u = seed_variable(value, 0, 1, 4)
    np.testing.assert_allclose(u.log().exp().coeffs, u.coeffs, atol=1e-12)
    np.testing.assert_allclose((u.sqrt() * u.sqrt()).coeffs, u.coeffs, atol=1e-12)
    np.testing.assert_allclose((u * u.reciprocal()).coeffs, Jet.constant(1.0, u.basis).coeffs, atol=1e-12)


@given(value=finite)
@settings(max_examples=50, deadline=None)
def test_pythagorean_identity(value):
    u = seed_variable(value, 0, 1, 4)
    total = u.sin() * u.sin() + u.cos() * u.cos()
    np.testing.assert_allclose(total.coeffs, Jet.constant(1.0, u.basis).coeffs, atol=1e-12)
