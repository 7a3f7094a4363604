"""
Тесты языка выражений
"""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ArgumentError, DomainError, ExpressionSyntaxError
from expression_parser import (
    BinaryOp, FunctionCall, Number, Power, UnaryMinus, Variable, parse_expression, pretty,
)
from jet_arithmetic import get_basis, seed_variable


@pytest.mark.parametrize("text, x, y, expected", [
    ("2 + 3*4", (), (), 14.0),
    ("(2 + 3)*4", (), (), 20.0),
    ("8 - 2 - 1", (), (), 5.0),
    ("8 / 4 / 2", (), (), 1.0),
    ("-y1^2", (0.0,), (3.0,), -9.0),
    ("2*x1^3", (2.0,), (1.0,), 16.0),
    ("x1^-2", (2.0,), (1.0,), 0.25),
    ("sqrt(y1^2 + y2^2)", (0.0, 0.0), (3.0, 4.0), 5.0),
    ("exp(log(x1)) + cos(0)", (2.5,), (1.0,), 3.5),
])
def test_evaluation_and_precedence(text, x, y, expected):
    dimension = max(len(x), 2)
    tree = parse_expression(text, dimension)
    x = tuple(x) + (0.0,) * (dimension - len(x))
    y = tuple(y) + (1.0,) * (dimension - len(y))
    assert tree.evaluate(x, y) == pytest.approx(expected)


def test_unary_minus_binds_looser_than_power():
    tree = parse_expression("-y1^2", 1)
    assert tree.root == UnaryMinus(Power(Variable("y", 0), 2))


def test_syntax_error_at_end_of_input():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("y1 +", 2)
    assert info.value.position == len("y1 +")
    assert "в конце ввода" in str(info.value)


def test_syntax_error_reports_position():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("y1 * * y2", 2)
    assert info.value.position == 5


@pytest.mark.parametrize("text", ["z1 + y1", "x3", "tan(x1)", "x0", "y1(x1)"])
def test_unknown_identifiers_rejected(text):
    with pytest.raises(ArgumentError):
        parse_expression(text, 2)


@pytest.mark.parametrize("text", ["", "   "])
def test_empty_expression_rejected(text):
    with pytest.raises(ArgumentError):
        parse_expression(text, 2)


def test_variables_and_fiber_dependence():
    tree = parse_expression("x1*y2 + x2", 2)
    assert tree.variables == {("x", 0), ("y", 1), ("x", 1)}
    assert tree.uses_y
    assert not parse_expression("sin(x1)", 2).uses_y


@pytest.mark.parametrize("text, x", [("1/(x1 - 1)", (1.0,)), ("sqrt(x1)", (-1.0,)), ("log(x1)", (0.0,)),
                                     ("x1^-1", (0.0,))])
def test_domain_errors(text, x):
    with pytest.raises(DomainError):
        parse_expression(text, 1).evaluate(x, (1.0,))


def test_jet_evaluation_matches_derivatives():
    basis = get_basis(2, 2)
    x = [seed_variable(0.5, 0, 2, 2)]
    y = [seed_variable(2.0, 1, 2, 2)]
    jet = parse_expression("sin(x1)*y1^2", 1).evaluate_jet(x, y, basis)
    assert jet.value == pytest.approx(math.sin(0.5) * 4.0)
    assert jet.partial((0,)) == pytest.approx(math.cos(0.5) * 4.0)
    assert jet.partial((1, 1)) == pytest.approx(2.0 * math.sin(0.5))
    assert jet.partial((0, 1)) == pytest.approx(4.0 * math.cos(0.5))


def test_constant_expression_becomes_constant_jet():
    basis = get_basis(2, 2)
    jet = parse_expression("3*2", 1).evaluate_jet([seed_variable(0.0, 0, 2, 2)],
                                                 [seed_variable(1.0, 1, 2, 2)], basis)
    assert jet.value == 6.0
    assert jet.partial((0,)) == 0.0


def test_scaled_and_sum_trees():
    a = parse_expression("x1", 1)
    b = parse_expression("y1", 1)
    assert (a.scaled(3.0) + b).evaluate((2.0,), (5.0,)) == pytest.approx(11.0)


# ----------------------------------------------------------------------
# Печать и повторный разбор
# ----------------------------------------------------------------------

DIMENSION = 2

leaves = st.one_of(
    st.floats(min_value=0.0, max_value=100.0, allow_nan=False, allow_infinity=False).map(Number),
    st.builds(Variable, st.sampled_from(["x", "y"]), st.integers(min_value=0, max_value=DIMENSION - 1)),
)


def _extend(children):
    return st.one_of(
        st.builds(UnaryMinus, children),
        st.builds(BinaryOp, st.sampled_from(["+", "-", "*", "/"]), children, children),
        st.builds(Power, children, st.integers(min_value=-3, max_value=4)),
        st.builds(FunctionCall, st.sampled_from(["sqrt", "sin", "cos", "exp", "log"]), children),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(node=trees)
@settings(max_examples=200, deadline=None)
def test_pretty_reparses_to_same_tree(node):
    text = pretty(node)
    assert parse_expression(text, DIMENSION).root == node
