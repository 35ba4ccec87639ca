import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from g2hol import expr as ex
from g2hol.jet import eval_value


def test_parse_and_print_canonical():
    for src in ["x1^2*exp(x2)/(1+x3)", "-x1+2/3*x2-sqrt(x3)", "(x1+x2)^3", "x6^2/2", "x1^-2"]:
        assert ex.to_str(ex.parse(src)) == src


def test_whitespace_round_trips_up_to_ast():
    e = ex.parse(" x1 *  ( x2 + 1 ) ")
    assert ex.parse(ex.to_str(e)) == e


@pytest.mark.parametrize(
    "src, msg, offset",
    [
        ("x8", "unknown identifier", 0),
        ("1+", "unexpected end", 2),
        ("(x1", "expected ')'", 3),
        ("x1^x2", "integer literal", 3),
        ("foo(x1)", "unknown identifier", 0),
        ("1/0", "literal zero", 1),
    ],
)
def test_syntax_errors_carry_offsets(src, msg, offset):
    with pytest.raises(ex.ExprSyntaxError) as info:
        ex.parse(src)
    assert msg in str(info.value)
    assert info.value.offset == offset


def test_free_vars_and_diff():
    e = ex.parse("x1^2*exp(x2)/(1+x3)")
    assert ex.free_vars(e) == frozenset({1, 2, 3})
    assert ex.to_str(ex.diff(e, 1)) == "2*x1*exp(x2)/(1+x3)"
    assert ex.diff(e, 5) == ex.const(0)


def test_structural_equality_and_hash():
    assert ex.parse("x1+1") == ex.parse("x1+1")
    assert hash(ex.parse("x1+1")) == hash(ex.parse("x1+1"))
    assert ex.parse("x1+1") != ex.parse("1+x1")


# random expressions over x1..x3 for property tests
leaves = st.one_of(
    st.sampled_from(["x1", "x2", "x3"]),
    st.integers(1, 5).map(str),
    st.sampled_from(["1/2", "3/4"]),
)


def _combine(children):
    return st.one_of(
        st.tuples(children, children).map(lambda t: f"({t[0]}+{t[1]})"),
        st.tuples(children, children).map(lambda t: f"({t[0]}-{t[1]})"),
        st.tuples(children, children).map(lambda t: f"({t[0]}*{t[1]})"),
        st.tuples(children, st.integers(2, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
        children.map(lambda c: f"exp({c}/10)"),
        children.map(lambda c: f"1/(2+({c})^2)"),
    )


exprs = st.recursive(leaves, _combine, max_leaves=8)
point = np.array([0.3, 0.7, 0.45, 0.5, 0.5, 0.5, 0.5])


@settings(max_examples=80, deadline=None)
@given(exprs)
def test_printer_round_trip(src):
    e = ex.parse(src)
    assert ex.parse(ex.to_str(e)) == e


@settings(max_examples=60, deadline=None)
@given(exprs, st.integers(1, 3))
def test_symbolic_diff_matches_central_difference(src, i):
    e = ex.parse(src)
    d = float(eval_value(ex.diff(e, i), point))
    h = 1e-5
    up, dn = point.copy(), point.copy()
    up[i - 1] += h
    dn[i - 1] -= h
    fd = (float(eval_value(e, up)) - float(eval_value(e, dn))) / (2 * h)
    assert d == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_diff_of_exp_and_sqrt():
    x = np.array([0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
    e = ex.parse("sqrt(x1)*exp(x2)")
    d = float(eval_value(ex.diff(e, 1), x))
    assert d == pytest.approx(0.5 / math.sqrt(0.2) * math.exp(0.3))
