from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from g2hol.exactnum import ExactMatrix, Scalar, commutator, rank
from g2hol.g2algebra import (
    THEOREM_ALGEBRAS,
    HElem,
    adjoint_exp,
    adjoint_exp_oracle,
    bracket,
    bracket_oracle,
    check_subalgebra,
    g2_basis,
    g2_matrix,
    get_subalgebra,
    inner_product_from_form,
    invariant_forms,
    membership,
    metric_matrix,
    nilpotent_exp,
    omega,
    omega_consistent,
    so_residual,
    stabilizer_residual,
)

rat = st.fractions(min_value=-5, max_value=5, max_denominator=6)
helems = st.builds(
    lambda a, v, y: HElem.make(((a[0], a[1]), (a[2], a[3])), v, y),
    st.tuples(rat, rat, rat, rat),
    rat,
    st.tuples(rat, rat),
)


def _e(i):
    return [1 if k == i else 0 for k in range(7)]


def test_basis_is_independent_closed_and_skew():
    basis = list(g2_basis())
    assert rank(ExactMatrix(14, 49, [b.vec() for b in basis])) == 14
    chk = check_subalgebra(get_subalgebra("g2star"))
    assert chk["closed"] and chk["independent"] and chk["in_so43"]
    for b in basis:
        assert so_residual(b).is_zero()


def test_g2_matrix_needs_14_parameters():
    with pytest.raises(ValueError):
        g2_matrix([0] * 13)


def test_consistent_form_is_the_unique_invariant():
    basis = list(g2_basis())
    for b in basis:
        assert stabilizer_residual(b, omega_consistent()) == {}
    inv = invariant_forms(basis)
    assert len(inv) == 1
    (form,) = inv
    k = next(iter(form))
    ratio = omega_consistent()[k] / form[k]
    assert {t: v * ratio for t, v in form.items()} == omega_consistent()


def test_printed_form_is_only_stabilised_by_the_first_four_generators():
    moved = [k + 1 for k, b in enumerate(g2_basis()) if stabilizer_residual(b, omega())]
    assert moved == list(range(5, 15))


def test_metric_from_consistent_form_matches_G():
    G = metric_matrix()
    for i in range(7):
        for j in range(i, 7):
            assert inner_product_from_form(omega_consistent(), _e(i), _e(j)) == G[i, j]


def test_metric_from_printed_form_flips_two_pairs():
    G = metric_matrix()
    bad = [(i + 1, j + 1) for i in range(7) for j in range(i, 7)
           if inner_product_from_form(omega(), _e(i), _e(j)) != G[i, j]]
    assert bad == [(2, 6), (3, 7)]


def test_embed_extract_round_trip():
    h = HElem.make(((1, 2), (3, Fraction(1, 2))), 5, (-1, 7))
    back, res = HElem.extract(h.embed())
    assert back == h and res.is_zero()
    hf = HElem.make(((1, 2), (3, 0.5)), 5, (-1, 7), exact=False)
    backf, r = HElem.extract(hf.embed())
    assert r == 0.0 and backf.coords() == hf.coords()


def test_every_h_element_lies_in_g2star():
    g2 = get_subalgebra("g2star")
    h = HElem.make(((1, 2), (3, -4)), 5, (6, 7))
    assert g2.contains_exact(h.embed()) is not None


@settings(max_examples=100, deadline=None)
@given(helems, helems)
def test_bracket_closed_form_matches_matrix_commutator(x, y):
    assert bracket(x, y) == bracket_oracle(x, y)


@settings(max_examples=100, deadline=None)
@given(helems, rat, st.tuples(rat, rat))
def test_adjoint_closed_form_matches_conjugation(x, vbar, ybar):
    elem, res = adjoint_exp_oracle(vbar, ybar, x)
    assert res.is_zero()
    assert adjoint_exp(Scalar(vbar), tuple(Scalar(t) for t in ybar), x) == elem


def test_bracket_worked_example():
    a = HElem.make(((1, 0), (0, 0)))
    y = HElem.make(y=(0, 1))
    # A y = 0 and tr(A) y = y, so the commutator is +h(0, 0, (0, 1))
    assert bracket(a, y) == HElem.make(y=(0, 1))
    assert bracket_oracle(a, y) == HElem.make(y=(0, 1))


def test_v_component_of_bracket_is_the_trace_cocycle():
    x = HElem.make(((2, 1), (0, 1)), 3, (0, 0))
    y = HElem.make(((1, 0), (4, 1)), -1, (0, 0))
    assert bracket(x, y).v == x.trace * y.v - x.v * y.trace


def test_nilpotent_exp_of_y_part_and_failure():
    n = HElem.make(y=(1, 2)).embed()
    e = nilpotent_exp(n)
    assert (e @ nilpotent_exp(-n)) == ExactMatrix.identity(7)
    with pytest.raises(ArithmeticError):
        nilpotent_exp(ExactMatrix.identity(3))


@pytest.mark.parametrize("name, dim", sorted(THEOREM_ALGEBRAS.items()))
def test_theorem_algebras_are_subalgebras_of_g2star(name, dim):
    chk = check_subalgebra(get_subalgebra(name))
    assert chk["dim"] == dim
    assert chk["independent"] and chk["closed"] and chk["in_so43"]
    assert chk["in_g2star"] and chk["annihilates_omega"]


def test_registry_extras():
    assert get_subalgebra("so43").dim == 21
    assert get_subalgebra("zero").dim == 0
    assert get_subalgebra("r_Ca(1/2)").dim == 4
    assert get_subalgebra(" rdiag_m12(-3) ").dim == 4
    assert get_subalgebra("rdiag_m11(0)").dim == 3
    with pytest.raises(KeyError):
        get_subalgebra("sl3")
    with pytest.raises(KeyError):
        get_subalgebra("r_Ca(x)")


def test_membership_coordinates_exact_and_float():
    spec = get_subalgebra("rdiag10_m12")
    m = HElem.make(((1, 0), (0, 0)), 3, (1, 2)).embed()
    c, res = membership(m, spec)
    assert res == 0.0 and c == [Scalar(1), Scalar(3), Scalar(1), Scalar(2)]
    cf, rf = membership(m.to_numpy(), spec)
    np.testing.assert_allclose(cf, [1, 3, 1, 2], atol=1e-12)
    assert rf < 1e-12
    outside = HElem.make(((0, 1), (0, 0))).embed()
    _, r2 = membership(outside, spec)
    assert r2 > 0.5


def test_membership_handles_stacks_and_empty_algebra():
    spec = get_subalgebra("m11")
    stack = np.stack([HElem.make(v=1).embed().to_numpy(), np.eye(7)])
    _, res = membership(stack, spec)
    assert res[0] < 1e-12 and res[1] > 1
    _, rz = membership(np.eye(7), get_subalgebra("zero"))
    assert rz == pytest.approx(np.sqrt(7))


def test_so43_bracket_closure_sample():
    so = get_subalgebra("so43")
    a, b = so.basis[0], so.basis[5]
    assert so.contains_exact(commutator(a, b)) is not None
