import numpy as np
import pytest

from g2hol import expr as ex
from g2hol.jet import Jet, JetDomainError, eval_jet, eval_jets, eval_value, jet_einsum, jet_matinv

P = np.array([0.3, 0.7, 0.45, 0.2, 0.6, 0.35, 0.55])
SRC = "x5^2*exp(x6*x7)/(1+x5)+sqrt(1+x1*x2)"


def _alpha(*idx):
    a = [0] * 7
    for i in idx:
        a[i - 1] += 1
    return tuple(a)


@pytest.mark.parametrize("idx", [(5,), (6,), (5, 6), (7, 7), (5, 6, 7), (1, 2, 2), (5, 5, 6, 7)])
def test_jet_derivatives_match_symbolic(idx):
    e = ex.parse(SRC)
    j = eval_jet(e, P, 4)
    d = e
    for i in idx:
        d = ex.diff(d, i)
    assert j.derivative(_alpha(*idx)) == pytest.approx(float(eval_value(d, P)), rel=1e-12)


def test_deriv_lowers_order_and_commutes():
    j = eval_jet(ex.parse(SRC), P, 3)
    a = j.deriv(5).deriv(6)
    b = j.deriv(6).deriv(5)
    assert a.order == 1
    np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-13)


def test_truncate_keeps_low_coefficients():
    j = eval_jet(ex.parse(SRC), P, 3)
    t = j.truncate(1)
    np.testing.assert_array_equal(t.coeffs, j.coeffs[:8])
    with pytest.raises(ValueError):
        t.truncate(2)


def test_batched_evaluation_matches_single_points():
    pts = np.stack([P, P[::-1], np.full(7, 0.5)])
    e = ex.parse(SRC)
    jb = eval_jet(e, pts, 2)
    for k in range(3):
        np.testing.assert_allclose(jb.coeffs[k], eval_jet(e, pts[k], 2).coeffs, rtol=1e-14)


def test_eval_jets_shares_subtrees():
    a, b = eval_jets([ex.parse("exp(x1)"), ex.parse("exp(x1)*x2")], P, 2)
    assert a.value == pytest.approx(np.exp(P[0]))
    assert b.gradient()[1] == pytest.approx(np.exp(P[0]))


def test_matinv_against_numpy_and_derivative_identity():
    rng = np.random.default_rng(1)
    entries = [f"{rng.integers(1, 4)}*x{1 + (k % 7)}+{k % 3 + (4 if k % 8 == 0 else 0)}" for k in range(9)]
    jets = eval_jets([ex.parse(s) for s in entries], P, 2)
    c = np.stack([j.coeffs for j in jets]).reshape(3, 3, -1)
    m = Jet(c, 2)
    inv = jet_matinv(m)
    np.testing.assert_allclose(inv.value, np.linalg.inv(m.value), rtol=1e-12)
    prod = jet_einsum("ij,jk->ik", m, inv)
    target = np.zeros_like(prod.coeffs)
    target[..., 0] = np.eye(3)
    np.testing.assert_allclose(prod.coeffs, target, atol=1e-12)


def test_domain_errors():
    with pytest.raises(JetDomainError):
        eval_jet(ex.parse("1/(x1-x1)"), P, 1)
    with pytest.raises(JetDomainError):
        eval_jet(ex.parse("sqrt(x1-1)"), P, 1)


def test_point_shape_checked():
    with pytest.raises(ValueError):
        eval_jet(ex.parse("x1"), np.zeros(6), 1)
