"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line.  Sub-checks that
fail on the printed data (rather than on the implementation) are reported with
the measured numbers and the result of the self-consistent reading, but the
assertion still targets the printed data.
"""

import random
import time
from fractions import Fraction

import numpy as np

from g2hol.berger import berger_verdict, ca_system_nullspace, solve_K, table1_crosscheck
from g2hol.cli import main
from g2hol.coframe import CASE_IDS, build_case, constraint_residuals, flat_slots, metric_at, paper_examples
from g2hol.coframe import sample_points, signature
from g2hol.curvature import (
    christoffel_fd,
    curvature_at,
    first_bianchi_residual,
    relative_error,
    relative_membership,
    riemann_fd,
    second_bianchi_residual,
)
from g2hol.exactnum import ExactMatrix, Scalar, commutator, rank
from g2hol.g2algebra import (
    THEOREM_ALGEBRAS,
    HElem,
    adjoint_exp,
    adjoint_exp_oracle,
    bracket,
    bracket_oracle,
    g2_basis,
    get_subalgebra,
    inner_product_from_form,
    metric_matrix,
    omega,
    omega_consistent,
    so_residual,
    stabilizer_residual,
)
from g2hol.holonomy import certify, eps_scaling, frame_logs, transport_residual

POINTS = sample_points(0, 20)
BASE = np.full(7, 0.5)


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _metric_mismatches(w):
    G = metric_matrix()
    e = [[1 if k == i else 0 for k in range(7)] for i in range(7)]
    return [(i + 1, j + 1) for i in range(7) for j in range(i, 7)
            if inner_product_from_form(w, e[i], e[j]) != G[i, j]]


def test_criterion_1_algebra_layer(report_line):
    t0 = time.perf_counter()
    basis = list(g2_basis())
    independent = rank(ExactMatrix(14, 49, [b.vec() for b in basis])) == 14
    g2 = get_subalgebra("g2star")
    closed = all(g2.contains_exact(commutator(a, b)) is not None
                 for i, a in enumerate(basis) for b in basis[i + 1:])
    skew = all(so_residual(b).is_zero() for b in basis)
    moved = [k + 1 for k, b in enumerate(basis) if stabilizer_residual(b, omega())]
    bad_pairs = _metric_mismatches(omega())
    moved_c = [k + 1 for k, b in enumerate(basis) if stabilizer_residual(b, omega_consistent())]
    bad_c = _metric_mismatches(omega_consistent())
    elapsed = time.perf_counter() - t0
    ok = independent and closed and skew and not moved and not bad_pairs and elapsed < 1.0
    report_line(
        f"criterion 1: {_verdict(ok)} independent={independent} closed={closed} skew={skew} "
        f"stabiliser nonzero for s{moved[0] if moved else '-'}..s{moved[-1] if moved else '-'} ({len(moved)}/14) "
        f"metric mismatch on pairs {bad_pairs} of 28; with b^26, b^37 sign-flipped form: "
        f"{len(moved_c)}/14 nonzero, {len(bad_c)} mismatches; {elapsed:.2f}s"
    )
    assert independent and closed and skew
    assert elapsed < 1.0
    assert moved == [], f"printed 3-form is moved by generators {moved}"
    assert bad_pairs == [], f"printed 3-form induces the wrong metric on {bad_pairs}"


def _rand_helem(rng: random.Random) -> HElem:
    def q():
        return Fraction(rng.randint(-9, 9), rng.randint(1, 6))

    return HElem.make(((q(), q()), (q(), q())), q(), (q(), q()))


def test_criterion_2_commutator_and_adjoint(report_line):
    rng = random.Random(2024)
    n_br = n_ad = 0
    for _ in range(100):
        x, y = _rand_helem(rng), _rand_helem(rng)
        n_br += bracket(x, y) == bracket_oracle(x, y)
        vbar = Fraction(rng.randint(-9, 9), rng.randint(1, 6))
        ybar = (Fraction(rng.randint(-9, 9), rng.randint(1, 6)), Fraction(rng.randint(-9, 9), 1))
        elem, res = adjoint_exp_oracle(vbar, ybar, x)
        n_ad += res.is_zero() and adjoint_exp(Scalar(vbar), (Scalar(ybar[0]), Scalar(ybar[1])), x) == elem
    ok = n_br == 100 and n_ad == 100
    report_line(f"criterion 2: {_verdict(ok)} bracket {n_br}/100 exact, adjoint {n_ad}/100 exact")
    assert ok


def test_criterion_3_berger_layer(report_line):
    t0 = time.perf_counter()
    K = solve_K("h_III")
    cross = table1_crosscheck(K)
    cross_c = table1_crosscheck(K, consistent=True)
    dims = {name: berger_verdict(name) for name in THEOREM_ALGEBRAS}
    dims_ok = all(v["berger_ok"] and v["dim_underline"] == THEOREM_ALGEBRAS[n] for n, v in dims.items())
    alphas = [0, 1, -1, 2, Fraction(1, 3)]
    ca_trivial = all(ca_system_nullspace(a) == [] for a in alphas)
    ca_proper = []
    for a in alphas:
        name = f"r_Ca({a})"
        v = berger_verdict(name)
        ca_proper.append(v["dim_underline"] < get_subalgebra(name).dim)
    elapsed = time.perf_counter() - t0
    ok = (len(K) == 16 and cross["equal"] and dims_ok and ca_trivial and all(ca_proper) and elapsed < 30)
    report_line(
        f"criterion 3: {_verdict(ok)} dimK(h_III)={len(K)}; table vs K: dim_table={cross['dim_table']} "
        f"dim_joint={cross['dim_joint']} Bianchi broken by {cross['table_not_in_K']} (R27 y1 = c2 as printed; "
        f"with y1 = c1 equal={cross_c['equal']}); underline dims "
        f"{tuple(dims[n]['dim_underline'] for n in THEOREM_ALGEBRAS)} ok={dims_ok}; "
        f"C_a nullspace trivial={ca_trivial}, underline proper={all(ca_proper)}; {elapsed:.1f}s"
    )
    assert len(K) == 16
    assert dims_ok and ca_trivial and all(ca_proper)
    assert elapsed < 30
    assert cross["equal"], f"table span differs from K(h_III): {cross}"


def test_criterion_4_metric_layer(report_line):
    t0 = time.perf_counter()
    worst, sig_bad = {}, []
    for c, e in paper_examples().items():
        cs = e.build()
        worst[c] = max(constraint_residuals(cs, POINTS).values(), default=0.0)
        g, _ = metric_at(cs, POINTS, 0)
        if any(signature(gv) != (4, 3) for gv in g.value):
            sig_bad.append(c)
    fixed = paper_examples(consistent=True)["1d"].build()
    fixed_res = max(constraint_residuals(fixed, POINTS).values())
    elapsed = time.perf_counter() - t0
    failing = {c: r for c, r in worst.items() if not r < 1e-10}
    ok = not failing and not sig_bad and elapsed < 10
    report_line(
        f"criterion 4: {_verdict(ok)} constraint failures {', '.join(f'{c}={r:.3g}' for c, r in failing.items()) or 'none'} "
        f"(1d with u = x5*(x6+x7): {fixed_res:.1e}); signature (4,3) failures: {sig_bad or 'none'}; {elapsed:.2f}s"
    )
    assert not sig_bad and elapsed < 10
    assert not failing, f"examples miss their own conditions: {failing}"


def test_criterion_5_curvature_layer(report_line):
    t0 = time.perf_counter()
    rows, bad = [], []
    for c, e in paper_examples().items():
        cs = e.build()
        cv = curvature_at(cs, POINTS)
        alg = cs.expected_algebra
        th = float(relative_membership(cv.theta, alg).max())
        mem = float(max(relative_membership(cv.frame_pairs(), alg).max(),
                        relative_membership(cv.nabla_frame_pairs(), alg).max()))
        b1 = first_bianchi_residual(cv.R)
        b2 = second_bianchi_residual(cv.nabla_R)
        fd = max(relative_error(cv.gamma[0], christoffel_fd(cs, POINTS[0])),
                 relative_error(cv.R[0], riemann_fd(cs, POINTS[0])))
        if not (th < 1e-8 and mem < 1e-8 and b1 < 1e-10 and b2 < 1e-8 and fd < 1e-5):
            bad.append(f"{c}(theta={th:.2g}, R/nablaR={mem:.2g}, b1={b1:.1e}, b2={b2:.1e}, fd={fd:.1e})")
        rows.append((th, mem, b1, b2, fd))
    fixed = curvature_at(paper_examples(consistent=True)["1d"].build(), POINTS)
    fixed_mem = float(max(relative_membership(fixed.frame_pairs(), "d_m12").max(),
                          relative_membership(fixed.theta, "d_m12").max()))
    elapsed = time.perf_counter() - t0
    worst = np.max(np.array(rows), axis=0)
    ok = not bad and elapsed < 60
    report_line(
        f"criterion 5: {_verdict(ok)} worst theta={worst[0]:.1e} R/nablaR={worst[1]:.1e} "
        f"bianchi1={worst[2]:.1e} bianchi2={worst[3]:.1e} fd={worst[4]:.1e}; failing: {', '.join(bad) or 'none'} "
        f"(1d with u = x5*(x6+x7): {fixed_mem:.1e}); {elapsed:.1f}s"
    )
    assert elapsed < 60
    assert not bad, bad


def test_criterion_6_holonomy_certificates(report_line):
    t0 = time.perf_counter()
    span_bad, trans_bad = [], []
    for c, e in paper_examples().items():
        cert = certify(e.build(), POINTS)
        if cert.span_dim_total != cert.expected_dim or (cert.gap is not None and cert.gap < 10):
            span_bad.append(f"{c}:{cert.span_dim_total}/{cert.expected_dim}")
        logs = frame_logs(e.build(), BASE)
        tr = transport_residual(logs, 1e-2, cert.expected_algebra)
        if not tr < 1e-4:
            trans_bad.append(f"{c}:{tr:.2g}")
    flat = {c: certify(build_case(c, flat_slots(c)), POINTS).span_dim_total for c in CASE_IDS}
    flat_ok = all(d == 0 for d in flat.values())
    sc = eps_scaling(paper_examples()["2d"].build(), BASE, (4, 5))
    # 2d has nabla R = 0: log/eps^2 = -R up to rounding at both sizes, so the
    # first-order bound holds with a vanishing constant and no ratio is defined
    scaling_ok = (sc["order"] is not None and sc["order"] >= 0.9) or sc["error_eps"] < 1e-9
    sc_1a = eps_scaling(paper_examples()["1a"].build(), BASE, (4, 5))
    fixed = certify(paper_examples(consistent=True)["1d"].build(), POINTS)
    elapsed = time.perf_counter() - t0
    ok = not span_bad and not trans_bad and flat_ok and scaling_ok and elapsed < 120
    order = "n/a" if sc["order"] is None else f"{sc['order']:.2f}"
    report_line(
        f"criterion 6: {_verdict(ok)} span mismatches: {span_bad or 'none'}; loop residual failures: "
        f"{trans_bad or 'none'}; flat spans {sorted(set(flat.values()))}; eps-scaling on 2d: "
        f"err(eps)={sc['error_eps']:.1e} err(eps/2)={sc['error_half']:.1e} order={order} "
        f"(nabla R = 0, error at rounding level; 1a shows order {sc_1a['order']:.2f}); "
        f"1d with u = x5*(x6+x7): {fixed.verdict} dim {fixed.span_dim_total}; {elapsed:.1f}s"
    )
    assert flat_ok and scaling_ok and elapsed < 120
    assert not span_bad and not trans_bad, (span_bad, trans_bad)


def test_criterion_7_determinism(report_line, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["examples", "--seed", "11", "--out", str(a)])
    main(["examples", "--seed", "11", "--out", str(b)])
    capsys.readouterr()
    same = a.read_bytes() == b.read_bytes()
    report_line(f"criterion 7: {_verdict(same)} two runs with seed 11 -> {len(a.read_bytes())} bytes, identical={same}")
    assert same
