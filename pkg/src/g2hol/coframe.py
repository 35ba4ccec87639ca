"""The eight Type III coframe families, their constraint PDEs and metric assembly.

A case is described by a 7x7 matrix ``B`` of expressions with
``b^i = sum_j B[i][j] dx_j`` (1-based in docs, 0-based in storage) and the
metric ``g = B^T G B`` for the canonical split metric ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType

import numpy as np

from . import expr as ex
from .expr import diff, exp_, var
from .g2algebra import G_FLOAT, THEOREM_ALGEBRAS
from .jet import Jet, eval_jets, jet_einsum

CASE_IDS = ("1a", "1b", "1c", "1d", "2a", "2b", "2c", "2d")

_F = frozenset
_X567 = _F({5, 6, 7})
_X23567 = _F({2, 3, 5, 6, 7})

# permitted coordinates for every free function of every case
CASE_SLOTS = {
    "1a": {"u": _X567, "s6": _X23567, "t6": _X23567, "t7": _X23567,
           "F4": _X567, "F5": _X567, "F6": _X567, "F7": _X567},
    "1b": {"r6": _X567, "r7": _X567, "s6": _X23567, "t6": _X23567, "t7": _X23567,
           "F4": _X567, "F5": _X567},
    "1c": {"u": _X567, "v": _F({6, 7}), "F1": _X567, "F2": _X567, "F3": _X567,
           "F4": _X567, "F5": _X567, "F6": _X567, "F7": _X567},
    "1d": {"u": _X567, "F1": _F({5, 6}), "F2": _F({5, 7}), "F5": _X567, "F6": _X567,
           "F7": _X567},
    "2a": {"v": _F({5, 6}), "t5": _F({5, 6}), "F5": _F({5, 6}), "F6": _F({5, 7})},
    "2b": {"v": _F({5, 6}), "F5": _X567, "F6": _X567},
    "2c": {"t5": _F({5, 6}), "F5": _X567, "F7": _F({5, 7})},
    "2d": {"r6": _X567, "F": _X567},
}

EXPECTED_ALGEBRA = {
    "1a": "gl2_m12",
    "1b": "sl2_m12",
    "1c": "co2_m12",
    "1d": "d_m12",
    "2a": "rdiag10_m11",
    "2b": "rdiag10_m12",
    "2c": "m11",
    "2d": "m12",
}

DEFAULT_LO, DEFAULT_HI = 0.1, 0.9
DEPENDENCE_TOL = 1e-12
COND_LIMIT = 1e8


class CoframeError(ValueError):
    """Invalid slot bundle or unusable coframe."""


class SlotDependenceError(CoframeError):
    def __init__(self, case_id: str, slot: str, variable: int, value: float):
        self.case_id, self.slot, self.variable = case_id, slot, variable
        super().__init__(
            f"case {case_id}: slot {slot!r} depends on x{variable} "
            f"(d/dx{variable} = {value:.3g}); allowed: "
            + ", ".join(f"x{v}" for v in sorted(CASE_SLOTS[case_id][slot]))
        )


class SingularCoframeError(CoframeError):
    def __init__(self, point, detail: str):
        self.point = np.asarray(point)
        super().__init__(f"{detail} at point {np.array2string(self.point, precision=6)}")


@dataclass(frozen=True)
class CoframeCase:
    case_id: str
    slots: MappingProxyType
    B: tuple
    constraints: tuple  # of (name, Expr)
    derived: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    @property
    def expected_algebra(self) -> str:
        return EXPECTED_ALGEBRA[self.case_id]

    @property
    def expected_dim(self) -> int:
        return THEOREM_ALGEBRAS[self.expected_algebra]

    def entries(self) -> list:
        """All 49 entries of B in row-major order."""
        return [e for row in self.B for e in row]


def sample_points(seed: int, n: int, lo: float = DEFAULT_LO, hi: float = DEFAULT_HI) -> np.ndarray:
    """``n`` points drawn uniformly from the box ``[lo, hi]^7`` (PCG64, reproducible)."""
    if n < 1:
        raise ValueError("need at least one point")
    if not hi > lo:
        raise ValueError("empty sample box")
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(n, 7))


# ---------------------------------------------------------------------------
# case construction


def _D(e, i):
    return diff(e, i)


def _integrability(s6, s7, t6, t7):
    """The two nonlinear conditions shared by 1a, 1b and 1c, written as lhs - rhs."""
    c3 = (_D(s7, 6) + t7 * _D(s6, 3) + s7 * _D(s6, 2)
          - _D(s6, 7) - t6 * _D(s7, 3) - s6 * _D(s7, 2))
    c4 = (_D(t7, 6) + t7 * _D(t6, 3) + s7 * _D(t6, 2)
          - _D(t6, 7) - t6 * _D(t7, 3) - s6 * _D(t7, 2))
    return c3, c4


def _derive(case_id: str, s: dict):
    """Return (entries {(row, col): Expr} 1-based, constraints, derived)."""
    x = {i: var(i) for i in range(1, 8)}
    rt2 = ex.sqrt_(ex.const(2))
    ent: dict = {}
    cons: list = []
    der: dict = {}

    if case_id in ("1a", "1c", "1d"):
        u = s["u"]
        E = exp_(u)
        ent[(5, 5)] = E
        r6 = x[1] * _D(u, 6) + s["F6"]
        r7 = x[1] * _D(u, 7) + s["F7"]
        bracket_ = _D(E * s["F6"], 7) - _D(E * s["F7"], 6)
        if case_id != "1d":
            bracket_ = bracket_ - _D(s["F4"], 5)
        r5 = x[4] / rt2 * bracket_ + s["F5"]
        der.update(r5=r5, r6=r6, r7=r7)
        ent.update({(1, 5): r5, (1, 6): r6, (1, 7): r7})

    if case_id == "1a":
        s6, t6, t7 = s["s6"], s["t6"], s["t7"]
        s7 = t6 + s["F4"]
        der["s7"] = s7
        ent.update({(2, 6): s6, (2, 7): s7, (3, 6): t6, (3, 7): t7})
        cons.append(("u_x6 = s6_x2 + t6_x3", _D(u, 6) - _D(s6, 2) - _D(t6, 3)))
        cons.append(("u_x7 = t7_x3 + t6_x2", _D(u, 7) - _D(t7, 3) - _D(t6, 2)))
        c3, c4 = _integrability(s6, s7, t6, t7)
        cons += [("integrability s", c3), ("integrability t", c4)]

    elif case_id == "1b":
        s6, t6, t7 = s["s6"], s["t6"], s["t7"]
        r6, r7 = s["r6"], s["r7"]
        r5 = x[4] / rt2 * (_D(r6, 7) - _D(r7, 6) - _D(s["F4"], 5)) + s["F5"]
        s7 = t6 + s["F4"]
        der.update(r5=r5, s7=s7)
        ent.update({(1, 5): r5, (1, 6): r6, (1, 7): r7,
                    (2, 6): s6, (2, 7): s7, (3, 6): t6, (3, 7): t7})
        cons.append(("s6_x2 = -t6_x3", _D(s6, 2) + _D(t6, 3)))
        cons.append(("t7_x3 = -t6_x2", _D(t7, 3) + _D(t6, 2)))
        c3, c4 = _integrability(s6, s7, t6, t7)
        cons += [("integrability s", c3), ("integrability t", c4)]

    elif case_id == "1c":
        v = s["v"]
        W = _D(u, 7) - v * _D(u, 6) + 2 * _D(v, 6)
        half = ex.const(Fraction(1, 2))
        s6 = -(x[3] * half) * W + x[2] * half * _D(u, 6) + s["F1"]
        t6 = x[2] * half * W + x[3] * half * _D(u, 6) + s["F2"]
        s7 = t6 + v * s6 - x[2] * _D(v, 6) + s["F3"]
        t7 = x[3] * half * _D(u, 7) - x[2] * half * _D(u, 6) + v * t6 + s["F4"]
        der.update(s6=s6, t6=t6, s7=s7, t7=t7)
        ent.update({(2, 6): s6, (2, 7): s7, (3, 6): t6, (3, 7): t7, (6, 7): v})
        c3, c4 = _integrability(s6, s7, t6, t7)
        # the two conditions are stated with the opposite overall sign
        cons += [("condition 1", -c3), ("condition 2", -c4)]

    elif case_id == "1d":
        s6 = x[2] * _D(u, 6) + s["F1"]
        t7 = x[3] * _D(u, 7) + s["F2"]
        der.update(s6=s6, t7=t7)
        ent.update({(2, 6): s6, (3, 7): t7})
        cons.append(("u_x6 independent of x7", _D(_D(u, 6), 7)))
        cons.append(("u_x7 independent of x6", _D(_D(u, 7), 6)))

    elif case_id == "2a":
        v, t5 = s["v"], s["t5"]
        v6, t56 = _D(v, 6), _D(t5, 6)
        r5 = (-x[1] * v6 - x[2] * v * v6 - rt2 * x[4] * t56 - x[7] * v * t56 + s["F5"])
        r6 = -x[2] * v6 - x[7] * t56 + s["F6"]
        der.update(r5=r5, r6=r6)
        ent.update({(1, 5): r5, (1, 6): r6, (3, 5): t5, (6, 5): v})

    elif case_id == "2b":
        v = s["v"]
        v6 = _D(v, 6)
        r5 = x[4] / rt2 * _D(s["F6"], 7) - x[2] * v * v6 - x[1] * v6 + s["F5"]
        r6 = -x[2] * v6 + s["F6"]
        der.update(r5=r5, r6=r6)
        ent.update({(1, 5): r5, (1, 6): r6, (6, 5): v})

    elif case_id == "2c":
        t5 = s["t5"]
        r5 = -rt2 * x[4] * _D(t5, 6) + s["F5"]
        r7 = t5 + s["F7"]
        der.update(r5=r5, r7=r7)
        ent.update({(1, 5): r5, (1, 7): r7, (3, 5): t5})
        cons.append(("F5_x7 = t5_x5 + F7_x5", _D(s["F5"], 7) - _D(t5, 5) - _D(s["F7"], 5)))

    elif case_id == "2d":
        r6 = s["r6"]
        r5 = x[4] / rt2 * _D(r6, 7) + s["F"]
        der["r5"] = r5
        ent.update({(1, 5): r5, (1, 6): r6})

    return ent, cons, der


def _guard_points() -> np.ndarray:
    return sample_points(12345, 5)


def check_dependence(case_id: str, slots: dict, points=None) -> None:
    """Raise :class:`SlotDependenceError` if a slot varies in a forbidden coordinate.

    Symbolically absent variables pass immediately; others are tested through
    exact first derivatives (jets) at sample points.
    """
    points = _guard_points() if points is None else np.asarray(points, dtype=float)
    for name, e in slots.items():
        allowed = CASE_SLOTS[case_id][name]
        extra = sorted(ex.free_vars(e) - allowed)
        if not extra:
            continue
        (j,) = eval_jets([e], points, 1)
        grad = np.atleast_2d(j.gradient())
        for v in extra:
            worst = float(np.max(np.abs(grad[:, v - 1])))
            if not np.isfinite(worst) or worst >= DEPENDENCE_TOL:
                raise SlotDependenceError(case_id, name, v, worst)


def build_case(case_id: str, slots: dict, check: bool = True) -> CoframeCase:
    """Assemble a case from its free functions (Expr or source strings)."""
    if case_id not in CASE_SLOTS:
        raise CoframeError(f"unknown case {case_id!r}; expected one of {', '.join(CASE_IDS)}")
    allowed = CASE_SLOTS[case_id]
    unknown = sorted(set(slots) - set(allowed))
    if unknown:
        raise CoframeError(f"case {case_id}: unknown slot(s) {', '.join(unknown)}; "
                           f"expected {', '.join(allowed)}")
    missing = [k for k in allowed if k not in slots]
    if missing:
        raise CoframeError(f"case {case_id}: missing slot(s) {', '.join(missing)}")
    parsed = {}
    for k in allowed:
        val = slots[k]
        if isinstance(val, str):
            try:
                val = ex.parse(val)
            except ex.ExprSyntaxError as err:
                raise ex.ExprSyntaxError(f"slot {k}: {err.message}", err.offset, err.src) from None
        parsed[k] = ex.as_expr(val)
    if check:
        check_dependence(case_id, parsed)
    ent, cons, der = _derive(case_id, parsed)
    rows = []
    for i in range(1, 8):
        rows.append(tuple(ent.get((i, j), ex.ONE if i == j else ex.ZERO) for j in range(1, 8)))
    return CoframeCase(
        case_id,
        MappingProxyType(parsed),
        tuple(rows),
        tuple(cons),
        MappingProxyType(der),
    )


# ---------------------------------------------------------------------------
# evaluation


def constraint_residuals(case: CoframeCase, points) -> dict:
    """Max absolute residual of each constraint over ``points`` (shape (n, 7))."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not case.constraints:
        return {}
    jets = eval_jets([c for _, c in case.constraints], points, 0)
    out = {}
    for (name, _), j in zip(case.constraints, jets):
        vals = np.broadcast_to(j.value, points.shape[:1])
        if not np.all(np.isfinite(vals)):
            bad = points[int(np.argmin(np.isfinite(vals)))]
            raise SingularCoframeError(bad, f"constraint {name!r} is not finite")
        out[name] = float(np.max(np.abs(vals)))
    return out


def max_constraint_residual(case: CoframeCase, points) -> float:
    res = constraint_residuals(case, points)
    return max(res.values(), default=0.0)


def coframe_jet(case: CoframeCase, point, order: int) -> Jet:
    """Jet of B at ``point``: shape batch + (7, 7)."""
    point = np.asarray(point, dtype=float)
    jets = eval_jets(case.entries(), point, order)
    c = np.stack([j.coeffs for j in jets], axis=-2)
    c = c.reshape(c.shape[:-2] + (7, 7, c.shape[-1]))
    return Jet(c, order, point)


def check_coframe(bvals: np.ndarray, points) -> None:
    """Reject non-finite or ill-conditioned coframe values (``bvals`` shape (..., 7, 7))."""
    points = np.asarray(points)
    flat = bvals.reshape((-1, 7, 7))
    pts = points.reshape((-1, 7))
    for k, b in enumerate(flat):
        if not np.all(np.isfinite(b)):
            raise SingularCoframeError(pts[k], "coframe is not finite")
        kappa = np.linalg.cond(b)
        if not kappa < COND_LIMIT:
            raise SingularCoframeError(pts[k], f"coframe condition number {kappa:.3g} exceeds {COND_LIMIT:g}")


def metric_at(case: CoframeCase, point, order: int):
    """Jets of ``g = B^T G B`` at ``point``; returns ``(g, B)`` jets of shape batch + (7, 7)."""
    b = coframe_jet(case, point, order)
    check_coframe(b.value, point)
    gb = Jet(np.einsum("kl,...lja->...kja", G_FLOAT, b.coeffs), order, b.center)
    g = jet_einsum("...ki,...kj->...ij", b, gb)
    # symmetrise away rounding so g_ij == g_ji bit for bit
    g.coeffs = 0.5 * (g.coeffs + np.swapaxes(g.coeffs, -2, -3))
    return g, b


def signature(gval: np.ndarray) -> tuple:
    """(negative, positive) eigenvalue counts; the canonical G gives (4, 3)."""
    w = np.linalg.eigvalsh(gval)
    return int(np.sum(w < 0)), int(np.sum(w > 0))


# ---------------------------------------------------------------------------
# the built-in examples

_EXAMPLES = {
    "1a": {
        "u": "4/3*x6+4*x7/(1+exp(x5))",
        "s6": "(x2+x3*(1+exp(x5)))/3",
        "t6": "(x2+x3*(1+exp(x5)))/(1+exp(x5))",
        "t7": "3*(x2+x3*(1+exp(x5)))/(1+exp(x5))^2",
        "F4": "0",
        "F5": "0",
        "F6": "x6*x7",
        "F7": "0",
    },
    "1b": {
        "r6": "x6*x7",
        "r7": "0",
        "s6": "-(x2+x3*(1+exp(x5)))",
        "t6": "(x2+x3*(1+exp(x5)))/(1+exp(x5))",
        "t7": "-(x2+x3*(1+exp(x5)))/(1+exp(x5))^2",
        "F4": "0",
        "F5": "0",
    },
    "1c": {
        "u": "x5*x6",
        "v": "0",
        "F1": "0",
        "F2": "0",
        "F3": "0",
        "F4": "0",
        "F5": "0",
        "F6": "x5*x6*x7",
        "F7": "0",
    },
    "1d": {
        "u": "exp(x5*(x6+x7))",
        "F1": "0",
        "F2": "0",
        "F5": "0",
        "F6": "x5*x6*x7",
        "F7": "0",
    },
    "2a": {"v": "x6^2/2", "t5": "x6^3/6", "F5": "0", "F6": "0"},
    "2b": {"v": "x6^2/2", "F5": "0", "F6": "-x7^2"},
    "2c": {"t5": "x6^2/2", "F5": "0", "F7": "0"},
    "2d": {"r6": "-2*x6*x7", "F": "x7^2/2"},
}


@dataclass(frozen=True)
class Example:
    case_id: str
    slots: dict
    expected_algebra: str
    expected_dim: int

    def build(self) -> CoframeCase:
        return build_case(self.case_id, self.slots)


# Self-consistent readings of examples whose printed slots miss their own conditions.
# 1d: u = exp(x5*(x6+x7)) has D6 D7 u = x5^2 exp(x5*(x6+x7)) != 0, while the exponent
# x5*(x6+x7) on its own (so that B[5][5] = e^u = exp(x5*(x6+x7))) satisfies both conditions.
CONSISTENT_VARIANTS = {"1d": {"u": "x5*(x6+x7)"}}


def paper_examples(consistent: bool = False) -> dict:
    """The eight built-in examples keyed by case id (slot sources as strings).

    ``consistent=True`` swaps in :data:`CONSISTENT_VARIANTS`; the default keeps the
    printed slots.
    """
    out = {}
    for c in CASE_IDS:
        slots = dict(_EXAMPLES[c])
        if consistent:
            slots.update(CONSISTENT_VARIANTS.get(c, {}))
        out[c] = Example(c, slots, EXPECTED_ALGEBRA[c], THEOREM_ALGEBRAS[EXPECTED_ALGEBRA[c]])
    return out


def flat_slots(case_id: str) -> dict:
    """Every slot set to zero (for 1a/1c/1d this gives B[5][5] = e^0 = 1)."""
    return {k: "0" for k in CASE_SLOTS[case_id]}
