"""Truncated multivariate Taylor jets and jet evaluation of expressions.

A jet of order K in n variables stores the Taylor coefficients
``f_alpha = d^alpha f(p) / alpha!`` for every multi-index ``|alpha| <= K``.
Coefficients live on the last axis of a numpy array, so leading axes can
hold a batch of points or a matrix of functions; every operation
broadcasts over them.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement
from math import factorial

import numpy as np

from . import expr as ex

__all__ = [
    "JetSpace",
    "Jet",
    "JetDomainError",
    "eval_jet",
    "eval_jets",
    "eval_value",
    "jet_einsum",
    "jet_matinv",
    "MAX_ORDER",
]

MAX_ORDER = 4
NVARS = 7
_TINY = 1e-300


class JetDomainError(ArithmeticError):
    """Evaluation left the domain of the expression (division by ~0, sqrt of a negative)."""


class JetSpace:
    """Index bookkeeping for jets of a fixed order and number of variables."""

    def __init__(self, order: int, nvars: int = NVARS):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
        self.order = order
        self.nvars = nvars
        idx: list[tuple[int, ...]] = []
        for deg in range(order + 1):
            for combo in combinations_with_replacement(range(nvars), deg):
                a = [0] * nvars
                for c in combo:
                    a[c] += 1
                idx.append(tuple(a))
        self.indices = idx
        self.size = len(idx)
        self.position = {a: k for k, a in enumerate(idx)}
        self.degree = np.array([sum(a) for a in idx])
        self.factorial = np.array([float(np.prod([factorial(x) for x in a])) for a in idx])

        # product table: pairs (i, j) whose multi-indices add to an admissible one
        I, J, T = [], [], []
        for i, a in enumerate(idx):
            da = sum(a)
            for j, b in enumerate(idx):
                if da + sum(b) > order:
                    continue
                I.append(i)
                J.append(j)
                T.append(self.position[tuple(x + y for x, y in zip(a, b))])
        self.pi = np.array(I, dtype=np.intp)
        self.pj = np.array(J, dtype=np.intp)
        scatter = np.zeros((len(T), self.size))
        scatter[np.arange(len(T)), T] = 1.0
        self.scatter = scatter

        # unit multi-indices
        self.unit = []
        for v in range(nvars):
            e = [0] * nvars
            e[v] = 1
            self.unit.append(self.position[tuple(e)] if order >= 1 else None)

    def deriv_map(self, v: int):
        """(target positions in order-1 space, source positions, multipliers) for d/dx_v."""
        return _deriv_map(self.order, self.nvars, v)


@lru_cache(maxsize=None)
def space(order: int, nvars: int = NVARS) -> JetSpace:
    return JetSpace(order, nvars)


JetSpace.get = staticmethod(space)


@lru_cache(maxsize=None)
def _deriv_map(order: int, nvars: int, v: int):
    if order < 1:
        raise ValueError("cannot differentiate an order-0 jet")
    src = space(order, nvars)
    dst = space(order - 1, nvars)
    tgt, frm, mult = [], [], []
    for k, b in enumerate(dst.indices):
        a = list(b)
        a[v] += 1
        tgt.append(k)
        frm.append(src.position[tuple(a)])
        mult.append(float(a[v]))
    return np.array(tgt), np.array(frm), np.array(mult)


class Jet:
    """Truncated Taylor expansion; ``coeffs[..., k]`` belongs to ``space.indices[k]``."""

    __slots__ = ("coeffs", "order", "center")

    def __init__(self, coeffs, order: int, center=None):
        coeffs = np.asarray(coeffs, dtype=float)
        sp = space(order)
        if coeffs.shape[-1] != sp.size:
            raise ValueError(f"expected {sp.size} coefficients for order {order}, got {coeffs.shape[-1]}")
        self.coeffs = coeffs
        self.order = order
        self.center = center

    # -- constructors ------------------------------------------------------
    @classmethod
    def constant(cls, value, order: int, shape=(), center=None) -> "Jet":
        sp = space(order)
        c = np.zeros(tuple(shape) + (sp.size,))
        c[..., 0] = value
        return cls(c, order, center)

    @classmethod
    def variable(cls, i: int, point, order: int) -> "Jet":
        """Jet of the coordinate function x_i (1-based) at ``point`` (shape (7,) or (B, 7))."""
        point = np.asarray(point, dtype=float)
        sp = space(order)
        c = np.zeros(point.shape[:-1] + (sp.size,))
        c[..., 0] = point[..., i - 1]
        if order >= 1:
            c[..., sp.unit[i - 1]] = 1.0
        return cls(c, order, point)

    # -- accessors ---------------------------------------------------------
    @property
    def space(self) -> JetSpace:
        return space(self.order)

    @property
    def shape(self):
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        return self.coeffs[..., 0]

    def coeff(self, alpha) -> np.ndarray:
        return self.coeffs[..., self.space.position[tuple(alpha)]]

    def derivative(self, alpha) -> np.ndarray:
        """``d^alpha f(center)``, i.e. ``alpha! * coeff[alpha]``."""
        k = self.space.position[tuple(alpha)]
        return self.coeffs[..., k] * self.space.factorial[k]

    def gradient(self) -> np.ndarray:
        """First partials on a trailing axis of length 7."""
        sp = self.space
        return np.stack([self.coeffs[..., sp.unit[v]] for v in range(NVARS)], axis=-1)

    def as_dict(self) -> dict:
        if self.coeffs.ndim != 1:
            raise ValueError("as_dict needs a single (unbatched) jet")
        return {a: float(self.coeffs[k]) for k, a in enumerate(self.space.indices)}

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.coeffs[key + (slice(None),)], self.order, self.center)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape})"

    # -- arithmetic --------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError("jet orders differ")
            return other.coeffs
        return None

    def __add__(self, other):
        oc = self._lift(other)
        if oc is None:
            c = self.coeffs.copy() if np.ndim(other) == 0 else np.broadcast_to(
                self.coeffs, np.broadcast_shapes(self.coeffs.shape, np.shape(other) + (self.coeffs.shape[-1],))
            ).copy()
            c[..., 0] += other
            return Jet(c, self.order, self.center)
        return Jet(self.coeffs + oc, self.order, self.center)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.order, self.center)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        oc = self._lift(other)
        if oc is None:
            return Jet(self.coeffs * np.asarray(other)[..., None], self.order, self.center)
        return Jet(_mul(self.coeffs, oc, self.order), self.order, self.center)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=float)
        if np.any(np.abs(other) < _TINY):
            raise JetDomainError("division by zero")
        return Jet(self.coeffs / other[..., None], self.order, self.center)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        return self.powi(n)

    # -- elementary functions ---------------------------------------------
    def _compose(self, fk: list) -> "Jet":
        """sum_k fk[k] * (self - value)^k via Horner; fk entries broadcast over the batch."""
        K = self.order
        nil = self.coeffs.copy()
        nil[..., 0] = 0.0
        out = np.zeros_like(self.coeffs)
        out[..., 0] = fk[K]
        for k in range(K - 1, -1, -1):
            out = _mul(out, nil, K)
            out[..., 0] += fk[k]
        return Jet(out, K, self.center)

    def reciprocal(self) -> "Jet":
        c0 = self.value
        if np.any(np.abs(c0) < _TINY):
            raise JetDomainError("division by zero")
        inv = 1.0 / c0
        return self._compose([(-1.0) ** k * inv ** (k + 1) for k in range(self.order + 1)])

    def exp(self) -> "Jet":
        e0 = np.exp(self.value)
        return self._compose([e0 / factorial(k) for k in range(self.order + 1)])

    def sqrt(self) -> "Jet":
        c0 = self.value
        if np.any(c0 < 0):
            raise JetDomainError("sqrt of a negative value")
        if self.order > 0 and np.any(c0 == 0):
            raise JetDomainError("sqrt is not differentiable at zero")
        s0 = np.sqrt(c0)
        fk, binom = [], 1.0
        for k in range(self.order + 1):
            fk.append(binom * s0 * c0 ** (-k) if k else s0)
            binom *= (0.5 - k) / (k + 1)
        return self._compose(fk)

    def powi(self, n: int) -> "Jet":
        if n < 0:
            return self.reciprocal().powi(-n)
        result = Jet.constant(1.0, self.order, self.shape, self.center)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- calculus ---------------------------------------------------------
    def deriv(self, i: int) -> "Jet":
        """Partial derivative w.r.t. x_i (1-based); the result has order K-1."""
        tgt, frm, mult = _deriv_map(self.order, NVARS, i - 1)
        out = np.zeros(self.shape + (space(self.order - 1).size,))
        out[..., tgt] = self.coeffs[..., frm] * mult
        return Jet(out, self.order - 1, self.center)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise jet order")
        n = space(order).size
        return Jet(self.coeffs[..., :n].copy(), order, self.center)


def _mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    sp = space(order)
    prod = a[..., sp.pi] * b[..., sp.pj]
    return prod @ sp.scatter


def stack(jets, axis: int = 0) -> Jet:
    """Stack jets of equal order along a new leading axis."""
    jets = list(jets)
    order = jets[0].order
    return Jet(np.stack([j.coeffs for j in jets], axis=axis), order, jets[0].center)


def jet_einsum(subscripts: str, a: Jet, b: Jet) -> Jet:
    """Bilinear contraction of two jet arrays with truncated Taylor multiplication.

    ``subscripts`` is a two-operand numpy einsum string over the non-coefficient
    axes, for example ``"...ij,...jk->...ik"``.
    """
    if a.order != b.order:
        raise ValueError("jet orders differ")
    sp = space(a.order)
    lhs, out = subscripts.split("->")
    sa, sb = lhs.split(",")
    prod = np.einsum(f"{sa}z,{sb}z->{out}z", a.coeffs[..., sp.pi], b.coeffs[..., sp.pj])
    return Jet(prod @ sp.scatter, a.order, a.center)


def jet_matinv(m: Jet) -> Jet:
    """Inverse of a matrix of jets (trailing matrix axes before the coefficient axis)."""
    K = m.order
    m0 = m.coeffs[..., 0]
    inv0 = np.linalg.inv(m0)
    nil = m.coeffs.copy()
    nil[..., 0] = 0.0
    inv0j = Jet.constant(0.0, K, m0.shape)
    inv0j.coeffs[..., 0] = inv0
    # (m0 + N)^-1 = sum_k (-m0^-1 N)^k m0^-1 ; N is nilpotent up to order K
    step = jet_einsum("...ij,...jk->...ik", inv0j, Jet(-nil, K))
    term = inv0j
    total = inv0j
    for _ in range(K):
        term = jet_einsum("...ij,...jk->...ik", step, term)
        total = total + term
    return Jet(total.coeffs, K, m.center)


# ---------------------------------------------------------------------------
# evaluation of expression trees


def eval_jet(e: ex.Expr, point, order: int) -> Jet:
    """Taylor jet of ``e`` at ``point``; ``point`` has shape (7,) or (B, 7)."""
    point = np.asarray(point, dtype=float)
    if point.shape[-1] != NVARS:
        raise ValueError(f"point must have {NVARS} coordinates")
    return _JetEval(point, order).run(e)


def eval_jets(exprs, point, order: int) -> list:
    """Jets of several expressions at once, sharing one memo for common subtrees."""
    point = np.asarray(point, dtype=float)
    if point.shape[-1] != NVARS:
        raise ValueError(f"point must have {NVARS} coordinates")
    ev = _JetEval(point, order)
    return [ev.run(e) for e in exprs]


def eval_value(e: ex.Expr, point) -> np.ndarray:
    """Plain value of ``e`` at ``point`` (an order-0 jet)."""
    return eval_jet(e, point, 0).value


class _JetEval:
    def __init__(self, point: np.ndarray, order: int):
        self.p = point
        self.K = order
        self.memo: dict[int, object] = {}
        self.batch = point.shape[:-1]

    def run(self, e: ex.Expr) -> Jet:
        r = self.ev(e)
        if not isinstance(r, Jet):
            r = Jet.constant(r, self.K, self.batch, self.p)
        r.center = self.p
        return r

    def ev(self, e):
        key = id(e)
        if key in self.memo:
            return self.memo[key]
        out = self._ev(e)
        self.memo[key] = out
        return out

    def _ev(self, e):
        ev = self.ev
        if isinstance(e, ex.Const):
            return float(e.value)
        if isinstance(e, ex.Var):
            return Jet.variable(e.index, self.p, self.K)
        if isinstance(e, ex.Neg):
            return -ev(e.arg)
        if isinstance(e, ex.Add):
            return _jadd(ev(e.left), ev(e.right))
        if isinstance(e, ex.Sub):
            return _jadd(ev(e.left), -ev(e.right))
        if isinstance(e, ex.Mul):
            a, b = ev(e.left), ev(e.right)
            if isinstance(a, Jet) or isinstance(b, Jet):
                return a * b if isinstance(a, Jet) else b * a
            return a * b
        if isinstance(e, ex.Div):
            a, b = ev(e.left), ev(e.right)
            if isinstance(b, Jet):
                return b.reciprocal() * a
            if abs(b) < _TINY:
                raise JetDomainError("division by zero")
            return a / b
        if isinstance(e, ex.PowInt):
            a = ev(e.base)
            if isinstance(a, Jet):
                return a.powi(e.n)
            if a == 0 and e.n < 0:
                raise JetDomainError("division by zero")
            return float(a) ** e.n
        if isinstance(e, ex.Exp):
            a = ev(e.arg)
            return a.exp() if isinstance(a, Jet) else float(np.exp(a))
        if isinstance(e, ex.Sqrt):
            a = ev(e.arg)
            if isinstance(a, Jet):
                return a.sqrt()
            if a < 0:
                raise JetDomainError("sqrt of a negative value")
            return float(np.sqrt(a))
        raise TypeError(f"unknown node {type(e).__name__}")


def _jadd(a, b):
    if isinstance(a, Jet):
        return a + b
    if isinstance(b, Jet):
        return b + a
    return a + b
