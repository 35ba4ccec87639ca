"""The split G2 algebra in the basis b_1..b_7 and its Type III subalgebras.

Matrices act on column vectors of frame components: ``M b_j = sum_i M[i, j] b_i``.
All public index arguments are 1-based; storage is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
import re

import numpy as np

from .exactnum import SQRT2, ExactMatrix, Scalar, commutator, nullspace, rank, solve

__all__ = [
    "omega",
    "omega_consistent",
    "invariant_forms",
    "metric_matrix",
    "G_FLOAT",
    "wedge",
    "interior",
    "inner_product_from_form",
    "stabilizer_residual",
    "g2_matrix",
    "g2_basis",
    "HElem",
    "bracket",
    "bracket_oracle",
    "adjoint_exp",
    "adjoint_exp_oracle",
    "nilpotent_exp",
    "SubalgebraSpec",
    "get_subalgebra",
    "REGISTRY_NAMES",
    "THEOREM_ALGEBRAS",
    "membership",
    "so_residual",
    "check_subalgebra",
]

DIM = 7
_ZERO = Scalar(0)


# ---------------------------------------------------------------------------
# forms


def omega() -> dict:
    """Components ``{(i, j, k): Scalar}`` (1-based, increasing) of the defining 3-form.

    sqrt2 (b^167 + b^235) - b^4 ^ (b^15 + b^26 + b^37), with the last three
    terms reordered: -b^415 = b^145 and so on.

    Taken at face value this form is annihilated only by the s_1..s_4 generators
    of :func:`g2_matrix` (s_5..s_14 all act nontrivially), and its 1/6 wedge
    formula negates the b2 b6 and b3 b7 terms of the metric.  :func:`omega_consistent` is the sign variant that
    agrees with both.
    """
    return {
        (1, 6, 7): SQRT2,
        (2, 3, 5): SQRT2,
        (1, 4, 5): Scalar(1),
        (2, 4, 6): Scalar(1),
        (3, 4, 7): Scalar(1),
    }


def omega_consistent() -> dict:
    """sqrt2 (b^167 + b^235) - b^4 ^ (b^15 - b^26 - b^37).

    Up to scale, the only 3-form annihilated by all 14 matrices of
    :func:`g2_matrix`; its 1/6 wedge formula gives exactly :func:`metric_matrix`.
    """
    w = omega()
    w[(2, 4, 6)] = Scalar(-1)
    w[(3, 4, 7)] = Scalar(-1)
    return w


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _normalize(idx) -> tuple[int, tuple]:
    if len(set(idx)) != len(idx):
        return 0, ()
    return _perm_sign(idx), tuple(sorted(idx))


def wedge(f: dict, g: dict) -> dict:
    """Wedge product of forms stored as ``{increasing index tuple: Scalar}``."""
    out: dict = {}
    for i, a in f.items():
        for j, b in g.items():
            s, key = _normalize(i + j)
            if not s:
                continue
            out[key] = out.get(key, _ZERO) + (a * b if s > 0 else -(a * b))
    return {k: v for k, v in out.items() if v}


def interior(x, f: dict) -> dict:
    """Contraction ``iota_x f`` into the first slot; ``x`` holds 7 frame components."""
    out: dict = {}
    for idx, c in f.items():
        for pos, i in enumerate(idx):
            xi = Scalar.coerce(x[i - 1])
            if not xi:
                continue
            rest = idx[:pos] + idx[pos + 1 :]
            term = c * xi
            if pos % 2:
                term = -term
            out[rest] = out.get(rest, _ZERO) + term
    return {k: v for k, v in out.items() if v}


def inner_product_from_form(w: dict, x, y) -> Scalar:
    """``1/6 (iota_x w) ^ (iota_y w) ^ w`` read off against b^1234567."""
    top = wedge(wedge(interior(x, w), interior(y, w)), w)
    return top.get(tuple(range(1, DIM + 1)), _ZERO) * Scalar(Fraction(1, 6))


def metric_matrix() -> ExactMatrix:
    """Gram matrix of 2(b1 b5 + b2 b6 + b3 b7) - (b4)^2 in the basis b_1..b_7."""
    g = ExactMatrix(DIM, DIM)
    for i, j in ((0, 4), (1, 5), (2, 6)):
        g[i, j] = 1
        g[j, i] = 1
    g[3, 3] = -1
    return g


G_FLOAT = metric_matrix().to_numpy()


def _full_form(w: dict) -> dict:
    out = {}
    for idx, c in w.items():
        for p in permutations(range(len(idx))):
            key = tuple(idx[k] for k in p)
            out[key] = c if _perm_sign(p) > 0 else -c
    return out


def stabilizer_residual(m: ExactMatrix, w: dict | None = None) -> dict:
    """Infinitesimal action of ``m`` on the 3-form; empty dict means ``m`` stabilises it.

    (m.w)_ijk = -sum_l (w_ljk m[l,i] + w_ilk m[l,j] + w_ijl m[l,k])
    """
    w = omega() if w is None else w
    full = _full_form(w)
    cols = [dict() for _ in range(DIM)]
    for (l, i), v in m.items():
        cols[i][l] = v
    out: dict = {}
    for i in range(1, DIM + 1):
        for j in range(i + 1, DIM + 1):
            for k in range(j + 1, DIM + 1):
                s = _ZERO
                for slot in range(3):
                    idx = [i, j, k]
                    for l0, ml in cols[idx[slot] - 1].items():
                        idx2 = list(idx)
                        idx2[slot] = l0 + 1
                        c = full.get(tuple(idx2))
                        if c is not None:
                            s = s + c * ml
                if s:
                    out[(i, j, k)] = -s
    return out


def invariant_forms(mats) -> list:
    """Basis of the 3-forms annihilated by every matrix in ``mats`` (exact nullspace)."""
    trip = list(combinations(range(1, DIM + 1), 3))
    rows = []
    for m in mats:
        block: dict = {}
        for c, t in enumerate(trip):
            for k, v in stabilizer_residual(m, {t: Scalar(1)}).items():
                block.setdefault(k, {})[c] = v
        rows.extend(block.values())
    a = ExactMatrix(len(rows), len(trip), rows)
    return [{trip[c]: v for c, v in enumerate(n) if v} for n in nullspace(a)]


def so_residual(m) -> object:
    """``m^T G + G m``: zero exactly when ``m`` is skew for the split metric."""
    if isinstance(m, ExactMatrix):
        g = metric_matrix()
        return m.T @ g + g @ m
    m = np.asarray(m)
    return np.swapaxes(m, -1, -2) @ G_FLOAT + G_FLOAT @ m


# ---------------------------------------------------------------------------
# the 14-parameter matrix form


def g2_matrix(s) -> ExactMatrix:
    """Element of g2* for parameters ``s = (s_1, ..., s_14)``."""
    if len(s) != 14:
        raise ValueError("need 14 parameters")
    s = [None] + [Scalar.coerce(x) for x in s]
    r2 = SQRT2
    z = _ZERO
    rows = [
        [s[1] + s[4], -s[10], s[9], r2 * s[6], z, -s[11], -s[12]],
        [-s[8], s[1], s[2], r2 * s[9], s[11], z, s[6]],
        [s[7], s[3], s[4], r2 * s[10], s[12], -s[6], z],
        [r2 * s[5], r2 * s[7], r2 * s[8], z, r2 * s[6], r2 * s[9], r2 * s[10]],
        [z, s[13], s[14], r2 * s[5], -s[1] - s[4], s[8], -s[7]],
        [-s[13], z, -s[5], r2 * s[7], s[10], -s[1], -s[3]],
        [-s[14], s[5], z, r2 * s[8], -s[9], -s[2], -s[4]],
    ]
    return ExactMatrix.from_rows(rows)


@lru_cache(maxsize=None)
def g2_basis() -> tuple:
    out = []
    for k in range(14):
        s = [0] * 14
        s[k] = 1
        out.append(g2_matrix(s))
    return tuple(out)


# ---------------------------------------------------------------------------
# h(A, v, y)


@dataclass(frozen=True)
class HElem:
    """h(A, v, y) with ``A = [[a1, a2], [a3, a4]]``; entries are Scalars or floats."""

    a: tuple = (0, 0, 0, 0)
    v: object = 0
    y: tuple = (0, 0)

    @classmethod
    def make(cls, A=((0, 0), (0, 0)), v=0, y=(0, 0), exact: bool = True) -> "HElem":
        conv = Scalar.coerce if exact else float
        (a1, a2), (a3, a4) = A
        return cls(tuple(conv(t) for t in (a1, a2, a3, a4)), conv(v), tuple(conv(t) for t in y))

    @property
    def exact(self) -> bool:
        return isinstance(self.v, Scalar)

    @property
    def trace(self):
        return self.a[0] + self.a[3]

    def coords(self) -> tuple:
        """(a1, a2, a3, a4, v, y1, y2)."""
        return tuple(self.a) + (self.v,) + tuple(self.y)

    @classmethod
    def from_coords(cls, c) -> "HElem":
        c = tuple(c)
        return cls(c[:4], c[4], c[5:7])

    def __add__(self, other: "HElem") -> "HElem":
        return HElem.from_coords(x + y for x, y in zip(self.coords(), other.coords()))

    def __sub__(self, other: "HElem") -> "HElem":
        return HElem.from_coords(x - y for x, y in zip(self.coords(), other.coords()))

    def __neg__(self) -> "HElem":
        return HElem.from_coords(-x for x in self.coords())

    def scale(self, c) -> "HElem":
        return HElem.from_coords(c * x for x in self.coords())

    def is_zero(self) -> bool:
        return all(not x for x in self.coords())

    def embed(self):
        """The 7x7 matrix (ExactMatrix for exact entries, ndarray otherwise)."""
        a1, a2, a3, a4 = self.a
        v = self.v
        y1, y2 = self.y
        tr = a1 + a4
        if self.exact:
            m = ExactMatrix(DIM, DIM)
            r2 = SQRT2
        else:
            m = np.zeros((DIM, DIM))
            r2 = np.sqrt(2.0)
        entries = {
            (0, 0): tr,
            (0, 3): r2 * v,
            (0, 5): -y1,
            (0, 6): -y2,
            (1, 1): a1,
            (1, 2): a2,
            (1, 4): y1,
            (1, 6): v,
            (2, 1): a3,
            (2, 2): a4,
            (2, 4): y2,
            (2, 5): -v,
            (3, 4): r2 * v,
            (4, 4): -tr,
            (5, 5): -a1,
            (5, 6): -a3,
            (6, 5): -a2,
            (6, 6): -a4,
        }
        for ij, val in entries.items():
            m[ij] = val
        return m

    @classmethod
    def extract(cls, m):
        """Read h(A, v, y) off a matrix; returns ``(elem, residual)``.

        The residual is ``m - embed(elem)``: an ExactMatrix for exact input,
        otherwise its Frobenius norm.
        """
        if isinstance(m, ExactMatrix):
            h = cls((m[1, 1], m[1, 2], m[2, 1], m[2, 2]), m[1, 6], (m[1, 4], m[2, 4]))
            return h, m - h.embed()
        m = np.asarray(m, dtype=float)
        h = cls(
            (float(m[1, 1]), float(m[1, 2]), float(m[2, 1]), float(m[2, 2])),
            float(m[1, 6]),
            (float(m[1, 4]), float(m[2, 4])),
        )
        return h, float(np.linalg.norm(m - h.embed()))


def _mat2_mul(A, B):
    a1, a2, a3, a4 = A
    b1, b2, b3, b4 = B
    return (a1 * b1 + a2 * b3, a1 * b2 + a2 * b4, a3 * b1 + a4 * b3, a3 * b2 + a4 * b4)


def _mat2_vec(A, y, shift):
    """(A + shift I) y."""
    a1, a2, a3, a4 = A
    return ((a1 + shift) * y[0] + a2 * y[1], a3 * y[0] + (a4 + shift) * y[1])


def bracket(x: HElem, y: HElem) -> HElem:
    """Closed-form commutator of two elements of h(A, v, y) form."""
    ab = _mat2_mul(x.a, y.a)
    ba = _mat2_mul(y.a, x.a)
    comm = tuple(p - q for p, q in zip(ab, ba))
    tx, ty = x.trace, y.trace
    v = tx * y.v - x.v * ty
    p = _mat2_vec(x.a, y.y, tx)
    q = _mat2_vec(y.a, x.y, ty)
    return HElem(comm, v, (p[0] - q[0], p[1] - q[1]))


def bracket_oracle(x: HElem, y: HElem) -> HElem:
    """Commutator through the 7x7 embedding; raises if the result leaves h form."""
    mx, my = x.embed(), y.embed()
    c = commutator(mx, my) if isinstance(mx, ExactMatrix) else mx @ my - my @ mx
    h, res = HElem.extract(c)
    if isinstance(res, ExactMatrix):
        if not res.is_zero():
            raise ArithmeticError("commutator is not of h(A, v, y) form")
    elif res > 1e-9 * max(1.0, float(np.linalg.norm(c))):
        raise ArithmeticError("commutator is not of h(A, v, y) form")
    return h


def adjoint_exp(vbar, ybar, x: HElem) -> HElem:
    """Ad(exp h(0, 0, ybar)) Ad(exp h(0, vbar, 0)) applied to ``x`` in closed form."""
    tr = x.trace
    v = x.v - tr * vbar
    shift = _mat2_vec(x.a, ybar, tr)
    return HElem(tuple(x.a), v, (x.y[0] - shift[0], x.y[1] - shift[1]))


def nilpotent_exp(n):
    """exp of a nilpotent matrix by its finite power series (exact for ExactMatrix)."""
    if isinstance(n, ExactMatrix):
        total = ExactMatrix.identity(n.nrows)
        term = ExactMatrix.identity(n.nrows)
        k = 0
        while True:
            k += 1
            term = (term @ n).scale(Scalar(Fraction(1, k)))
            if term.is_zero():
                return total
            if k > n.nrows:
                raise ArithmeticError("matrix is not nilpotent")
            total = total + term
    n = np.asarray(n, dtype=float)
    total = np.eye(n.shape[0])
    term = np.eye(n.shape[0])
    for k in range(1, n.shape[0] + 1):
        term = term @ n / k
        total = total + term
    return total


def adjoint_exp_oracle(vbar, ybar, x: HElem):
    """Matrix conjugation ``N X N^-1`` with ``N = exp(h(0,0,ybar)) exp(h(0,vbar,0))``.

    Returns ``(elem, residual)`` as :meth:`HElem.extract` does.
    """
    exact = x.exact
    conv = Scalar.coerce if exact else float
    zero = conv(0)
    hv = HElem((zero,) * 4, conv(vbar), (zero, zero)).embed()
    hy = HElem((zero,) * 4, zero, (conv(ybar[0]), conv(ybar[1]))).embed()
    n = nilpotent_exp(hy) @ nilpotent_exp(hv)
    ninv = nilpotent_exp(-hv) @ nilpotent_exp(-hy)
    return HElem.extract(n @ x.embed() @ ninv)


# ---------------------------------------------------------------------------
# subalgebras


@dataclass
class SubalgebraSpec:
    name: str
    basis: list
    dim: int = field(init=False)

    def __post_init__(self):
        self.dim = len(self.basis)
        self._q = None
        self._bt = None

    def float_basis(self) -> np.ndarray:
        """Basis vectors as rows of a (dim, 49) array."""
        if self._bt is None:
            if self.basis:
                self._bt = np.stack([b.to_numpy().ravel() for b in self.basis])
            else:
                self._bt = np.zeros((0, DIM * DIM))
        return self._bt

    def orthonormal(self) -> np.ndarray:
        """(49, r) orthonormal basis of the span."""
        if self._q is None:
            bt = self.float_basis()
            if bt.shape[0] == 0:
                self._q = np.zeros((DIM * DIM, 0))
            else:
                q, r = np.linalg.qr(bt.T)
                keep = np.abs(np.diag(r)) > 1e-12 * np.abs(r).max()
                self._q = q[:, keep]
        return self._q

    def contains_exact(self, m: ExactMatrix) -> list | None:
        """Exact coordinates of ``m`` in the basis, or ``None`` if ``m`` is outside."""
        n = DIM * DIM
        a = ExactMatrix(n, self.dim)
        for k, b in enumerate(self.basis):
            for idx, v in b.vec().items():
                a[idx, k] = v
        rhs = [_ZERO] * n
        for idx, v in m.vec().items():
            rhs[idx] = v
        return solve(a, rhs)


def _h(A=((0, 0), (0, 0)), v=0, y=(0, 0)) -> ExactMatrix:
    return HElem.make(A, v, y).embed()


_M12 = [_h(v=1), _h(y=(1, 0)), _h(y=(0, 1))]
_M11 = [_h(v=1), _h(y=(1, 0))]


def _gl2_basis():
    return [_h(((1, 0), (0, 0))), _h(((0, 1), (0, 0))), _h(((0, 0), (1, 0))), _h(((0, 0), (0, 1)))]


def _so43_basis():
    g = metric_matrix()
    out = []
    # m = G^-1 (E_ij - E_ji) with G^-1 = G
    for i in range(DIM):
        for j in range(i + 1, DIM):
            e = ExactMatrix(DIM, DIM)
            e[i, j] = 1
            e[j, i] = -1
            out.append(g @ e)
    return out


def _p1_basis():
    out = []
    for k in range(14):
        if k + 1 in (5, 7, 8, 13, 14):
            continue
        s = [0] * 14
        s[k] = 1
        out.append(g2_matrix(s))
    return out


def _c_a(a) -> ExactMatrix:
    a = Scalar.coerce(a)
    return HElem((a, Scalar(-1), Scalar(1), a), _ZERO, (_ZERO, _ZERO)).embed()


def _diag1mu(mu) -> ExactMatrix:
    mu = Scalar.coerce(mu)
    return HElem((Scalar(1), _ZERO, _ZERO, mu), _ZERO, (_ZERO, _ZERO)).embed()


_BUILDERS = {
    "h_III": lambda: _gl2_basis() + _M12,
    "gl2_m12": lambda: _gl2_basis() + _M12,
    "sl2_m12": lambda: [_h(((1, 0), (0, -1))), _h(((0, 1), (0, 0))), _h(((0, 0), (1, 0)))] + _M12,
    "co2_m12": lambda: [_h(((1, 0), (0, 1))), _h(((0, -1), (1, 0)))] + _M12,
    "d_m12": lambda: [_h(((1, 0), (0, 0))), _h(((0, 0), (0, 1)))] + _M12,
    "rdiag10_m11": lambda: [_h(((1, 0), (0, 0)))] + _M11,
    "rdiag10_m12": lambda: [_h(((1, 0), (0, 0)))] + _M12,
    "m11": lambda: list(_M11),
    "m12": lambda: list(_M12),
    "g2star": lambda: list(g2_basis()),
    "so43": _so43_basis,
    "p1": _p1_basis,
    "zero": lambda: [],
}

REGISTRY_NAMES = tuple(_BUILDERS) + ("r_Ca(a)", "rdiag_m12(mu)", "rdiag_m11(mu)")

# the eight algebras of the classification theorem with their dimensions
THEOREM_ALGEBRAS = {
    "gl2_m12": 7,
    "sl2_m12": 6,
    "co2_m12": 5,
    "d_m12": 5,
    "rdiag10_m11": 3,
    "rdiag10_m12": 4,
    "m11": 2,
    "m12": 3,
}

_PARAM = re.compile(r"^(r_Ca|rdiag_m12|rdiag_m11)\(\s*([-+]?[0-9]+(?:[./][0-9]+)?)\s*\)$")


def get_subalgebra(name: str) -> SubalgebraSpec:
    """Look up a registered subalgebra by its CLI name.

    Parametric families take a rational parameter, e.g. ``r_Ca(1/2)`` or
    ``rdiag_m12(0)``.
    """
    return _get(name.strip())


@lru_cache(maxsize=None)
def _get(name: str) -> SubalgebraSpec:
    if name in _BUILDERS:
        return SubalgebraSpec(name, _BUILDERS[name]())
    m = _PARAM.match(name)
    if not m:
        raise KeyError(f"unknown algebra {name!r}; known: {', '.join(REGISTRY_NAMES)}")
    family, param = m.group(1), Fraction(m.group(2))
    if family == "r_Ca":
        return SubalgebraSpec(name, [_c_a(param)] + _M12)
    if family == "rdiag_m12":
        return SubalgebraSpec(name, [_diag1mu(param)] + _M12)
    return SubalgebraSpec(name, [_diag1mu(param)] + _M11)


def membership(m, spec: SubalgebraSpec):
    """Least-squares coordinates of ``m`` in ``span(spec.basis)`` and the residual norm.

    Float input (a 7x7 array, or a stack of them) is projected numerically.
    Exact input is decided exactly; the residual is then 0.0 for members and
    the float distance otherwise.
    """
    if isinstance(m, ExactMatrix):
        c = spec.contains_exact(m)
        if c is not None:
            return c, 0.0
        m = m.to_numpy()
    m = np.asarray(m, dtype=float)
    flat = m.reshape(m.shape[:-2] + (DIM * DIM,))
    bt = spec.float_basis()
    if bt.shape[0] == 0:
        return np.zeros(flat.shape[:-1] + (0,)), np.linalg.norm(flat, axis=-1)
    q = spec.orthonormal()
    proj = (flat @ q) @ q.T
    resid = np.linalg.norm(flat - proj, axis=-1)
    coeffs = np.linalg.lstsq(bt.T, flat.reshape(-1, DIM * DIM).T, rcond=None)[0].T
    coeffs = coeffs.reshape(flat.shape[:-1] + (bt.shape[0],))
    return coeffs, resid


def check_subalgebra(spec: SubalgebraSpec) -> dict:
    """Exact structural checks: independence, bracket closure, containment in g2*."""
    basis = spec.basis
    n = DIM * DIM
    stacked = ExactMatrix(len(basis), n, [b.vec() for b in basis])
    independent = rank(stacked) == len(basis)
    closed = True
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            c = commutator(basis[i], basis[j])
            if not c.is_zero() and spec.contains_exact(c) is None:
                closed = False
                break
        if not closed:
            break
    in_so = all(so_residual(b).is_zero() for b in basis)
    g2 = _get("g2star")
    in_g2 = all(g2.contains_exact(b) is not None for b in basis)
    kills = all(not stabilizer_residual(b, omega_consistent()) for b in basis)
    return {
        "name": spec.name,
        "dim": spec.dim,
        "independent": independent,
        "closed": closed,
        "in_so43": in_so,
        "in_g2star": in_g2,
        "annihilates_omega": kills,
    }
