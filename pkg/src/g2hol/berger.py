"""Algebraic curvature endomorphisms K(h), the span underline(h), and Berger verdicts.

Everything here is exact over Q(sqrt2).  A curvature endomorphism is stored by
its values ``R(b_i, b_j)`` for ``i < j`` as 7x7 matrices in the subalgebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from itertools import combinations

import numpy as np

from .exactnum import SQRT2, ExactMatrix, Scalar, nullspace, rank, rref
from .g2algebra import DIM, HElem, SubalgebraSpec, get_subalgebra

PAIRS = tuple(combinations(range(1, DIM + 1), 2))
TRIPLES = tuple(combinations(range(1, DIM + 1), 3))
_PAIR_INDEX = {p: n for n, p in enumerate(PAIRS)}
_ZERO = Scalar(0)


@dataclass
class CurvatureTensor:
    """Values ``R(b_i, b_j)`` for 1 <= i < j <= 7; missing pairs are zero."""

    comps: dict = field(default_factory=dict)

    def get(self, i: int, j: int) -> ExactMatrix:
        if i == j:
            return ExactMatrix(DIM, DIM)
        if i < j:
            return self.comps.get((i, j), ExactMatrix(DIM, DIM))
        return -self.comps.get((j, i), ExactMatrix(DIM, DIM))

    def nonzero_pairs(self) -> list:
        return [p for p, m in sorted(self.comps.items()) if not m.is_zero()]

    def vec(self) -> dict:
        """Sparse coordinates in the 21*49 dimensional space of 2-form valued matrices."""
        out = {}
        for p, m in self.comps.items():
            off = _PAIR_INDEX[p] * DIM * DIM
            for idx, v in m.vec().items():
                out[off + idx] = v
        return out

    def __add__(self, other: "CurvatureTensor") -> "CurvatureTensor":
        out = dict(self.comps)
        for p, m in other.comps.items():
            out[p] = out[p] + m if p in out else m
        return CurvatureTensor(out)

    def __sub__(self, other: "CurvatureTensor") -> "CurvatureTensor":
        return self + CurvatureTensor({p: -m for p, m in other.comps.items()})


def _bianchi_sum(r: CurvatureTensor, i: int, j: int, k: int) -> list:
    """Components of R(b_i,b_j)b_k + R(b_j,b_k)b_i + R(b_k,b_i)b_j."""
    rij, rjk, rki = r.get(i, j), r.get(j, k), r.get(k, i)
    return [rij[l, k - 1] + rjk[l, i - 1] + rki[l, j - 1] for l in range(DIM)]


def bianchi_residual(r: CurvatureTensor) -> float:
    """Largest absolute component of the cyclic sum over all 35 triples."""
    worst = 0.0
    for i, j, k in TRIPLES:
        for c in _bianchi_sum(r, i, j, k):
            worst = max(worst, abs(float(c)))
    return worst


def bianchi_holds(r: CurvatureTensor) -> bool:
    """Exact version of ``bianchi_residual(r) == 0``."""
    return all(not c for t in TRIPLES for c in _bianchi_sum(r, *t))


def bianchi_system(spec: SubalgebraSpec) -> ExactMatrix:
    """The 245 x 21*dim linear system whose kernel is K(spec).

    Column ``p * dim + a`` is the coefficient of basis element ``a`` in R at pair ``p``.
    """
    d = spec.dim
    # entries of each basis matrix, grouped by column for quick lookup
    cols = []
    for b in spec.basis:
        by_col = [dict() for _ in range(DIM)]
        for (l, c), v in b.items():
            by_col[c][l] = v
        cols.append(by_col)
    rows = []
    for i, j, k in TRIPLES:
        blocks = [dict() for _ in range(DIM)]
        # +R_ij b_k + R_jk b_i - R_ik b_j
        for pair, col, sign in (((i, j), k, 1), ((j, k), i, 1), ((i, k), j, -1)):
            base = _PAIR_INDEX[pair] * d
            for a in range(d):
                for l, v in cols[a][col - 1].items():
                    key = base + a
                    val = v if sign > 0 else -v
                    blocks[l][key] = blocks[l].get(key, _ZERO) + val
        for blk in blocks:
            rows.append({c: v for c, v in blk.items() if v})
    return ExactMatrix(len(rows), len(PAIRS) * d, rows)


def _tensor_from_coeffs(spec: SubalgebraSpec, coeffs) -> CurvatureTensor:
    d = spec.dim
    comps = {}
    for p, pair in enumerate(PAIRS):
        m = ExactMatrix(DIM, DIM)
        for a in range(d):
            c = coeffs[p * d + a]
            if c:
                m = m + spec.basis[a].scale(c)
        if not m.is_zero():
            comps[pair] = m
    return CurvatureTensor(comps)


def solve_K(spec: SubalgebraSpec | str) -> list:
    """Basis of K(spec) as a list of :class:`CurvatureTensor`, from the exact nullspace."""
    if isinstance(spec, str):
        spec = get_subalgebra(spec)
    if spec.dim == 0:
        return []
    return [_tensor_from_coeffs(spec, n) for n in nullspace(bianchi_system(spec))]


def span_dim(tensors) -> int:
    """Exact dimension of the span of a list of curvature tensors."""
    if not tensors:
        return 0
    n = len(PAIRS) * DIM * DIM
    return rank(ExactMatrix(len(tensors), n, [t.vec() for t in tensors]))


def underline(spec: SubalgebraSpec | str, K: list | None = None) -> SubalgebraSpec:
    """span{R(b_i, b_j) : R in K(spec)} as a new (reduced) SubalgebraSpec."""
    if isinstance(spec, str):
        spec = get_subalgebra(spec)
    K = solve_K(spec) if K is None else K
    vecs = [m.vec() for r in K for m in r.comps.values() if not m.is_zero()]
    name = f"underline({spec.name})"
    if not vecs:
        return SubalgebraSpec(name, [])
    rows, _ = rref(ExactMatrix(len(vecs), DIM * DIM, vecs))
    basis = []
    for row in rows:
        m = ExactMatrix(DIM, DIM)
        for idx, v in row.items():
            m[divmod(idx, DIM)] = v
        basis.append(m)
    return SubalgebraSpec(name, basis)


def berger_verdict(name: str) -> dict:
    """JSON-ready verdict ``{algebra, dimK, dim_underline, berger_ok}``."""
    spec = get_subalgebra(name)
    K = solve_K(spec)
    u = underline(spec, K)
    return {
        "algebra": spec.name,
        "dimK": len(K),
        "dim_underline": u.dim,
        "berger_ok": u.dim == spec.dim,
    }


# ---------------------------------------------------------------------------
# the 16-parameter table


@dataclass
class Table1Params:
    a1: object = 0
    a2: object = 0
    a3: object = 0
    d1: object = 0
    d2: object = 0
    c1: object = 0
    c2: object = 0
    c3: object = 0
    c4: object = 0
    j1: object = 0
    j2: object = 0
    j3: object = 0
    j4: object = 0
    v1: object = 0
    v2: object = 0
    t: object = 0

    @classmethod
    def names(cls) -> list:
        return [f.name for f in fields(cls)]

    @classmethod
    def unit(cls, name: str) -> "Table1Params":
        return cls(**{name: 1})


def build(p: Table1Params, consistent: bool = False) -> CurvatureTensor:
    """Curvature endomorphism from the 16 table parameters.

    With ``consistent=False`` the table is taken literally, including
    R_27 = h(..., 0, (c2, c3)).  That entry violates the Bianchi identity on the
    triples (2,5,7) and (2,6,7) unless c1 = c2; the brute-force K(h_III) has
    y = (c1, c3) there instead, which ``consistent=True`` uses.

    Pairs the table does not list (2-5, 3-5, 4-6, 4-7) are zero; no element of
    the brute-force K(h_III) has a nonzero value there either.
    """
    q = {k: Scalar.coerce(getattr(p, k)) for k in Table1Params.names()}
    z = _ZERO

    def h(A, v, y):
        (x1, x2), (x3, x4) = A
        return HElem((x1, x2, x3, x4), v, y).embed()

    O = ((z, z), (z, z))
    r15 = h(O, z, (q["d1"] + q["c2"], q["c1"] + q["c4"]))
    r26 = h(((-q["a1"], -q["a2"]), (-q["a3"], q["a1"])), z, (q["d1"], q["c1"]))
    r27_y1 = q["c1"] if consistent else q["c2"]
    r27 = h(((-q["a3"], q["a1"]), (q["j1"], q["a3"])), z, (r27_y1, q["c3"]))
    r36 = h(((-q["a2"], q["j2"]), (q["a1"], q["a2"])), z, (q["d2"], q["c2"]))
    w = h(O, z, (q["v1"], q["v2"]))
    r56 = h(((q["d1"], q["d2"]), (q["c1"], q["c2"])), q["v1"], (q["j3"], q["t"]))
    r57 = h(((q["c1"], q["c2"]), (q["c3"], q["c4"])), q["v2"], (q["t"], q["j4"]))
    comps = {
        (1, 5): r15,
        (2, 6): r26,
        (2, 7): r27,
        (3, 6): r36,
        (3, 7): r15 - r26,
        (4, 5): w.scale(SQRT2),
        (5, 6): r56,
        (5, 7): r57,
        (6, 7): -w,
    }
    return CurvatureTensor({k: m for k, m in comps.items() if not m.is_zero()})


def table1_basis(consistent: bool = False) -> list:
    return [build(Table1Params.unit(n), consistent) for n in Table1Params.names()]


def _in_span(basis: list, r: CurvatureTensor) -> bool:
    return span_dim(basis + [r]) == span_dim(basis)


def table1_crosscheck(K: list | None = None, consistent: bool = False) -> dict:
    """Compare the span of the 16-parameter family with the brute-force K(h_III), both ways.

    ``table_not_in_K`` names table parameters whose unit tensor breaks Bianchi;
    ``K_not_in_table`` counts K basis vectors outside the table span.
    """
    K = solve_K("h_III") if K is None else K
    tab = table1_basis(consistent)
    dk, dt = span_dim(K), span_dim(tab)
    joint = span_dim(K + tab)
    outside = [n for n, r in zip(Table1Params.names(), tab) if not bianchi_holds(r)]
    missing = sum(1 for r in K if not _in_span(tab, r))
    return {
        "dim_K": dk,
        "dim_table": dt,
        "dim_joint": joint,
        "equal": dk == dt == joint,
        "table_not_in_K": outside,
        "K_not_in_table": missing,
    }


def restrict_params(zero: list, consistent: bool = False) -> list:
    """Unit tensors of the 16-parameter family for the parameters not listed in ``zero``."""
    names = Table1Params.names()
    return [build(Table1Params.unit(n), consistent) for n in names if n not in zero]


# ---------------------------------------------------------------------------
# the C_a exclusion


CA_UNKNOWNS = ("d1", "d2", "c1", "c2", "c3", "c4")


def ca_system(alpha) -> ExactMatrix:
    """d1 = c2 = -c3,  -d2 = c1 = c4,  d1 = alpha c1,  c1 = alpha c3 as rows over CA_UNKNOWNS."""
    al = Scalar.coerce(alpha)
    ix = {n: k for k, n in enumerate(CA_UNKNOWNS)}

    def row(**kw):
        return {ix[k]: Scalar.coerce(v) for k, v in kw.items() if Scalar.coerce(v)}

    rows = [
        row(d1=1, c2=-1),
        row(c2=1, c3=1),
        row(d2=1, c1=1),
        row(c1=1, c4=-1),
        {ix["d1"]: Scalar(1), **({ix["c1"]: -al} if al else {})},
        {ix["c1"]: Scalar(1), **({ix["c3"]: -al} if al else {})},
    ]
    return ExactMatrix(len(rows), len(CA_UNKNOWNS), rows)


def ca_system_nullspace(alpha) -> list:
    return nullspace(ca_system(alpha))


def as_float(r: CurvatureTensor) -> np.ndarray:
    """(7, 7, 7, 7) array ``out[i, j] = R(b_i, b_j)`` (0-based, antisymmetric in i, j)."""
    out = np.zeros((DIM, DIM, DIM, DIM))
    for (i, j), m in r.comps.items():
        f = m.to_numpy()
        out[i - 1, j - 1] = f
        out[j - 1, i - 1] = -f
    return out

