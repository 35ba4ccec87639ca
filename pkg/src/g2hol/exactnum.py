"""Exact arithmetic over Q(sqrt 2) and exact sparse linear algebra.

Every algebraic certificate in the package (subalgebra closure, curvature
spaces, Berger verdicts) runs through this module, so nothing here uses a
tolerance.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
import math

__all__ = [
    "Scalar",
    "SQRT2",
    "ExactMatrix",
    "rank",
    "nullspace",
    "solve",
    "rref",
]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # floats are accepted only when they carry an exact dyadic value the
        # caller meant literally (0.5, 2.0 ...)
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class Scalar:
    """Element ``a + b*sqrt(2)`` of Q(sqrt 2) with rational ``a`` and ``b``."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = _frac(a)
        self.b = _frac(b)

    @classmethod
    def coerce(cls, x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        return cls(x, 0)

    # -- predicates -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.a and not self.b

    def is_rational(self) -> bool:
        return not self.b

    def __bool__(self) -> bool:
        return bool(self.a) or bool(self.b)

    # -- ring operations --------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar(other)
            except TypeError:
                return NotImplemented
        return Scalar(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(-self.a, -self.b)

    def __sub__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar(other)
            except TypeError:
                return NotImplemented
        return Scalar(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar(other)
            except TypeError:
                return NotImplemented
        a, b, c, d = self.a, self.b, other.a, other.b
        if not b and not d:
            return Scalar(a * c, 0)
        return Scalar(a * c + 2 * b * d, a * d + b * c)

    __rmul__ = __mul__

    def conj(self) -> "Scalar":
        """Galois conjugate ``a - b*sqrt(2)``."""
        return Scalar(self.a, -self.b)

    def norm(self) -> Fraction:
        """Field norm ``a^2 - 2 b^2``; zero only for the zero element."""
        return self.a * self.a - 2 * self.b * self.b

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(sqrt 2)")
        if not self.b:
            return Scalar(1 / self.a, 0)
        n = self.norm()
        return Scalar(self.a / n, -self.b / n)

    def __truediv__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar(other)
            except TypeError:
                return NotImplemented
        if not other.b:
            if not other.a:
                raise ZeroDivisionError("division by zero in Q(sqrt 2)")
            return Scalar(self.a / other.a, self.b / other.a)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Scalar.coerce(other) / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = Scalar(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparison / conversion -----------------------------------------
    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.a == other.a and self.b == other.b
        try:
            other = Scalar(other)
        except TypeError:
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self):
        if not self.b:
            return hash(self.a)
        return hash((self.a, self.b))

    def sign(self) -> int:
        """Exact sign of the real number ``a + b*sqrt(2)``."""
        a, b = self.a, self.b
        if not b:
            return (a > 0) - (a < 0)
        if not a:
            return (b > 0) - (b < 0)
        if (a > 0) == (b > 0):
            return 1 if a > 0 else -1
        # opposite signs: compare a^2 with 2 b^2
        d = a * a - 2 * b * b
        s = (d > 0) - (d < 0)
        return s if a > 0 else -s

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __lt__(self, other):
        return (self - Scalar.coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - Scalar.coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - Scalar.coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - Scalar.coerce(other)).sign() >= 0

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(2.0)

    def __repr__(self):
        return f"Scalar({self.a}, {self.b})"

    def __str__(self):
        if not self.b:
            return str(self.a)
        if not self.a:
            return f"{self.b}*sqrt(2)"
        return f"{self.a}+{self.b}*sqrt(2)"

    @classmethod
    def sqrt_of(cls, q) -> "Scalar | None":
        """Exact square root of a non-negative rational inside Q(sqrt 2).

        Returns ``None`` when the root does not lie in the field.
        """
        q = _frac(q)
        if q < 0:
            return None
        r = _rational_sqrt(q)
        if r is not None:
            return cls(r, 0)
        r = _rational_sqrt(q / 2)
        if r is not None:
            return cls(0, r)
        return None


def _rational_sqrt(q: Fraction) -> Fraction | None:
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


SQRT2 = Scalar(0, 1)
_ZERO = Scalar(0)
_ONE = Scalar(1)


class ExactMatrix:
    """Sparse matrix over Q(sqrt 2).

    Rows are stored as ``{col: Scalar}`` dictionaries with zeros dropped.
    Indices are 0-based; the 1-based b_1..b_7 convention lives in the
    callers.
    """

    __slots__ = ("nrows", "ncols", "data")

    def __init__(self, nrows: int, ncols: int, data=None):
        self.nrows = nrows
        self.ncols = ncols
        if data is None:
            self.data = [dict() for _ in range(nrows)]
        else:
            self.data = [{c: v for c, v in row.items() if v} for row in data]
            if len(self.data) != nrows:
                raise ValueError("row count mismatch")

    @classmethod
    def from_rows(cls, rows) -> "ExactMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        m = cls(len(rows), ncols)
        for i, r in enumerate(rows):
            if len(r) != ncols:
                raise ValueError("ragged rows")
            for j, x in enumerate(r):
                s = Scalar.coerce(x)
                if s:
                    m.data[i][j] = s
        return m

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        m = cls(n, n)
        for i in range(n):
            m.data[i][i] = _ONE
        return m

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "ExactMatrix":
        return cls(nrows, ncols)

    @classmethod
    def unit(cls, n: int, i: int, j: int, value=1) -> "ExactMatrix":
        m = cls(n, n)
        s = Scalar.coerce(value)
        if s:
            m.data[i][j] = s
        return m

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def copy(self) -> "ExactMatrix":
        return ExactMatrix(self.nrows, self.ncols, [dict(r) for r in self.data])

    def __getitem__(self, ij):
        i, j = ij
        return self.data[i].get(j, _ZERO)

    def __setitem__(self, ij, value):
        i, j = ij
        s = Scalar.coerce(value)
        if s:
            self.data[i][j] = s
        else:
            self.data[i].pop(j, None)

    def items(self):
        for i, row in enumerate(self.data):
            for j, v in row.items():
                yield (i, j), v

    def nnz(self) -> int:
        return sum(len(r) for r in self.data)

    def is_zero(self) -> bool:
        return all(not r for r in self.data)

    def to_rows(self):
        return [[self[i, j] for j in range(self.ncols)] for i in range(self.nrows)]

    def to_numpy(self):
        import numpy as np

        out = np.zeros((self.nrows, self.ncols))
        for (i, j), v in self.items():
            out[i, j] = float(v)
        return out

    def vec(self) -> dict:
        """Row-major vectorisation as a sparse ``{flat_index: Scalar}`` map."""
        n = self.ncols
        return {i * n + j: v for (i, j), v in self.items()}

    # -- algebra ----------------------------------------------------------
    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        self._check_same(other)
        out = self.copy()
        for i, row in enumerate(other.data):
            orow = out.data[i]
            for j, v in row.items():
                s = orow.get(j)
                s = v if s is None else s + v
                if s:
                    orow[j] = s
                else:
                    orow.pop(j, None)
        return out

    def __neg__(self) -> "ExactMatrix":
        return ExactMatrix(self.nrows, self.ncols, [{j: -v for j, v in r.items()} for r in self.data])

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        return self + (-other)

    def scale(self, c) -> "ExactMatrix":
        c = Scalar.coerce(c)
        if not c:
            return ExactMatrix(self.nrows, self.ncols)
        return ExactMatrix(self.nrows, self.ncols, [{j: c * v for j, v in r.items()} for r in self.data])

    def __rmul__(self, c):
        return self.scale(c)

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = ExactMatrix(self.nrows, other.ncols)
        for i, row in enumerate(self.data):
            acc: dict = {}
            for k, a in row.items():
                for j, b in other.data[k].items():
                    s = acc.get(j)
                    p = a * b
                    acc[j] = p if s is None else s + p
            out.data[i] = {j: v for j, v in acc.items() if v}
        return out

    def transpose(self) -> "ExactMatrix":
        out = ExactMatrix(self.ncols, self.nrows)
        for (i, j), v in self.items():
            out.data[j][i] = v
        return out

    @property
    def T(self) -> "ExactMatrix":
        return self.transpose()

    def trace(self) -> Scalar:
        s = _ZERO
        for i in range(min(self.nrows, self.ncols)):
            s = s + self[i, i]
        return s

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self.shape == other.shape and self.data == other.data

    def __hash__(self):
        return hash((self.shape, tuple(tuple(sorted(r.items())) for r in self.data)))

    def __repr__(self):
        return f"ExactMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"

    def _check_same(self, other):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")


def commutator(x: ExactMatrix, y: ExactMatrix) -> ExactMatrix:
    return x @ y - y @ x


def rref(m: ExactMatrix):
    """Reduced row echelon form by exact Gauss-Jordan elimination.

    Returns ``(rows, pivots)`` where ``rows[k]`` is a sparse row whose pivot
    entry in column ``pivots[k]`` equals one.  The pivot row is chosen as
    the sparsest candidate to limit fill-in; with exact arithmetic any
    nonzero pivot is admissible.
    """
    rows = [dict(r) for r in m.data if r]
    pivots: list[int] = []
    done: list[dict] = []
    # column -> set of row indices (into ``rows``) with a nonzero there
    for col in range(m.ncols):
        cands = [k for k, r in enumerate(rows) if col in r]
        if not cands:
            continue
        k = min(cands, key=lambda t: len(rows[t]))
        prow = rows.pop(k)
        inv = prow[col].inverse()
        if inv != _ONE:
            prow = {j: v * inv for j, v in prow.items()}
        for r in rows:
            f = r.get(col)
            if f is None:
                continue
            _axpy(r, prow, -f)
        for r in done:
            f = r.get(col)
            if f is None:
                continue
            _axpy(r, prow, -f)
        done.append(prow)
        pivots.append(col)
        rows = [r for r in rows if r]
    return done, pivots


def _axpy(target: dict, src: dict, f: Scalar) -> None:
    """target += f * src, dropping exact zeros."""
    for j, v in src.items():
        s = target.get(j)
        p = f * v
        if s is None:
            target[j] = p
        else:
            s = s + p
            if s:
                target[j] = s
            else:
                del target[j]


def rank(m: ExactMatrix) -> int:
    """Exact rank over Q(sqrt 2)."""
    return len(rref(m)[1])


def nullspace(m: ExactMatrix) -> list[list[Scalar]]:
    """Basis of ``{x : m x = 0}`` as dense lists of Scalars."""
    rows, pivots = rref(m)
    pivset = set(pivots)
    free = [c for c in range(m.ncols) if c not in pivset]
    basis = []
    for fc in free:
        x = [_ZERO] * m.ncols
        x[fc] = _ONE
        for r, pc in zip(rows, pivots):
            v = r.get(fc)
            if v is not None:
                x[pc] = -v
        basis.append(x)
    return basis


def solve(m: ExactMatrix, rhs) -> list[Scalar] | None:
    """One exact solution of ``m x = rhs`` (free variables set to zero).

    Returns ``None`` when the system is inconsistent.
    """
    if len(rhs) != m.nrows:
        raise ValueError("rhs length mismatch")
    aug = ExactMatrix(m.nrows, m.ncols + 1, [dict(r) for r in m.data])
    for i, v in enumerate(rhs):
        aug[i, m.ncols] = v
    rows, pivots = rref(aug)
    if pivots and pivots[-1] == m.ncols:
        return None
    x = [_ZERO] * m.ncols
    for r, pc in zip(rows, pivots):
        x[pc] = r.get(m.ncols, _ZERO)
    return x


def matvec(m: ExactMatrix, x) -> list[Scalar]:
    out = []
    for row in m.data:
        s = _ZERO
        for j, v in row.items():
            s = s + v * x[j]
        out.append(s)
    return out
