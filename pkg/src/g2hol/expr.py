"""Analytic expressions in the coordinates x1..x7.

Grammar accepted by :func:`parse` (whitespace is ignored)::

    expr    := term   (("+" | "-") term)*
    term    := unary  (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := atom ("^" ["-" | "+"] INTEGER)?
    atom    := NUMBER | "x1" .. "x7" | ("exp" | "sqrt") "(" expr ")"
             | "(" expr ")"
    NUMBER  := DIGITS ["." DIGITS]

Numbers are read as exact rationals.  Exponents must be integer literals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import re

from .exactnum import Scalar

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "PowInt",
    "Exp",
    "Sqrt",
    "ExprSyntaxError",
    "parse",
    "diff",
    "to_str",
    "free_vars",
    "const",
    "var",
    "as_expr",
]

NVARS = 7


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int, src: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset
        self.src = src


class Expr:
    """Base class for expression nodes.  Nodes are immutable values."""

    __slots__ = ()

    # arithmetic sugar builds simplified trees
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return powi(self, n)

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: Scalar

    def __post_init__(self):
        if not isinstance(self.value, Scalar):
            object.__setattr__(self, "value", Scalar.coerce(self.value))


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def __post_init__(self):
        if not (isinstance(self.index, int) and 1 <= self.index <= NVARS):
            raise ValueError(f"variable index must be in 1..{NVARS}, got {self.index!r}")


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr

    def __post_init__(self):
        if isinstance(self.right, Const) and self.right.value.is_zero():
            raise ValueError("division by the literal zero")


@dataclass(frozen=True)
class PowInt(Expr):
    base: Expr
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise ValueError("exponent must be an integer")


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True)
class Sqrt(Expr):
    arg: Expr

    def __post_init__(self):
        if isinstance(self.arg, Const) and self.arg.value.is_zero():
            raise ValueError("sqrt of the literal zero")


ZERO = Const(Scalar(0))
ONE = Const(Scalar(1))


def const(x) -> Const:
    return Const(Scalar.coerce(x))


def var(i: int) -> Var:
    return Var(i)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        return parse(x)
    return const(x)


# ---------------------------------------------------------------------------
# smart constructors: constant folding and 0/1 identities only


def _is_const(e, v=None) -> bool:
    if not isinstance(e, Const):
        return False
    return v is None or e.value == v


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0) or _is_const(b, 0):
        return ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a, -1):
        return neg(b)
    if _is_const(b, -1):
        return neg(a)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if isinstance(a, Neg) and isinstance(b, Neg):
        return mul(a.arg, b.arg)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const) and b.value.is_zero():
        raise ZeroDivisionError("division by the literal zero")
    if _is_const(a, 0):
        return ZERO
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value / b.value)
    return Div(a, b)


def powi(a: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Const):
        if a.value.is_zero() and n < 0:
            raise ZeroDivisionError("negative power of zero")
        return Const(a.value ** n)
    return PowInt(a, n)


def exp_(a: Expr) -> Expr:
    if _is_const(a, 0):
        return ONE
    return Exp(a)


def sqrt_(a: Expr) -> Expr:
    if isinstance(a, Const):
        if a.value.is_rational():
            r = Scalar.sqrt_of(a.value.a)
            if r is not None:
                return Const(r)
        if a.value.is_zero():
            raise ValueError("sqrt of the literal zero")
    return Sqrt(a)


# ---------------------------------------------------------------------------
# symbolic differentiation


def diff(e: Expr, i: int) -> Expr:
    """Partial derivative of ``e`` with respect to ``x_i``."""
    if not (isinstance(i, int) and 1 <= i <= NVARS):
        raise ValueError(f"variable index must be in 1..{NVARS}, got {i!r}")
    return _Differ(i).d(e)


class _Differ:
    def __init__(self, i: int):
        self.i = i
        self.memo: dict[int, Expr] = {}

    def d(self, e: Expr) -> Expr:
        key = id(e)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        out = self._d(e)
        self.memo[key] = out
        return out

    def _d(self, e: Expr) -> Expr:
        d = self.d
        if isinstance(e, Const):
            return ZERO
        if isinstance(e, Var):
            return ONE if e.index == self.i else ZERO
        if isinstance(e, Neg):
            return neg(d(e.arg))
        if isinstance(e, Add):
            return add(d(e.left), d(e.right))
        if isinstance(e, Sub):
            return sub(d(e.left), d(e.right))
        if isinstance(e, Mul):
            return add(mul(d(e.left), e.right), mul(e.left, d(e.right)))
        if isinstance(e, Div):
            da, db = d(e.left), d(e.right)
            if _is_const(db, 0):
                return div(da, e.right)
            return sub(div(da, e.right), div(mul(e.left, db), powi(e.right, 2)))
        if isinstance(e, PowInt):
            db = d(e.base)
            if _is_const(db, 0):
                return ZERO
            return mul(mul(const(e.n), powi(e.base, e.n - 1)), db)
        if isinstance(e, Exp):
            da = d(e.arg)
            if _is_const(da, 0):
                return ZERO
            return mul(e, da)
        if isinstance(e, Sqrt):
            da = d(e.arg)
            if _is_const(da, 0):
                return ZERO
            return div(da, mul(const(2), e))
        raise TypeError(f"unknown node {type(e).__name__}")


def free_vars(e: Expr) -> frozenset[int]:
    """Indices of the variables that occur syntactically in ``e``."""
    seen: set[int] = set()
    out: set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, Var):
            out.add(n.index)
        elif isinstance(n, Const):
            pass
        elif isinstance(n, (Neg, Exp, Sqrt)):
            stack.append(n.arg)
        elif isinstance(n, PowInt):
            stack.append(n.base)
        else:
            stack.append(n.left)
            stack.append(n.right)
    return frozenset(out)


# ---------------------------------------------------------------------------
# printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, PowInt: 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Const):
        v = e.value
        if v.b or v.a.denominator != 1:
            return 2 if not (v.a and v.b) else 1
        return 5 if v.a >= 0 else 3
    return _PREC.get(type(e), 5)


def _const_str(v: Scalar) -> str:
    def rat(q: Fraction) -> str:
        return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"

    if not v.b:
        return rat(v.a)
    tail = "sqrt(2)" if v.b == 1 else f"{rat(v.b)}*sqrt(2)"
    if v.b == -1:
        tail = "-sqrt(2)"
    if not v.a:
        return tail
    if tail.startswith("-"):
        return f"{rat(v.a)}{tail}"
    return f"{rat(v.a)}+{tail}"


def to_str(e: Expr) -> str:
    """Compact infix form; ``parse(to_str(e))`` has the same value as ``e``."""
    if isinstance(e, Const):
        return _const_str(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        s = to_str(e.arg)
        return f"-({s})" if _prec(e.arg) < 3 else f"-{s}"
    if isinstance(e, (Add, Sub, Mul, Div)):
        p = _PREC[type(e)]
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
        ls, rs = to_str(e.left), to_str(e.right)
        if _prec(e.left) < p:
            ls = f"({ls})"
        # the parser is left-associative: an equal-precedence right operand needs parentheses
        if _prec(e.right) <= p:
            rs = f"({rs})"
        return f"{ls}{op}{rs}"
    if isinstance(e, PowInt):
        bs = to_str(e.base)
        if _prec(e.base) < 5:
            bs = f"({bs})"
        return f"{bs}^{e.n}"
    if isinstance(e, Exp):
        return f"exp({to_str(e.arg)})"
    if isinstance(e, Sqrt):
        return f"sqrt({to_str(e.arg)})"
    raise TypeError(f"unknown node {type(e).__name__}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)
_FUNCS = {"exp": Exp, "sqrt": Sqrt}


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        n = len(src)
        while pos < n:
            if src[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(src, pos)
            if not m or m.end() == pos:
                raise ExprSyntaxError(f"unexpected character {src[pos]!r}", _byte(src, pos), src)
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start))
            pos = m.end()
        self.toks.append(("end", "", n))
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def next(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(msg, _byte(self.src, tok[2]), self.src)

    def expect(self, op):
        t = self.next()
        if t[0] != "op" or t[1] != op:
            self.error(f"expected {op!r}", t)
        return t

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            self.error("empty expression")
        e = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.next()[1]
            r = self.term()
            e = Add(e, r) if op == "+" else Sub(e, r)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            tok = self.next()
            r = self.unary()
            if tok[1] == "*":
                e = Mul(e, r)
            else:
                if isinstance(r, Const) and r.value.is_zero():
                    self.error("division by the literal zero", tok)
                e = Div(e, r)
        return e

    def unary(self) -> Expr:
        t = self.peek()
        if t[0] == "op" and t[1] == "-":
            self.next()
            return Neg(self.unary())
        if t[0] == "op" and t[1] == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        t = self.peek()
        if t[0] == "op" and t[1] == "^":
            self.next()
            sign = 1
            s = self.peek()
            if s[0] == "op" and s[1] in "+-":
                self.next()
                sign = -1 if s[1] == "-" else 1
            n = self.next()
            if n[0] != "num" or "." in n[1]:
                self.error("exponent must be an integer literal", n)
            base = PowInt(base, sign * int(n[1]))
        return base

    def atom(self) -> Expr:
        t = self.next()
        kind, text, _ = t
        if kind == "num":
            return Const(Scalar(Fraction(text)))
        if kind == "id":
            if text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                if text == "sqrt" and isinstance(arg, Const) and arg.value.is_zero():
                    self.error("sqrt of the literal zero", t)
                return _FUNCS[text](arg)
            m = re.fullmatch(r"x([1-9][0-9]*)", text)
            if m and 1 <= int(m.group(1)) <= NVARS:
                return Var(int(m.group(1)))
            self.error(f"unknown identifier {text!r}", t)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            self.error("unexpected end of input", t)
        self.error(f"unexpected token {text!r}", t)


def _byte(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8"))


def parse(src: str) -> Expr:
    """Parse expression text into an AST (no simplification is applied)."""
    if not isinstance(src, str):
        raise TypeError("parse expects a string")
    return _Parser(src).parse()
