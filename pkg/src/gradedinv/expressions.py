"""Smooth bivariate functions phi(s, eta) as symbolic expression trees.

Trees close under exact symbolic partial differentiation of any order,
which is what the high-order certificate machinery needs: it asks for many
partials of the same nonlinearity, so single-step derivatives and partial
chains are memoized on the (hashable, immutable) trees.  Simplification is
deliberately limited to constant folding and the 0/1 identities; that is
enough to keep derivative trees small at the orders used here.

The concrete grammar (whitespace insignificant):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' INTEGER)?
    base   := NUMBER | 's' | 'eta' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := 'exp' | 'sin' | 'cos' | 'log'

There is no unary minus; the printer renders negative constants as
(0 - c), which parses back to the same tree, so print-parse is a fixpoint.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np

from .errors import (
    EvaluationError,
    IntervalDomainError,
    ParseError,
    VanishingDerivativeError,
)

# Grid minima of |d2 phi| below this reject phi as having a vanishing
# linearization coefficient.
VANISH_TOL = 1e-9

# Default sampling density for box sups over I x [eta_lo, eta_hi].
BOX_SAMPLES = 200


# ---------------------------------------------------------------------------
# Tree nodes.  All frozen and hashable; construct through the smart
# constructors below so folding invariants hold.

@dataclass(frozen=True)
class Const:
    v: float
    prec = 4


@dataclass(frozen=True)
class Var:
    name: str  # 's' or 'eta'
    prec = 4


@dataclass(frozen=True)
class Sum:
    a: "Expr"
    b: "Expr"
    prec = 1


@dataclass(frozen=True)
class Prod:
    a: "Expr"
    b: "Expr"
    prec = 2


@dataclass(frozen=True)
class Quot:
    a: "Expr"
    b: "Expr"
    prec = 2


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    n: int
    prec = 3


@dataclass(frozen=True)
class Fun:
    name: str  # 'exp', 'sin', 'cos', 'log'
    arg: "Expr"
    prec = 4


Expr = Union[Const, Var, Sum, Prod, Quot, Pow, Fun]
BivarFn = Expr

_ZERO = Const(0.0)
_ONE = Const(1.0)
_FUNCS = ("exp", "sin", "cos", "log")


def _fold_fun(name: str, v: float) -> float:
    try:
        return getattr(math, name)(v)
    except (ValueError, OverflowError) as exc:
        raise EvaluationError(f"{name}({v}) is undefined: {exc}") from exc


def const(v: float) -> Const:
    return Const(float(v))


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.v + b.v)
    if a == _ZERO:
        return b
    if b == _ZERO:
        return a
    return Sum(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.v * b.v)
    if a == _ZERO or b == _ZERO:
        return _ZERO
    if a == _ONE:
        return b
    if b == _ONE:
        return a
    return Prod(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, mul(Const(-1.0), b))


def quot(a: Expr, b: Expr) -> Expr:
    if b == _ZERO:
        raise ParseError("quotient with syntactically zero denominator")
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.v / b.v)
    if a == _ZERO:
        return _ZERO
    if b == _ONE:
        return a
    return Quot(a, b)


def power(base: Expr, n: int) -> Expr:
    if n < 0:
        raise ParseError(f"exponent must be a nonnegative integer, got {n}")
    if n == 0:
        return _ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        try:
            return Const(base.v ** n)
        except OverflowError as exc:
            raise EvaluationError(f"constant power overflow: {base.v}^{n}") from exc
    return Pow(base, n)


def fun(name: str, arg: Expr) -> Expr:
    if name not in _FUNCS:
        raise ParseError(f"unknown function {name!r}")
    if isinstance(arg, Const):
        return Const(_fold_fun(name, arg.v))
    return Fun(name, arg)


# ---------------------------------------------------------------------------
# Symbolic differentiation.  var 1 is s, var 2 is eta.

_DERIV_MEMO: Dict[Tuple[Expr, int], Expr] = {}


def _derive(e: Expr, var: int) -> Expr:
    key = (e, var)
    got = _DERIV_MEMO.get(key)
    if got is not None:
        return got
    if isinstance(e, Const):
        out = _ZERO
    elif isinstance(e, Var):
        wanted = "s" if var == 1 else "eta"
        out = _ONE if e.name == wanted else _ZERO
    elif isinstance(e, Sum):
        out = add(_derive(e.a, var), _derive(e.b, var))
    elif isinstance(e, Prod):
        out = add(mul(_derive(e.a, var), e.b), mul(e.a, _derive(e.b, var)))
    elif isinstance(e, Quot):
        num = sub(mul(_derive(e.a, var), e.b), mul(e.a, _derive(e.b, var)))
        out = quot(num, mul(e.b, e.b))
    elif isinstance(e, Pow):
        out = mul(mul(Const(float(e.n)), power(e.base, e.n - 1)), _derive(e.base, var))
    elif isinstance(e, Fun):
        da = _derive(e.arg, var)
        if e.name == "exp":
            out = mul(e, da)
        elif e.name == "sin":
            out = mul(fun("cos", e.arg), da)
        elif e.name == "cos":
            out = mul(mul(Const(-1.0), fun("sin", e.arg)), da)
        else:  # log
            out = quot(da, e.arg)
    else:
        raise TypeError(f"not an expression node: {e!r}")
    _DERIV_MEMO[key] = out
    return out


_PARTIAL_MEMO: Dict[Tuple[Expr, int, int], Expr] = {}


def partial(phi: Expr, i1: int, i2: int) -> Expr:
    """Exact symbolic partial derivative d1^i1 d2^i2 of phi, memoized."""
    if i1 < 0 or i2 < 0:
        raise ParseError(f"partial orders must be nonnegative, got ({i1}, {i2})")
    key = (phi, i1, i2)
    got = _PARTIAL_MEMO.get(key)
    if got is not None:
        return got
    if i1 == 0 and i2 == 0:
        out = phi
    elif i1 > 0:
        out = _derive(partial(phi, i1 - 1, i2), 1)
    else:
        out = _derive(partial(phi, i1, i2 - 1), 2)
    _PARTIAL_MEMO[key] = out
    return out


# ---------------------------------------------------------------------------
# Evaluation.  Works on broadcastable float arrays; scalar wrapper checks
# the interval domain for s.

def _eval(e: Expr, s: np.ndarray, eta: np.ndarray) -> np.ndarray:
    if isinstance(e, Const):
        return np.full(np.broadcast(s, eta).shape, e.v)
    if isinstance(e, Var):
        arr = s if e.name == "s" else eta
        return np.broadcast_to(arr, np.broadcast(s, eta).shape)
    if isinstance(e, Sum):
        return _eval(e.a, s, eta) + _eval(e.b, s, eta)
    if isinstance(e, Prod):
        return _eval(e.a, s, eta) * _eval(e.b, s, eta)
    if isinstance(e, Quot):
        num = _eval(e.a, s, eta)
        den = _eval(e.b, s, eta)
        if np.any(den == 0.0):
            idx = np.unravel_index(int(np.argmax(den == 0.0)), den.shape)
            ss = np.broadcast_to(s, den.shape)[idx]
            ee = np.broadcast_to(eta, den.shape)[idx]
            raise EvaluationError(f"division by zero at (s={ss}, eta={ee})")
        return num / den
    if isinstance(e, Pow):
        return _eval(e.base, s, eta) ** e.n
    if isinstance(e, Fun):
        arg = _eval(e.arg, s, eta)
        if e.name == "log":
            if np.any(arg <= 0.0):
                idx = np.unravel_index(int(np.argmax(arg <= 0.0)), arg.shape)
                ss = np.broadcast_to(s, arg.shape)[idx]
                ee = np.broadcast_to(eta, arg.shape)[idx]
                raise EvaluationError(f"log of nonpositive value at (s={ss}, eta={ee})")
            return np.log(arg)
        return getattr(np, e.name)(arg)
    raise TypeError(f"not an expression node: {e!r}")


def eval_grid(phi: Expr, s, eta) -> np.ndarray:
    """Evaluates phi on broadcastable arrays of s and eta values."""
    s_arr = np.asarray(s, dtype=float)
    eta_arr = np.asarray(eta, dtype=float)
    if s_arr.size and (s_arr.min() < -1e-12 or s_arr.max() > 1.0 + 1e-12):
        raise IntervalDomainError(
            f"s outside [0, 1]: range [{s_arr.min()}, {s_arr.max()}]"
        )
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.asarray(_eval(phi, s_arr, eta_arr))
    if not np.all(np.isfinite(out)):
        idx = np.unravel_index(int(np.argmax(~np.isfinite(out))), out.shape)
        ss = np.broadcast_to(s_arr, out.shape)[idx]
        ee = np.broadcast_to(eta_arr, out.shape)[idx]
        raise EvaluationError(f"non-finite value at (s={ss}, eta={ee})")
    return out


def eval2(phi: Expr, s: float, eta: float) -> float:
    """Evaluates phi at a single point with s inside [0, 1]."""
    return float(eval_grid(phi, float(s), float(eta)))


@dataclass(frozen=True)
class Jet2:
    """All partials d1^i1 d2^i2 phi with i1+i2 <= order, at one point."""

    order: int
    values: dict  # (i1, i2) -> float

    def __getitem__(self, key: Tuple[int, int]) -> float:
        return self.values[key]


def jet2(phi: Expr, i: int, s: float, eta: float) -> Jet2:
    """Evaluates the full order-i jet of phi at (s, eta)."""
    if i < 0:
        raise ParseError(f"jet order must be nonnegative, got {i}")
    values = {}
    for i1 in range(i + 1):
        for i2 in range(i + 1 - i1):
            values[(i1, i2)] = eval2(partial(phi, i1, i2), s, eta)
    return Jet2(i, values)


def box_sup(
    phi: Expr, eta_lo: float, eta_hi: float, samples: int = BOX_SAMPLES
) -> float:
    """Sampled sup of |phi| over I x [eta_lo, eta_hi] on a square grid."""
    if eta_lo > eta_hi:
        raise IntervalDomainError(f"empty eta range [{eta_lo}, {eta_hi}]")
    if samples < 2:
        raise IntervalDomainError(f"need at least 2 samples per axis, got {samples}")
    s = np.linspace(0.0, 1.0, samples)[:, None]
    eta = np.linspace(eta_lo, eta_hi, samples)[None, :]
    return float(np.max(np.abs(eval_grid(phi, s, eta))))


def check_nonvanishing(
    phi: Expr, eta_lo: float, eta_hi: float, samples: int = BOX_SAMPLES
) -> bool:
    """Checks that d2 phi stays away from zero on the sampled box.

    Returns True when the sampled minimum of |d2 phi| exceeds the vanish
    tolerance; otherwise raises with the offending grid point.
    """
    if eta_lo > eta_hi:
        raise IntervalDomainError(f"empty eta range [{eta_lo}, {eta_hi}]")
    if samples < 2:
        raise IntervalDomainError(f"need at least 2 samples per axis, got {samples}")
    d2 = partial(phi, 0, 1)
    s = np.linspace(0.0, 1.0, samples)[:, None]
    eta = np.linspace(eta_lo, eta_hi, samples)[None, :]
    signed = eval_grid(d2, s, eta)
    vals = np.abs(signed)
    lo = float(vals.min())
    # A sign change across the connected box proves a zero between nodes
    # even when no node lands on it.
    if lo <= VANISH_TOL or (float(signed.min()) < 0.0 < float(signed.max())):
        idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
        raise VanishingDerivativeError(
            "linearization coefficient vanishes: |d2 phi| = "
            f"{lo:.3e} near (s={float(s[idx[0], 0])}, eta={float(eta[0, idx[1]])})"
        )
    return True


# ---------------------------------------------------------------------------
# Parsing and printing.

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_]+)"
    r"|(?P<op>[+\-*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r} at position {pos}")
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r} at position {pos}, got {val!r}")

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                node = add(node, rhs) if val == "+" else sub(node, rhs)
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                rhs = self.factor()
                node = mul(node, rhs) if val == "*" else quot(node, rhs)
            else:
                return node

    def factor(self) -> Expr:
        node = self.base()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            nkind, nval, npos = self.take()
            if nkind != "num" or not nval.isdigit():
                raise ParseError(
                    f"exponent must be a nonnegative integer at position {npos}, "
                    f"got {nval!r}"
                )
            node = power(node, int(nval))
        return node

    def base(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return const(float(val))
        if kind == "ident":
            if val in ("s", "eta"):
                return Var(val)
            if val in _FUNCS:
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return fun(val, inner)
            raise ParseError(f"unknown identifier {val!r} at position {pos}")
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ParseError(f"unexpected token {val!r} at position {pos}")


def parse(text: str) -> Expr:
    """Parses an expression in s and eta; total on the grammar above."""
    p = _Parser(text)
    node = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ParseError(f"trailing input at position {pos}: {val!r}")
    return node


def _fmt(e: Expr, need: int) -> str:
    if isinstance(e, Const):
        # No unary minus in the grammar: negative constants print in a
        # parenthesized subtraction that folds back to the same node.
        if e.v < 0:
            return f"(0 - {-e.v!r})"
        return repr(e.v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Sum):
        if isinstance(e.b, Prod) and e.b.a == Const(-1.0):
            text = f"{_fmt(e.a, 1)} - {_fmt(e.b.b, 2)}"
        else:
            text = f"{_fmt(e.a, 1)} + {_fmt(e.b, 2)}"
    elif isinstance(e, Prod):
        text = f"{_fmt(e.a, 2)}*{_fmt(e.b, 3)}"
    elif isinstance(e, Quot):
        text = f"{_fmt(e.a, 2)}/{_fmt(e.b, 3)}"
    elif isinstance(e, Pow):
        text = f"{_fmt(e.base, 4)}^{e.n}"
    elif isinstance(e, Fun):
        text = f"{e.name}({_fmt(e.arg, 1)})"
    else:
        raise TypeError(f"not an expression node: {e!r}")
    if e.prec < need:
        return f"({text})"
    return text


def to_text(e: Expr) -> str:
    """Prints a tree so that parse(to_text(e)) == e structurally."""
    return _fmt(e, 1)
