#!/usr/bin/env python
# coding: utf-8
"""
Module: expr
Description: Scalar expressions in the single independent variable t.

Expressions are immutable trees built from constants, the variable t, the
binary operators + - * / ^, negation and the functions exp, ln, sin, cos,
tanh, sqrt and abs. Two internal node types extend the grammar so that
differentiation stays closed for time maps that have no closed form:

    integral(f, t0, g)     value  = int_{t0}^{g(t)} f(s) ds  (adaptive quadrature)
    inverse(F, a, b, g)    value  = F^{-1}(g(t)) on [a, b]   (monotone table + root polish)

Configuration:
    QUAD_TOL, QUAD_LIMIT       defaults for adaptive quadrature
    INVERSE_TABLE_SIZE         samples stored for numeric inverses
    INVERSE_XTOL               root tolerance for numeric inverses
    CACHE_LIMIT                values remembered per integral or inverse node
    SUGGESTION_CUTOFF          rapidfuzz score required for a "did you mean"

Usage:
    >>> e = parse("3*exp(2*t)")
    >>> evaluate(differentiate(e), 0.0)
    6.0
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from functools import singledispatch
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from rapidfuzz import fuzz, process
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

# ==============================
# CONFIGURATION SECTION
# ==============================

QUAD_TOL = 1e-12            # Absolute (and relative) tolerance of antiderivatives
QUAD_LIMIT = 40             # Maximum number of adaptive subintervals
INVERSE_TABLE_SIZE = 129    # Dense monotone samples kept for numeric inverses
INVERSE_XTOL = 1e-12        # Root tolerance for numeric inverses
SUGGESTION_CUTOFF = 60      # 0-100, minimum similarity for identifier suggestions
CACHE_LIMIT = 4096          # Values remembered per integral or inverse node

FUNCTIONS = ("exp", "ln", "sin", "cos", "tanh", "sqrt", "abs")

LOGGER = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


# ==============================
# EXCEPTIONS
# ==============================

class ExprSyntaxError(ValueError):
    """Malformed expression text; `offset` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ExprDomainError(ValueError):
    """Evaluation left the domain of a subexpression."""

    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message}: {subexpression}")
        self.subexpression = subexpression


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


# ==============================
# EXPRESSION TREE
# ==============================

class Expr:
    """Base class of all expression nodes; adds arithmetic sugar."""

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

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    """The independent variable t."""


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


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr


@dataclass(frozen=True)
class Integral(Expr):
    """int_{lower}^{upper(t)} integrand(s) ds; the integrand is an Expr in its own t."""
    integrand: Expr
    lower: float
    upper: Expr
    _cache: Dict[float, float] = field(default_factory=dict, compare=False, repr=False, hash=False)


@dataclass(frozen=True)
class Inverse(Expr):
    """Root u in [lower, upper] of func(u) = arg(t) for a strictly monotone func."""
    func: Expr
    lower: float
    upper: float
    arg: Expr
    _cache: Dict[str, object] = field(default_factory=dict, compare=False, repr=False, hash=False)


TIME = Var()
ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    """Wrap plain numbers as constants; pass expressions through."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError(f"cannot convert {value!r} to an expression")


def constant_value(e: Expr) -> Optional[float]:
    """Return the value of a Const node, else None."""
    return e.value if isinstance(e, Const) else None


def contains_var(e: Expr) -> bool:
    """True when t occurs anywhere in e."""
    if isinstance(e, Var):
        return True
    if isinstance(e, Const):
        return False
    if isinstance(e, (Neg, Func)):
        return contains_var(e.arg)
    if isinstance(e, Pow):
        return contains_var(e.base) or contains_var(e.exponent)
    if isinstance(e, Integral):
        return contains_var(e.upper)
    if isinstance(e, Inverse):
        return contains_var(e.arg)
    return contains_var(e.left) or contains_var(e.right)


# ==============================
# SMART CONSTRUCTORS (LIGHT SIMPLIFICATION)
# ==============================

def _is(e: Expr, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    return Div(a, b)


def power(a: Expr, b: Expr) -> Expr:
    if _is(b, 0.0):
        return ONE
    if _is(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold(lambda: a.value ** b.value)
        if folded is not None:
            return folded
    return Pow(a, b)


_SCALAR_FUNCTIONS = {
    "exp": math.exp,
    "ln": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "tanh": math.tanh,
    "sqrt": math.sqrt,
    "abs": abs,
}


def func(name: str, a: Expr) -> Expr:
    if name not in _SCALAR_FUNCTIONS:
        raise ValueError(f"unknown function '{name}'")
    if isinstance(a, Const):
        folded = _fold(lambda: _SCALAR_FUNCTIONS[name](a.value))
        if folded is not None:
            return folded
    return Func(name, a)


def exp(a) -> Expr:
    return func("exp", as_expr(a))


def ln(a) -> Expr:
    return func("ln", as_expr(a))


def integral(integrand: Expr, lower: float, upper: Expr = TIME) -> Expr:
    """int_{lower}^{upper} integrand as a node; constant integrands integrate in closed form."""
    if isinstance(integrand, Const):
        return mul(integrand, sub(upper, Const(float(lower))))
    return Integral(integrand, float(lower), upper)


def inverse(f: Expr, lower: float, upper: float, arg: Expr = TIME) -> Expr:
    """Numeric inverse of a strictly monotone f on [lower, upper], applied to arg."""
    return Inverse(f, float(lower), float(upper), arg)


def _fold(thunk) -> Optional[Const]:
    try:
        value = thunk()
    except (ValueError, ZeroDivisionError, OverflowError):
        return None
    if isinstance(value, complex) or not math.isfinite(value):
        return None
    return Const(float(value))


# ==============================
# SUBSTITUTION
# ==============================

def substitute(e: Expr, inner: Expr) -> Expr:
    """Replace every occurrence of t in e by `inner` (composition e(inner(t)))."""
    if isinstance(e, Var):
        return inner
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return neg(substitute(e.arg, inner))
    if isinstance(e, Func):
        return func(e.name, substitute(e.arg, inner))
    if isinstance(e, Pow):
        return power(substitute(e.base, inner), substitute(e.exponent, inner))
    if isinstance(e, Integral):
        return Integral(e.integrand, e.lower, substitute(e.upper, inner))
    if isinstance(e, Inverse):
        return Inverse(e.func, e.lower, e.upper, substitute(e.arg, inner))
    builder = {Add: add, Sub: sub, Mul: mul, Div: div}[type(e)]
    return builder(substitute(e.left, inner), substitute(e.right, inner))


# ==============================
# DIFFERENTIATION
# ==============================

@singledispatch
def differentiate(e: Expr) -> Expr:
    """Exact symbolic derivative with respect to t."""
    raise TypeError(f"cannot differentiate {type(e).__name__}")


@differentiate.register
def _(e: Const) -> Expr:
    return ZERO


@differentiate.register
def _(e: Var) -> Expr:
    return ONE


@differentiate.register
def _(e: Neg) -> Expr:
    return neg(differentiate(e.arg))


@differentiate.register
def _(e: Add) -> Expr:
    return add(differentiate(e.left), differentiate(e.right))


@differentiate.register
def _(e: Sub) -> Expr:
    return sub(differentiate(e.left), differentiate(e.right))


@differentiate.register
def _(e: Mul) -> Expr:
    return add(mul(differentiate(e.left), e.right), mul(e.left, differentiate(e.right)))


@differentiate.register
def _(e: Div) -> Expr:
    numerator = sub(mul(differentiate(e.left), e.right), mul(e.left, differentiate(e.right)))
    return div(numerator, power(e.right, Const(2.0)))


@differentiate.register
def _(e: Pow) -> Expr:
    if not contains_var(e.exponent):
        return mul(mul(e.exponent, power(e.base, sub(e.exponent, ONE))), differentiate(e.base))
    if not contains_var(e.base):
        return mul(mul(func("ln", e.base), e), differentiate(e.exponent))
    # d(b^k) = b^k (k' ln b + k b'/b)
    inner = add(mul(differentiate(e.exponent), func("ln", e.base)),
                div(mul(e.exponent, differentiate(e.base)), e.base))
    return mul(e, inner)


@differentiate.register
def _(e: Func) -> Expr:
    a = e.arg
    da = differentiate(a)
    if e.name == "exp":
        outer = e
    elif e.name == "ln":
        return div(da, a)
    elif e.name == "sin":
        outer = func("cos", a)
    elif e.name == "cos":
        outer = neg(func("sin", a))
    elif e.name == "tanh":
        outer = sub(ONE, power(e, Const(2.0)))
    elif e.name == "sqrt":
        return div(da, mul(Const(2.0), e))
    else:  # abs: sign(a) away from 0
        outer = div(a, e)
    return mul(outer, da)


@differentiate.register
def _(e: Integral) -> Expr:
    return mul(substitute(e.integrand, e.upper), differentiate(e.upper))


@differentiate.register
def _(e: Inverse) -> Expr:
    return div(differentiate(e.arg), substitute(differentiate(e.func), e))


def nth_derivative(e: Expr, order: int) -> Expr:
    for _ in range(order):
        e = differentiate(e)
    return e


# ==============================
# EVALUATION
# ==============================

def evaluate(e: Expr, t: ArrayLike) -> ArrayLike:
    """
    Evaluate e at t (scalar or numpy array).

    Raises:
        ExprDomainError: division by zero, ln of a nonpositive value, sqrt of a
            negative value, a negative base under a fractional power, or a
            non-finite result.
    """
    values = np.asarray(t, dtype=float)
    with np.errstate(all="ignore"):
        result = np.broadcast_to(_eval(e, values), values.shape).astype(float)
    if not np.all(np.isfinite(result)):
        raise ExprDomainError("non-finite value", to_string(e))
    if values.ndim == 0:
        return float(result)
    return result


def _eval(e: Expr, t: np.ndarray):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return t
    if isinstance(e, Neg):
        return -_eval(e.arg, t)
    if isinstance(e, Add):
        return _eval(e.left, t) + _eval(e.right, t)
    if isinstance(e, Sub):
        return _eval(e.left, t) - _eval(e.right, t)
    if isinstance(e, Mul):
        return _eval(e.left, t) * _eval(e.right, t)
    if isinstance(e, Div):
        denominator = _eval(e.right, t)
        if np.any(denominator == 0.0):
            raise ExprDomainError("division by zero", to_string(e))
        return _eval(e.left, t) / denominator
    if isinstance(e, Pow):
        return _eval_pow(e, t)
    if isinstance(e, Func):
        return _eval_func(e, t)
    if isinstance(e, Integral):
        return _eval_integral(e, t)
    if isinstance(e, Inverse):
        return _eval_inverse(e, t)
    raise TypeError(f"unknown node {type(e).__name__}")


def _eval_pow(e: Pow, t: np.ndarray):
    base = np.asarray(_eval(e.base, t), dtype=float)
    exponent = np.asarray(_eval(e.exponent, t), dtype=float)
    fractional = exponent != np.round(exponent)
    if np.any((base < 0.0) & fractional):
        raise ExprDomainError("negative base under a fractional power", to_string(e))
    if np.any((base == 0.0) & (exponent < 0.0)):
        raise ExprDomainError("zero raised to a negative power", to_string(e))
    return np.power(base, exponent)


def _eval_func(e: Func, t: np.ndarray):
    a = np.asarray(_eval(e.arg, t), dtype=float)
    if e.name == "ln":
        if np.any(a <= 0.0):
            raise ExprDomainError("logarithm of a nonpositive value", to_string(e))
        return np.log(a)
    if e.name == "sqrt":
        if np.any(a < 0.0):
            raise ExprDomainError("square root of a negative value", to_string(e))
        return np.sqrt(a)
    return {"exp": np.exp, "sin": np.sin, "cos": np.cos,
            "tanh": np.tanh, "abs": np.abs}[e.name](a)


def _remember(cache: dict, key: float, value) -> None:
    # oldest values go first; the inverse table stays
    if len(cache) >= CACHE_LIMIT:
        stale = next(k for k in cache if k != "table")
        del cache[stale]
    cache[key] = value


def _eval_integral(e: Integral, t: np.ndarray):
    uppers = np.broadcast_to(np.asarray(_eval(e.upper, t), dtype=float), t.shape)
    out = np.empty(uppers.shape)
    for index, upper in np.ndenumerate(uppers):
        key = float(upper)
        if key not in e._cache:
            _remember(e._cache, key, antiderivative(e.integrand, e.lower, key))
        out[index] = e._cache[key]
    return out


def _inverse_table(e: Inverse) -> Tuple[np.ndarray, np.ndarray, PchipInterpolator]:
    if "table" not in e._cache:
        grid = np.linspace(e.lower, e.upper, INVERSE_TABLE_SIZE)
        values = np.asarray(evaluate(e.func, grid))
        steps = np.diff(values)
        if not (np.all(steps > 0.0) or np.all(steps < 0.0)):
            raise ExprDomainError("map is not strictly monotone on "
                                  f"[{e.lower}, {e.upper}]", to_string(e.func))
        if steps[0] < 0.0:
            grid, values = grid[::-1], values[::-1]
        e._cache["table"] = (grid, values, PchipInterpolator(values, grid))
    return e._cache["table"]


def _eval_inverse(e: Inverse, t: np.ndarray):
    grid, values, interpolant = _inverse_table(e)
    targets = np.broadcast_to(np.asarray(_eval(e.arg, t), dtype=float), t.shape)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(values))))
    out = np.empty(targets.shape)
    for index, target in np.ndenumerate(targets):
        key = float(target)
        if key in e._cache:
            out[index] = e._cache[key]
            continue
        if key < values[0] - slack or key > values[-1] + slack:
            raise ExprDomainError(f"value {key:.6g} outside the image "
                                  f"[{values[0]:.6g}, {values[-1]:.6g}]", to_string(e.func))
        cell = int(np.clip(np.searchsorted(values, key), 1, len(values) - 1))
        lo, hi = sorted((grid[cell - 1], grid[cell]))
        guess = float(interpolant(key))

        def gap(u, target=key):
            return float(evaluate(e.func, u)) - target

        if gap(lo) * gap(hi) > 0.0:
            # endpoint within slack of the image boundary
            root = lo if abs(gap(lo)) < abs(gap(hi)) else hi
        else:
            root = optimize.brentq(gap, lo, hi, xtol=INVERSE_XTOL)
        LOGGER.debug("inverse at %.6g: table guess %.12g, root %.12g", key, guess, root)
        _remember(e._cache, key, root)
        out[index] = root
    return out


# ==============================
# QUADRATURE
# ==============================

def antiderivative(e: Expr, t0: float, t: float, tol: float = QUAD_TOL,
                   limit: int = QUAD_LIMIT) -> float:
    """
    Fixed antiderivative int_{t0}^{t} e(s) ds by adaptive Gauss-Kronrod quadrature.

    Args:
        e: Integrand.
        t0: Base point of the antiderivative.
        t: Upper limit.
        tol: Absolute error target (also used as relative target for large values).
        limit: Maximum number of adaptive subintervals.

    Returns:
        The integral; exactly 0.0 when t == t0.

    Raises:
        QuadratureError: singular integrand inside the interval or no
            convergence within `limit` subintervals.
    """
    if t == t0:
        return 0.0

    def integrand(s):
        return float(evaluate(e, s))

    try:
        result = integrate.quad(integrand, t0, t, epsabs=tol, epsrel=tol,
                                limit=limit, full_output=1)
    except ExprDomainError as error:
        raise QuadratureError(f"singular integrand on [{t0}, {t}]: {error}") from error
    value, abserr = result[0], result[1]
    if len(result) > 3:
        if abserr > 10.0 * tol * max(1.0, abs(value)):
            raise QuadratureError(f"quadrature of {to_string(e)} on [{t0}, {t}] "
                                  f"did not converge: {result[3]}")
        LOGGER.debug("quadrature note on [%s, %s]: %s", t0, t, result[3])
    return float(value)


# ==============================
# PARSING
# ==============================

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    position = 0
    while position < len(text):
        if text[position:].strip() == "":
            break
        match = _TOKEN_RE.match(text, position)
        if match is None or match.lastgroup is None:
            start = position + len(text[position:]) - len(text[position:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[start]!r}",
                                  len(text[:start].encode("utf-8")))
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(_Token(kind, match.group(kind), len(text[:start].encode("utf-8"))))
        position = match.end()
    tokens.append(_Token("end", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    """Recursive descent over the expression grammar."""

    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.index += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            raise ExprSyntaxError(f"expected '{text}'", self.current.offset)

    def parse(self) -> Expr:
        if self.current.kind == "end":
            raise ExprSyntaxError("empty input", 0)
        tree = self.expr()
        if self.current.kind != "end":
            raise ExprSyntaxError(f"unexpected token '{self.current.text}'", self.current.offset)
        return tree

    def expr(self) -> Expr:
        tree = self.term()
        while True:
            if self.accept("+"):
                tree = Add(tree, self.term())
            elif self.accept("-"):
                tree = Sub(tree, self.term())
            else:
                return tree

    def term(self) -> Expr:
        tree = self.factor()
        while True:
            if self.accept("*"):
                tree = Mul(tree, self.factor())
            elif self.accept("/"):
                tree = Div(tree, self.factor())
            else:
                return tree

    def factor(self) -> Expr:
        negated = self.accept("-")
        tree = self.base()
        if self.accept("^"):
            tree = Pow(tree, self.factor())
        return Neg(tree) if negated else tree

    def base(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.index += 1
            return Const(float(token.text))
        if token.kind == "ident":
            self.index += 1
            if token.text == "t":
                return TIME
            if token.text in FUNCTIONS:
                self.expect("(")
                argument = self.expr()
                self.expect(")")
                return Func(token.text, argument)
            raise ExprSyntaxError(_unknown_identifier(token.text), token.offset)
        if self.accept("("):
            tree = self.expr()
            self.expect(")")
            return tree
        if token.kind == "end":
            raise ExprSyntaxError("unexpected end of input", token.offset)
        raise ExprSyntaxError(f"unexpected token '{token.text}'", token.offset)


def _unknown_identifier(name: str) -> str:
    message = f"unknown identifier '{name}'"
    match = process.extractOne(name, ("t",) + FUNCTIONS, scorer=fuzz.ratio,
                               score_cutoff=SUGGESTION_CUTOFF)
    if match is not None:
        message += f"; did you mean '{match[0]}'?"
    return message


def parse(text: str) -> Expr:
    """Parse text into its unique tree (^ binds tighter than unary minus, then * /, then + -)."""
    return _Parser(text).parse()


# ==============================
# PRINTING
# ==============================

_PRECEDENCE = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        text = str(int(value))
    else:
        text = repr(value)
    return f"({text})" if value < 0 or text.startswith("-") else text


def to_string(e: Expr) -> str:
    """Render e in the parser's grammar with the minimum parentheses that keep the tree."""
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Integral):
        return (f"integral({to_string(e.integrand)}, {_format_number(e.lower)}, "
                f"{to_string(e.upper)})")
    if isinstance(e, Inverse):
        return (f"inverse({to_string(e.func)}, {_format_number(e.lower)}, "
                f"{_format_number(e.upper)}, {to_string(e.arg)})")
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if isinstance(e.arg, (Neg, Add, Sub, Mul, Div)):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if not isinstance(e.base, (Var, Func)) and not (
                isinstance(e.base, Const) and e.base.value >= 0):
            base = f"({base})"
        exponent = to_string(e.exponent)
        if isinstance(e.exponent, (Add, Sub, Mul, Div)):
            exponent = f"({exponent})"
        return f"{base}^{exponent}"
    symbol = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
    level = _PRECEDENCE[type(e)]
    left = to_string(e.left)
    if _PRECEDENCE.get(type(e.left), 5) < level:
        left = f"({left})"
    right = to_string(e.right)
    if _PRECEDENCE.get(type(e.right), 5) <= level and not isinstance(e.right, (Neg, Pow)):
        right = f"({right})"
    return f"{left} {symbol} {right}"
