"""Symbolic expression trees with exact rational constants.

Nodes are frozen dataclasses, so structural equality and hashing come
for free and every tree is safe to share. Numeric literals are stored
as `fractions.Fraction`; floats are rejected at construction time to
keep the symbolic layer exact.

Division is total: a zero denominator evaluates to 0. Downstream code
that needs real division is responsible for discharging the matching
nonzeroness obligation before it rewrites.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Union

from .errors import NonIntegerPow, UnboundSymbol


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (int, Fraction)):
            raise TypeError(f"Const requires int or Fraction, got {type(self.value).__name__}")
        if isinstance(self.value, int):
            object.__setattr__(self, "value", Fraction(self.value))


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
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Pow(Expr):
    """Power with an integer exponent, or a series index name.

    A string exponent is only meaningful inside the body of a
    SeriesSum that binds that name.
    """

    base: Expr
    exp: Union[int, str]

    def __post_init__(self):
        if isinstance(self.exp, bool) or not isinstance(self.exp, (int, str)):
            raise NonIntegerPow(f"exponent must be int or index name, got {self.exp!r}")


@dataclass(frozen=True)
class SeriesSum(Expr):
    """sum over index = start, start+1, ... of body; start is 0 or 1."""

    index: str
    start: int
    body: Expr

    def __post_init__(self):
        if self.start not in (0, 1):
            raise ValueError(f"series start must be 0 or 1, got {self.start}")


@dataclass(frozen=True)
class Deriv:
    """Marker for the derivative of a named function symbol.

    Not itself an Expr; it only appears in the head position of App.
    """

    fn: str


@dataclass(frozen=True)
class App(Expr):
    fn: Union[str, Deriv]
    arg: Expr


@dataclass
class Env:
    """Numeric environment: variable values and function implementations."""

    vars: Dict[str, float] = field(default_factory=dict)
    fns: Dict[str, Callable[[float], float]] = field(default_factory=dict)
    derivs: Dict[str, Callable[[float], float]] = field(default_factory=dict)


def free_vars(e: Expr) -> set:
    """Free variable names of e, respecting the SeriesSum binder."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, (Add, Sub, Mul, Div)):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Neg):
        return free_vars(e.arg)
    if isinstance(e, Pow):
        fv = free_vars(e.base)
        if isinstance(e.exp, str):
            fv = fv | {e.exp}
        return fv
    if isinstance(e, SeriesSum):
        return free_vars(e.body) - {e.index}
    if isinstance(e, App):
        return free_vars(e.arg)
    raise TypeError(f"not an expression: {e!r}")


def substitute(e: Expr, name: str, value: Expr) -> Expr:
    """Replace free occurrences of Var(name) by value.

    An index name used as an exponent can only be replaced by an
    integer literal.
    """
    if isinstance(e, Var):
        return value if e.name == name else e
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return Add(substitute(e.left, name, value), substitute(e.right, name, value))
    if isinstance(e, Sub):
        return Sub(substitute(e.left, name, value), substitute(e.right, name, value))
    if isinstance(e, Mul):
        return Mul(substitute(e.left, name, value), substitute(e.right, name, value))
    if isinstance(e, Div):
        return Div(substitute(e.left, name, value), substitute(e.right, name, value))
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, name, value))
    if isinstance(e, Pow):
        base = substitute(e.base, name, value)
        exp = e.exp
        if isinstance(exp, str) and exp == name:
            if isinstance(value, Const) and value.value.denominator == 1:
                exp = int(value.value)
            else:
                raise NonIntegerPow(f"cannot substitute {value!r} for exponent {name}")
        return Pow(base, exp)
    if isinstance(e, SeriesSum):
        if e.index == name:
            return e
        return SeriesSum(e.index, e.start, substitute(e.body, name, value))
    if isinstance(e, App):
        return App(e.fn, substitute(e.arg, name, value))
    raise TypeError(f"not an expression: {e!r}")


def _pow_val(b: float, n: int) -> float:
    if n >= 0:
        return b ** n
    d = b ** (-n)
    return 0.0 if d == 0.0 else 1.0 / d


def _series_fast(s: SeriesSum, env: Env, cutoff: int):
    """Closed loop for bodies that factor as c * i^k * x^i.

    Returns None when the body has a shape the fast path does not
    recognize; the caller falls back to per-term substitution.
    """
    idx = s.index
    factors = []
    stack = [s.body]
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.append(f.left)
            stack.append(f.right)
        else:
            factors.append(f)
    const_part = 1.0
    i_degree = 0
    base_val = None
    for f in factors:
        if isinstance(f, Var) and f.name == idx:
            i_degree += 1
        elif isinstance(f, Pow) and isinstance(f.exp, str) and f.exp == idx:
            if base_val is not None or idx in free_vars(f.base):
                return None
            base_val = eval_expr(f.base, env, cutoff)
        elif idx not in free_vars(f):
            const_part *= eval_expr(f, env, cutoff)
        else:
            return None
    if base_val is None:
        return None
    total = 0.0
    power = _pow_val(base_val, s.start)
    for i in range(s.start, cutoff + 1):
        total += const_part * (i ** i_degree if i_degree else 1) * power
        power *= base_val
    return total


def eval_expr(e: Expr, env: Env, series_cutoff: int = 2000) -> float:
    """Evaluate e to a float under env.

    Series are truncated at series_cutoff terms. Division by zero
    yields 0.0, matching the total-division convention used by the
    symbolic layer.
    """
    if isinstance(e, Var):
        try:
            return float(env.vars[e.name])
        except KeyError:
            raise UnboundSymbol(e.name) from None
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Add):
        return eval_expr(e.left, env, series_cutoff) + eval_expr(e.right, env, series_cutoff)
    if isinstance(e, Sub):
        return eval_expr(e.left, env, series_cutoff) - eval_expr(e.right, env, series_cutoff)
    if isinstance(e, Mul):
        return eval_expr(e.left, env, series_cutoff) * eval_expr(e.right, env, series_cutoff)
    if isinstance(e, Div):
        den = eval_expr(e.right, env, series_cutoff)
        if den == 0.0:
            return 0.0
        return eval_expr(e.left, env, series_cutoff) / den
    if isinstance(e, Neg):
        return -eval_expr(e.arg, env, series_cutoff)
    if isinstance(e, Pow):
        b = eval_expr(e.base, env, series_cutoff)
        exp = e.exp
        if isinstance(exp, str):
            try:
                v = env.vars[exp]
            except KeyError:
                raise UnboundSymbol(exp) from None
            if v != int(v):
                raise NonIntegerPow(f"index {exp} bound to non-integer {v}")
            exp = int(v)
        return _pow_val(b, exp)
    if isinstance(e, SeriesSum):
        fast = _series_fast(e, env, series_cutoff)
        if fast is not None:
            return fast
        total = 0.0
        inner = Env(dict(env.vars), env.fns, env.derivs)
        for i in range(e.start, series_cutoff + 1):
            inner.vars[e.index] = i
            total += eval_expr(e.body, inner, series_cutoff)
        return total
    if isinstance(e, App):
        a = eval_expr(e.arg, env, series_cutoff)
        if isinstance(e.fn, Deriv):
            try:
                return float(env.derivs[e.fn.fn](a))
            except KeyError:
                raise UnboundSymbol(f"deriv({e.fn.fn})") from None
        try:
            f = env.fns[e.fn]
        except KeyError:
            raise UnboundSymbol(e.fn) from None
        return float(f(a))
    raise TypeError(f"not an expression: {e!r}")
