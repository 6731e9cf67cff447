"""Quantified formulas over expressions, plus the theory object model.

Everything here is a frozen dataclass built from tuples, so whole
theories compare structurally. The parser produces these objects, the
printer consumes them, and the checker walks them; none of the three
needs private knowledge of the others.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

from .errors import ArityMismatch
from .expr import Expr, Var, free_vars, substitute

REAL = "Real"
STATE = "State"


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class EqF(Formula):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Ne0(Formula):
    arg: Expr


@dataclass(frozen=True)
class Lt(Formula):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Forall(Formula):
    binders: Tuple[Tuple[str, str], ...]
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    binder: Tuple[str, str]
    body: Formula


@dataclass(frozen=True)
class Implies(Formula):
    ante: Formula
    cons: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class DivergesLeftAt(Formula):
    """The named let-bound expression grows without bound as its free
    variable approaches `point` from the left."""

    fn_name: str
    point: Expr


def formula_free_vars(f: Formula) -> set:
    if isinstance(f, EqF):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, Ne0):
        return free_vars(f.arg)
    if isinstance(f, Lt):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, Forall):
        bound = {n for n, _ in f.binders}
        return formula_free_vars(f.body) - bound
    if isinstance(f, Exists):
        return formula_free_vars(f.body) - {f.binder[0]}
    if isinstance(f, Implies):
        return formula_free_vars(f.ante) | formula_free_vars(f.cons)
    if isinstance(f, And):
        return formula_free_vars(f.left) | formula_free_vars(f.right)
    if isinstance(f, DivergesLeftAt):
        return free_vars(f.point)
    raise TypeError(f"not a formula: {f!r}")


def _fresh(base: str, avoid: set) -> str:
    name = base
    while name in avoid:
        name += "'"
    return name


def subst_formula(f: Formula, name: str, value: Expr) -> Formula:
    """Capture-avoiding substitution of value for the free variable name."""
    if isinstance(f, EqF):
        return EqF(substitute(f.left, name, value), substitute(f.right, name, value))
    if isinstance(f, Ne0):
        return Ne0(substitute(f.arg, name, value))
    if isinstance(f, Lt):
        return Lt(substitute(f.left, name, value), substitute(f.right, name, value))
    if isinstance(f, Implies):
        return Implies(subst_formula(f.ante, name, value), subst_formula(f.cons, name, value))
    if isinstance(f, And):
        return And(subst_formula(f.left, name, value), subst_formula(f.right, name, value))
    if isinstance(f, DivergesLeftAt):
        return DivergesLeftAt(f.fn_name, substitute(f.point, name, value))
    if isinstance(f, Forall):
        if any(b == name for b, _ in f.binders):
            return f
        vfree = free_vars(value)
        binders = list(f.binders)
        body = f.body
        for i, (b, sort) in enumerate(binders):
            if b in vfree:
                nb = _fresh(b, vfree | formula_free_vars(body) | {x for x, _ in binders})
                body = subst_formula(body, b, Var(nb))
                binders[i] = (nb, sort)
        return Forall(tuple(binders), subst_formula(body, name, value))
    if isinstance(f, Exists):
        b, sort = f.binder
        if b == name:
            return f
        vfree = free_vars(value)
        body = f.body
        if b in vfree:
            nb = _fresh(b, vfree | formula_free_vars(body))
            body = subst_formula(body, b, Var(nb))
            b = nb
        return Exists((b, sort), subst_formula(body, name, value))
    raise TypeError(f"not a formula: {f!r}")


def instantiate_forall(f: Formula, terms) -> Formula:
    """Plug terms into the leading universal binders, left to right."""
    cur = f
    for t in terms:
        if not isinstance(cur, Forall):
            raise ArityMismatch(f"too many instantiation terms for {f!r}")
        (name, _), rest = cur.binders[0], cur.binders[1:]
        inner: Formula = Forall(rest, cur.body) if rest else cur.body
        cur = subst_formula(inner, name, t)
    return cur


# ---------------------------------------------------------------------------
# proof steps


class Step:
    __slots__ = ()


@dataclass(frozen=True)
class RewriteWith(Step):
    hyp: str
    reverse: bool = False


@dataclass(frozen=True)
class Unfold(Step):
    name: str


@dataclass(frozen=True)
class FieldNormalize(Step):
    pass


@dataclass(frozen=True)
class RingClose(Step):
    pass


@dataclass(frozen=True)
class Intro(Step):
    names: Tuple[str, ...]


@dataclass(frozen=True)
class Specialize(Step):
    hyp: str
    terms: Tuple[Expr, ...]


@dataclass(frozen=True)
class ExistsIntro(Step):
    witness: Expr


@dataclass(frozen=True)
class ApplyLemma(Step):
    name: str


@dataclass(frozen=True)
class SeriesGeom(Step):
    pass


@dataclass(frozen=True)
class SeriesGeomWeighted(Step):
    pass


@dataclass(frozen=True)
class IndexShift(Step):
    pass


@dataclass(frozen=True)
class DerivRule(Step):
    rule: str


@dataclass(frozen=True)
class AntiderivConst(Step):
    pass


@dataclass(frozen=True)
class Antideriv(Step):
    pass


@dataclass(frozen=True)
class LimitDivergenceWitness(Step):
    depth: int


# ---------------------------------------------------------------------------
# theories


@dataclass(frozen=True)
class Theory:
    name: str
    var_decls: Tuple[Tuple[str, str], ...]
    fn_decls: Tuple[str, ...]
    const_decls: Tuple[str, ...]
    hyps: Tuple[Tuple[str, Formula], ...]
    lets: Tuple[Tuple[str, Expr], ...]
    goal: Formula
    steps: Tuple[Step, ...]

    def uses_state(self) -> bool:
        return bool(self.fn_decls) or any(s == STATE for _, s in self.var_decls)
