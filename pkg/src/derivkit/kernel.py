"""The proof checker: contexts, goal states, and the step interpreter.

A theory is checked by replaying its proof script against the goal.
Every step either transforms the goal soundly or fails the whole
check; side conditions raised along the way must be discharged from
the hypotheses in scope. Nothing in here trusts the script: a check
that returns accepted constitutes a derivation of the goal from the
hypotheses under the total-division reading of expressions.

Rewriting and goal closure compare subterms by atom-mode canonical
form (division and applications opaque), which keeps them sound
without side conditions. Clearing denominators, in field_normalize
and in lemma application, switches to rational form and pays for it
with one nonzeroness obligation per denominator crossed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .discharge import discharge
from .errors import (ArityMismatch, DerivkitError, DuplicateName,
                     GoalNotClosed, NotDerivable, ObligationFailed,
                     StepFailed, UnboundSymbol)
from .expr import (Add, App, Const, Deriv, Div, Env, Expr, Mul, Neg, Pow,
                   SeriesSum, Sub, Var, eval_expr, free_vars, substitute)
from .formula import (And, Antideriv, AntiderivConst, ApplyLemma,
                      DivergesLeftAt, DerivRule, EqF, Exists, ExistsIntro,
                      FieldNormalize, Forall, Formula, Implies, IndexShift,
                      Intro, LimitDivergenceWitness, Lt, Ne0, REAL,
                      RewriteWith, RingClose, SeriesGeom, SeriesGeomWeighted,
                      Specialize, STATE, Theory, Unfold, instantiate_forall,
                      subst_formula)
from .parser import print_expr, print_formula, print_step
from .poly import Poly, derivative, divexact
from .ringnorm import Normalizer

SYMBOLIC = "symbolic"
NUMERIC_CERTIFIED = "numeric_certified"


@dataclass
class StepRecord:
    step: str
    goal_after: str
    obligations: List[str]


@dataclass
class CheckResult:
    name: str
    accepted: bool
    soundness: str
    steps: List[StepRecord]
    failure: Optional[Tuple[Optional[int], str]] = None


@dataclass
class LemmaEntry:
    theory: Theory
    accepted: bool


LemmaPool = Dict[str, LemmaEntry]


def _subst_vars(e: Expr, mapping: Dict[str, Expr]) -> Expr:
    if not mapping:
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return Add(_subst_vars(e.left, mapping), _subst_vars(e.right, mapping))
    if isinstance(e, Sub):
        return Sub(_subst_vars(e.left, mapping), _subst_vars(e.right, mapping))
    if isinstance(e, Mul):
        return Mul(_subst_vars(e.left, mapping), _subst_vars(e.right, mapping))
    if isinstance(e, Div):
        return Div(_subst_vars(e.left, mapping), _subst_vars(e.right, mapping))
    if isinstance(e, Neg):
        return Neg(_subst_vars(e.arg, mapping))
    if isinstance(e, Pow):
        return Pow(_subst_vars(e.base, mapping), e.exp)
    if isinstance(e, SeriesSum):
        inner = {k: v for k, v in mapping.items() if k != e.index}
        return SeriesSum(e.index, e.start, _subst_vars(e.body, inner))
    if isinstance(e, App):
        return App(e.fn, _subst_vars(e.arg, mapping))
    raise TypeError(f"not an expression: {e!r}")


def _map_formula(f: Formula, fn) -> Formula:
    if isinstance(f, EqF):
        return EqF(fn(f.left), fn(f.right))
    if isinstance(f, Ne0):
        return Ne0(fn(f.arg))
    if isinstance(f, Lt):
        return Lt(fn(f.left), fn(f.right))
    if isinstance(f, Forall):
        return Forall(f.binders, _map_formula(f.body, fn))
    if isinstance(f, Exists):
        return Exists(f.binder, _map_formula(f.body, fn))
    if isinstance(f, Implies):
        return Implies(_map_formula(f.ante, fn), _map_formula(f.cons, fn))
    if isinstance(f, And):
        return And(_map_formula(f.left, fn), _map_formula(f.right, fn))
    if isinstance(f, DivergesLeftAt):
        return DivergesLeftAt(f.fn_name, fn(f.point))
    raise TypeError(f"not a formula: {f!r}")


class _Ctx:
    """Mutable checking context for one theory."""

    def __init__(self, theory: Theory):
        self.vars: Dict[str, str] = {}
        self.fns: Dict[str, Tuple[str, str]] = {}
        self.consts: Dict[str, str] = {}
        self.lets: Dict[str, Expr] = dict(theory.lets)
        self.hyps: Dict[str, Formula] = {}
        for n, s in theory.var_decls:
            self.vars[n] = s
        for n in theory.fn_decls:
            self.fns[n] = (STATE, REAL)
        for n in theory.const_decls:
            self.consts[n] = REAL
        if theory.uses_state():
            for extra in ("s1", "s2"):
                if extra not in self.all_names():
                    self.vars[extra] = STATE
        for n, f in theory.hyps:
            self.hyps[n] = f
        self.unfolded: Dict[str, Expr] = {}
        for n, body in theory.lets:
            self.unfolded[n] = _subst_vars(body, self.unfolded)

    def all_names(self) -> set:
        return (set(self.vars) | set(self.fns) | set(self.consts)
                | set(self.lets) | set(self.hyps))

    def fresh(self, base: str) -> str:
        name = base
        while name in self.all_names():
            name += "'"
        return name

    def unfold_expr(self, e: Expr) -> Expr:
        return _subst_vars(e, self.unfolded)

    def unfold_formula(self, f: Formula) -> Formula:
        # binder names can never collide with let names (the parser
        # holds all declarations in one namespace), so a plain map works
        return _map_formula(f, self.unfold_expr)

    def facts(self) -> List[Tuple[str, Formula]]:
        return [(n, self.unfold_formula(f)) for n, f in self.hyps.items()]

    def check_term(self, e: Expr):
        """Every symbol of a script-supplied term must be in scope."""
        if isinstance(e, Var):
            if e.name not in self.vars and e.name not in self.consts \
                    and e.name not in self.lets:
                raise UnboundSymbol(e.name)
        elif isinstance(e, (Add, Sub, Mul, Div)):
            self.check_term(e.left)
            self.check_term(e.right)
        elif isinstance(e, Neg):
            self.check_term(e.arg)
        elif isinstance(e, Pow):
            self.check_term(e.base)
        elif isinstance(e, SeriesSum):
            self.check_term(e.body)
        elif isinstance(e, App):
            fn = e.fn.fn if isinstance(e.fn, Deriv) else e.fn
            if fn not in self.fns:
                raise UnboundSymbol(fn)
            self.check_term(e.arg)


class _State:
    def __init__(self, ctx: _Ctx, goal: Formula):
        self.ctx = ctx
        self.goal = goal
        self.closed = False
        self.soundness = SYMBOLIC


def _formula_key(f: Formula, N: Normalizer, unfold, depth: int = 0) -> tuple:
    if isinstance(f, EqF):
        return ("eq", N.atom_key(unfold(f.left)), N.atom_key(unfold(f.right)))
    if isinstance(f, Ne0):
        return ("ne0", N.atom_key(unfold(f.arg)))
    if isinstance(f, Lt):
        return ("lt", N.atom_key(unfold(f.left)), N.atom_key(unfold(f.right)))
    if isinstance(f, Forall):
        body = f.body
        for i, (b, _) in enumerate(f.binders):
            body = subst_formula(body, b, Var(f"@b{depth + i}"))
        return ("all", tuple(s for _, s in f.binders),
                _formula_key(body, N, unfold, depth + len(f.binders)))
    if isinstance(f, Exists):
        b, s = f.binder
        body = subst_formula(f.body, b, Var(f"@b{depth}"))
        return ("ex", s, _formula_key(body, N, unfold, depth + 1))
    if isinstance(f, Implies):
        return ("imp", _formula_key(f.ante, N, unfold, depth),
                _formula_key(f.cons, N, unfold, depth))
    if isinstance(f, And):
        return ("and", _formula_key(f.left, N, unfold, depth),
                _formula_key(f.right, N, unfold, depth))
    if isinstance(f, DivergesLeftAt):
        return ("dvg", f.fn_name, N.atom_key(unfold(f.point)))
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# step implementations


def _discharge_or_fail(ctx: _Ctx, ob: Formula, idx: int) -> str:
    try:
        discharge(ctx.facts(), ob)
    except NotDerivable:
        raise ObligationFailed(idx, print_formula(ob)) from None
    return print_formula(ob)


def _rewrite_everywhere(e: Expr, pkey: tuple, replacement: Expr,
                        N: Normalizer, unfold) -> Tuple[Expr, int]:
    count = 0

    def walk(x: Expr) -> Expr:
        nonlocal count
        if N.atom_key(unfold(x)) == pkey:
            count += 1
            return replacement
        if isinstance(x, Add):
            return Add(walk(x.left), walk(x.right))
        if isinstance(x, Sub):
            return Sub(walk(x.left), walk(x.right))
        if isinstance(x, Mul):
            return Mul(walk(x.left), walk(x.right))
        if isinstance(x, Div):
            return Div(walk(x.left), walk(x.right))
        if isinstance(x, Neg):
            return Neg(walk(x.arg))
        if isinstance(x, Pow):
            return Pow(walk(x.base), x.exp)
        if isinstance(x, SeriesSum):
            return SeriesSum(x.index, x.start, walk(x.body))
        if isinstance(x, App):
            return App(x.fn, walk(x.arg))
        return x

    return walk(e), count


def _do_rewrite(state: _State, step: RewriteWith, idx: int) -> List[str]:
    ctx = state.ctx
    h = ctx.hyps.get(step.hyp)
    if h is None:
        raise StepFailed(idx, f"unknown hypothesis {step.hyp!r}")
    if not isinstance(h, EqF):
        raise StepFailed(idx, f"hypothesis {step.hyp!r} is not an equation")
    pattern, replacement = (h.right, h.left) if step.reverse else (h.left, h.right)
    N = Normalizer()
    pkey = N.atom_key(ctx.unfold_expr(pattern))
    total = 0

    def rw(e: Expr) -> Expr:
        nonlocal total
        out, n = _rewrite_everywhere(e, pkey, replacement, N, ctx.unfold_expr)
        total += n
        return out

    g = state.goal
    if isinstance(g, (EqF, Lt, Ne0, DivergesLeftAt)):
        state.goal = _map_formula(g, rw)
    else:
        raise StepFailed(idx, "rewriting needs an unquantified goal")
    if total == 0:
        side = "right" if step.reverse else "left"
        raise StepFailed(idx, f"no occurrence of the {side}-hand side of {step.hyp!r}")
    return []


def _do_unfold(state: _State, step: Unfold, idx: int) -> List[str]:
    ctx = state.ctx
    if step.name not in ctx.lets:
        raise StepFailed(idx, f"{step.name!r} is not a let binding")
    body = ctx.lets[step.name]
    count = 0

    def repl(e: Expr) -> Expr:
        nonlocal count
        out = _subst_vars(e, {step.name: body})
        count += sum(1 for v in _var_occurrences(e) if v == step.name)
        return out

    state.goal = _map_formula(state.goal, repl)
    if count == 0:
        raise StepFailed(idx, f"no occurrence of {step.name!r} in the goal")
    return []


def _var_occurrences(e: Expr):
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, (Add, Sub, Mul, Div)):
        yield from _var_occurrences(e.left)
        yield from _var_occurrences(e.right)
    elif isinstance(e, Neg):
        yield from _var_occurrences(e.arg)
    elif isinstance(e, Pow):
        yield from _var_occurrences(e.base)
    elif isinstance(e, SeriesSum):
        for v in _var_occurrences(e.body):
            if v != e.index:
                yield v
    elif isinstance(e, App):
        yield from _var_occurrences(e.arg)


def _dedupe_denominators(dens: List[Expr], N: Normalizer) -> List[Expr]:
    seen = set()
    out = []
    for d in dens:
        if isinstance(d, Const):
            if d.value != 0:
                continue
        k = N.atom_key(d)
        if k in seen:
            continue
        seen.add(k)
        out.append(d)
    return out


def _do_field_normalize(state: _State, idx: int) -> List[str]:
    ctx = state.ctx
    g = state.goal
    if not isinstance(g, EqF):
        raise StepFailed(idx, "field_normalize needs an equational goal")
    L = ctx.unfold_expr(g.left)
    R = ctx.unfold_expr(g.right)
    Rn = Normalizer(rational=True)
    nL, dL = Rn.norm(L)
    nR, dR = Rn.norm(R)
    obls = []
    for d in _dedupe_denominators(Rn.denominators, Rn):
        obls.append(_discharge_or_fail(ctx, Ne0(d), idx))
    state.goal = EqF(Rn.to_expr(nL * dR), Rn.to_expr(nR * dL))
    return obls


def _do_ring(state: _State, idx: int) -> List[str]:
    g = state.goal
    if not isinstance(g, EqF):
        raise StepFailed(idx, "ring needs an equational goal")
    N = Normalizer()
    ctx = state.ctx
    if N.atom_key(ctx.unfold_expr(g.left)) != N.atom_key(ctx.unfold_expr(g.right)):
        raise StepFailed(idx, "sides are not equal as ring expressions")
    state.closed = True
    return []


def _do_intro(state: _State, step: Intro, idx: int) -> List[str]:
    ctx = state.ctx
    for name in step.names:
        g = state.goal
        if isinstance(g, Implies):
            if name in ctx.all_names():
                raise DuplicateName(f"{name!r} is already in scope")
            ctx.hyps[name] = g.ante
            state.goal = g.cons
        elif isinstance(g, Forall):
            if name in ctx.all_names():
                raise DuplicateName(f"{name!r} is already in scope")
            (b, sort), rest = g.binders[0], g.binders[1:]
            inner: Formula = Forall(rest, g.body) if rest else g.body
            ctx.vars[name] = sort
            state.goal = subst_formula(inner, b, Var(name))
        else:
            raise StepFailed(idx, f"nothing to introduce for {name!r}")
    return []


def _do_specialize(state: _State, step: Specialize, idx: int) -> List[str]:
    ctx = state.ctx
    h = ctx.hyps.get(step.hyp)
    if h is None:
        raise StepFailed(idx, f"unknown hypothesis {step.hyp!r}")
    for t in step.terms:
        ctx.check_term(t)
    if isinstance(h, Exists):
        # skolemize once, in place: later specializations of the same
        # hypothesis share the witness constant
        b, sort = h.binder
        fresh = ctx.fresh(b)
        ctx.vars[fresh] = sort
        h = subst_formula(h.body, b, Var(fresh))
        ctx.hyps[step.hyp] = h
    if not isinstance(h, Forall):
        raise StepFailed(idx, f"hypothesis {step.hyp!r} is not universally quantified")
    try:
        inst = instantiate_forall(h, step.terms)
    except ArityMismatch:
        raise StepFailed(idx, f"too many terms for {step.hyp!r}") from None
    k = 1
    while f"{step.hyp}_{k}" in ctx.all_names():
        k += 1
    ctx.hyps[f"{step.hyp}_{k}"] = inst
    return []


def _do_use(state: _State, step: ExistsIntro, idx: int) -> List[str]:
    g = state.goal
    if not isinstance(g, Exists):
        raise StepFailed(idx, "use needs an existential goal")
    state.ctx.check_term(step.witness)
    state.goal = subst_formula(g.body, g.binder[0], step.witness)
    return []


def _check_formula_symbols(f: Formula, ctx: _Ctx):
    def chk(e: Expr, bound: set):
        if isinstance(e, Var):
            if e.name not in bound and e.name not in ctx.vars \
                    and e.name not in ctx.consts and e.name not in ctx.lets:
                raise UnboundSymbol(e.name)
        elif isinstance(e, (Add, Sub, Mul, Div)):
            chk(e.left, bound)
            chk(e.right, bound)
        elif isinstance(e, Neg):
            chk(e.arg, bound)
        elif isinstance(e, Pow):
            chk(e.base, bound)
        elif isinstance(e, SeriesSum):
            chk(e.body, bound | {e.index})
        elif isinstance(e, App):
            fn = e.fn.fn if isinstance(e.fn, Deriv) else e.fn
            if fn not in ctx.fns:
                raise UnboundSymbol(fn)
            chk(e.arg, bound)

    def walk(g: Formula, bound: set):
        if isinstance(g, EqF):
            chk(g.left, bound)
            chk(g.right, bound)
        elif isinstance(g, Ne0):
            chk(g.arg, bound)
        elif isinstance(g, Lt):
            chk(g.left, bound)
            chk(g.right, bound)
        elif isinstance(g, Forall):
            walk(g.body, bound | {b for b, _ in g.binders})
        elif isinstance(g, Exists):
            walk(g.body, bound | {g.binder[0]})
        elif isinstance(g, Implies):
            walk(g.ante, bound)
            walk(g.cons, bound)
        elif isinstance(g, And):
            walk(g.left, bound)
            walk(g.right, bound)
        elif isinstance(g, DivergesLeftAt):
            chk(g.point, bound)

    walk(f, set())


def _do_apply(state: _State, step: ApplyLemma, idx: int,
              pool: Optional[LemmaPool]) -> List[str]:
    ctx = state.ctx
    entry = (pool or {}).get(step.name)
    if entry is None or not entry.accepted:
        raise StepFailed(idx, f"lemma {step.name!r} is not available")
    lem = entry.theory
    lem_ctx = _Ctx(lem)
    N = Normalizer()
    current = {_formula_key(ctx.unfold_formula(f), N, lambda e: e)
               for f in ctx.hyps.values()}
    for hn, hf in lem.hyps:
        k = _formula_key(lem_ctx.unfold_formula(hf), N, lambda e: e)
        if k not in current:
            raise StepFailed(idx, f"hypothesis {hn!r} of {step.name!r} is not present")
    g = state.goal
    lg = lem_ctx.unfold_formula(lem.goal)
    if isinstance(g, EqF) and isinstance(lg, EqF):
        R = Normalizer(rational=True)
        ng, dg = R.norm(Sub(ctx.unfold_expr(g.left), ctx.unfold_expr(g.right)))
        nl, dl = R.norm(Sub(lg.left, lg.right))
        obls = []
        for d in _dedupe_denominators(R.denominators, R):
            obls.append(_discharge_or_fail(ctx, Ne0(d), idx))
        if nl.is_zero():
            if not ng.is_zero():
                raise StepFailed(idx, f"lemma {step.name!r} is trivial but the goal is not")
        else:
            q = divexact(ng * dl, nl * dg)
            if q is None:
                raise StepFailed(
                    idx, f"goal difference is not a multiple of {step.name!r}")
        state.closed = True
        return obls
    if step.name in ctx.all_names():
        raise DuplicateName(f"{step.name!r} is already in scope")
    _check_formula_symbols(lg, ctx)
    ctx.hyps[step.name] = lg
    return []


def _series_bases(state: _State, idx: int, weighted: bool) -> List[str]:
    ctx = state.ctx
    g = state.goal
    if not isinstance(g, EqF):
        raise StepFailed(idx, "series steps need an equational goal")
    bases: List[Expr] = []

    def match_body(s: SeriesSum) -> Optional[Expr]:
        if s.start != 1:
            return None
        factors = []
        stack = [s.body]
        while stack:
            f = stack.pop()
            if isinstance(f, Mul):
                stack.append(f.right)
                stack.append(f.left)
            else:
                factors.append(f)
        if weighted:
            if len(factors) != 2:
                return None
            if isinstance(factors[0], Var) and factors[0].name == s.index:
                idx_f, pow_f = factors
            elif isinstance(factors[1], Var) and factors[1].name == s.index:
                pow_f, idx_f = factors
            else:
                return None
        else:
            if len(factors) != 1:
                return None
            pow_f = factors[0]
        if not (isinstance(pow_f, Pow) and pow_f.exp == s.index):
            return None
        if s.index in free_vars(pow_f.base):
            return None
        return pow_f.base

    def walk(e: Expr) -> Expr:
        if isinstance(e, SeriesSum):
            base = match_body(e)
            if base is not None:
                bases.append(base)
                if weighted:
                    return Div(base, Pow(Sub(Const(Fraction(1)), base), 2))
                return Div(base, Sub(Const(Fraction(1)), base))
            return SeriesSum(e.index, e.start, walk(e.body))
        if isinstance(e, Add):
            return Add(walk(e.left), walk(e.right))
        if isinstance(e, Sub):
            return Sub(walk(e.left), walk(e.right))
        if isinstance(e, Mul):
            return Mul(walk(e.left), walk(e.right))
        if isinstance(e, Div):
            return Div(walk(e.left), walk(e.right))
        if isinstance(e, Neg):
            return Neg(walk(e.arg))
        if isinstance(e, Pow):
            return Pow(walk(e.base), e.exp)
        if isinstance(e, App):
            return App(e.fn, walk(e.arg))
        return e

    state.goal = EqF(walk(g.left), walk(g.right))
    if not bases:
        kind = "weighted geometric" if weighted else "geometric"
        raise StepFailed(idx, f"no {kind} series in the goal")
    obls = []
    N = Normalizer()
    seen = set()
    for b in bases:
        ub = ctx.unfold_expr(b)
        k = N.atom_key(ub)
        if k in seen:
            continue
        seen.add(k)
        obls.append(_discharge_or_fail(ctx, Lt(Const(Fraction(0)), ub), idx))
        obls.append(_discharge_or_fail(ctx, Lt(ub, Const(Fraction(1))), idx))
    return obls


def _do_index_shift(state: _State, idx: int) -> List[str]:
    g = state.goal
    if not isinstance(g, EqF):
        raise StepFailed(idx, "index_shift needs an equational goal")
    count = 0

    def walk(e: Expr) -> Expr:
        nonlocal count
        if isinstance(e, SeriesSum) and e.start == 0:
            count += 1
            head = substitute(e.body, e.index, Const(Fraction(0)))
            return Add(head, SeriesSum(e.index, 1, e.body))
        if isinstance(e, SeriesSum):
            return SeriesSum(e.index, e.start, walk(e.body))
        if isinstance(e, Add):
            return Add(walk(e.left), walk(e.right))
        if isinstance(e, Sub):
            return Sub(walk(e.left), walk(e.right))
        if isinstance(e, Mul):
            return Mul(walk(e.left), walk(e.right))
        if isinstance(e, Div):
            return Div(walk(e.left), walk(e.right))
        if isinstance(e, Neg):
            return Neg(walk(e.arg))
        if isinstance(e, Pow):
            return Pow(walk(e.base), e.exp)
        if isinstance(e, App):
            return App(e.fn, walk(e.arg))
        return e

    state.goal = EqF(walk(g.left), walk(g.right))
    if count == 0:
        raise StepFailed(idx, "no zero-based series in the goal")
    return []


def _do_deriv_rule(state: _State, step: DerivRule, idx: int) -> List[str]:
    ctx = state.ctx
    g = state.goal
    if not isinstance(g, EqF):
        raise StepFailed(idx, "deriv_rule needs an equational goal")
    count = 0

    def expand(e: Expr) -> Expr:
        nonlocal count
        if isinstance(e, App) and isinstance(e.fn, Deriv) and e.fn.fn in ctx.lets:
            body = ctx.unfolded[e.fn.fn]
            fv = sorted(free_vars(body))
            if len(fv) != 1:
                raise StepFailed(
                    idx, f"{e.fn.fn!r} must have exactly one free variable")
            v = fv[0]
            N = Normalizer()
            p = N.atom_poly(body)
            for pv in p.vars():
                if pv.startswith("@") and v in free_vars(N._reps[pv]):
                    raise StepFailed(idx, f"{e.fn.fn!r} is not polynomial in {v!r}")
            shape = _classify_poly(p, v)
            if shape is None:
                raise StepFailed(idx, f"no derivative rule covers {e.fn.fn!r}")
            if shape != step.rule:
                raise StepFailed(
                    idx, f"top rule is {shape!r}, not {step.rule!r}")
            d = N.to_expr(derivative(p, v))
            count += 1
            return substitute(d, v, expand(e.arg))
        if isinstance(e, Add):
            return Add(expand(e.left), expand(e.right))
        if isinstance(e, Sub):
            return Sub(expand(e.left), expand(e.right))
        if isinstance(e, Mul):
            return Mul(expand(e.left), expand(e.right))
        if isinstance(e, Div):
            return Div(expand(e.left), expand(e.right))
        if isinstance(e, Neg):
            return Neg(expand(e.arg))
        if isinstance(e, Pow):
            return Pow(expand(e.base), e.exp)
        if isinstance(e, SeriesSum):
            return SeriesSum(e.index, e.start, expand(e.body))
        if isinstance(e, App):
            return App(e.fn, expand(e.arg))
        return e

    state.goal = EqF(expand(g.left), expand(g.right))
    if count == 0:
        raise StepFailed(idx, "no derivative of a let binding in the goal")
    return []


def _classify_poly(p: Poly, v: str) -> Optional[str]:
    deg = p.degree_in(v)
    if deg == 0:
        return "const"
    if p == Poly.var(v):
        return "id"
    if len(p.terms) == 1:
        mono, coeff = next(iter(p.terms.items()))
        if mono == ((v, deg),):
            return "pow" if coeff == 1 else "scalar"
        return "scalar"
    if deg == 1:
        return "linear"
    return None


def _chase(e: Expr, u: str, ctx: _Ctx, hops: int = 3) -> Expr:
    """Follow pointwise definitions: while e is g(u) and some
    hypothesis says forall w, g(w) = rhs, replace e by rhs[w := u]."""
    cur = e
    for _ in range(hops):
        if not (isinstance(cur, App) and isinstance(cur.fn, str)
                and isinstance(cur.arg, Var) and cur.arg.name == u):
            return cur
        nxt = None
        for f in ctx.hyps.values():
            if isinstance(f, Forall) and len(f.binders) == 1 \
                    and isinstance(f.body, EqF):
                w = f.binders[0][0]
                lhs = f.body.left
                if isinstance(lhs, App) and lhs.fn == cur.fn \
                        and isinstance(lhs.arg, Var) and lhs.arg.name == w:
                    nxt = substitute(f.body.right, w, Var(u))
                    break
        if nxt is None:
            return cur
        cur = nxt
    return cur


def _antideriv_parts(state: _State, idx: int):
    """Shared analysis for the antiderivative schemas: the goal must be
    forall t, F(t) = rhs with rhs rational over a constant denominator
    and every opaque subterm free of t."""
    ctx = state.ctx
    g = state.goal
    if not (isinstance(g, Forall) and len(g.binders) == 1
            and isinstance(g.body, EqF)):
        raise StepFailed(idx, "goal must be a single universal equation")
    t = g.binders[0][0]
    lhs = g.body.left
    if not (isinstance(lhs, App) and isinstance(lhs.fn, str)
            and isinstance(lhs.arg, Var) and lhs.arg.name == t):
        raise StepFailed(idx, "left side must be a function applied to the bound variable")
    F = lhs.fn
    R = Normalizer(rational=True)
    num, den = R.norm(ctx.unfold_expr(g.body.right))
    for d in _dedupe_denominators(R.denominators, R):
        _discharge_or_fail(ctx, Ne0(d), idx)
    if not (den.is_const() and den.const_value() != 0):
        raise StepFailed(idx, "right side must have a constant denominator")
    rhs_p = num.scale(Fraction(1) / den.const_value())
    for pv in rhs_p.vars():
        if pv.startswith("@") and t in free_vars(R._reps[pv]):
            raise StepFailed(idx, "opaque terms on the right must not involve the bound variable")
    return ctx, t, F, R, rhs_p


def _deriv_hyp_matches(ctx: _Ctx, F: str, t: str, R: Normalizer,
                       want: Poly) -> bool:
    """Is there a hypothesis forall u, deriv(F)(u) = rhs whose chased
    closed form equals `want` (written in the bound variable t)?"""
    for f in ctx.hyps.values():
        if not (isinstance(f, Forall) and len(f.binders) == 1
                and isinstance(f.body, EqF)):
            continue
        u = f.binders[0][0]
        lhs = f.body.left
        if not (isinstance(lhs, App) and isinstance(lhs.fn, Deriv)
                and lhs.fn.fn == F and isinstance(lhs.arg, Var)
                and lhs.arg.name == u):
            continue
        closed = _chase(f.body.right, u, ctx)
        want_expr = substitute(R.to_expr(want), t, Var(u))
        try:
            nw, dw = R.norm(ctx.unfold_expr(want_expr))
            nc, dc = R.norm(ctx.unfold_expr(closed))
        except DerivkitError:
            continue
        if nw == nc and dw == dc:
            return True
    return False


def _do_antideriv_const(state: _State, idx: int) -> List[str]:
    ctx, t, F, R, rhs_p = _antideriv_parts(state, idx)
    if rhs_p.degree_in(t) > 1:
        raise StepFailed(idx, "right side must be linear in the bound variable")
    c1 = rhs_p.coeff_in(t, 1)
    c0 = rhs_p.coeff_in(t, 0)
    f0 = R.atom_poly(App(F, Const(Fraction(0))))
    if c0 != f0:
        raise StepFailed(idx, "constant term must be the function's value at zero")
    if t in {v for v in c1.vars() if not v.startswith("@")}:
        raise StepFailed(idx, "slope must not involve the bound variable")
    if not _deriv_hyp_matches(ctx, F, t, R, c1):
        raise StepFailed(idx, f"no hypothesis gives a constant derivative for {F!r}")
    state.closed = True
    return []


def _do_antideriv(state: _State, idx: int) -> List[str]:
    ctx, t, F, R, rhs_p = _antideriv_parts(state, idx)
    f0 = R.atom_poly(App(F, Const(Fraction(0))))
    f0_var = next(iter(f0.terms))
    if rhs_p.terms.get(f0_var) != 1:
        raise StepFailed(idx, "value at zero must appear exactly once on the right")
    G = rhs_p - f0
    if f0_var[0][0] in G.vars():
        raise StepFailed(idx, "value at zero must enter linearly")
    if not G.coeff_in(t, 0).is_zero():
        raise StepFailed(idx, "right side must vanish at zero apart from the initial value")
    dG = derivative(G, t)
    if not _deriv_hyp_matches(ctx, F, t, R, dG):
        raise StepFailed(idx, f"no hypothesis matches the derivative of the right side for {F!r}")
    state.closed = True
    return []


# -- divergence witness ------------------------------------------------


def _positive_consts(ctx: _Ctx) -> set:
    out = set()
    for _, f in ctx.facts():
        if isinstance(f, Lt) and isinstance(f.left, Const) and f.left.value == 0 \
                and isinstance(f.right, Var):
            out.add(f.right.name)
    return out


def _solve_linear(g):
    y0 = g(0.0)
    y1 = g(1.0)
    slope = y1 - y0
    if not (math.isfinite(y0) and math.isfinite(y1)) or abs(slope) < 1e-12:
        return None
    return -y0 / slope


def _do_limit_witness(state: _State, step: LimitDivergenceWitness,
                      idx: int, seed: int) -> List[str]:
    ctx = state.ctx
    g = state.goal
    if not isinstance(g, DivergesLeftAt):
        raise StepFailed(idx, "limit_witness needs a divergence goal")
    if g.fn_name not in ctx.lets:
        raise StepFailed(idx, f"{g.fn_name!r} is not a let binding")
    body = ctx.unfolded[g.fn_name]
    point = ctx.unfold_expr(g.point)
    fv = free_vars(body)
    approach = [v for v in fv if v in ctx.vars]
    if len(approach) != 1:
        raise StepFailed(idx, "the diverging expression needs exactly one free variable")
    pvar = approach[0]
    consts = (fv | free_vars(point)) - {pvar}
    if any(c not in ctx.consts for c in consts):
        raise StepFailed(idx, "the approach point must only involve constants")
    obls = [_discharge_or_fail(ctx, Lt(Const(Fraction(0)), point), idx)]

    positive = _positive_consts(ctx)
    names = sorted(consts)
    grids = []
    for c in names:
        if c in positive:
            grids.append([1e-3, 1.0, 10.0])
        else:
            grids.append([-10.0, -1.0, 1.0, 10.0])
    envs: List[Dict[str, float]] = []

    def product(i: int, acc: Dict[str, float]):
        if i == len(names):
            envs.append(dict(acc))
            return
        for v in grids[i]:
            acc[names[i]] = v
            product(i + 1, acc)

    product(0, {})
    rng = random.Random(f"derivkit:{seed}:limit_witness")
    for _ in range(8):
        env = {}
        for c in names:
            if c in positive:
                env[c] = rng.uniform(1e-3, 10.0)
            else:
                env[c] = rng.uniform(-10.0, 10.0)
        envs.append(env)

    checked = 0
    for env in envs:
        full = dict(env)
        if not _env_satisfies_hyps(ctx, full, pvar):
            continue
        checked += 1
        eenv = Env(vars=full)
        pval = eval_expr(point, eenv)
        prev = None
        values = []
        for j in range(1, step.depth + 1):
            eenv.vars[pvar] = pval - 10.0 ** (-j)
            y = eval_expr(body, eenv)
            values.append(y)
            if not math.isfinite(y):
                raise StepFailed(idx, f"divergence table is not finite at offset 1e-{j}")
            if y < 0:
                raise StepFailed(idx, f"divergence table goes negative at offset 1e-{j}")
            if prev is not None and y <= prev:
                raise StepFailed(idx, f"divergence table is not increasing at offset 1e-{j}")
            prev = y
        if values[-1] <= 1e6:
            raise StepFailed(idx, "divergence table does not exceed 1e6")
    if checked == 0:
        raise StepFailed(idx, "no admissible constant assignment found")
    state.closed = True
    state.soundness = NUMERIC_CERTIFIED
    return obls


def _env_satisfies_hyps(ctx: _Ctx, env: Dict[str, float], pvar: str) -> bool:
    """Filter a candidate constant assignment against the hypotheses;
    equations with one unassigned constant are solved for it."""
    facts = ctx.facts()
    for _pass in range(2):
        for _, f in facts:
            if not isinstance(f, EqF):
                continue
            missing = [v for v in (free_vars(f.left) | free_vars(f.right))
                       if v not in env and v != pvar and v in ctx.consts]
            if len(missing) == 1:
                v = missing[0]

                def gfun(c, v=v, f=f):
                    e2 = Env(vars={**env, v: c})
                    try:
                        return eval_expr(f.left, e2) - eval_expr(f.right, e2)
                    except DerivkitError:
                        return float("nan")

                sol = _solve_linear(gfun)
                if sol is not None:
                    env[v] = sol
    for _, f in facts:
        try:
            if isinstance(f, EqF):
                if _misses(f, env, pvar, ctx):
                    continue
                e2 = Env(vars=env)
                l, r = eval_expr(f.left, e2), eval_expr(f.right, e2)
                if not math.isfinite(l) or abs(l - r) > 1e-9 * max(1.0, abs(l), abs(r)):
                    return False
            elif isinstance(f, Lt):
                if _misses(f, env, pvar, ctx):
                    continue
                e2 = Env(vars=env)
                if not eval_expr(f.left, e2) < eval_expr(f.right, e2):
                    return False
            elif isinstance(f, Ne0):
                if _misses(f, env, pvar, ctx):
                    continue
                e2 = Env(vars=env)
                if eval_expr(f.arg, e2) == 0.0:
                    return False
        except DerivkitError:
            continue
    return True


def _misses(f: Formula, env: Dict[str, float], pvar: str, ctx: _Ctx) -> bool:
    from .formula import formula_free_vars
    return any(v not in env for v in formula_free_vars(f))


# ---------------------------------------------------------------------------
# the checker


def _goal_holds(state: _State) -> bool:
    if state.closed:
        return True
    g = state.goal
    ctx = state.ctx
    if isinstance(g, EqF):
        N = Normalizer()
        return N.atom_key(ctx.unfold_expr(g.left)) == N.atom_key(ctx.unfold_expr(g.right))
    if isinstance(g, (Ne0, Lt)):
        try:
            discharge(ctx.facts(), ctx.unfold_formula(g))
            return True
        except NotDerivable:
            return False
    return False


def _run_step(state: _State, step, idx: int, pool: Optional[LemmaPool],
              seed: int) -> List[str]:
    if isinstance(step, RewriteWith):
        return _do_rewrite(state, step, idx)
    if isinstance(step, Unfold):
        return _do_unfold(state, step, idx)
    if isinstance(step, FieldNormalize):
        return _do_field_normalize(state, idx)
    if isinstance(step, RingClose):
        return _do_ring(state, idx)
    if isinstance(step, Intro):
        return _do_intro(state, step, idx)
    if isinstance(step, Specialize):
        return _do_specialize(state, step, idx)
    if isinstance(step, ExistsIntro):
        return _do_use(state, step, idx)
    if isinstance(step, ApplyLemma):
        return _do_apply(state, step, idx, pool)
    if isinstance(step, SeriesGeom):
        return _series_bases(state, idx, weighted=False)
    if isinstance(step, SeriesGeomWeighted):
        return _series_bases(state, idx, weighted=True)
    if isinstance(step, IndexShift):
        return _do_index_shift(state, idx)
    if isinstance(step, DerivRule):
        return _do_deriv_rule(state, step, idx)
    if isinstance(step, AntiderivConst):
        return _do_antideriv_const(state, idx)
    if isinstance(step, Antideriv):
        return _do_antideriv(state, idx)
    if isinstance(step, LimitDivergenceWitness):
        return _do_limit_witness(state, step, idx, seed)
    raise StepFailed(idx, f"unknown step {step!r}")


def _failure_reason(e: DerivkitError) -> str:
    if isinstance(e, ObligationFailed):
        return f"ObligationFailed: {e.obligation}"
    if isinstance(e, StepFailed):
        return f"StepFailed: {e.reason}"
    return f"{type(e).__name__}: {e}"


def check_theory(theory: Theory, pool: Optional[LemmaPool] = None,
                 seed: int = 0) -> CheckResult:
    records: List[StepRecord] = []
    try:
        ctx = _Ctx(theory)
        state = _State(ctx, theory.goal)
        for idx, step in enumerate(theory.steps, start=1):
            if state.closed:
                raise StepFailed(idx, "goal is already closed")
            obls = _run_step(state, step, idx, pool, seed)
            records.append(StepRecord(print_step(step),
                                      print_formula(state.goal), obls))
        if not _goal_holds(state):
            raise GoalNotClosed("goal not closed after the final step")
    except DerivkitError as e:
        step_idx = getattr(e, "step_index", None)
        return CheckResult(theory.name, False, SYMBOLIC, records,
                           (step_idx, _failure_reason(e)))
    return CheckResult(theory.name, True, state.soundness, records, None)
