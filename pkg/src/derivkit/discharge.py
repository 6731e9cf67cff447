"""Automatic discharge of nonzeroness and positivity side conditions.

Obligations are closed by structural recursion over the expression,
consulting the hypotheses in scope modulo canonical form. The rules
are deliberately one-directional: every rule concludes its claim from
strictly sufficient premises under the total-division semantics, so a
returned trace is always sound; failure just raises NotDerivable.

Hypotheses enter as facts of two shapes: nonzeroness keys from `e != 0`
hypotheses, and positivity polynomials `b - a` from `a < b` hypotheses.
All comparisons happen on atom-mode canonical forms, which keep
division, series, and application nodes opaque.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Tuple

from .errors import NotDerivable
from .expr import Add, Const, Div, Expr, Mul, Neg, Pow, SeriesSum, Sub, Var
from .formula import Formula, Lt, Ne0
from .poly import Poly, divexact
from .ringnorm import Normalizer

_DEPTH = 5


def _signed_terms(e: Expr, sign: int = 1):
    if isinstance(e, Add):
        return _signed_terms(e.left, sign) + _signed_terms(e.right, sign)
    if isinstance(e, Sub):
        return _signed_terms(e.left, sign) + _signed_terms(e.right, -sign)
    if isinstance(e, Neg):
        return _signed_terms(e.arg, -sign)
    return [(sign, e)]


def _pkey(p: Poly) -> tuple:
    return tuple(sorted(p.terms.items()))


class _Discharger:
    def __init__(self, facts: List[Tuple[str, Formula]]):
        self.N = Normalizer()
        self.ne0_facts: List[Tuple[str, tuple]] = []
        self.pos_facts: List[Tuple[str, Poly]] = []
        self.nonneg_vars: set = set()
        self._scope: tuple = ()
        self._hit: dict = {}
        self._miss: dict = {}
        self._active: set = set()
        self._polys: dict = {}
        for name, f in facts:
            if isinstance(f, Ne0):
                self.ne0_facts.append((name, self.N.atom_key(f.arg)))
            elif isinstance(f, Lt):
                self.pos_facts.append((name, self.N.atom_poly(Sub(f.right, f.left))))

    def _expr_of(self, q: Poly) -> Expr:
        """Reconstruct q as an expression, remembering its form."""
        e = self.N.to_expr(q)
        self._polys[id(e)] = (e, q)
        return e

    def _apoly(self, e: Expr) -> Poly:
        ent = self._polys.get(id(e))
        if ent is not None and ent[0] is e:
            return ent[1]
        p = self.N.atom_poly(e)
        self._polys[id(e)] = (e, p)
        return p

    def _memo(self, kind: str, e: Expr, depth: int, raw) -> Optional[str]:
        """Memoize sign queries on the canonical polynomial.

        A success holds at any depth and for any expression with the
        same canonical form. A failure only rules out retries at equal
        or lower depth for the same node shape, since some rules are
        shape-directed. The active set breaks self-referential loops."""
        pk = (kind, self._scope, _pkey(self._apoly(e)))
        got = self._hit.get(pk)
        if got is not None:
            return got
        mk = (type(e).__name__,) + pk
        failed_at = self._miss.get(mk)
        if failed_at is not None and failed_at >= depth:
            return None
        if mk in self._active:
            return None
        self._active.add(mk)
        try:
            out = raw(e, depth)
        finally:
            self._active.discard(mk)
        if out is not None:
            self._hit[pk] = out
        else:
            self._miss[mk] = max(depth, failed_at or 0)
        return out

    def ne0(self, e: Expr, depth: int) -> Optional[str]:
        return self._memo("ne0", e, depth, self._ne0_raw)

    def pos(self, e: Expr, depth: int) -> Optional[str]:
        return self._memo("pos", e, depth, self._pos_raw)

    def neg(self, e: Expr, depth: int) -> Optional[str]:
        return self._memo("neg", e, depth, self._neg_raw)

    def nonneg(self, e: Expr, depth: int) -> Optional[str]:
        return self._memo("nonneg", e, depth, self._nonneg_raw)

    def nonpos(self, e: Expr, depth: int) -> Optional[str]:
        return self._memo("nonpos", e, depth, self._nonpos_raw)

    # -- e != 0 --------------------------------------------------------

    def _ne0_raw(self, e: Expr, depth: int) -> Optional[str]:
        p = self._apoly(e)
        if p.is_const():
            return "literal" if p.const_value() != 0 else None
        key = self.N.atom_key(e)
        for name, fk in self.ne0_facts:
            if fk == key:
                return f"hyp {name}"
        if isinstance(e, Neg):
            t = self.ne0(e.arg, depth)
            if t:
                return f"neg({t})"
        if isinstance(e, (Mul, Div)):
            tl = self.ne0(e.left, depth)
            tr = self.ne0(e.right, depth) if tl else None
            if tl and tr:
                return f"factors({tl}; {tr})"
        if isinstance(e, Pow) and isinstance(e.exp, int):
            if e.exp == 0:
                return "literal"
            t = self.ne0(e.base, depth)
            if t:
                return f"pow({t})"
        t = self.pos(e, depth)
        if t:
            return f"pos({t})"
        t = self.neg(e, depth)
        if t:
            return f"neg-sign({t})"
        if depth > 0:
            cs = self._content_split(p)
            if cs is not None:
                me, qe = cs
                tm = self.ne0(me, depth - 1)
                tq = self.ne0(qe, depth - 1) if tm else None
                if tm and tq:
                    return f"content({tm}; {tq})"
            split = self._rat_split(e)
            if split is not None:
                ne, de = split
                tn = self.ne0(ne, depth - 1)
                td = self.ne0(de, depth - 1) if tn else None
                if tn and td:
                    return f"quotient({tn}; {td})"
        return None

    # -- 0 < e ----------------------------------------------------------

    def _pos_raw(self, e: Expr, depth: int) -> Optional[str]:
        p = self._apoly(e)
        if p.is_const():
            return "literal" if p.const_value() > 0 else None
        for name, fp in self.pos_facts:
            if fp == p:
                return f"hyp {name}"
        if isinstance(e, Neg):
            t = self.neg(e.arg, depth)
            if t:
                return f"negate({t})"
        if isinstance(e, (Mul, Div)):
            tl = self.pos(e.left, depth)
            if tl:
                tr = self.pos(e.right, depth)
                if tr:
                    return f"both-pos({tl}; {tr})"
            nl = self.neg(e.left, depth)
            if nl:
                nr = self.neg(e.right, depth)
                if nr:
                    return f"both-neg({nl}; {nr})"
        if isinstance(e, Pow):
            if isinstance(e.exp, str):
                t = self.pos(e.base, depth)
                if t:
                    return f"pow-base({t})"
            elif e.exp == 0:
                return "literal"
            elif e.exp % 2 == 0:
                t = self.ne0(e.base, depth)
                if t:
                    return f"even-pow({t})"
            else:
                t = self.pos(e.base, depth)
                if t:
                    return f"odd-pow({t})"
        if isinstance(e, SeriesSum) and e.start == 1:
            self.pos_facts.append(("index", Poly.var(e.index)))
            self._scope += (("ipos", e.index),)
            try:
                t = self.pos(e.body, depth)
            finally:
                self.pos_facts.pop()
                self._scope = self._scope[:-1]
            if t:
                return f"series-terms({t})"
        if isinstance(e, (Add, Sub)):
            t = self._terms_pos(e, depth)
            if t:
                return t
        if isinstance(e, Var):
            t = self._extract_factor(e.name, depth)
            if t:
                return t
        if depth > 0:
            for name, fp in self.pos_facts:
                diff = self._expr_of(p - fp)
                t = self.nonneg(diff, depth - 1)
                if t:
                    return f"above({name}; {t})"
            cs = self._content_split(p)
            if cs is not None:
                me, qe = cs
                tm = self.pos(me, depth - 1)
                if tm:
                    tq = self.pos(qe, depth - 1)
                    if tq:
                        return f"content-pos({tm}; {tq})"
                nm = self.neg(me, depth - 1)
                if nm:
                    nq = self.neg(qe, depth - 1)
                    if nq:
                        return f"content-neg({nm}; {nq})"
            split = self._rat_split(e)
            if split is not None:
                ne, de = split
                tn = self.pos(ne, depth - 1)
                if tn:
                    td = self.pos(de, depth - 1)
                    if td:
                        return f"quotient-pos({tn}; {td})"
                nn = self.neg(ne, depth - 1)
                if nn:
                    nd = self.neg(de, depth - 1)
                    if nd:
                        return f"quotient-neg({nn}; {nd})"
        return None

    def _neg_raw(self, e: Expr, depth: int) -> Optional[str]:
        p = self._apoly(e)
        if p.is_const():
            return "literal" if p.const_value() < 0 else None
        for name, fp in self.pos_facts:
            if fp.scale(-1) == p:
                return f"hyp {name}"
        if isinstance(e, Neg):
            t = self.pos(e.arg, depth)
            if t:
                return f"negate({t})"
        if isinstance(e, (Mul, Div)):
            tl = self.pos(e.left, depth)
            if tl:
                tr = self.neg(e.right, depth)
                if tr:
                    return f"pos-neg({tl}; {tr})"
            nl = self.neg(e.left, depth)
            if nl:
                pr = self.pos(e.right, depth)
                if pr:
                    return f"neg-pos({nl}; {pr})"
        if isinstance(e, Pow) and isinstance(e.exp, int) and e.exp % 2 == 1:
            t = self.neg(e.base, depth)
            if t:
                return f"odd-pow({t})"
        if isinstance(e, (Add, Sub)):
            terms = _signed_terms(e)
            strict_at = None
            traces = []
            for i, (s, term) in enumerate(terms):
                t = self.nonpos(term, depth) if s > 0 else self.nonneg(term, depth)
                if t is None:
                    return None
                traces.append(t)
                if strict_at is None:
                    st = self.neg(term, depth) if s > 0 else self.pos(term, depth)
                    if st:
                        strict_at = st
            if strict_at:
                return f"sum-neg({strict_at})"
        return None

    def _nonneg_raw(self, e: Expr, depth: int) -> Optional[str]:
        p = self._apoly(e)
        if p.is_const():
            return "literal" if p.const_value() >= 0 else None
        if isinstance(e, Var) and e.name in self.nonneg_vars:
            return "index"
        t = self.pos(e, depth)
        if t:
            return t
        if isinstance(e, Neg):
            t = self.nonpos(e.arg, depth)
            if t:
                return f"negate({t})"
        if isinstance(e, (Mul, Div)):
            tl = self.nonneg(e.left, depth)
            if tl:
                tr = self.nonneg(e.right, depth)
                if tr:
                    return f"both-nonneg({tl}; {tr})"
            nl = self.nonpos(e.left, depth)
            if nl:
                nr = self.nonpos(e.right, depth)
                if nr:
                    return f"both-nonpos({nl}; {nr})"
        if isinstance(e, Pow):
            if isinstance(e.exp, str):
                t = self.nonneg(e.base, depth)
                if t:
                    return f"pow-base({t})"
            elif e.exp % 2 == 0:
                return "even-pow"
            else:
                t = self.nonneg(e.base, depth)
                if t:
                    return f"odd-pow({t})"
        if isinstance(e, SeriesSum):
            if e.start == 0:
                self.nonneg_vars.add(e.index)
                self._scope += (("inn", e.index),)
                try:
                    t = self.nonneg(e.body, depth)
                finally:
                    self.nonneg_vars.discard(e.index)
                    self._scope = self._scope[:-1]
            else:
                self.pos_facts.append(("index", Poly.var(e.index)))
                self._scope += (("ipos", e.index),)
                try:
                    t = self.nonneg(e.body, depth)
                finally:
                    self.pos_facts.pop()
                    self._scope = self._scope[:-1]
            if t:
                return f"series-terms({t})"
        if isinstance(e, (Add, Sub)):
            traces = []
            for s, term in _signed_terms(e):
                t = self.nonneg(term, depth) if s > 0 else self.nonpos(term, depth)
                if t is None:
                    return None
                traces.append(t)
            return "sum-nonneg"
        return None

    def _nonpos_raw(self, e: Expr, depth: int) -> Optional[str]:
        p = self._apoly(e)
        if p.is_const():
            return "literal" if p.const_value() <= 0 else None
        t = self.neg(e, depth)
        if t:
            return t
        if isinstance(e, Neg):
            t = self.nonneg(e.arg, depth)
            if t:
                return f"negate({t})"
        if isinstance(e, (Mul, Div)):
            tl = self.nonneg(e.left, depth)
            if tl:
                tr = self.nonpos(e.right, depth)
                if tr:
                    return f"nonneg-nonpos({tl}; {tr})"
            nl = self.nonpos(e.left, depth)
            if nl:
                nr = self.nonneg(e.right, depth)
                if nr:
                    return f"nonpos-nonneg({nl}; {nr})"
        if isinstance(e, Pow) and isinstance(e.exp, int) and e.exp % 2 == 1:
            t = self.nonpos(e.base, depth)
            if t:
                return f"odd-pow({t})"
        if isinstance(e, (Add, Sub)):
            for s, term in _signed_terms(e):
                t = self.nonpos(term, depth) if s > 0 else self.nonneg(term, depth)
                if t is None:
                    return None
            return "sum-nonpos"
        return None

    # -- helpers ---------------------------------------------------------

    def _terms_pos(self, e: Expr, depth: int) -> Optional[str]:
        terms = _signed_terms(e)
        strict = None
        for s, term in terms:
            t = self.nonneg(term, depth) if s > 0 else self.nonpos(term, depth)
            if t is None:
                return None
            if strict is None:
                st = self.pos(term, depth) if s > 0 else self.neg(term, depth)
                if st:
                    strict = st
        if strict:
            return f"sum-pos({strict})"
        return None

    def _extract_factor(self, var: str, depth: int) -> Optional[str]:
        """A bare variable is positive when some positive fact factors
        as var * rest with rest itself positive."""
        if depth <= 0:
            return None
        v = Poly.var(var)
        for name, fp in self.pos_facts:
            q = divexact(fp, v)
            if q is None or var in q.vars():
                continue
            t = self.pos(self._expr_of(q), depth - 1)
            if t:
                return f"factor-of({name}; {t})"
        return None

    def _content_split(self, p: Poly):
        """Factor out the common monomial of all terms, if any."""
        monos = list(p.terms)
        if len(monos) < 2:
            return None
        common = dict(monos[0])
        for m in monos[1:]:
            exps = dict(m)
            for v in list(common):
                k = min(common[v], exps.get(v, 0))
                if k <= 0:
                    del common[v]
                else:
                    common[v] = k
            if not common:
                return None
        mono = tuple(sorted(common.items()))
        mpoly = Poly({mono: Fraction(1)})
        q = divexact(p, mpoly)
        if q is None:
            return None
        return self._expr_of(mpoly), self._expr_of(q)

    def _rat_split(self, e: Expr):
        R = Normalizer(rational=True)
        n, d = R.norm_raw(e)
        if d.is_const():
            return None
        return R.to_expr(n), R.to_expr(d)


def discharge(facts: List[Tuple[str, Formula]], ob: Formula) -> str:
    """Close a Ne0 or Lt obligation from the given facts.

    Returns the rule trace; raises NotDerivable when no rule chain
    applies.
    """
    d = _Discharger(facts)
    if isinstance(ob, Ne0):
        t = d.ne0(ob.arg, _DEPTH)
    elif isinstance(ob, Lt):
        t = d.pos(Sub(ob.right, ob.left), _DEPTH)
    else:
        t = None
    if t is None:
        raise NotDerivable(repr(ob))
    return t
