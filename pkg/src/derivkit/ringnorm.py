"""Canonical forms for expressions, with two treatments of division.

Atom mode keeps every Div, SeriesSum, and App node opaque: each one
becomes a synthetic ring variable keyed by the canonical forms of its
children. Equality of atom-mode forms therefore implies pointwise
equality under the total-division semantics, with no side conditions.
This is the mode used for matching and for closing goals.

Rational mode instead clears Div through num/den arithmetic. That is
only sound where the denominators are nonzero, so the normalizer
records every syntactic denominator it divides through; callers must
discharge a nonzeroness obligation for each one.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Tuple

from .errors import UnsupportedNode
from .expr import Add, App, Const, Deriv, Div, Expr, Mul, Neg, Pow, SeriesSum, Sub, Var
from .poly import Poly, _gl_key, divexact, poly_gcd, rational_content

RatPair = Tuple[Poly, Poly]

_INDEX_PLACEHOLDER = "@i"


def rat_canon(num: Poly, den: Poly) -> RatPair:
    """Reduce num/den to canonical form.

    The gcd is divided out, the denominator is scaled to coprime
    integer coefficients with positive leading coefficient, and a zero
    numerator or identically zero denominator collapses to 0/1 (the
    latter by the total-division convention).
    """
    if num.is_zero() or den.is_zero():
        return Poly.zero(), Poly.const(1)
    g = poly_gcd(num, den)
    if not (g.is_const() and g.const_value() == 1):
        num = divexact(num, g)
        den = divexact(den, g)
    c = rational_content(den)
    _, lead = den.leading()
    if lead < 0:
        c = -c
    return num.scale(Fraction(1) / c), den.scale(Fraction(1) / c)


def _rename_index(e: Expr, old: str, new: str) -> Expr:
    if isinstance(e, Var):
        return Var(new) if e.name == old else e
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return Add(_rename_index(e.left, old, new), _rename_index(e.right, old, new))
    if isinstance(e, Sub):
        return Sub(_rename_index(e.left, old, new), _rename_index(e.right, old, new))
    if isinstance(e, Mul):
        return Mul(_rename_index(e.left, old, new), _rename_index(e.right, old, new))
    if isinstance(e, Div):
        return Div(_rename_index(e.left, old, new), _rename_index(e.right, old, new))
    if isinstance(e, Neg):
        return Neg(_rename_index(e.arg, old, new))
    if isinstance(e, Pow):
        exp = new if e.exp == old else e.exp
        return Pow(_rename_index(e.base, old, new), exp)
    if isinstance(e, SeriesSum):
        if e.index == old:
            return e
        return SeriesSum(e.index, e.start, _rename_index(e.body, old, new))
    if isinstance(e, App):
        return App(e.fn, _rename_index(e.arg, old, new))
    raise TypeError(f"not an expression: {e!r}")


class Normalizer:
    """Shared-table normalizer; reuse one instance across the
    expressions a single comparison or rewrite needs to relate, so
    that equal opaque subterms receive the same synthetic variable."""

    def __init__(self, rational: bool = False, strict: bool = False):
        self.rational = rational
        self.strict = strict
        self._atoms: Dict[tuple, str] = {}
        self._reps: Dict[str, Expr] = {}
        self.denominators: List[Expr] = []

    # -- public API --------------------------------------------------

    def norm(self, e: Expr) -> RatPair:
        return rat_canon(*self._norm(e, self.rational))

    def norm_raw(self, e: Expr) -> RatPair:
        """Uncancelled num/den pair; exact for nonzeroness splitting."""
        return self._norm(e, self.rational)

    def key(self, e: Expr) -> tuple:
        n, d = self.norm(e)
        return n.key(), d.key()

    def atom_key(self, e: Expr) -> tuple:
        """Canonical atom-mode key, regardless of this instance's mode."""
        n, d = rat_canon(*self._norm(e, False))
        return n.key(), d.key()

    def atom_poly(self, e: Expr) -> Poly:
        n, d = rat_canon(*self._norm(e, False))
        assert d.is_const() and d.const_value() == 1
        return n

    # -- internals ---------------------------------------------------

    def _atom(self, kind_key: tuple, rep: Expr) -> Poly:
        name = self._atoms.get(kind_key)
        if name is None:
            name = f"@a{len(self._atoms)}"
            self._atoms[kind_key] = name
            self._reps[name] = rep
        return Poly.var(name)

    def _norm(self, e: Expr, rational: bool) -> RatPair:
        one = Poly.const(1)
        if isinstance(e, Var):
            return Poly.var(e.name), one
        if isinstance(e, Const):
            return Poly.const(e.value), one
        if isinstance(e, Neg):
            n, d = self._norm(e.arg, rational)
            return -n, d
        if isinstance(e, Add):
            nl, dl = self._norm(e.left, rational)
            nr, dr = self._norm(e.right, rational)
            return nl * dr + nr * dl, dl * dr
        if isinstance(e, Sub):
            nl, dl = self._norm(e.left, rational)
            nr, dr = self._norm(e.right, rational)
            return nl * dr - nr * dl, dl * dr
        if isinstance(e, Mul):
            nl, dl = self._norm(e.left, rational)
            nr, dr = self._norm(e.right, rational)
            return nl * nr, dl * dr
        if isinstance(e, Div):
            if rational:
                nl, dl = self._norm(e.left, rational)
                nr, dr = self._norm(e.right, rational)
                self.denominators.append(e.right)
                return nl * dr, dl * nr
            nr, _ = self._norm(e.right, False)
            if nr.is_const():
                # dividing by a constant is exact at every point, so it
                # folds into the coefficients; a zero constant collapses
                # the quotient under the total-division convention
                c = nr.const_value()
                if c == 0:
                    return Poly.zero(), one
                nl, _ = self._norm(e.left, False)
                return nl.scale(Fraction(1) / c), one
            return self._atom(("div", self.atom_key(e.left), self.atom_key(e.right)), e), one
        if isinstance(e, Pow):
            if isinstance(e.exp, str):
                if self.strict:
                    raise UnsupportedNode("symbolic exponent outside a series")
                return self._atom(("ipow", self.atom_key(e.base), e.exp), e), one
            n, d = self._norm(e.base, rational)
            k = e.exp
            if k >= 0:
                return n ** k, d ** k
            if rational:
                self.denominators.append(e.base)
                return d ** (-k), n ** (-k)
            if n.is_const():
                c = n.const_value()
                if c == 0:
                    return Poly.zero(), one
                return Poly.const(c ** k), one
            return self._atom(("pow", self.atom_key(e.base), k), e), one
        if isinstance(e, SeriesSum):
            if self.strict:
                raise UnsupportedNode("series node in ring normalization")
            body = _rename_index(e.body, e.index, _INDEX_PLACEHOLDER)
            return self._atom(("series", e.start, self.atom_key(body)), e), one
        if isinstance(e, App):
            if self.strict:
                raise UnsupportedNode("application node in ring normalization")
            if isinstance(e.fn, Deriv):
                head = ("dapp", e.fn.fn)
            else:
                head = ("app", e.fn)
            return self._atom(head + (self.atom_key(e.arg),), e), one
        raise TypeError(f"not an expression: {e!r}")

    # -- reconstruction ----------------------------------------------

    def to_expr(self, p: Poly) -> Expr:
        """Rebuild an expression from a polynomial over this table's
        variables, leading term first."""
        if p.is_zero():
            return Const(Fraction(0))
        varlist = sorted(p.vars())
        monos = sorted(p.terms, key=lambda m: _gl_key(m, varlist), reverse=True)
        acc = None
        for m in monos:
            c = p.terms[m]
            term = self._term_expr(abs(c), m)
            if acc is None:
                acc = term if c > 0 else Neg(term)
            else:
                acc = Add(acc, term) if c > 0 else Sub(acc, term)
        return acc

    def _term_expr(self, coeff: Fraction, mono) -> Expr:
        prod = None
        for v, e in mono:
            base = self._reps.get(v, Var(v))
            factor = base if e == 1 else Pow(base, e)
            prod = factor if prod is None else Mul(prod, factor)
        if prod is None:
            return Const(coeff)
        if coeff == 1:
            return prod
        return Mul(Const(coeff), prod)


def ring_normalize(e: Expr) -> RatPair:
    """Canonical num/den pair of a plain arithmetic expression.

    Series and application nodes are outside the ring fragment and
    raise UnsupportedNode.
    """
    return Normalizer(rational=True, strict=True).norm(e)
