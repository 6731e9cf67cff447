"""Side-condition discharge rules and their failure behavior."""

import pytest

from derivkit.discharge import discharge
from derivkit.errors import NotDerivable
from derivkit.expr import (Add, Const, Div, Mul, Neg, Pow, SeriesSum, Sub,
                           Var)
from derivkit.formula import Lt, Ne0

x, y, k = Var("x"), Var("y"), Var("k")
POS_X = [("hx", Lt(Const(0), x))]
POS_XY = POS_X + [("hy", Lt(Const(0), y))]


def ok(facts, ob):
    return discharge(facts, ob)


def refuse(facts, ob):
    with pytest.raises(NotDerivable):
        discharge(facts, ob)


def test_literal_constants():
    assert ok([], Ne0(Const(3)))
    assert ok([], Lt(Const(0), Const(2)))
    assert ok([], Lt(Const(-1), Const(1)))
    refuse([], Ne0(Const(0)))
    refuse([], Lt(Const(0), Const(0)))


def test_constant_valued_composites():
    assert ok([], Lt(Const(0), Add(Const(1), Mul(Const(0), x))))
    assert ok([], Ne0(Sub(Const(5), Const(3))))


def test_hypothesis_lookup_mod_ring():
    assert "hx" in ok(POS_X, Lt(Const(0), x))
    assert ok([("h", Ne0(Mul(x, y)))], Ne0(Mul(y, x)))
    assert "hx" in ok(POS_X, Lt(Neg(x), Const(0)))


def test_products_and_quotients():
    assert ok(POS_XY, Lt(Const(0), Mul(x, y)))
    assert ok(POS_XY, Lt(Const(0), Div(x, y)))
    assert ok(POS_XY, Ne0(Div(x, y)))
    neg_facts = [("hx", Lt(x, Const(0))), ("hy", Lt(y, Const(0)))]
    assert ok(neg_facts, Lt(Const(0), Mul(x, y)))
    refuse([("hx", Lt(Const(0), x))], Lt(Const(0), Mul(x, y)))


def test_even_powers():
    assert ok([("h", Ne0(x))], Lt(Const(0), Pow(x, 2)))
    assert ok([("h", Ne0(x))], Ne0(Pow(x, 4)))
    refuse([], Lt(Const(0), Pow(x, 2)))


def test_sum_of_positives():
    assert ok(POS_XY, Lt(Const(0), Add(x, y)))
    assert ok(POS_X, Lt(Const(0), Add(x, Const(1))))
    assert ok(POS_X, Lt(Const(0), Sub(Add(x, Const(3)), Const(2))))
    refuse(POS_X, Lt(Const(0), Sub(x, Const(1))))


def test_subtracting_a_positive_fact():
    facts = POS_X + [("hlt", Lt(x, Const(1)))]
    assert ok(facts, Lt(Const(0), Sub(Const(1), x)))
    assert ok(facts, Ne0(Sub(Const(1), x)))
    two_minus = Sub(Const(2), x)
    assert ok(facts, Lt(Const(0), two_minus))


def test_series_terms_positive():
    s = SeriesSum("i", 1, Mul(Var("i"), Pow(x, "i")))
    assert ok(POS_X, Lt(Const(0), s))
    s0 = SeriesSum("i", 1, Pow(x, "i"))
    assert ok(POS_X, Ne0(s0))
    refuse([], Lt(Const(0), s))


def test_monomial_content_extraction():
    cl, c1, p = Var("cl"), Var("c1"), Var("p")
    facts = [("hcl", Lt(Const(0), cl)), ("hc1", Lt(Const(0), c1)),
             ("hx2", Lt(Const(0), Mul(cl, p))), ("hx1", Lt(Mul(cl, p), Const(1)))]
    grouped = Add(Sub(Const(1), Mul(cl, p)), Mul(c1, p))
    assert ok(facts, Lt(Const(0), grouped))
    expanded = Add(Sub(cl, Mul(Mul(cl, cl), p)), Mul(Mul(c1, cl), p))
    assert ok(facts, Lt(Const(0), expanded))
    assert ok(facts, Ne0(expanded))


def test_quotient_split():
    facts = POS_XY
    e = Div(Add(x, y), y)
    assert ok(facts, Lt(Const(0), e))


def test_unknown_goals_refused():
    refuse([], Ne0(x))
    refuse(POS_X, Lt(Const(0), y))
    refuse([("h", Ne0(x))], Lt(Const(0), x))


def test_trace_mentions_rule_chain():
    t = ok(POS_XY, Lt(Const(0), Mul(x, y)))
    assert "hx" in t and "hy" in t
