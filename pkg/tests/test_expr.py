"""Expression construction and float evaluation semantics."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from derivkit.errors import NonIntegerPow, UnboundSymbol
from derivkit.expr import (Add, App, Const, Deriv, Div, Env, Mul, Neg, Pow,
                           SeriesSum, Sub, Var, eval_expr, free_vars,
                           substitute)


def ev(e, **vars):
    return eval_expr(e, Env(vars=vars))


def test_const_holds_exact_fractions():
    assert Const(Fraction(1, 3)).value == Fraction(1, 3)
    assert Const(7).value == Fraction(7)


def test_const_rejects_floats_and_bools():
    with pytest.raises(TypeError):
        Const(0.5)
    with pytest.raises(TypeError):
        Const(True)


def test_pow_rejects_non_integer_exponent():
    with pytest.raises(NonIntegerPow):
        Pow(Var("x"), Fraction(1, 2))


def test_arithmetic_eval():
    e = Sub(Mul(Add(Var("a"), Const(2)), Var("b")), Neg(Var("a")))
    assert ev(e, a=3.0, b=4.0) == (3 + 2) * 4 + 3


def test_division_by_zero_is_total():
    assert ev(Div(Const(1), Var("x")), x=0.0) == 0.0
    assert ev(Div(Var("y"), Sub(Var("x"), Var("x"))), x=2.0, y=5.0) == 0.0


def test_negative_power_of_zero_is_total():
    assert ev(Pow(Var("x"), -2), x=0.0) == 0.0


def test_unbound_symbol():
    with pytest.raises(UnboundSymbol):
        ev(Var("nope"))


def test_series_partial_sum_cutoff():
    s = SeriesSum("i", 1, Pow(Var("x"), "i"))
    assert eval_expr(s, Env(vars={"x": 0.5}), series_cutoff=3) == 0.5 + 0.25 + 0.125


def test_series_start_zero_includes_head():
    s = SeriesSum("i", 0, Pow(Var("x"), "i"))
    assert eval_expr(s, Env(vars={"x": 0.5}), series_cutoff=2) == 1 + 0.5 + 0.25


def test_series_geometric_converges():
    s = SeriesSum("i", 1, Pow(Var("x"), "i"))
    got = eval_expr(s, Env(vars={"x": 0.5}), series_cutoff=2000)
    assert abs(got - 1.0) < 1e-12


def test_weighted_series_converges():
    s = SeriesSum("i", 1, Mul(Var("i"), Pow(Var("x"), "i")))
    got = eval_expr(s, Env(vars={"x": 0.5}), series_cutoff=2000)
    assert abs(got - 2.0) < 1e-12


def test_app_and_deriv_eval():
    env = Env(vars={"t": 3.0},
              fns={"f": lambda x: x * x},
              derivs={"f": lambda x: 2 * x})
    assert eval_expr(App("f", Var("t")), env) == 9.0
    assert eval_expr(App(Deriv("f"), Var("t")), env) == 6.0


def test_free_vars_skips_series_index():
    s = SeriesSum("i", 1, Mul(Var("i"), Pow(Var("x"), "i")))
    assert free_vars(s) == {"x"}
    assert free_vars(Add(Var("a"), App("f", Var("b")))) == {"a", "b"}


def test_substitute_respects_binder():
    s = SeriesSum("i", 1, Mul(Var("i"), Var("x")))
    assert substitute(s, "x", Var("y")) == SeriesSum("i", 1, Mul(Var("i"), Var("y")))
    assert substitute(s, "i", Var("z")) == s


def test_substitute_symbolic_exponent_only_by_int():
    s = Pow(Var("x"), "i")
    assert substitute(s, "i", Const(3)) == Pow(Var("x"), 3)


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_add_mul_agree_with_python(a, b):
    e = Add(Mul(Var("a"), Var("b")), Const(1))
    assert ev(e, a=float(a), b=float(b)) == a * b + 1
