"""Surface syntax: lexer, parser, and printer for theory scripts.

The format is line-oriented. A script is a sequence of theories:

    theory langmuir_demo
      vars P K : Real
      hyp hK : 0 < K
      let model := K * P / (1 + K * P)
      goal model * 0 = 0
      proof
        ring
      qed

`--` starts a comment. A handful of unicode aliases are accepted on
input (forall, exists, !=, sum, >=); the printer always emits ASCII.
Printing a parsed theory and reparsing it yields a structurally equal
object.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import List, Optional, Tuple

from .errors import DerivSyntaxError, DuplicateName, UndeclaredSymbol
from .expr import (Add, App, Const, Deriv, Div, Expr, Mul, Neg, Pow, SeriesSum,
                   Sub, Var)
from .formula import (And, Antideriv, AntiderivConst, ApplyLemma,
                      DivergesLeftAt, DerivRule, EqF, ExistsIntro, Exists,
                      FieldNormalize, Forall, Formula, Implies, IndexShift,
                      Intro, LimitDivergenceWitness, Lt, Ne0, REAL,
                      RewriteWith, RingClose, SeriesGeom, SeriesGeomWeighted,
                      Specialize, STATE, Step, Theory, Unfold)

RESERVED = {
    "theory", "vars", "fns", "const", "hyp", "let", "goal", "proof", "qed",
    "forall", "exists", "sum", "deriv", "diverges_left", "Real", "State",
}

_ALIASES = {
    "∀": "forall ",
    "∃": "exists ",
    "≠": "!=",
    "Σ": "sum",
    "≥": ">=",
}

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t]+)"
    r"|(?P<comment>--[^\n]*)"
    r"|(?P<nl>\n)"
    r"|(?P<number>\d+(?:\.\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<sym>:=|->|<-|/\\|!=|>=|[:,=<()\[\]+\-*/^])"
)


class Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind}, {self.value!r}, {self.line}:{self.col})"


def _lex(text: str) -> List[Token]:
    for uni, ascii_ in _ALIASES.items():
        text = text.replace(uni, ascii_)
    toks: List[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DerivSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            if toks and toks[-1].kind != "nl":
                toks.append(Token("nl", "\n", line, col))
            line += 1
            col = 1
        else:
            if kind not in ("ws", "comment"):
                toks.append(Token(kind, value, line, col))
            col += len(value)
        pos = m.end()
    toks.append(Token("nl", "\n", line, col))
    toks.append(Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks: List[Token]):
        self.toks = toks
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def _fail(self, msg: str):
        t = self.peek()
        raise DerivSyntaxError(msg, t.line, t.col)

    def expect_sym(self, sym: str) -> Token:
        t = self.peek()
        if t.kind != "sym" or t.value != sym:
            self._fail(f"expected {sym!r}, found {t.value!r}")
        return self.advance()

    def expect_ident(self, what="identifier") -> Token:
        t = self.peek()
        if t.kind != "ident":
            self._fail(f"expected {what}, found {t.value!r}")
        return self.advance()

    def expect_keyword(self, word: str):
        t = self.peek()
        if t.kind != "ident" or t.value != word:
            self._fail(f"expected {word!r}, found {t.value!r}")
        return self.advance()

    def expect_newline(self):
        t = self.peek()
        if t.kind != "nl":
            self._fail(f"expected end of line, found {t.value!r}")
        self.advance()

    def skip_newlines(self):
        while self.peek().kind == "nl":
            self.advance()

    def fresh_name(self, what="name") -> Token:
        t = self.expect_ident(what)
        if t.value in RESERVED:
            raise DerivSyntaxError(f"{t.value!r} is a reserved word", t.line, t.col)
        return t

    def at_ident(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.value == word

    def at_sym(self, sym: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.value == sym

    # -- theories -----------------------------------------------------

    def parse_theories(self) -> List[Theory]:
        out = []
        self.skip_newlines()
        while self.peek().kind != "eof":
            out.append(self.parse_theory())
            self.skip_newlines()
        return out

    def parse_theory(self) -> Theory:
        self.expect_keyword("theory")
        name = self.fresh_name("theory name").value
        self.expect_newline()
        self.skip_newlines()
        var_decls: List[Tuple[str, str]] = []
        fn_decls: List[str] = []
        const_decls: List[str] = []
        hyps: List[Tuple[str, Formula]] = []
        lets: List[Tuple[str, Expr]] = []
        clause_lines = []
        while True:
            t = self.peek()
            if t.kind != "ident":
                self._fail(f"expected a declaration or goal, found {t.value!r}")
            if t.value == "vars":
                self.advance()
                names = [self.fresh_name().value]
                while self.peek().kind == "ident" and not self.at_sym(":"):
                    names.append(self.fresh_name().value)
                self.expect_sym(":")
                sort_t = self.expect_ident("sort")
                if sort_t.value not in (REAL, STATE):
                    raise DerivSyntaxError(
                        f"unknown sort {sort_t.value!r}", sort_t.line, sort_t.col)
                var_decls.extend((n, sort_t.value) for n in names)
                self.expect_newline()
            elif t.value == "fns":
                self.advance()
                names = [self.fresh_name().value]
                while self.peek().kind == "ident" and not self.at_sym(":"):
                    names.append(self.fresh_name().value)
                self.expect_sym(":")
                self.expect_keyword(STATE)
                self.expect_sym("->")
                self.expect_keyword(REAL)
                fn_decls.extend(names)
                self.expect_newline()
            elif t.value == "const":
                self.advance()
                n = self.fresh_name().value
                self.expect_sym(":")
                self.expect_keyword(REAL)
                const_decls.append(n)
                self.expect_newline()
            elif t.value == "hyp":
                line = self.advance().line
                n = self.fresh_name("hypothesis name").value
                self.expect_sym(":")
                f = self.parse_formula()
                hyps.append((n, f))
                clause_lines.append(("hyp", n, line))
                self.expect_newline()
            elif t.value == "let":
                line = self.advance().line
                n = self.fresh_name("let name").value
                self.expect_sym(":=")
                e = self.parse_expr()
                lets.append((n, e))
                clause_lines.append(("let", n, line))
                self.expect_newline()
            elif t.value == "goal":
                break
            else:
                self._fail(f"unexpected clause {t.value!r}")
            self.skip_newlines()
        goal_line = self.expect_keyword("goal").line
        goal = self.parse_formula()
        clause_lines.append(("goal", "", goal_line))
        self.expect_newline()
        self.skip_newlines()
        self.expect_keyword("proof")
        self.expect_newline()
        self.skip_newlines()
        steps: List[Step] = []
        while not self.at_ident("qed"):
            steps.append(self.parse_step())
            self.expect_newline()
            self.skip_newlines()
        self.expect_keyword("qed")
        if self.peek().kind == "nl":
            self.advance()
        theory = Theory(
            name=name,
            var_decls=tuple(var_decls),
            fn_decls=tuple(fn_decls),
            const_decls=tuple(const_decls),
            hyps=tuple(hyps),
            lets=tuple(lets),
            goal=goal,
            steps=tuple(steps),
        )
        _validate(theory, clause_lines)
        return theory

    # -- steps --------------------------------------------------------

    def parse_step(self) -> Step:
        t = self.expect_ident("proof step")
        w = t.value
        if w == "rw":
            h = self.expect_ident("hypothesis name").value
            if self.at_sym("<-"):
                self.advance()
                return RewriteWith(h, True)
            return RewriteWith(h)
        if w == "unfold":
            return Unfold(self.expect_ident().value)
        if w == "field_normalize":
            return FieldNormalize()
        if w == "ring":
            return RingClose()
        if w == "intro":
            names = [self.fresh_name().value]
            while self.peek().kind == "ident":
                names.append(self.fresh_name().value)
            return Intro(tuple(names))
        if w == "specialize":
            h = self.expect_ident("hypothesis name").value
            terms = [self.parse_expr()]
            while self.peek().kind != "nl":
                terms.append(self.parse_expr())
            return Specialize(h, tuple(terms))
        if w == "use":
            return ExistsIntro(self.parse_expr())
        if w == "apply":
            return ApplyLemma(self.expect_ident("lemma name").value)
        if w == "series_geom":
            return SeriesGeom()
        if w == "series_geom_weighted":
            return SeriesGeomWeighted()
        if w == "index_shift":
            return IndexShift()
        if w == "deriv_rule":
            r = self.expect_ident("rule name").value
            if r not in ("const", "id", "pow", "linear", "scalar"):
                raise DerivSyntaxError(f"unknown derivative rule {r!r}", t.line, t.col)
            return DerivRule(r)
        if w == "antideriv_const":
            return AntiderivConst()
        if w == "antideriv":
            return Antideriv()
        if w == "limit_witness":
            n = self.peek()
            if n.kind != "number" or "." in n.value:
                self._fail("limit_witness needs an integer depth")
            self.advance()
            return LimitDivergenceWitness(int(n.value))
        raise DerivSyntaxError(f"unknown proof step {w!r}", t.line, t.col)

    # -- formulas -----------------------------------------------------

    def parse_formula(self) -> Formula:
        f = self.parse_conj()
        if self.at_sym("->"):
            self.advance()
            return Implies(f, self.parse_formula())
        return f

    def parse_conj(self) -> Formula:
        f = self.parse_atom_formula()
        if self.at_sym("/\\"):
            self.advance()
            return And(f, self.parse_conj())
        return f

    def parse_atom_formula(self) -> Formula:
        t = self.peek()
        if t.kind == "ident" and t.value == "forall":
            self.advance()
            names = [self.fresh_name("binder").value]
            while self.peek().kind == "ident":
                names.append(self.fresh_name("binder").value)
            self.expect_sym(",")
            body = self.parse_formula()
            return Forall(tuple((n, _binder_sort(n, body)) for n in names), body)
        if t.kind == "ident" and t.value == "exists":
            self.advance()
            n = self.fresh_name("binder").value
            self.expect_sym(",")
            body = self.parse_formula()
            return Exists((n, _binder_sort(n, body)), body)
        if t.kind == "ident" and t.value == "diverges_left":
            self.advance()
            self.expect_sym("(")
            fn = self.expect_ident().value
            self.expect_sym(",")
            point = self.parse_expr()
            self.expect_sym(")")
            return DivergesLeftAt(fn, point)
        if t.kind == "sym" and t.value == "(":
            # could open an expression or a nested formula; try the
            # expression route first and fall back once on failure
            save = self.i
            try:
                return self.parse_comparison()
            except DerivSyntaxError:
                self.i = save
            self.expect_sym("(")
            f = self.parse_formula()
            self.expect_sym(")")
            return f
        return self.parse_comparison()

    def parse_comparison(self) -> Formula:
        left = self.parse_expr()
        t = self.peek()
        if t.kind == "sym" and t.value == "=":
            self.advance()
            return EqF(left, self.parse_expr())
        if t.kind == "sym" and t.value == "!=":
            self.advance()
            z = self.peek()
            if z.kind != "number" or Fraction(z.value) != 0:
                self._fail("only comparisons with zero are supported after !=")
            self.advance()
            return Ne0(left)
        if t.kind == "sym" and t.value == "<":
            self.advance()
            return Lt(left, self.parse_expr())
        self._fail(f"expected a comparison, found {t.value!r}")

    # -- expressions ----------------------------------------------------

    def parse_expr(self) -> Expr:
        e = self.parse_mul()
        while self.peek().kind == "sym" and self.peek().value in ("+", "-"):
            op = self.advance().value
            r = self.parse_mul()
            e = Add(e, r) if op == "+" else Sub(e, r)
        return e

    def parse_mul(self) -> Expr:
        e = self.parse_unary()
        while self.peek().kind == "sym" and self.peek().value in ("*", "/"):
            op = self.advance().value
            r = self.parse_unary()
            e = Mul(e, r) if op == "*" else Div(e, r)
        return e

    def parse_unary(self) -> Expr:
        if self.at_sym("-"):
            self.advance()
            t = self.peek()
            if t.kind == "number":
                self.advance()
                e: Expr = Const(-Fraction(t.value))
                return self.parse_pow_suffix(e)
            return Neg(self.parse_unary())
        return self.parse_pow()

    def parse_pow(self) -> Expr:
        return self.parse_pow_suffix(self.parse_primary())

    def parse_pow_suffix(self, e: Expr) -> Expr:
        while self.at_sym("^"):
            self.advance()
            t = self.peek()
            if t.kind == "sym" and t.value == "-":
                self.advance()
                n = self.peek()
                if n.kind != "number" or "." in n.value:
                    self._fail("expected an integer exponent")
                self.advance()
                e = Pow(e, -int(n.value))
            elif t.kind == "number":
                if "." in t.value:
                    self._fail("expected an integer exponent")
                self.advance()
                e = Pow(e, int(t.value))
            elif t.kind == "ident":
                self.advance()
                e = Pow(e, t.value)
            else:
                self._fail("expected an exponent")
        return e

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t.kind == "number":
            self.advance()
            return Const(Fraction(t.value))
        if t.kind == "sym" and t.value == "(":
            self.advance()
            e = self.parse_expr()
            self.expect_sym(")")
            return e
        if t.kind == "ident" and t.value == "deriv":
            self.advance()
            self.expect_sym("(")
            fn = self.expect_ident("function name").value
            self.expect_sym(")")
            self.expect_sym("(")
            arg = self.parse_expr()
            self.expect_sym(")")
            return App(Deriv(fn), arg)
        if t.kind == "ident" and t.value == "sum":
            self.advance()
            self.expect_sym("[")
            idx = self.fresh_name("index").value
            self.expect_sym(">=")
            s = self.peek()
            if s.kind != "number" or s.value not in ("0", "1"):
                self._fail("series must start at 0 or 1")
            self.advance()
            self.expect_sym("]")
            self.expect_sym("(")
            body = self.parse_expr()
            self.expect_sym(")")
            return SeriesSum(idx, int(s.value), body)
        if t.kind == "ident":
            if t.value in RESERVED:
                self._fail(f"{t.value!r} is a reserved word")
            self.advance()
            if self.at_sym("("):
                self.advance()
                arg = self.parse_expr()
                self.expect_sym(")")
                return App(t.value, arg)
            return Var(t.value)
        self._fail(f"expected an expression, found {t.value!r}")


def _binder_sort(name: str, body: Formula) -> str:
    """A binder that ever appears directly as a function argument is a
    state; anything else is a real."""

    def in_expr(e: Expr) -> bool:
        if isinstance(e, App):
            return (isinstance(e.arg, Var) and e.arg.name == name) or in_expr(e.arg)
        if isinstance(e, (Add, Sub, Mul, Div)):
            return in_expr(e.left) or in_expr(e.right)
        if isinstance(e, Neg):
            return in_expr(e.arg)
        if isinstance(e, Pow):
            return in_expr(e.base)
        if isinstance(e, SeriesSum):
            return e.index != name and in_expr(e.body)
        return False

    def walk(f: Formula) -> bool:
        if isinstance(f, EqF):
            return in_expr(f.left) or in_expr(f.right)
        if isinstance(f, Ne0):
            return in_expr(f.arg)
        if isinstance(f, Lt):
            return in_expr(f.left) or in_expr(f.right)
        if isinstance(f, Forall):
            return all(b != name for b, _ in f.binders) and walk(f.body)
        if isinstance(f, Exists):
            return f.binder[0] != name and walk(f.body)
        if isinstance(f, Implies):
            return walk(f.ante) or walk(f.cons)
        if isinstance(f, And):
            return walk(f.left) or walk(f.right)
        if isinstance(f, DivergesLeftAt):
            return in_expr(f.point)
        return False

    return STATE if walk(body) else REAL


# ---------------------------------------------------------------------------
# validation


def _validate(theory: Theory, clause_lines) -> None:
    line_of = {}
    for kind, n, line in clause_lines:
        line_of[(kind, n)] = line
    seen = {}
    for n, _ in theory.var_decls:
        if n in seen:
            raise DuplicateName(f"duplicate declaration of {n!r}")
        seen[n] = "var"
    for group, kind in ((theory.fn_decls, "fn"), (theory.const_decls, "const")):
        for n in group:
            if n in seen:
                raise DuplicateName(f"duplicate declaration of {n!r}")
            seen[n] = kind
    for n, _ in theory.lets:
        if n in seen:
            raise DuplicateName(f"duplicate declaration of {n!r}")
        seen[n] = "let"
    hyp_names = set()
    for n, _ in theory.hyps:
        if n in hyp_names or n in seen:
            raise DuplicateName(f"duplicate hypothesis name {n!r}")
        hyp_names.add(n)

    fns = set(theory.fn_decls)
    base = {n for n, _ in theory.var_decls} | set(theory.const_decls)
    if theory.uses_state():
        for extra in ("s1", "s2"):
            if extra not in seen:
                base.add(extra)
    let_names = [n for n, _ in theory.lets]
    all_lets = set(let_names)

    def walk_expr(e: Expr, scope: set, indices: set, line: int):
        if isinstance(e, Var):
            if e.name not in scope:
                raise UndeclaredSymbol(e.name, line)
        elif isinstance(e, (Add, Sub, Mul, Div)):
            walk_expr(e.left, scope, indices, line)
            walk_expr(e.right, scope, indices, line)
        elif isinstance(e, Neg):
            walk_expr(e.arg, scope, indices, line)
        elif isinstance(e, Pow):
            walk_expr(e.base, scope, indices, line)
            if isinstance(e.exp, str) and e.exp not in indices:
                raise UndeclaredSymbol(e.exp, line)
        elif isinstance(e, SeriesSum):
            walk_expr(e.body, scope | {e.index}, indices | {e.index}, line)
        elif isinstance(e, App):
            if isinstance(e.fn, Deriv):
                # derivatives apply to declared functions and to
                # let-bound expressions alike
                if e.fn.fn not in fns and e.fn.fn not in all_lets:
                    raise UndeclaredSymbol(e.fn.fn, line)
            elif e.fn not in fns:
                raise UndeclaredSymbol(e.fn, line)
            walk_expr(e.arg, scope, indices, line)

    def walk_formula(f: Formula, scope: set, line: int):
        if isinstance(f, EqF):
            walk_expr(f.left, scope, set(), line)
            walk_expr(f.right, scope, set(), line)
        elif isinstance(f, Ne0):
            walk_expr(f.arg, scope, set(), line)
        elif isinstance(f, Lt):
            walk_expr(f.left, scope, set(), line)
            walk_expr(f.right, scope, set(), line)
        elif isinstance(f, Forall):
            walk_formula(f.body, scope | {b for b, _ in f.binders}, line)
        elif isinstance(f, Exists):
            walk_formula(f.body, scope | {f.binder[0]}, line)
        elif isinstance(f, Implies):
            walk_formula(f.ante, scope, line)
            walk_formula(f.cons, scope, line)
        elif isinstance(f, And):
            walk_formula(f.left, scope, line)
            walk_formula(f.right, scope, line)
        elif isinstance(f, DivergesLeftAt):
            if f.fn_name not in all_lets:
                raise UndeclaredSymbol(f.fn_name, line)
            walk_expr(f.point, scope, set(), line)

    for i, (n, body) in enumerate(theory.lets):
        scope = base | set(let_names[:i])
        walk_expr(body, scope, set(), line_of.get(("let", n), 0))
    full = base | all_lets
    for n, f in theory.hyps:
        walk_formula(f, full, line_of.get(("hyp", n), 0))
    walk_formula(theory.goal, full, line_of.get(("goal", ""), 0))


# ---------------------------------------------------------------------------
# public parse API


def parse_theories(text: str) -> List[Theory]:
    return _Parser(_lex(text)).parse_theories()


def parse_theory(text: str) -> Theory:
    theories = parse_theories(text)
    if len(theories) != 1:
        raise DerivSyntaxError(
            f"expected exactly one theory, found {len(theories)}", 1, 1)
    return theories[0]


# ---------------------------------------------------------------------------
# printing


def _const_str(f: Fraction) -> str:
    n, d = f.numerator, f.denominator
    if d == 1:
        return str(n)
    a = b = 0
    dd = d
    while dd % 2 == 0:
        dd //= 2
        a += 1
    while dd % 5 == 0:
        dd //= 5
        b += 1
    if dd == 1:
        k = max(a, b)
        digits = str(abs(n) * 10 ** k // d).rjust(k + 1, "0")
        return ("-" if n < 0 else "") + digits[:-k] + "." + digits[-k:]
    return f"({n}/{d})"


_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


def _pe(e: Expr, prec: int) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return _const_str(e.value)
    if isinstance(e, Add):
        s = f"{_pe(e.left, _ADD)} + {_pe(e.right, _MUL)}"
        return f"({s})" if prec > _ADD else s
    if isinstance(e, Sub):
        s = f"{_pe(e.left, _ADD)} - {_pe(e.right, _MUL)}"
        return f"({s})" if prec > _ADD else s
    if isinstance(e, Mul):
        s = f"{_pe(e.left, _MUL)} * {_pe(e.right, _UNARY)}"
        return f"({s})" if prec > _MUL else s
    if isinstance(e, Div):
        s = f"{_pe(e.left, _MUL)} / {_pe(e.right, _UNARY)}"
        return f"({s})" if prec > _MUL else s
    if isinstance(e, Neg):
        inner = _pe(e.arg, _UNARY)
        # adjacent dashes would lex as a comment, and a digit right
        # after the dash would fold into a negative literal on reparse
        if inner.startswith("-") or inner[:1].isdigit():
            inner = f"({inner})"
        s = f"-{inner}"
        return f"({s})" if prec > _UNARY else s
    if isinstance(e, Pow):
        s = f"{_pe(e.base, _ATOM)}^{e.exp}"
        return f"({s})" if prec > _POW else s
    if isinstance(e, SeriesSum):
        return f"sum[{e.index}>={e.start}]({_pe(e.body, _ADD)})"
    if isinstance(e, App):
        if isinstance(e.fn, Deriv):
            return f"deriv({e.fn.fn})({_pe(e.arg, _ADD)})"
        return f"{e.fn}({_pe(e.arg, _ADD)})"
    raise TypeError(f"not an expression: {e!r}")


def print_expr(e: Expr) -> str:
    return _pe(e, _ADD)


_IMPL, _CONJ, _ATOMF = 1, 2, 3


def _pf(f: Formula, prec: int) -> str:
    if isinstance(f, EqF):
        return f"{print_expr(f.left)} = {print_expr(f.right)}"
    if isinstance(f, Ne0):
        return f"{print_expr(f.arg)} != 0"
    if isinstance(f, Lt):
        rhs = print_expr(f.right)
        if rhs.startswith("-"):
            rhs = f"({rhs})"
        return f"{print_expr(f.left)} < {rhs}"
    if isinstance(f, Implies):
        s = f"{_pf(f.ante, _CONJ)} -> {_pf(f.cons, _IMPL)}"
        return f"({s})" if prec > _IMPL else s
    if isinstance(f, And):
        s = f"{_pf(f.left, _ATOMF)} /\\ {_pf(f.right, _CONJ)}"
        return f"({s})" if prec > _CONJ else s
    if isinstance(f, Forall):
        s = f"forall {' '.join(b for b, _ in f.binders)}, {_pf(f.body, _IMPL)}"
        return f"({s})" if prec > _IMPL else s
    if isinstance(f, Exists):
        s = f"exists {f.binder[0]}, {_pf(f.body, _IMPL)}"
        return f"({s})" if prec > _IMPL else s
    if isinstance(f, DivergesLeftAt):
        return f"diverges_left({f.fn_name}, {print_expr(f.point)})"
    raise TypeError(f"not a formula: {f!r}")


def print_formula(f: Formula) -> str:
    return _pf(f, _IMPL)


def _term_str(e: Expr) -> str:
    # a bare identifier followed by a parenthesized term would reparse
    # as an application, so shield everything except plain numbers
    s = print_expr(e)
    if isinstance(e, Const) and not s.startswith("-"):
        return s
    return f"({s})"


def print_step(s: Step) -> str:
    if isinstance(s, RewriteWith):
        return f"rw {s.hyp} <-" if s.reverse else f"rw {s.hyp}"
    if isinstance(s, Unfold):
        return f"unfold {s.name}"
    if isinstance(s, FieldNormalize):
        return "field_normalize"
    if isinstance(s, RingClose):
        return "ring"
    if isinstance(s, Intro):
        return "intro " + " ".join(s.names)
    if isinstance(s, Specialize):
        return f"specialize {s.hyp} " + " ".join(_term_str(t) for t in s.terms)
    if isinstance(s, ExistsIntro):
        return f"use {print_expr(s.witness)}"
    if isinstance(s, ApplyLemma):
        return f"apply {s.name}"
    if isinstance(s, SeriesGeom):
        return "series_geom"
    if isinstance(s, SeriesGeomWeighted):
        return "series_geom_weighted"
    if isinstance(s, IndexShift):
        return "index_shift"
    if isinstance(s, DerivRule):
        return f"deriv_rule {s.rule}"
    if isinstance(s, AntiderivConst):
        return "antideriv_const"
    if isinstance(s, Antideriv):
        return "antideriv"
    if isinstance(s, LimitDivergenceWitness):
        return f"limit_witness {s.depth}"
    raise TypeError(f"not a step: {s!r}")


def print_theory(t: Theory) -> str:
    lines = [f"theory {t.name}"]
    i = 0
    while i < len(t.var_decls):
        j = i
        sort = t.var_decls[i][1]
        while j < len(t.var_decls) and t.var_decls[j][1] == sort:
            j += 1
        names = " ".join(n for n, _ in t.var_decls[i:j])
        lines.append(f"  vars {names} : {sort}")
        i = j
    if t.fn_decls:
        lines.append(f"  fns {' '.join(t.fn_decls)} : State->Real")
    for n in t.const_decls:
        lines.append(f"  const {n} : Real")
    for n, f in t.hyps:
        lines.append(f"  hyp {n} : {print_formula(f)}")
    for n, e in t.lets:
        lines.append(f"  let {n} := {print_expr(e)}")
    lines.append(f"  goal {print_formula(t.goal)}")
    lines.append("  proof")
    for s in t.steps:
        lines.append(f"    {print_step(s)}")
    lines.append("  qed")
    return "\n".join(lines) + "\n"
