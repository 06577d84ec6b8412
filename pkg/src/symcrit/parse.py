"""Recursive-descent parser and printer for the expression grammar.

Grammar (printer emits the same language, so parse-print-parse is a fixed
point on canonical trees)::

    expr     := term (('+'|'-') term)*
    term     := unary (('*'|'/') unary)*
    unary    := ('+'|'-')* power
    power    := primary ['^' exponent]          # right associative
    exponent := INT | '(' ['-'] INT ['/' INT] ')'
    primary  := INT | IDENT | IDENT '(' args ')' | '(' expr ')'

Calls: ``exp(e)``, ``sqrt(e)``, ``sin(e)``, ``cos(e)``, ``f(u)`` for unknown
functions, ``diff(f(u),u,k)`` for k-th derivative atoms.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import (
    Add,
    Cos,
    Exp,
    Expr,
    FnApp,
    Mul,
    Pow,
    Rational,
    Sin,
    Symbol,
    add,
    cos_,
    div,
    exp_,
    fnapp,
    mul,
    pow_,
    rational,
    sin_,
    sqrt,
    sym,
)

_BUILTIN_CALLS = ("exp", "sqrt", "sin", "cos", "diff")


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], i))
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        if c in "+-*/^(),":
            tokens.append((c, c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, functions):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.functions = functions

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected trailing {tok[1]!r}", tok[2])
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            t = self.term()
            terms.append(t if op == "+" else mul(-1, t))
        return add(*terms)

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self) -> Expr:
        sign = 1
        while self.peek()[0] in ("+", "-"):
            if self.take()[0] == "-":
                sign = -sign
        e = self.power()
        return e if sign == 1 else mul(-1, e)

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[0] == "^":
            self.take()
            return pow_(base, self.exponent())
        return base

    def exponent(self) -> Fraction:
        tok = self.peek()
        if tok[0] == "int":
            self.take()
            e = Fraction(int(tok[1]))
        elif tok[0] == "(":
            self.take()
            neg = False
            while self.peek()[0] in ("+", "-"):
                if self.take()[0] == "-":
                    neg = not neg
            num = int(self.take("int")[1])
            den = 1
            if self.peek()[0] == "/":
                self.take()
                den = int(self.take("int")[1])
                if den == 0:
                    raise ParseError("zero denominator in exponent", tok[2])
            self.take(")")
            e = Fraction(-num if neg else num, den)
        else:
            raise ParseError("expected exponent", tok[2])
        if self.peek()[0] == "^":
            # right-associative chain on rational literals
            self.take()
            outer = self.exponent()
            val = Fraction(e) ** outer if outer.denominator == 1 else None
            if val is None:
                raise ParseError("non-rational exponent chain", tok[2])
            return val
        return e

    def primary(self) -> Expr:
        tok = self.take()
        if tok[0] == "int":
            return rational(int(tok[1]))
        if tok[0] == "(":
            e = self.expr()
            self.take(")")
            return e
        if tok[0] == "ident":
            name = tok[1]
            if self.peek()[0] != "(":
                return sym(name)
            self.take("(")
            if name == "diff":
                return self.diff_call(tok[2])
            arg = self.expr()
            self.take(")")
            if name == "exp":
                return exp_(arg)
            if name == "sqrt":
                return sqrt(arg)
            if name == "sin":
                return sin_(arg)
            if name == "cos":
                return cos_(arg)
            if self.functions is not None and name not in self.functions:
                raise ParseError(f"unknown function {name!r}", tok[2])
            return fnapp(name, arg, 0)
        raise ParseError(f"unexpected {tok[1] or 'end of input'!r}", tok[2])

    def diff_call(self, at) -> Expr:
        inner = self.primary()
        if not isinstance(inner, FnApp):
            raise ParseError("diff expects an unknown-function application", at)
        self.take(",")
        wrt = self.expr()
        if wrt != inner.arg:
            raise ParseError("diff variable must match the function argument", at)
        order = 1
        if self.peek()[0] == ",":
            self.take()
            order = int(self.take("int")[1])
        self.take(")")
        return fnapp(inner.name, inner.arg, inner.order + order)


def parse(text: str, functions=None) -> Expr:
    """Parse ``text`` to a canonical expression.

    When ``functions`` is given (an iterable of names), unknown-function
    calls outside that set raise ParseError; by default any ``f(u)`` call is
    accepted as an opaque function atom.
    """
    return _Parser(text, set(functions) if functions is not None else None).parse()


# ---------------------------------------------------------------------------
# printing

_ATOMIC = (Rational, Symbol, Exp, Sin, Cos, FnApp)


def _print_frac(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _wrap(e: Expr, s: str, in_product: bool) -> str:
    if isinstance(e, Add) or (in_product and s.startswith("-")):
        return f"({s})"
    return s


def to_source(e: Expr) -> str:
    """Emit the grammar above; canonical trees round-trip exactly."""
    if isinstance(e, Rational):
        v = e.value
        if v.denominator == 1:
            return str(v.numerator)
        if v < 0:
            return f"-{-v.numerator}/{v.denominator}"
        return f"{v.numerator}/{v.denominator}"
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Exp):
        return f"exp({to_source(e.arg)})"
    if isinstance(e, Sin):
        return f"sin({to_source(e.arg)})"
    if isinstance(e, Cos):
        return f"cos({to_source(e.arg)})"
    if isinstance(e, FnApp):
        base = f"{e.name}({to_source(e.arg)})"
        if e.order == 0:
            return base
        return f"diff({e.name}({to_source(e.arg)}),{to_source(e.arg)},{e.order})"
    if isinstance(e, Pow):
        if isinstance(e.base, (Symbol, Exp, Sin, Cos, FnApp)):
            b = to_source(e.base)
        else:
            b = f"({to_source(e.base)})"
        ex = e.exponent
        if ex.denominator == 1 and ex >= 0:
            return f"{b}^{ex.numerator}"
        return f"{b}^({_print_frac(ex)})"
    if isinstance(e, Mul):
        parts = [to_source(e.args[0])]
        if isinstance(e.args[0], Add):
            parts[0] = f"({parts[0]})"
        for a in e.args[1:]:
            parts.append(_wrap(a, to_source(a), in_product=True))
        # fold a leading -1 coefficient into a sign
        if isinstance(e.args[0], Rational) and e.args[0].value == -1:
            return "-" + "*".join(parts[1:])
        return "*".join(parts)
    if isinstance(e, Add):
        out = to_source(e.args[0])
        for a in e.args[1:]:
            s = to_source(a)
            if s.startswith("-"):
                out += " - " + s[1:]
            else:
                out += " + " + s
        return out
    raise TypeError(f"cannot print {e!r}")
