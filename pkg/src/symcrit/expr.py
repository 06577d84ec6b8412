"""Exact symbolic expression trees.

Nodes are immutable and hash-consed: building the same canonical tree twice
returns the same object, so structural equality is pointer equality and
subtrees are shared freely.  All construction goes through the factory
functions (``add``, ``mul``, ``pow_``, ...) which enforce the canonical form:

* Add/Mul operand sequences are flattened, like terms/powers merged, and
  operands sorted under a total node order (kind rank, then a lexicographic
  serialization of the payload).
* Rational coefficients are folded exactly; ``x^0``, ``1*x``, ``0*x`` and
  ``x+0`` never survive construction.
* Pow exponents are exact rationals (``fractions.Fraction``), never trees.

Rewrites that need sign assumptions (``sqrt(x^2) -> x`` and friends) live in
:mod:`symcrit.simplify`, not here.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Union
import math

Rat = Fraction

_KIND_RANK = {
    "rat": "0",
    "sym": "1",
    "fn": "2",
    "exp": "3",
    "sin": "4",
    "cos": "5",
    "pow": "6",
    "mul": "7",
    "add": "8",
}


class ExprError(ValueError):
    """Raised for malformed expression constructions (e.g. division by zero)."""


class Expr:
    """Base node.  Do not instantiate subclasses directly; use the factories."""

    __slots__ = ("skey", "_hash")

    kind = "?"

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Expr) and self.skey == other.skey

    def __repr__(self):
        from .parse import to_source

        return to_source(self)

    # Arithmetic sugar used pervasively by the higher modules.
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, mul(MINUS_ONE, _coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), mul(MINUS_ONE, self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, e):
        return pow_(self, e)

    def __neg__(self):
        return mul(MINUS_ONE, self)


class Rational(Expr):
    __slots__ = ("value",)
    kind = "rat"


class Symbol(Expr):
    __slots__ = ("name",)
    kind = "sym"


class Add(Expr):
    __slots__ = ("args",)
    kind = "add"


class Mul(Expr):
    __slots__ = ("args",)
    kind = "mul"


class Pow(Expr):
    __slots__ = ("base", "exponent")
    kind = "pow"


class Exp(Expr):
    __slots__ = ("arg",)
    kind = "exp"


class Sin(Expr):
    __slots__ = ("arg",)
    kind = "sin"


class Cos(Expr):
    __slots__ = ("arg",)
    kind = "cos"


class FnApp(Expr):
    """Opaque atom ``f(arg)`` differentiated ``order`` times in its argument."""

    __slots__ = ("name", "arg", "order")
    kind = "fn"


_interned: dict[str, Expr] = {}


def _intern(cls, skey, fill):
    node = _interned.get(skey)
    if node is None:
        node = object.__new__(cls)
        node.skey = skey
        node._hash = hash(skey)
        fill(node)
        _interned[skey] = node
    return node


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return rational(v)
    raise TypeError(f"cannot use {v!r} as an expression")


# ---------------------------------------------------------------------------
# factories


def rational(p, q=1) -> Expr:
    value = Fraction(p, q)
    skey = f"0[{value}]"

    def fill(n):
        n.value = value

    return _intern(Rational, skey, fill)


def integer(n) -> Expr:
    return rational(n)


def sym(name: str) -> Expr:
    skey = f"1[{name}]"

    def fill(n):
        n.name = name

    return _intern(Symbol, skey, fill)


def syms(names: str) -> tuple[Expr, ...]:
    return tuple(sym(n) for n in names.replace(",", " ").split())


def fnapp(name: str, arg, order: int = 0) -> Expr:
    arg = _coerce(arg)
    if order < 0:
        raise ExprError("negative derivative order")
    skey = f"2[{name}|{order}|{arg.skey}]"

    def fill(n):
        n.name = name
        n.arg = arg
        n.order = order

    return _intern(FnApp, skey, fill)


def exp_(arg) -> Expr:
    arg = _coerce(arg)
    if arg is ZERO:
        return ONE
    skey = f"3[{arg.skey}]"

    def fill(n):
        n.arg = arg

    return _intern(Exp, skey, fill)


def sin_(arg) -> Expr:
    arg = _coerce(arg)
    if arg is ZERO:
        return ZERO
    skey = f"4[{arg.skey}]"

    def fill(n):
        n.arg = arg

    return _intern(Sin, skey, fill)


def cos_(arg) -> Expr:
    arg = _coerce(arg)
    if arg is ZERO:
        return ONE
    skey = f"5[{arg.skey}]"

    def fill(n):
        n.arg = arg

    return _intern(Cos, skey, fill)


def _raw_pow(base: Expr, exponent: Fraction) -> Expr:
    skey = f"6[{base.skey}|{exponent}]"

    def fill(n):
        n.base = base
        n.exponent = exponent

    return _intern(Pow, skey, fill)


def _raw_mul(args: tuple[Expr, ...]) -> Expr:
    skey = "7[" + "|".join(a.skey for a in args) + "]"

    def fill(n):
        n.args = args

    return _intern(Mul, skey, fill)


def _raw_add(args: tuple[Expr, ...]) -> Expr:
    skey = "8[" + "|".join(a.skey for a in args) + "]"

    def fill(n):
        n.args = args

    return _intern(Add, skey, fill)


def _int_root(n: int, q: int):
    """Exact q-th root of a non-negative int, or None."""
    if n < 0:
        return None
    r = round(n ** (1.0 / q)) if n > 1 else n
    for c in (r - 1, r, r + 1):
        if c >= 0 and c**q == n:
            return c
    return None


def _rational_root(value: Fraction, q: int):
    np = _int_root(value.numerator, q)
    if np is None:
        return None
    dp = _int_root(value.denominator, q)
    if dp is None:
        return None
    return Fraction(np, dp)


def _perfect_power_split(n: int, q: int) -> tuple[int, int]:
    """n = outside**q * inside with the largest possible outside (n > 0)."""
    outside, inside = 1, n
    p = 2
    while p * p <= inside:
        if inside % p == 0:
            k = 0
            while inside % p == 0:
                inside //= p
                k += 1
            outside *= p ** (k // q)
            inside *= p ** (k % q)
        p += 1
    return outside, inside


def pow_(base, exponent) -> Expr:
    base = _coerce(base)
    if not isinstance(exponent, (int, Fraction)):
        raise ExprError(f"pow exponent must be an exact rational, got {exponent!r}")
    exponent = Fraction(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Rational):
        v = base.value
        if v == 0:
            if exponent < 0:
                raise ExprError("division by zero")
            return ZERO
        if v == 1:
            return ONE
        if exponent.denominator == 1:
            return rational(v**exponent.numerator)
        if v > 0:
            root = _rational_root(v, exponent.denominator)
            if root is not None:
                return rational(root**exponent.numerator)
        # pull out the integer part of the exponent: r^(7/2) = r^3 * r^(1/2)
        ip = exponent.numerator // exponent.denominator
        fp = exponent - ip
        if ip != 0:
            return mul(rational(v**ip), pow_(base, fp))
        if v > 0:
            # partial root extraction: 8^(1/2) = 2 * 2^(1/2)
            q = exponent.denominator
            on, rn = _perfect_power_split(v.numerator, q)
            od, rd = _perfect_power_split(v.denominator, q)
            if on != 1 or od != 1:
                out = Fraction(on, od) ** exponent.numerator
                return mul(rational(out), pow_(rational(rn, rd), exponent))
        return _raw_pow(base, exponent)
    if isinstance(base, Pow):
        inner = base.exponent
        # (x^a)^n is exact for integer n; (x^a)^e is exact on the real domain
        # unless a is an even integer (|x| would appear).
        if exponent.denominator == 1 or not (
            inner.denominator == 1 and inner.numerator % 2 == 0
        ):
            return pow_(base.base, inner * exponent)
        return _raw_pow(base, exponent)
    if isinstance(base, Exp):
        return exp_(mul(rational(exponent), base.arg))
    if isinstance(base, Mul):
        if exponent.denominator == 1:
            return mul(*[pow_(a, exponent) for a in base.args])
        lead = base.args[0]
        if isinstance(lead, Rational) and lead.value > 0:
            rest = base.args[1:]
            rest_e = rest[0] if len(rest) == 1 else _raw_mul(rest)
            return mul(pow_(lead, exponent), pow_(rest_e, exponent))
        return _raw_pow(base, exponent)
    return _raw_pow(base, exponent)


def _term_parts(t: Expr) -> tuple[Fraction, tuple[Expr, ...]]:
    """Split a canonical term into (rational coefficient, factor tuple)."""
    if isinstance(t, Rational):
        return t.value, ()
    if isinstance(t, Mul):
        if isinstance(t.args[0], Rational):
            return t.args[0].value, t.args[1:]
        return Fraction(1), t.args
    return Fraction(1), (t,)


def _make_term(coeff: Fraction, factors: tuple[Expr, ...]) -> Expr:
    if not factors:
        return rational(coeff)
    if coeff == 1:
        return factors[0] if len(factors) == 1 else _raw_mul(factors)
    return _raw_mul((rational(coeff),) + factors)


def add(*args) -> Expr:
    terms: dict[tuple[Expr, ...], Fraction] = {}
    order: list[tuple[Expr, ...]] = []

    def absorb(a):
        a = _coerce(a)
        if isinstance(a, Add):
            for sub in a.args:
                absorb(sub)
            return
        coeff, factors = _term_parts(a)
        if coeff == 0:
            return
        if factors in terms:
            terms[factors] += coeff
        else:
            terms[factors] = coeff
            order.append(factors)

    for a in args:
        absorb(a)

    out = [_make_term(c, f) for f in order if (c := terms[f]) != 0]
    out.sort(key=lambda e: e.skey)
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return _raw_add(tuple(out))


def _pow_parts(f: Expr) -> tuple[Expr, Fraction]:
    if isinstance(f, Pow):
        return f.base, f.exponent
    return f, Fraction(1)


def mul(*args) -> Expr:
    coeff = Fraction(1)
    powers: dict[Expr, Fraction] = {}
    order: list[Expr] = []

    def absorb(a):
        nonlocal coeff
        a = _coerce(a)
        if isinstance(a, Mul):
            for sub in a.args:
                absorb(sub)
            return
        if isinstance(a, Rational):
            coeff *= a.value
            return
        base, e = _pow_parts(a)
        if base in powers:
            powers[base] += e
        else:
            powers[base] = e
            order.append(base)

    for a in args:
        absorb(a)

    if coeff == 0:
        return ZERO

    factors = []
    for base in order:
        e = powers[base]
        f = pow_(base, e) if e != 1 else base
        if isinstance(f, Rational):
            coeff *= f.value
        elif f is not ONE:
            factors.append(f)
    if coeff == 0:
        return ZERO
    # pow_ may return Mul (e.g. coefficient extraction); re-absorb once.
    if any(isinstance(f, Mul) for f in factors):
        return mul(rational(coeff), *factors)
    factors.sort(key=lambda e: e.skey)
    if not factors:
        return rational(coeff)
    if coeff == 1:
        return factors[0] if len(factors) == 1 else _raw_mul(tuple(factors))
    return _raw_mul((rational(coeff),) + tuple(factors))


def div(a, b) -> Expr:
    return mul(_coerce(a), pow_(_coerce(b), -1))


def negated(e: Expr) -> Expr:
    """-e with the sign distributed over sums (for declaration lookups)."""
    e = _coerce(e)
    if isinstance(e, Add):
        return add(*[mul(MINUS_ONE, t) for t in e.args])
    return mul(MINUS_ONE, e)


def sqrt(a) -> Expr:
    return pow_(a, Fraction(1, 2))


ZERO = rational(0)
ONE = rational(1)
MINUS_ONE = rational(-1)
HALF = rational(1, 2)


# ---------------------------------------------------------------------------
# structural queries


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Add, Mul)):
        return e.args
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, (Exp, Sin, Cos)):
        return (e.arg,)
    if isinstance(e, FnApp):
        return (e.arg,)
    return ()


def free_symbols(e: Expr) -> frozenset[str]:
    seen = set()

    def walk(n):
        if isinstance(n, Symbol):
            seen.add(n.name)
            return
        for c in children(n):
            walk(c)

    walk(e)
    return frozenset(seen)


def function_atoms(e: Expr) -> frozenset[Expr]:
    """All FnApp nodes occurring in ``e``."""
    found = set()

    def walk(n):
        if isinstance(n, FnApp):
            found.add(n)
        for c in children(n):
            walk(c)

    walk(e)
    return frozenset(found)


def depends_on(e: Expr, names: Iterable[str]) -> bool:
    names = set(names)
    return bool(free_symbols(e) & names)


def substitute(e: Expr, mapping: Mapping[Expr, Expr]) -> Expr:
    """Replace exact subtree matches.

    Keys are matched pre-order (a whole-node match wins over rewrites inside
    it), so ``{P(u): P0, u: u0}`` maps ``P(u)`` to ``P0`` and a bare ``u``
    to ``u0``.
    """
    if not mapping:
        return e
    cache: dict[Expr, Expr] = {}

    def walk(n: Expr) -> Expr:
        hit = mapping.get(n)
        if hit is not None:
            return hit
        got = cache.get(n)
        if got is not None:
            return got
        if isinstance(n, Add):
            out = add(*[walk(a) for a in n.args])
        elif isinstance(n, Mul):
            out = mul(*[walk(a) for a in n.args])
        elif isinstance(n, Pow):
            out = pow_(walk(n.base), n.exponent)
        elif isinstance(n, Exp):
            out = exp_(walk(n.arg))
        elif isinstance(n, Sin):
            out = sin_(walk(n.arg))
        elif isinstance(n, Cos):
            out = cos_(walk(n.arg))
        elif isinstance(n, FnApp):
            out = fnapp(n.name, walk(n.arg), n.order)
        else:
            out = n
        cache[n] = out
        return out

    return walk(e)


# ---------------------------------------------------------------------------
# differentiation

_diff_cache: dict[tuple[Expr, Expr], Expr] = {}


def differentiate(e: Expr, wrt: Expr) -> Expr:
    """d(e)/d(wrt).

    ``wrt`` may be a Symbol, or an FnApp atom (then the atom is treated as an
    independent variable: the partial derivative used by the Euler operator).
    """
    if not isinstance(wrt, (Symbol, FnApp)):
        raise ExprError(f"cannot differentiate with respect to {wrt!r}")
    key = (e, wrt)
    got = _diff_cache.get(key)
    if got is not None:
        return got
    out = _diff(e, wrt)
    _diff_cache[key] = out
    return out


def _diff(e: Expr, wrt: Expr) -> Expr:
    if e is wrt:
        return ONE
    if isinstance(e, Rational):
        return ZERO
    if isinstance(e, Symbol):
        return ZERO
    if isinstance(e, Add):
        return add(*[differentiate(a, wrt) for a in e.args])
    if isinstance(e, Mul):
        terms = []
        for i, a in enumerate(e.args):
            da = differentiate(a, wrt)
            if da is ZERO:
                continue
            rest = e.args[:i] + e.args[i + 1 :]
            terms.append(mul(da, *rest))
        return add(*terms)
    if isinstance(e, Pow):
        db = differentiate(e.base, wrt)
        if db is ZERO:
            return ZERO
        return mul(rational(e.exponent), pow_(e.base, e.exponent - 1), db)
    if isinstance(e, Exp):
        da = differentiate(e.arg, wrt)
        if da is ZERO:
            return ZERO
        return mul(e, da)
    if isinstance(e, Sin):
        da = differentiate(e.arg, wrt)
        if da is ZERO:
            return ZERO
        return mul(cos_(e.arg), da)
    if isinstance(e, Cos):
        da = differentiate(e.arg, wrt)
        if da is ZERO:
            return ZERO
        return mul(MINUS_ONE, sin_(e.arg), da)
    if isinstance(e, FnApp):
        # chain rule; the derivative atom is the same function, one order up
        da = differentiate(e.arg, wrt)
        if da is ZERO:
            return ZERO
        return mul(fnapp(e.name, e.arg, e.order + 1), da)
    raise ExprError(f"cannot differentiate {e!r}")


# ---------------------------------------------------------------------------
# assumptions

POSITIVE = "positive"
NEGATIVE = "negative"
NONZERO = "nonzero"

_SIGNS = (POSITIVE, NEGATIVE, NONZERO)


class AssumptionSet:
    """Sign declarations (expr > 0, expr < 0, expr != 0) with inference.

    Declarations are stored canonically; contradictory declarations on the
    same expression are rejected.
    """

    def __init__(self, declarations: Iterable[tuple[Expr, str]] = ()):
        self._signs: dict[Expr, str] = {}
        for e, s in declarations:
            self.declare(e, s)

    def declare(self, e: Expr, s: str):
        if s not in _SIGNS:
            raise ExprError(f"unknown sign {s!r}")
        e = _coerce(e)
        prev = self._signs.get(e)
        if prev is not None and prev != s and NONZERO not in (prev, s):
            raise ExprError(f"contradictory signs for {e!r}: {prev} vs {s}")
        if prev is None or prev == NONZERO:
            self._signs[e] = s

    def items(self):
        return sorted(self._signs.items(), key=lambda kv: kv[0].skey)

    def token(self):
        """Hashable identity used for memoization."""
        return tuple((e.skey, s) for e, s in self.items())

    def merged(self, other: "AssumptionSet") -> "AssumptionSet":
        out = AssumptionSet(self.items())
        for e, s in other.items():
            out.declare(e, s)
        return out

    def sign_of(self, e: Expr) -> str | None:
        """POSITIVE / NEGATIVE / NONZERO, or None when unknown."""
        e = _coerce(e)
        got = self._signs.get(e)
        if got is not None:
            return got
        if isinstance(e, Rational):
            if e.value > 0:
                return POSITIVE
            if e.value < 0:
                return NEGATIVE
            return None
        neg = self._signs.get(negated(e))
        if neg is not None:
            return {POSITIVE: NEGATIVE, NEGATIVE: POSITIVE, NONZERO: NONZERO}[neg]
        if isinstance(e, Exp):
            return POSITIVE
        if isinstance(e, Pow):
            sb = self.sign_of(e.base)
            if sb == POSITIVE:
                return POSITIVE
            if e.exponent.denominator == 1:
                if e.exponent.numerator % 2 == 0:
                    return POSITIVE if sb in (POSITIVE, NEGATIVE, NONZERO) else None
                if sb == NEGATIVE:
                    return NEGATIVE
                if sb == NONZERO:
                    return NONZERO
            return None
        if isinstance(e, Mul):
            nonzero_only = False
            neg = False
            for a in e.args:
                sa = self.sign_of(a)
                if sa is None:
                    return None
                if sa == NONZERO:
                    nonzero_only = True
                elif sa == NEGATIVE:
                    neg = not neg
            if nonzero_only:
                return NONZERO
            return NEGATIVE if neg else POSITIVE
        if isinstance(e, Add):
            signs = {self.sign_of(a) for a in e.args}
            if signs == {POSITIVE}:
                return POSITIVE
            if signs == {NEGATIVE}:
                return NEGATIVE
            return None
        return None

    def is_positive(self, e) -> bool:
        return self.sign_of(_coerce(e)) == POSITIVE

    def is_nonzero(self, e) -> bool:
        return self.sign_of(_coerce(e)) in (POSITIVE, NEGATIVE, NONZERO)

    def __repr__(self):
        decls = ", ".join(f"{e!r}:{s}" for e, s in self.items())
        return f"AssumptionSet({decls})"


EMPTY_ASSUMPTIONS = AssumptionSet()


# ---------------------------------------------------------------------------
# evaluation


class Bindings:
    """Values for symbols and opaque function atoms.

    ``values`` maps symbol names to numbers; ``functions`` maps
    ``(name, derivative_order)`` to numbers (function atoms are opaque, so
    the binding ignores the argument).
    """

    def __init__(self, values=None, functions=None):
        self.values = dict(values or {})
        self.functions = dict(functions or {})


class EvalError(ExprError):
    pass


def eval_exact(e: Expr, bindings: Bindings) -> Fraction:
    """Evaluate to an exact rational; raises EvalError when impossible."""
    if isinstance(e, Rational):
        return e.value
    if isinstance(e, Symbol):
        try:
            v = bindings.values[e.name]
        except KeyError:
            raise EvalError(f"unbound symbol {e.name}") from None
        return Fraction(v)
    if isinstance(e, Add):
        return sum((eval_exact(a, bindings) for a in e.args), Fraction(0))
    if isinstance(e, Mul):
        out = Fraction(1)
        for a in e.args:
            out *= eval_exact(a, bindings)
        return out
    if isinstance(e, Pow):
        b = eval_exact(e.base, bindings)
        ex = e.exponent
        if ex.denominator == 1:
            if b == 0 and ex < 0:
                raise EvalError("division by zero")
            return b**ex.numerator
        root = _rational_root(b, ex.denominator) if b >= 0 else None
        if root is None:
            raise EvalError(f"{b}^{ex} is not rational")
        return root**ex.numerator
    if isinstance(e, FnApp):
        try:
            v = bindings.functions[(e.name, e.order)]
        except KeyError:
            raise EvalError(f"unbound function atom {e.name}^({e.order})") from None
        return Fraction(v)
    raise EvalError(f"{e!r} has no exact value")


def eval_float(e: Expr, bindings: Bindings) -> float:
    if isinstance(e, Rational):
        return float(e.value)
    if isinstance(e, Symbol):
        try:
            return float(bindings.values[e.name])
        except KeyError:
            raise EvalError(f"unbound symbol {e.name}") from None
    if isinstance(e, Add):
        return math.fsum(eval_float(a, bindings) for a in e.args)
    if isinstance(e, Mul):
        out = 1.0
        for a in e.args:
            out *= eval_float(a, bindings)
        return out
    if isinstance(e, Pow):
        b = eval_float(e.base, bindings)
        ex = e.exponent
        if b == 0 and ex < 0:
            raise EvalError("division by zero")
        if b < 0:
            if ex.denominator == 1:
                return b**ex.numerator
            raise EvalError(f"fractional power of negative value {b}")
        return b ** float(ex)
    if isinstance(e, Exp):
        return math.exp(eval_float(e.arg, bindings))
    if isinstance(e, Sin):
        return math.sin(eval_float(e.arg, bindings))
    if isinstance(e, Cos):
        return math.cos(eval_float(e.arg, bindings))
    if isinstance(e, FnApp):
        try:
            return float(bindings.functions[(e.name, e.order)])
        except KeyError:
            raise EvalError(f"unbound function atom {e.name}^({e.order})") from None
    raise EvalError(f"cannot evaluate {e!r}")


def instantiate_functions(e: Expr, table: Mapping[str, Expr]) -> Expr:
    """Replace opaque functions by concrete expressions of their argument.

    ``table`` maps a function name to an expression in the placeholder symbol
    ``t``; ``f(arg)`` of order k becomes the k-th derivative of that
    expression, evaluated at ``arg``.  Used by numeric oracles.
    """
    t = sym("t")

    def walk(n: Expr) -> Expr:
        if isinstance(n, FnApp) and n.name in table:
            body = table[n.name]
            for _ in range(n.order):
                body = differentiate(body, t)
            return substitute(body, {t: walk(n.arg)})
        if isinstance(n, Add):
            return add(*[walk(a) for a in n.args])
        if isinstance(n, Mul):
            return mul(*[walk(a) for a in n.args])
        if isinstance(n, Pow):
            return pow_(walk(n.base), n.exponent)
        if isinstance(n, Exp):
            return exp_(walk(n.arg))
        if isinstance(n, Sin):
            return sin_(walk(n.arg))
        if isinstance(n, Cos):
            return cos_(walk(n.arg))
        return n

    return walk(e)
