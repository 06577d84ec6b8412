"""Rational-function normal form over an atom basis.

Expressions are flattened to ``num/den`` where both sides are expanded
multivariate polynomials (dict monomial -> Fraction) over *atoms*: symbols,
exp/sin/cos nodes, opaque function atoms, and non-integer powers (radicals).
Three rewrite relations are applied during monomial arithmetic:

* ``exp(a)*exp(b) -> exp(a+b)`` (each monomial carries at most one exp atom),
* ``sin(t)^2 -> 1 - cos(t)^2`` (sin-degree <= 1 per argument),
* ``(B)^(k/q)`` with k >= q multiplies the radicand polynomial back in.

Radicands are normalized before becoming atoms: monomial content is pulled
out and factors with known sign are extracted (``sqrt(d^2*(4*c*a-b^2)) ->
d*sqrt(4*c*a-b^2)`` when ``d > 0``), which is what makes determinant square
roots line up with user-declared radicals.

No polynomial GCD: fractions are reduced by monomial content plus an exact
division attempt, which is enough for a faithful zero test.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Callable

from .expr import (
    Add,
    AssumptionSet,
    Cos,
    EMPTY_ASSUMPTIONS,
    Exp,
    Expr,
    ExprError,
    FnApp,
    MINUS_ONE,
    Mul,
    NEGATIVE,
    ONE,
    POSITIVE,
    Pow,
    Rational,
    Sin,
    Symbol,
    ZERO,
    _perfect_power_split,
    _raw_pow,
    add,
    cos_,
    exp_,
    fnapp,
    mul,
    pow_,
    rational,
    sin_,
)

Mono = tuple  # tuple[tuple[Expr, int], ...] sorted by atom skey
Poly = dict  # dict[Mono, Fraction]

MONO_ONE: Mono = ()


def p_const(c) -> Poly:
    c = Fraction(c)
    return {MONO_ONE: c} if c else {}


P_ONE = p_const(1)


class Inexact(ArithmeticError):
    """Raised when an exact polynomial division leaves a remainder."""


def _radical_parts(atom: Expr):
    """(base, q) when the atom is a q-th root, else None."""
    if isinstance(atom, Pow) and atom.exponent.denominator > 1:
        return atom.base, atom.exponent.denominator
    return None


def _mono_sort_key(m: Mono) -> str:
    return "|".join(f"{a.skey}^{k:06d}" for a, k in m)


def _atom_universe(*polys: Poly) -> list[Expr]:
    atoms = set()
    for p in polys:
        for m in p:
            for a, _ in m:
                atoms.add(a)
    return sorted(atoms, key=lambda a: a.skey)


def _exp_vector(m: Mono, atoms: list[Expr]) -> tuple[int, ...]:
    d = dict(m)
    return tuple(d.get(a, 0) for a in atoms)


class NormContext:
    """Normalization engine bound to one assumption set."""

    def __init__(self, assumptions: AssumptionSet = EMPTY_ASSUMPTIONS):
        self.assumptions = assumptions
        self._frac_cache: dict[Expr, tuple[Poly, Poly]] = {}
        self._norm_cache: dict[Expr, Expr] = {}
        self._radicand: dict[Expr, Poly] = {}
        # primitive parts of denominators seen so far; used as candidate
        # common factors so that powers of e.g. a metric determinant cancel
        # without a general polynomial GCD
        self._den_factors: list[Poly] = []
        self._den_factor_keys: set = set()

    # -- polynomial arithmetic ------------------------------------------------

    def padd(self, a: Poly, b: Poly) -> Poly:
        if not a:
            return dict(b)
        if not b:
            return dict(a)
        out = dict(a)
        for m, c in b.items():
            nc = out.get(m, 0) + c
            if nc:
                out[m] = nc
            else:
                out.pop(m, None)
        return out

    def pneg(self, a: Poly) -> Poly:
        return {m: -c for m, c in a.items()}

    def psub(self, a: Poly, b: Poly) -> Poly:
        return self.padd(a, self.pneg(b))

    def pscale(self, a: Poly, c: Fraction) -> Poly:
        if not c:
            return {}
        return {m: v * c for m, v in a.items()}

    def pmul(self, a: Poly, b: Poly) -> Poly:
        if not a or not b:
            return {}
        out: Poly = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                c = c1 * c2
                for m, pc in self._mono_mul(m1, m2).items():
                    nc = out.get(m, 0) + pc * c
                    if nc:
                        out[m] = nc
                    else:
                        out.pop(m, None)
        return out

    def ppow(self, a: Poly, k: int) -> Poly:
        out = dict(P_ONE)
        base = a
        while k:
            if k & 1:
                out = self.pmul(out, base)
            k >>= 1
            if k:
                base = self.pmul(base, base)
        return out

    def _mono_mul(self, m1: Mono, m2: Mono) -> Poly:
        if not m1 or not m2:
            merged = dict(m1 or m2)
            if not self._needs_reduction(merged):
                return {tuple(sorted(merged.items(), key=lambda kv: kv[0].skey)): Fraction(1)}
            return self._finalize(merged)
        raw: dict[Expr, int] = dict(m1)
        for a, k in m2:
            raw[a] = raw.get(a, 0) + k
        if not self._needs_reduction(raw):
            return {tuple(sorted(raw.items(), key=lambda kv: kv[0].skey)): Fraction(1)}
        return self._finalize(raw)

    def _needs_reduction(self, raw: dict[Expr, int]) -> bool:
        exps = 0
        for atom, k in raw.items():
            if isinstance(atom, Exp):
                exps += 1
                if exps > 1 or k != 1:
                    return True
            elif isinstance(atom, Sin) and k >= 2:
                return True
            else:
                rad = _radical_parts(atom)
                if rad is not None and k >= rad[1]:
                    return True
        return False

    def _finalize(self, raw: dict[Expr, int]) -> Poly:
        """Apply exp/sin/radical reductions; return the reduced Poly."""
        plain: dict[Expr, int] = {}
        exp_arg = None
        factors: list[Poly] = []
        for atom, k in raw.items():
            if k == 0:
                continue
            if isinstance(atom, Exp):
                term = atom.arg if k == 1 else mul(rational(k), atom.arg)
                exp_arg = term if exp_arg is None else add(exp_arg, term)
                continue
            if isinstance(atom, Sin) and k >= 2:
                pyth = self.psub(P_ONE, {((cos_(atom.arg), 2),): Fraction(1)})
                factors.append(self.ppow(pyth, k // 2))
                if k % 2:
                    plain[atom] = 1
                continue
            rad = _radical_parts(atom)
            if rad is not None and k >= rad[1]:
                factors.append(self.ppow(self._radicand_poly(atom), k // rad[1]))
                if k % rad[1]:
                    plain[atom] = k % rad[1]
                continue
            plain[atom] = k
        if exp_arg is not None:
            node = exp_(exp_arg)
            if node is not ONE:
                plain[node] = 1
        mono = tuple(sorted(plain.items(), key=lambda kv: kv[0].skey))
        out: Poly = {mono: Fraction(1)}
        for f in factors:
            out = self.pmul(out, f)
        return out

    def _radicand_poly(self, atom: Expr) -> Poly:
        got = self._radicand.get(atom)
        if got is None:
            num, den = self.frac(atom.base)
            if den != P_ONE:
                raise ExprError(f"radicand of {atom!r} is not polynomial")
            got = num
            self._radicand[atom] = got
        return got

    # -- conversion to polynomial fractions -------------------------------------

    def frac(self, e: Expr) -> tuple[Poly, Poly]:
        got = self._frac_cache.get(e)
        if got is None:
            got = self._reduce(*self._frac(e))
            self._frac_cache[e] = got
        return got

    def _frac(self, e: Expr) -> tuple[Poly, Poly]:
        if isinstance(e, Rational):
            return p_const(e.value), dict(P_ONE)
        if isinstance(e, Symbol):
            return {((e, 1),): Fraction(1)}, dict(P_ONE)
        if isinstance(e, Add):
            num, den = {}, dict(P_ONE)
            for a in e.args:
                na, da = self.frac(a)
                if da == den:
                    num = self.padd(num, na)
                    continue
                num = self.padd(self.pmul(num, da), self.pmul(na, den))
                den = self.pmul(den, da)
                num, den = self._reduce(num, den)
            return num, den
        if isinstance(e, Mul):
            num, den = dict(P_ONE), dict(P_ONE)
            for a in e.args:
                na, da = self.frac(a)
                num = self.pmul(num, na)
                den = self.pmul(den, da)
                num, den = self._reduce(num, den)
            return num, den
        if isinstance(e, Pow):
            ex = e.exponent
            if ex.denominator == 1:
                nb, db = self.frac(e.base)
                k = ex.numerator
                if k > 0:
                    return self.ppow(nb, k), self.ppow(db, k)
                if not nb:
                    raise ExprError("division by zero")
                return self.ppow(db, -k), self.ppow(nb, -k)
            return self._pow_frac(e.base, ex)
        if isinstance(e, Exp):
            node = exp_(self.normalize(e.arg))
            if isinstance(node, Rational):
                return p_const(node.value), dict(P_ONE)
            return {((node, 1),): Fraction(1)}, dict(P_ONE)
        if isinstance(e, (Sin, Cos)):
            arg = self.normalize(e.arg)
            node = sin_(arg) if isinstance(e, Sin) else cos_(arg)
            if isinstance(node, Rational):
                return p_const(node.value), dict(P_ONE)
            return {((node, 1),): Fraction(1)}, dict(P_ONE)
        if isinstance(e, FnApp):
            node = fnapp(e.name, self.normalize(e.arg), e.order)
            return {((node, 1),): Fraction(1)}, dict(P_ONE)
        raise ExprError(f"cannot normalize {e!r}")

    def _pow_frac(self, base: Expr, ex: Fraction) -> tuple[Poly, Poly]:
        nb, db = self.frac(base)
        num, den = dict(P_ONE), dict(P_ONE)
        for poly, flip in ((nb, False), (db, True)):
            if poly == P_ONE:
                continue
            n, d = self._poly_root(poly, -ex if flip else ex)
            num = self.pmul(num, n)
            den = self.pmul(den, d)
        return num, den

    def _poly_root(self, poly: Poly, ex: Fraction) -> tuple[Poly, Poly]:
        """poly ** ex with sign-aware factor extraction; ex non-integer."""
        if not poly:
            if ex < 0:
                raise ExprError("division by zero")
            return {}, dict(P_ONE)
        q = ex.denominator
        coeff, content, primitive = self._content(poly)
        num, den = dict(P_ONE), dict(P_ONE)

        def emit(g: Expr, ke: Fraction):
            """Multiply the running fraction by g**ke (g canonical, no recursion
            back through _pow_frac: fractional parts become radical atoms)."""
            nonlocal num, den
            whole = ke.numerator // ke.denominator
            fp = ke - whole
            if whole:
                n, d = self.frac(pow_(g, Fraction(whole)))
                num, den = self.pmul(num, n), self.pmul(den, d)
            if fp:
                if isinstance(g, Exp):
                    n, d = self.frac(exp_(mul(rational(fp), g.arg)))
                    num, den = self.pmul(num, n), self.pmul(den, d)
                    return
                atom = self._radical_atom(g, fp.denominator)
                piece = {((atom, fp.numerator),): Fraction(1)}
                num = self.pmul(num, piece)

        inside: list[Expr] = []

        def place(g: Expr, k: int):
            ke = k * ex
            sg = self.assumptions.sign_of(g)
            if sg == POSITIVE:
                emit(g, ke)
                return
            if ke.denominator == 1:
                if ke.numerator % 2 == 0:
                    emit(g, ke)  # |g|^even == g^even
                    return
                if k % 2 == 0 and sg == NEGATIVE:
                    emit(mul(MINUS_ONE, g), ke)  # |g| == -g
                    return
            inside.append(pow_(g, Fraction(k)))

        if coeff != 1:
            on, rn = _perfect_power_split(coeff.numerator, q)
            od, rd = _perfect_power_split(coeff.denominator, q)
            if on != 1 or od != 1:
                emit(rational(Fraction(on, od)), ex * q)
            rest = Fraction(rn, rd)
            if rest != 1:
                emit(rational(rest), ex) if rest > 0 else inside.append(rational(rest))
        for atom, k in content:
            place(atom, k)
        prim_expr = self.poly_to_expr(primitive)
        if prim_expr is not ONE:
            pyth = self._pythagorean_sin(primitive)
            if pyth is not None and self.assumptions.sign_of(pyth) in (POSITIVE, NEGATIVE):
                place(pyth, 2)  # primitive == sin(t)^2 rewritten as 1 - cos(t)^2
            elif isinstance(prim_expr, (Symbol, Exp, Sin, Cos, FnApp)) or (
                self.assumptions.sign_of(prim_expr) == POSITIVE
            ):
                place(prim_expr, 1)
            else:
                inside.append(prim_expr)

        if inside:
            radicand = self.normalize(mul(*inside))
            if radicand is not ONE:
                whole = ex.numerator // q
                p = ex.numerator - whole * q  # 0 < p < q here
                if whole:
                    n, d = self.frac(pow_(radicand, Fraction(whole)))
                    num, den = self.pmul(num, n), self.pmul(den, d)
                if p:
                    atom = self._radical_atom(radicand, q)
                    num = self.pmul(num, {((atom, p),): Fraction(1)})
        return num, den

    def _pythagorean_sin(self, primitive: Poly):
        """sin(t) when primitive == 1 - cos(t)^2, else None."""
        if len(primitive) != 2 or primitive.get(MONO_ONE) != 1:
            return None
        for m, c in primitive.items():
            if m is MONO_ONE or m == MONO_ONE:
                continue
            if c == -1 and len(m) == 1 and isinstance(m[0][0], Cos) and m[0][1] == 2:
                return sin_(m[0][0].arg)
        return None

    def _radical_atom(self, radicand: Expr, q: int) -> Expr:
        atom = _raw_pow(radicand, Fraction(1, q))
        if atom not in self._radicand:
            num, den = self.frac(radicand)
            if den != P_ONE:
                raise ExprError(f"radicand {radicand!r} is not polynomial")
            self._radicand[atom] = num
        return atom

    # -- fraction reduction -------------------------------------------------------

    def _content(self, poly: Poly):
        """(positive rational coeff, common monomial, primitive polynomial)."""
        if not poly:
            return Fraction(1), (), {}
        num_g = 0
        den_l = 1
        for c in poly.values():
            num_g = gcd(num_g, abs(c.numerator))
            den_l = den_l * c.denominator // gcd(den_l, c.denominator)
        coeff = Fraction(num_g, den_l)
        common: dict[Expr, int] | None = None
        for m in poly:
            d = dict(m)
            if common is None:
                common = d
            else:
                common = {a: min(k, d[a]) for a, k in common.items() if a in d}
            if not common:
                common = {}
                break
        mono = tuple(sorted((common or {}).items(), key=lambda kv: kv[0].skey))
        if coeff == 1 and not mono:
            return coeff, mono, dict(poly)
        primitive: Poly = {}
        for m, c in poly.items():
            rest = dict(m)
            for a, k in mono:
                rest[a] -= k
                if not rest[a]:
                    del rest[a]
            primitive[tuple(sorted(rest.items(), key=lambda kv: kv[0].skey))] = c / coeff
        return coeff, mono, primitive

    def _rationalize(self, num: Poly, den: Poly) -> tuple[Poly, Poly]:
        """Move radical atoms out of the denominator's monomial content."""
        for _ in range(8):
            _, mono, _ = self._content(den)
            boost = None
            for atom, k in mono:
                rad = _radical_parts(atom)
                if rad is not None and k % rad[1]:
                    boost = {((atom, rad[1] - k % rad[1]),): Fraction(1)}
                    break
            if boost is None:
                return num, den
            num = self.pmul(num, boost)
            den = self.pmul(den, boost)
        return num, den

    def _reduce(self, num: Poly, den: Poly) -> tuple[Poly, Poly]:
        if not num:
            return {}, dict(P_ONE)
        if not den:
            raise ExprError("division by zero")
        if den == P_ONE:
            return num, den
        num, den = self._rationalize(num, den)
        # cancel the exponential factor carried by the denominator's leading
        # monomial: exp(a)/exp(b) = exp(a-b)
        lead_d = max(den, key=_mono_sort_key)
        for atom, k in lead_d:
            if isinstance(atom, Exp):
                inv = exp_(mul(rational(-k), atom.arg))
                if not isinstance(inv, Rational):
                    shift = {((inv, 1),): Fraction(1)}
                    num = self.pmul(num, shift)
                    den = self.pmul(den, shift)
                break
        cn, mn, pn = self._content(num)
        cd, md, pd = self._content(den)
        dn, dd = dict(mn), dict(md)
        for a, k in mn:
            if a in dd:
                c = min(k, dd[a])
                dn[a] -= c
                dd[a] -= c
        num = self._apply_content(pn, cn / cd, {a: k for a, k in dn.items() if k})
        den = self._apply_content(pd, Fraction(1), {a: k for a, k in dd.items() if k})
        if den == P_ONE:
            return num, den
        num, den = self._cancel_known_factors(num, den)
        if den == P_ONE:
            return num, den
        try:
            return self.divexact(num, den), dict(P_ONE)
        except Inexact:
            pass
        try:
            q = self.divexact(den, num)
        except Inexact:
            pass
        else:
            cq, mq, pq = self._content(q)
            new_num = p_const(1 / cq)
            new_den = self._apply_content(pq, Fraction(1), dict(mq))
            return new_num, new_den
        lead = max(den, key=_mono_sort_key)
        lc = den[lead]
        if lc != 1:
            num = self.pscale(num, 1 / lc)
            den = self.pscale(den, 1 / lc)
        self._register_den_factor(den)
        return num, den

    def _register_den_factor(self, den: Poly):
        if len(den) < 2 or len(den) > 60:
            return
        _, _, prim = self._content(den)
        key = tuple(sorted((_mono_sort_key(m), str(c)) for m, c in prim.items()))
        if key not in self._den_factor_keys:
            self._den_factor_keys.add(key)
            self._den_factors.append(prim)

    def _cancel_known_factors(self, num: Poly, den: Poly) -> tuple[Poly, Poly]:
        """Divide out registered common factors (powers of earlier dens)."""
        if len(den) < 2:
            return num, den
        progress = True
        while progress and den != P_ONE:
            progress = False
            for f in self._den_factors:
                if len(f) > len(den):
                    continue
                while True:
                    try:
                        qd = self.divexact(den, f)
                        qn = self.divexact(num, f)
                    except Inexact:
                        break
                    num, den = qn, qd
                    progress = True
                    if len(den) < 2:
                        return num, den
        return num, den

    def _apply_content(self, poly: Poly, coeff: Fraction, mono: dict) -> Poly:
        if coeff == 1 and not mono:
            return dict(poly)
        extra = tuple(sorted(mono.items(), key=lambda kv: kv[0].skey))
        out: Poly = {}
        for m, c in poly.items():
            for mm, pc in self._mono_mul(m, extra).items():
                nc = out.get(mm, 0) + pc * c * coeff
                if nc:
                    out[mm] = nc
                else:
                    out.pop(mm, None)
        return out

    def divexact(self, a: Poly, b: Poly) -> Poly:
        """a / b when the division is exact; raises Inexact otherwise.

        Runs the leading-term division algorithm under a lex monomial order;
        in the presence of atom relations (radicals, trig) a representable
        quotient may still raise Inexact, which callers treat as "leave the
        fraction unreduced".
        """
        if not b:
            raise ExprError("division by zero")
        if not a:
            return {}
        atoms = _atom_universe(a, b)

        def lead(p: Poly) -> Mono:
            return max(p, key=lambda m: _exp_vector(m, atoms))

        rem = dict(a)
        lead_b = lead(b)
        vb = _exp_vector(lead_b, atoms)
        cb = b[lead_b]
        quot: Poly = {}
        prev = None
        while rem:
            lead_r = lead(rem)
            vr = _exp_vector(lead_r, atoms)
            if prev is not None and vr >= prev:
                raise Inexact("no progress")  # reductions interfered
            prev = vr
            if any(r < bb for r, bb in zip(vr, vb)):
                raise Inexact("leading term not divisible")
            qm = tuple(
                (atom, r - bb)
                for atom, r, bb in zip(atoms, vr, vb)
                if r - bb
            )
            qc = rem[lead_r] / cb
            quot[qm] = quot.get(qm, Fraction(0)) + qc
            rem = self.psub(rem, self._apply_content(b, qc, dict(qm)))
        return {m: c for m, c in quot.items() if c}

    # -- back to expressions --------------------------------------------------------

    def poly_to_expr(self, poly: Poly) -> Expr:
        if not poly:
            return ZERO
        terms = []
        for m in sorted(poly, key=_mono_sort_key):
            c = poly[m]
            factors = []
            for atom, k in m:
                rad = _radical_parts(atom)
                if rad is not None and k > 1:
                    factors.append(_raw_pow(rad[0], Fraction(k, rad[1])))
                elif k == 1:
                    factors.append(atom)
                else:
                    factors.append(pow_(atom, Fraction(k)))
            terms.append(mul(rational(c), *factors))
        return add(*terms)

    def frac_to_expr(self, num: Poly, den: Poly) -> Expr:
        ne = self.poly_to_expr(num)
        if den == P_ONE:
            return ne
        if len(den) == 1:
            ((m, c),) = den.items()
            inv = [pow_(atom, Fraction(-k)) for atom, k in m]
            return mul(ne, rational(1 / c), *inv)
        return mul(ne, pow_(self.poly_to_expr(den), Fraction(-1)))

    # -- public entry points ----------------------------------------------------------

    def normalize(self, e: Expr) -> Expr:
        got = self._norm_cache.get(e)
        if got is None:
            got = self.frac_to_expr(*self.frac(e))
            self._norm_cache[e] = got
        return got

    def is_zero(self, e: Expr) -> bool:
        if e is ZERO:
            return True
        num, _ = self.frac(e)
        return not num

    def split_coefficients(
        self, e: Expr, selector: Callable[[Expr], bool]
    ) -> dict[Mono, Expr]:
        """Group a polynomial expression by monomials in the selected atoms.

        Returns ``{selected-monomial: coefficient Expr}``; the denominator
        must not contain selected atoms.
        """
        num, den = self.frac(e)
        for m in den:
            for atom, _ in m:
                if selector(atom):
                    raise ExprError(f"selected atom {atom!r} in denominator")
        groups: dict[Mono, Poly] = {}
        for m, c in num.items():
            sel = tuple((a, k) for a, k in m if selector(a))
            rest = tuple((a, k) for a, k in m if not selector(a))
            groups.setdefault(sel, {})[rest] = c
        if den == P_ONE:
            return {sel: self.poly_to_expr(p) for sel, p in groups.items()}
        den_inv = self.frac_to_expr(P_ONE, den)
        return {sel: mul(self.poly_to_expr(p), den_inv) for sel, p in groups.items()}


_contexts: dict[tuple, NormContext] = {}


def context_for(assumptions: AssumptionSet | None) -> NormContext:
    assumptions = assumptions or EMPTY_ASSUMPTIONS
    key = assumptions.token()
    ctx = _contexts.get(key)
    if ctx is None:
        ctx = NormContext(assumptions)
        _contexts[key] = ctx
    return ctx
