"""Public simplification entry points: normalize, equals, random-point checks."""

from __future__ import annotations

import random
from fractions import Fraction

from .expr import (
    AssumptionSet,
    Bindings,
    EMPTY_ASSUMPTIONS,
    EvalError,
    Expr,
    FnApp,
    NEGATIVE,
    POSITIVE,
    ZERO,
    eval_float,
    free_symbols,
    function_atoms,
)
from .poly import context_for


def normalize(e: Expr, assumptions: AssumptionSet | None = None) -> Expr:
    """Idempotent rational-function normal form; see :mod:`symcrit.poly`."""
    return context_for(assumptions).normalize(e)


def is_zero(e: Expr, assumptions: AssumptionSet | None = None) -> bool:
    return context_for(assumptions).is_zero(e)


def equals(e1: Expr, e2: Expr, assumptions: AssumptionSet | None = None) -> bool:
    """True iff the difference normalizes to zero.

    The normal form already cross-multiplies (the difference is put over a
    common denominator and expanded), so this is the full decision procedure
    described by the module docs; it is deterministic and sound for the
    supported rewrite system.
    """
    if e1 is e2:
        return True
    return context_for(assumptions).is_zero(e1 - e2)


def _random_fraction(rng: random.Random, span: int = 12, max_den: int = 10_000) -> Fraction:
    num = rng.randint(-span, span)
    den = rng.randint(1, max_den)
    return Fraction(num, den) if num else Fraction(rng.randint(1, span), den)


def random_bindings(
    e: Expr,
    assumptions: AssumptionSet | None = None,
    rng: random.Random | None = None,
    max_tries: int = 200,
) -> Bindings:
    """Random rational bindings for every free symbol/function atom of ``e``
    that satisfy the assumption signs (by rejection sampling)."""
    assumptions = assumptions or EMPTY_ASSUMPTIONS
    rng = rng or random.Random()
    names = sorted(free_symbols(e))
    atoms = sorted({(a.name, a.order) for a in function_atoms(e)})
    decls = [(de, s) for de, s in assumptions.items()]
    for _ in range(max_tries):
        b = Bindings(
            {n: _random_fraction(rng) for n in names},
            {a: _random_fraction(rng) for a in atoms},
        )
        ok = True
        for de, s in decls:
            if free_symbols(de) - set(names) or {
                (fa.name, fa.order) for fa in function_atoms(de)
            } - set(atoms):
                continue  # declaration about symbols not present in e
            try:
                v = eval_float(de, b)
            except EvalError:
                ok = False
                break
            if s == POSITIVE and not v > 0:
                ok = False
                break
            if s == NEGATIVE and not v < 0:
                ok = False
                break
            if s == "nonzero" and v == 0:
                ok = False
                break
        if ok:
            return b
    raise EvalError("could not sample bindings satisfying the assumptions")


def probably_equal(
    e1: Expr,
    e2: Expr,
    assumptions: AssumptionSet | None = None,
    trials: int = 20,
    seed: int = 0,
    rel_tol: float = 1e-9,
) -> bool:
    """Probabilistic equality oracle: evaluate at random rational points.

    Complements :func:`equals` for tests; a False answer means "almost surely
    unequal", a True answer "probably equal".
    """
    diff = e1 - e2
    if diff is ZERO:
        return True
    rng = random.Random(seed)
    for _ in range(trials):
        b = random_bindings(diff, assumptions, rng)
        try:
            va = eval_float(e1, b)
            vb = eval_float(e2, b)
        except EvalError:
            continue  # outside the domain (e.g. sqrt of negative); resample
        if abs(va - vb) > rel_tol * (1.0 + max(abs(va), abs(vb))):
            return False
    return True
