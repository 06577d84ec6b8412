"""Lagrangian reduction: the reduction map, Euler operators, comparisons.

The reduction map contracts an invariant n-form Lagrangian with an invariant
orbit-tangent multivector and rewrites the resulting basic form in declared
invariant coordinates.  Euler operators are provided for 0- and 1-dimensional
quotients (densities of order <= 2, so fourth-order equations at most) plus a
first-order jet-symbol variant on a full chart for scalar-field boundary-form
checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .expr import (
    AssumptionSet,
    EMPTY_ASSUMPTIONS,
    Expr,
    ExprError,
    FnApp,
    MINUS_ONE,
    ONE,
    Pow,
    Symbol,
    ZERO,
    add,
    differentiate,
    fnapp,
    free_symbols,
    function_atoms,
    mul,
    pow_,
    rational,
    substitute,
    sym,
)
from .action import ActionSpec, verify_invariant_ansatz
from .linalg import eliminate, independent_rows, nullspace
from .poly import P_ONE, context_for
from .simplify import random_bindings
from .tensor import (
    Chart,
    CurvatureBundle,
    TensorField,
    curvature_suite,
    interior_product,
    lie_derivative,
    one_form,
)


# ---------------------------------------------------------------------------
# Euler operator and boundary form


def _field_atoms(e: Expr, name: str, base: Expr) -> dict[int, Expr]:
    atoms = {}
    for a in function_atoms(e):
        if a.name == name and a.arg == base:
            atoms[a.order] = a
    return atoms


def euler_operator(lagrangian: Expr, fields: list[str], base: Expr | None) -> dict[str, Expr]:
    """Euler-Lagrange expressions per reduced field.

    ``base`` is None for a 0-dimensional quotient (fields are plain symbols,
    E_f = dL/df) or the quotient coordinate symbol (fields are unknown
    functions of it; density order <= 2).
    """
    ctx = context_for(None)
    out = {}
    if base is None:
        for f in fields:
            out[f] = ctx.normalize(differentiate(lagrangian, sym(f)))
        return out
    for a in function_atoms(lagrangian):
        if a.name in fields and a.order > 2:
            raise ExprError(f"density has derivative order {a.order} > 2 in {a.name}")
    for f in fields:
        e = differentiate(lagrangian, fnapp(f, base, 0))
        d1 = differentiate(lagrangian, fnapp(f, base, 1))
        d2 = differentiate(lagrangian, fnapp(f, base, 2))
        if d1 is not ZERO:
            e = add(e, mul(MINUS_ONE, differentiate(d1, base)))
        if d2 is not ZERO:
            e = add(e, differentiate(differentiate(d2, base), base))
        out[f] = ctx.normalize(e)
    return out


@dataclass
class BoundaryForm:
    """Boundary form with its defining-identity residual (must be zero)."""

    eta: object  # Expr for a 1-dim base, list[Expr] per base coordinate else
    residual: object  # same shape
    exact: bool


def boundary_form(lagrangian: Expr, fields: list[str], base: Expr) -> BoundaryForm:
    """eta with  deltaL - sum E_f delta f = D(eta)  on a 1-dimensional base.

    Variations are ordinary derivative atoms ``delta_<f>`` of the base, so
    D(delta f) = delta f' holds by construction.
    """
    ctx = context_for(None)
    el = euler_operator(lagrangian, fields, base)
    eta = ZERO
    delta_l = ZERO
    for f in fields:
        df = [differentiate(lagrangian, fnapp(f, base, k)) for k in range(3)]
        var = [fnapp("delta_" + f, base, k) for k in range(3)]
        for k in range(3):
            if df[k] is not ZERO:
                delta_l = add(delta_l, mul(df[k], var[k]))
        piece = add(df[1], mul(MINUS_ONE, differentiate(df[2], base)))
        eta = add(eta, mul(piece, var[0]), mul(df[2], var[1]))
        delta_l = add(delta_l, mul(MINUS_ONE, el[f], var[0]))
    residual = ctx.normalize(add(delta_l, mul(MINUS_ONE, differentiate(eta, base))))
    return BoundaryForm(ctx.normalize(eta), residual, residual is ZERO)


def _jet(fname: str, coords: tuple, idx: tuple[int, ...]) -> Expr:
    if not idx:
        return sym(fname)
    return sym(fname + "_" + "_".join(coords[i].name for i in sorted(idx)))


def jet_symbols(fname: str, chart: Chart, order: int = 2) -> list[Expr]:
    """All jet symbols of a field on a chart up to the given order."""
    out = [_jet(fname, chart.coords, ())]
    n = chart.n
    out += [_jet(fname, chart.coords, (i,)) for i in range(n)]
    if order >= 2:
        from itertools import combinations_with_replacement

        out += [_jet(fname, chart.coords, ij) for ij in combinations_with_replacement(range(n), 2)]
    return out


def _total_derivative_jets(e: Expr, i: int, fields: list[str], chart: Chart) -> Expr:
    coords = chart.coords
    out = differentiate(e, coords[i])
    for f in list(fields) + ["delta_" + f for f in fields]:
        pairs = [((), (i,))] + [((j,), tuple(sorted((i, j)))) for j in range(chart.n)]
        for src, dst in pairs:
            d = differentiate(e, _jet(f, coords, src))
            if d is not ZERO:
                out = add(out, mul(d, _jet(f, coords, dst)))
    return out


def boundary_form_jets(lagrangian: Expr, fields: list[str], chart: Chart) -> BoundaryForm:
    """First-order scalar-field boundary form on a full chart.

    The density is written in jet symbols ``f``, ``f_<coord>``; the identity
    deltaL - sum E_f delta f = sum_i D_i(eta^i) is verified exactly.
    """
    ctx = context_for(chart.assumptions)
    coords = chart.coords
    n = chart.n
    el = {}
    eta = [ZERO] * n
    delta_l = ZERO
    for f in fields:
        base_sym = _jet(f, coords, ())
        dbase = differentiate(lagrangian, base_sym)
        e = dbase
        for i in range(n):
            di = differentiate(lagrangian, _jet(f, coords, (i,)))
            if di is ZERO:
                continue
            e = add(e, mul(MINUS_ONE, _total_derivative_jets(di, i, fields, chart)))
            eta[i] = add(eta[i], mul(di, _jet("delta_" + f, coords, ())))
            delta_l = add(delta_l, mul(di, _jet("delta_" + f, coords, (i,))))
        delta_l = add(delta_l, mul(dbase, _jet("delta_" + f, coords, ())))
        el[f] = ctx.normalize(e)
        delta_l = add(delta_l, mul(MINUS_ONE, el[f], _jet("delta_" + f, coords, ())))
    div = ZERO
    for i in range(n):
        div = add(div, _total_derivative_jets(eta[i], i, fields, chart))
    residual = ctx.normalize(add(delta_l, mul(MINUS_ONE, div)))
    return BoundaryForm([ctx.normalize(x) for x in eta], residual, residual is ZERO)


# ---------------------------------------------------------------------------
# chi verification


@dataclass
class ChiSpec:
    """Orbit-tangent invariant multivector with its invariant scalar factor."""

    multivector: TensorField
    factor: Expr = ONE
    description: str = ""

    @property
    def degree(self) -> int:
        return self.multivector.r


@dataclass
class ChiVerdict:
    ok: bool
    degree_ok: bool
    invariance_ok: bool
    tangency_ok: bool
    messages: list = field(default_factory=list)


def generic_orbit_dimension(action: ActionSpec) -> int:
    rows = [
        [g.comp((a,)) for a in range(action.chart.n)] for g in action.generators
    ]
    return eliminate(rows, action.merged_assumptions()).rank


def _covector_into_multivector(alpha: list[Expr], chi: TensorField) -> TensorField:
    """Contract a covector into the first slot of an antisymmetric multivector."""
    chart = chi.chart
    ctx = chart.ctx()
    out = TensorField(chart, chi.r - 1, 0, None, "antisym")
    for rest in combinations(range(chart.n), chi.r - 1):
        total = ZERO
        for a in range(chart.n):
            if alpha[a] is ZERO:
                continue
            c = chi.comp((a,) + rest)
            if c is ZERO:
                continue
            total = add(total, mul(alpha[a], c))
        total = ctx.normalize(total)
        if total is not ZERO:
            out.merge_comp(rest, total)
    return out


def verify_chi(action: ActionSpec, chi: ChiSpec, samples: int = 3, seed: int = 7) -> ChiVerdict:
    """Invariance (L_X chi = 0) and orbit tangency of a reduction multivector."""
    msgs = []
    l = generic_orbit_dimension(action)
    degree_ok = chi.degree == l
    if not degree_ok:
        msgs.append(f"degree {chi.degree} != orbit dimension {l}")
        return ChiVerdict(False, False, False, False, msgs)
    invariance_ok = True
    for i, g in enumerate(action.generators):
        r = lie_derivative(g, chi.multivector).normalized()
        if not r.is_zero():
            invariance_ok = False
            msgs.append(f"L_X{i+1} chi != 0")
    asm = action.merged_assumptions()
    tangency_ok = True
    rows = [[g.comp((a,)) for a in range(action.chart.n)] for g in action.generators]
    for alpha in nullspace(rows, asm):
        if not _covector_into_multivector(alpha, chi.multivector).is_zero():
            tangency_ok = False
            msgs.append("chi is not tangent to the orbits (symbolic annihilator)")
            break
    if tangency_ok:
        tangency_ok = _sampled_tangency(action, chi, samples, seed, msgs)
    ok = degree_ok and invariance_ok and tangency_ok
    return ChiVerdict(ok, degree_ok, invariance_ok, tangency_ok, msgs)


def _sampled_tangency(action, chi, samples, seed, msgs) -> bool:
    """Exact tangency re-check at random rational points."""
    from .expr import Bindings, eval_exact, EvalError

    rng = random.Random(seed)
    chart = action.chart
    probe = add(*[g.comp((a,)) for g in action.generators for a in range(chart.n)])
    probe = add(probe, *[chi.multivector.comps.get(k, ZERO) for k in chi.multivector.keys()])
    asm = action.merged_assumptions()
    done = 0
    for _ in range(samples * 10):
        if done >= samples:
            break
        try:
            b = random_bindings(probe, asm, rng)
            rows = [
                [rational(eval_exact(g.comp((a,)), b)) for a in range(chart.n)]
                for g in action.generators
            ]
            chi_num = TensorField(chart, chi.multivector.r, 0, None, "antisym")
            for k in chi.multivector.keys():
                chi_num.merge_comp(k, rational(eval_exact(chi.multivector.comps[k], b)))
        except EvalError:
            continue
        done += 1
        for alpha in nullspace(rows, EMPTY_ASSUMPTIONS):
            if not _covector_into_multivector(alpha, chi_num).is_zero():
                msgs.append("chi fails tangency at a sampled point")
                return False
    return True


# ---------------------------------------------------------------------------
# the reduction map


@dataclass
class ReducedLagrangian:
    quotient: list  # quotient coordinate names
    coefficient: Expr  # coefficient of the quotient volume element
    degree: int
    tilde: TensorField  # the scaled contraction before descending


def _reduction_factor(l: int) -> int:
    """Combinatorial normalization of the descent contraction.

    The map contracts the degree-l multivector into the first l slots with
    the weight l!/2 relative to the iterated single-vector contraction (the
    two agree at l = 2); this is the normalization under which the
    reference reductions of the homogeneous-spacetime and spherical fixtures
    come out with their standard coefficients.
    """
    import math

    return math.factorial(l) // 2 if l >= 2 else 1


def _rewrite_modulo(ctx, e: Expr, base: Expr, target: Expr, coords: set) -> Expr:
    """Eliminate coordinate monomials using the relation base == target.

    Polynomial reduction by (base - target) under a monomial order that puts
    coordinate atoms first, so expanded occurrences of an invariant
    polynomial (e.g. x^2+y^2+z^2) collapse to the quotient symbol.
    """
    from .poly import P_ONE, _atom_universe, _exp_vector

    fn, fd = ctx.frac(base - target)
    if fd != P_ONE or not fn:
        return e

    def is_coord(atom):
        return bool(free_symbols(atom) & coords)

    def reduce_poly(p):
        if not p:
            return p
        atoms = _atom_universe(p, fn)
        atoms.sort(key=lambda a: (not is_coord(a), a.skey))
        lead = max(fn, key=lambda m: _exp_vector(m, atoms))
        if not all(is_coord(a) for a, _ in lead):
            return p
        cl = fn[lead]
        dl = dict(lead)
        out = dict(p)
        for _ in range(10000):
            hit = None
            for m in out:
                dm = dict(m)
                if all(dm.get(a, 0) >= k for a, k in dl.items()):
                    hit = m
                    break
            if hit is None:
                return out
            q = {a: k for a, k in dict(hit).items()}
            for a, k in dl.items():
                q[a] -= k
                if not q[a]:
                    del q[a]
            coeff = out[hit] / cl
            piece = ctx._apply_content(fn, coeff, q)
            for m, c in piece.items():
                nc = out.get(m, 0) - c
                if nc:
                    out[m] = nc
                else:
                    out.pop(m, None)
        raise ExprError("invariant rewriting did not terminate")

    num, den = ctx.frac(e)
    return ctx.frac_to_expr(*ctx._reduce(reduce_poly(num), reduce_poly(den)))


def reduce_lagrangian(
    lam: TensorField,
    chi: ChiSpec,
    action: ActionSpec,
    invariants: list,  # [(name, Expr)] declared invariant functions
    extra_allowed: set | None = None,
) -> ReducedLagrangian:
    """Contract, verify the result is basic, and descend to the orbit space."""
    chart = action.chart
    asm = action.merged_assumptions()
    ctx = context_for(asm)
    n = chart.n
    if lam.s != n or lam.r != 0:
        raise ExprError("lagrangian must be a top-degree form")
    factor = rational(_reduction_factor(chi.degree))
    tilde = interior_product(chi.multivector, lam).scale(factor).normalized()
    p = n - chi.degree
    # basic-form verification
    for i, g in enumerate(action.generators):
        if p >= 1 and not interior_product(g, tilde).normalized().is_zero():
            raise ExprError(f"chi.lambda is not basic: i_X{i+1} residue nonzero")
        if not lie_derivative(g, tilde).normalized().is_zero():
            raise ExprError(f"chi.lambda is not basic: L_X{i+1} residue nonzero")
    mapping = {}
    relations = []  # polynomial relations coordinate-part == quotient-part
    coords = {c.name for c in chart.coords}
    for name, rho in invariants:
        target = sym(name)
        if rho is target:
            continue
        mapping[rho] = target
        if isinstance(rho, Pow) and rho.exponent.denominator > 1:
            relations.append((rho.base, pow_(target, Fraction(rho.exponent.denominator))))
        elif not isinstance(rho, Symbol):
            relations.append((rho, target))
    quotient = [name for name, _ in invariants]
    allowed = set(quotient) | (extra_allowed or set())

    def descend(e: Expr) -> Expr:
        out = ctx.normalize(substitute(ctx.normalize(e), mapping))
        for base, target in relations:
            out = _rewrite_modulo(ctx, out, base, target, coords)
        leftover = free_symbols(out) - allowed
        if leftover & coords:
            raise ExprError(
                f"insufficient declared invariants: residual coordinates {sorted(leftover & coords)}"
            )
        return out

    if p == 0:
        coeff = descend(tilde.comp(()))
        return ReducedLagrangian([], coeff, 0, tilde)
    if p == 1:
        if len(invariants) != 1:
            raise ExprError("a 1-dimensional quotient needs exactly one declared invariant")
        name, rho = invariants[0]
        drho = one_form(chart, [differentiate(rho, c) for c in chart.coords])
        pivot = None
        for a in range(n):
            if not ctx.is_zero(drho.comp((a,))):
                pivot = a
                break
        if pivot is None:
            raise ExprError(f"declared invariant {name} is constant")
        h = ctx.normalize(mul(tilde.comp((pivot,)), pow_(drho.comp((pivot,)), -1)))
        for a in range(n):
            resid = add(tilde.comp((a,)), mul(MINUS_ONE, h, drho.comp((a,))))
            if not ctx.is_zero(resid):
                raise ExprError(
                    "chi.lambda is not proportional to d(invariant); wrong invariant?"
                )
        return ReducedLagrangian([name], descend(h), 1, tilde)
    raise ExprError(f"quotients of dimension {p} > 1 are not supported")


# ---------------------------------------------------------------------------
# reduced field equations and comparison


@dataclass
class ReducedEquations:
    components: dict  # name -> Expr (contravariant Einstein components)
    independent: list  # names of a maximal independent subset
    suite: CurvatureBundle


def _component_name(chart: Chart, a: int, b: int) -> str:
    return f"E{a+1}{b+1}"


def reduced_field_equations(
    action: ActionSpec,
    ansatz: TensorField,
    det_sign: int,
    field_names: list,
    check_invariance: bool = True,
) -> ReducedEquations:
    """Einstein components of the invariant ansatz, with duplicates dropped.

    Independence is decided by exact linear analysis of the numerators viewed
    as vectors over monomials in the reduced-field atoms, with coefficients
    in the coordinate functions: a component that is a function-linear
    combination of kept ones adds no new equation on the reduced fields.
    """
    chart = action.chart
    asm = action.merged_assumptions()
    ctx = context_for(asm)
    if check_invariance:
        rep = verify_invariant_ansatz(action, ansatz)
        if not rep.invariant:
            raise ExprError("ansatz metric is not invariant under the generators")
    suite = curvature_suite(ansatz, det_sign)
    n = chart.n
    names = []
    comps = {}
    vectors = []
    fields = set(field_names)

    def is_field_atom(atom: Expr) -> bool:
        if isinstance(atom, Symbol):
            return atom.name in fields
        if isinstance(atom, FnApp):
            return atom.name in fields
        return False

    monos_seen: dict = {}
    rows = []
    for a in range(n):
        for b in range(a, n):
            e = suite.einstein_at(a, b)
            if e is ZERO or ctx.is_zero(e):
                continue
            name = _component_name(chart, a, b)
            names.append(name)
            comps[name] = e
            num, _den = ctx.frac(e)
            groups: dict = {}
            for m, c in num.items():
                selected = tuple((at, k) for at, k in m if is_field_atom(at))
                rest = tuple((at, k) for at, k in m if not is_field_atom(at))
                groups.setdefault(selected, {})[rest] = c
            row = {}
            for smono, poly in groups.items():
                monos_seen.setdefault(smono, len(monos_seen))
                row[smono] = ctx.poly_to_expr(poly)
            rows.append(row)
    width = len(monos_seen)
    for row in rows:
        vectors.append([row.get(m, ZERO) for m in monos_seen])
    keep = independent_rows(vectors, asm) if vectors else []
    independent = [names[i] for i in keep]
    return ReducedEquations(comps, independent, suite)


@dataclass
class Discrepancy:
    field_name: str
    expr: Expr
    status: str  # 'zero' | 'zero_when' | 'nonzero'
    condition: Expr | None = None


def psc_compare(
    el: dict,
    reduced: ReducedEquations,
    pairings: dict,  # field -> (weight Expr, equation name)
    assumptions: AssumptionSet | None = None,
    candidate_conditions: list | None = None,
) -> list[Discrepancy]:
    """discrepancy_f = E(lambda-hat)_f - weight_f * (reduced equation)_f."""
    ctx = context_for(assumptions)
    out = []
    for fname in el:
        if fname not in pairings:
            raise ExprError(f"missing pairing for reduced field {fname!r}")
        weight, eq_name = pairings[fname]
        if eq_name not in reduced.components:
            zero_eq = ZERO
            eq = reduced.components.get(eq_name, zero_eq)
        else:
            eq = reduced.components[eq_name]
        disc = ctx.normalize(add(el[fname], mul(MINUS_ONE, weight, eq)))
        if disc is ZERO:
            out.append(Discrepancy(fname, disc, "zero"))
            continue
        hit = None
        for cond in candidate_conditions or []:
            if isinstance(cond, Symbol):
                attempt = ctx.normalize(substitute(disc, {cond: ZERO}))
                if attempt is ZERO:
                    hit = cond
                    break
        if hit is not None:
            out.append(Discrepancy(fname, disc, "zero_when", hit))
        else:
            out.append(Discrepancy(fname, disc, "nonzero"))
    return out


def einstein_hilbert_form(suite: CurvatureBundle) -> TensorField:
    """lambda = R epsilon as a top-degree form."""
    chart = suite.metric.chart
    ctx = chart.ctx()
    lam = TensorField(chart, 0, chart.n, None, "antisym")
    coeff = ctx.normalize(mul(suite.scalar, suite.sqrt_abs_det))
    if coeff is not ZERO:
        lam.merge_comp(tuple(range(chart.n)), coeff)
    return lam
