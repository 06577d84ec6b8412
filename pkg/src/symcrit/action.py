"""Group-action analysis at a point: orbits, isotropy, invariant fibers.

The vertical space model is the metric bundle: symmetric (0,2) tensors at a
point, with the isotropy acting through the linearizations A(V)^a_b =
d_b V^a of the generators that vanish there.  V_p is the invariant subspace,
V_p* the invariant symmetric (2,0) tensors, V_p0 the annihilator of V_p
under full contraction; the local obstruction test is V_p* ∩ V_p0 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement

from .expr import (
    AssumptionSet,
    EMPTY_ASSUMPTIONS,
    Expr,
    ExprError,
    MINUS_ONE,
    ONE,
    ZERO,
    add,
    differentiate,
    fnapp,
    mul,
    substitute,
    sym,
)
from .liealg import LieAlgebra, Subalgebra, lie_algebra_from_fields
from .linalg import eliminate, independent_rows, intersect_spans, nullspace
from .poly import context_for
from .tensor import Chart, TensorField, lie_derivative, vector_field


class PointSpec:
    """A chart point with exact-rational or opaque-atom coordinates.

    ``atoms`` declares frozen function values at the point, e.g.
    ``P0 -> (P, 0)`` and ``P0p -> (P, 1)`` stand for P(u0) and P'(u0) when u0
    is the value of the coordinate that P is applied to.
    """

    def __init__(
        self,
        chart: Chart,
        values: dict,
        atoms: dict | None = None,
        assumptions: AssumptionSet | None = None,
    ):
        self.chart = chart
        self.values: dict[str, Expr] = {}
        for c in chart.coords:
            if c.name not in values:
                raise ExprError(f"point is missing a value for {c.name}")
            self.values[c.name] = values[c.name]
        self.assumptions = assumptions or EMPTY_ASSUMPTIONS
        self._subs: dict[Expr, Expr] = {}
        for c in chart.coords:
            self._subs[c] = self.values[c.name]
        self.atoms = dict(atoms or {})
        for atom_name, (fn_name, order) in self.atoms.items():
            target = sym(atom_name)
            for c in chart.coords:
                self._subs[fnapp(fn_name, c, order)] = target
                self._subs[fnapp(fn_name, self.values[c.name], order)] = target

    def apply(self, e: Expr) -> Expr:
        out = substitute(e, self._subs)
        from .expr import function_atoms

        left = function_atoms(out)
        if left:
            raise ExprError(
                f"no atom declared for function value(s) {sorted(a.skey for a in left)} at the point"
            )
        return out


class ActionSpec:
    """A group action given by generator vector fields on a chart."""

    def __init__(
        self,
        chart: Chart,
        generators: list[TensorField],
        assumptions: AssumptionSet | None = None,
        points: dict | None = None,
    ):
        self.chart = chart
        self.generators = list(generators)
        self.assumptions = assumptions or chart.assumptions
        self.points = dict(points or {})
        self._algebra: LieAlgebra | None = None

    @property
    def m(self) -> int:
        return len(self.generators)

    def algebra(self) -> LieAlgebra:
        """Abstract Lie algebra of the generators (checks closure)."""
        if self._algebra is None:
            self._algebra = lie_algebra_from_fields(
                self.generators, self.chart, self.assumptions
            )
        return self._algebra

    def merged_assumptions(self, point: PointSpec | None = None) -> AssumptionSet:
        out = self.chart.assumptions.merged(self.assumptions)
        if point is not None:
            out = out.merged(point.assumptions)
        return out


@dataclass
class OrbitDimension:
    dim: int
    conditions: list
    conditional: bool


def orbit_dimension(action: ActionSpec, point: PointSpec) -> OrbitDimension:
    """Rank of the generator evaluation matrix at the point."""
    asm = action.merged_assumptions(point)
    rows = [
        [point.apply(g.comp((a,))) for a in range(action.chart.n)]
        for g in action.generators
    ]
    ech = eliminate(rows, asm)
    return OrbitDimension(ech.rank, ech.conditions, not ech.is_generic)


@dataclass
class IsotropyData:
    basis: list  # coefficient vectors over the generators
    linearizations: list  # n x n Expr matrices A^a_b = d_b V^a at the point
    conditions: list

    @property
    def dim(self) -> int:
        return len(self.basis)


def isotropy_subalgebra(action: ActionSpec, point: PointSpec) -> IsotropyData:
    """Kernel of generator evaluation, with linearizations, exactly solved."""
    asm = action.merged_assumptions(point)
    ctx = context_for(asm)
    n = action.chart.n
    m = action.m
    matrix = [
        [point.apply(action.generators[i].comp((a,))) for i in range(m)]
        for a in range(n)
    ]
    basis = nullspace(matrix, asm)
    ech = eliminate(matrix, asm)
    lins = []
    for coeffs in basis:
        comps = []
        for a in range(n):
            total = ZERO
            for i in range(m):
                if coeffs[i] is ZERO:
                    continue
                total = add(total, mul(coeffs[i], action.generators[i].comp((a,))))
            comps.append(ctx.normalize(total))
        # verify the combination vanishes at the point
        for a in range(n):
            if not ctx.is_zero(point.apply(comps[a])):
                raise ExprError("isotropy combination does not vanish at the point")
        lin = [
            [
                ctx.normalize(point.apply(differentiate(comps[a], action.chart.coords[b])))
                for b in range(n)
            ]
            for a in range(n)
        ]
        lins.append(lin)
    data = IsotropyData(basis, lins, ech.conditions)
    _check_linearization_brackets(action, point, data)
    return data


def _mat_mul(ctx, A, B):
    n = len(A)
    return [
        [
            ctx.normalize(add(*[mul(A[a][c], B[c][b]) for c in range(n)]))
            for b in range(n)
        ]
        for a in range(n)
    ]


def _check_linearization_brackets(action: ActionSpec, point: PointSpec, data: IsotropyData):
    """Linearizing [V, W] must give -[A(V), A(W)] for vanishing fields."""
    asm = action.merged_assumptions(point)
    ctx = context_for(asm)
    n = action.chart.n
    fields = []
    for coeffs in data.basis:
        comps = []
        for a in range(n):
            total = ZERO
            for i, c in enumerate(coeffs):
                if c is not ZERO:
                    total = add(total, mul(c, action.generators[i].comp((a,))))
            comps.append(ctx.normalize(total))
        fields.append(vector_field(action.chart, comps))
    from .tensor import lie_bracket

    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            br = lie_bracket(fields[i], fields[j])
            lin_br = [
                [
                    ctx.normalize(
                        point.apply(differentiate(br.comp((a,)), action.chart.coords[b]))
                    )
                    for b in range(n)
                ]
                for a in range(n)
            ]
            ab = _mat_mul(ctx, data.linearizations[i], data.linearizations[j])
            ba = _mat_mul(ctx, data.linearizations[j], data.linearizations[i])
            for a in range(n):
                for b in range(n):
                    want = add(ba[a][b], mul(MINUS_ONE, ab[a][b]))
                    if not ctx.is_zero(add(lin_br[a][b], mul(MINUS_ONE, want))):
                        raise ExprError(
                            "isotropy linearizations do not represent the bracket"
                        )


# ---------------------------------------------------------------------------
# invariant fibers over the metric bundle


def _sym_pairs(n: int):
    return list(combinations_with_replacement(range(n), 2))


def _sym_get(mat_vec, pairs_index, i, j):
    return mat_vec[pairs_index[(min(i, j), max(i, j))]]


def _induced_covariant_rows(lin, n, pairs, pairs_index, ctx):
    """Rows of Q -> (A.Q)_{ab} = -A^c_a Q_{cb} - A^c_b Q_{ac} over S2 coords."""
    rows = []
    for a, b in pairs:
        row = [ZERO] * len(pairs)
        for c in range(n):
            if lin[c][a] is not ZERO:
                k = pairs_index[(min(c, b), max(c, b))]
                row[k] = add(row[k], mul(MINUS_ONE, lin[c][a]))
            if lin[c][b] is not ZERO:
                k = pairs_index[(min(a, c), max(a, c))]
                row[k] = add(row[k], mul(MINUS_ONE, lin[c][b]))
        rows.append([ctx.normalize(e) for e in row])
    return rows


def _induced_contravariant_rows(lin, n, pairs, pairs_index, ctx):
    """Rows of W -> (A.W)^{ab} = A^a_c W^{cb} + A^b_c W^{ac} over S2 coords."""
    rows = []
    for a, b in pairs:
        row = [ZERO] * len(pairs)
        for c in range(n):
            if lin[a][c] is not ZERO:
                k = pairs_index[(min(c, b), max(c, b))]
                row[k] = add(row[k], lin[a][c])
            if lin[b][c] is not ZERO:
                k = pairs_index[(min(a, c), max(a, c))]
                row[k] = add(row[k], lin[b][c])
        rows.append([ctx.normalize(e) for e in row])
    return rows


@dataclass
class FiberBasis:
    """Bases over S^2 coordinates (ordered index pairs) at the point."""

    pairs: list
    invariant: list  # V_p, covariant
    invariant_dual: list  # V_p*, contravariant
    annihilator: list  # V_p^0, contravariant
    intersection: list  # V_p* ∩ V_p^0
    verdict: str  # pass | fail | conditional
    conditions: list = field(default_factory=list)

    @property
    def passes(self) -> bool:
        return self.verdict == "pass"


def invariant_metric_fiber(action: ActionSpec, point: PointSpec) -> list:
    """Basis of V_p: isotropy-invariant symmetric (0,2) tensors at the point."""
    return condition2_check(action, point).invariant


def _fiber_spaces(ctx, asm, n, pairs, pairs_index, linearizations, subs=None):
    """(V_p, V_p*, V_p0, intersection, conditions) from linearizations.

    ``subs`` optionally substitutes symbols first (used to re-check pivots)."""
    dim_s2 = len(pairs)
    cov_rows, con_rows = [], []
    for lin in linearizations:
        if subs:
            lin = [[ctx.normalize(substitute(e, subs)) for e in row] for row in lin]
        cov_rows += _induced_covariant_rows(lin, n, pairs, pairs_index, ctx)
        con_rows += _induced_contravariant_rows(lin, n, pairs, pairs_index, ctx)
    conditions = []
    if cov_rows:
        v_p = nullspace(cov_rows, ctx.assumptions)
        conditions += eliminate(cov_rows, ctx.assumptions).conditions
    else:
        v_p = [[ONE if i == j else ZERO for i in range(dim_s2)] for j in range(dim_s2)]
    if con_rows:
        v_p_star = nullspace(con_rows, ctx.assumptions)
        conditions += eliminate(con_rows, ctx.assumptions).conditions
    else:
        v_p_star = [[ONE if i == j else ZERO for i in range(dim_s2)] for j in range(dim_s2)]
    # annihilator of V_p under full contraction <W, Q> = W^{ab} Q_{ab}
    if v_p:
        ann_rows = []
        for q in v_p:
            row = []
            for k, (i, j) in enumerate(pairs):
                w = q[k]
                row.append(w if i == j else mul(2, w))
            ann_rows.append(row)
        v_p0 = nullspace(ann_rows, ctx.assumptions)
    else:
        v_p0 = [[ONE if i == j else ZERO for i in range(dim_s2)] for j in range(dim_s2)]
    inter = intersect_spans(v_p_star, v_p0, ctx.assumptions) if v_p_star and v_p0 else []
    return v_p, v_p_star, v_p0, inter, conditions


def condition2_check(action: ActionSpec, point: PointSpec) -> FiberBasis:
    asm = action.merged_assumptions(point)
    ctx = context_for(asm)
    n = action.chart.n
    pairs = _sym_pairs(n)
    pairs_index = {p: k for k, p in enumerate(pairs)}
    iso = isotropy_subalgebra(action, point)

    v_p, v_p_star, v_p0, inter, fiber_conds = _fiber_spaces(
        ctx, asm, n, pairs, pairs_index, iso.linearizations
    )
    dims = (len(v_p), len(v_p_star), len(v_p0), len(inter))

    # re-check bare-symbol pivot conditions from scratch at their root;
    # drop the ones that leave every dimension unchanged (pivot-choice noise)
    conditions = list(iso.conditions)
    seen = {c.skey for c in conditions}
    for cond in fiber_conds:
        if cond.skey in seen:
            continue
        from .expr import Symbol, ZERO as _Z

        if isinstance(cond, Symbol):
            try:
                redone = _fiber_spaces(
                    ctx, asm, n, pairs, pairs_index, iso.linearizations, {cond: _Z}
                )
            except (ExprError, ZeroDivisionError):
                redone = None
            if redone is not None and (
                len(redone[0]),
                len(redone[1]),
                len(redone[2]),
                len(redone[3]),
            ) == dims:
                continue
        seen.add(cond.skey)
        conditions.append(cond)

    verdict = "pass" if not inter else "fail"
    if conditions:
        verdict = "conditional-" + verdict
    return FiberBasis(
        pairs=pairs,
        invariant=v_p,
        invariant_dual=v_p_star,
        annihilator=v_p0,
        intersection=inter,
        verdict=verdict,
        conditions=conditions,
    )


def fiber_element_to_tensor(chart: Chart, pairs, vec, covariant: bool = True) -> TensorField:
    """A constant symmetric tensor field from S^2 coordinates."""
    t = TensorField(chart, 0 if covariant else 2, 2 if covariant else 0, None, "sym")
    for k, (i, j) in enumerate(pairs):
        if vec[k] is not ZERO:
            t.merge_comp((i, j), vec[k])
    return t


@dataclass
class InvarianceReport:
    residuals: list  # one TensorField per generator
    invariant: bool


def verify_invariant_ansatz(action: ActionSpec, t: TensorField) -> InvarianceReport:
    """Lie-derivative residuals L_{X_i} T, canonicalized; invariant iff all zero."""
    residuals = []
    ok = True
    for g in action.generators:
        r = lie_derivative(g, t).normalized()
        residuals.append(r)
        if not r.is_zero():
            ok = False
    return InvarianceReport(residuals, ok)
