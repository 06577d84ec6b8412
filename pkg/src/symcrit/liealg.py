"""Lie algebras, unimodularity, and relative Chevalley-Eilenberg cohomology.

Conventions: structure constants satisfy ``[e_b, e_c] = c^a_{bc} e_a`` and the
dual left-invariant coframe obeys ``d theta^a = -1/2 c^a_{bc} theta^b ^ theta^c``.
Cochains relative to a subalgebra h are the forms killed by i_X and L_X for
every X in h (L_X computed by the Cartan formula); cohomology dimensions are
computed generically over the field of rational functions in any parameters,
with pivot polynomials reported as degeneracy conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .expr import (
    AssumptionSet,
    EMPTY_ASSUMPTIONS,
    Expr,
    ExprError,
    MINUS_ONE,
    ONE,
    Rational,
    ZERO,
    add,
    free_symbols,
    function_atoms,
    mul,
    rational,
)
from .linalg import Echelon, eliminate, in_span, independent_rows, nullspace, solve
from .poly import context_for
from .tensor import Chart, TensorField, _perm_sign, lie_bracket


class LieAlgebra:
    """Finite-dimensional Lie algebra given by structure constants.

    ``constants`` maps (a, b, c) with b < c to the Expr coefficient of e_a in
    [e_b, e_c]; antisymmetry is implicit in the storage and the Jacobi
    identity is verified exactly on construction.
    """

    def __init__(
        self,
        dim: int,
        constants: dict,
        labels=None,
        assumptions: AssumptionSet | None = None,
        provenance: str = "from input",
        check: bool = True,
    ):
        self.n = dim
        self.labels = tuple(labels) if labels else tuple(f"e{i+1}" for i in range(dim))
        self.assumptions = assumptions or EMPTY_ASSUMPTIONS
        self.provenance = provenance
        ctx = context_for(self.assumptions)
        self.c: dict[tuple[int, int, int], Expr] = {}
        for (a, b, cc), e in constants.items():
            if not (0 <= a < dim and 0 <= b < dim and 0 <= cc < dim):
                raise ExprError(f"structure constant index {(a, b, cc)} out of range")
            if b == cc:
                if not ctx.is_zero(e):
                    raise ExprError("c^a_{bb} must vanish")
                continue
            key = (a, b, cc) if b < cc else (a, cc, b)
            e = ctx.normalize(e if b < cc else mul(MINUS_ONE, e))
            if e is not ZERO:
                prev = self.c.get(key)
                if prev is not None and prev is not e:
                    raise ExprError(f"conflicting values for c^{a}_{key[1:]}")
                self.c[key] = e
        if check:
            self._check_jacobi(ctx)

    def struct(self, a: int, b: int, c: int) -> Expr:
        if b == c:
            return ZERO
        if b < c:
            return self.c.get((a, b, c), ZERO)
        e = self.c.get((a, c, b), ZERO)
        return mul(MINUS_ONE, e) if e is not ZERO else ZERO

    def bracket(self, u: list[Expr], v: list[Expr]) -> list[Expr]:
        """Coefficients of [u, v] for coefficient vectors u, v."""
        ctx = context_for(self.assumptions)
        out = []
        for a in range(self.n):
            total = ZERO
            for (aa, b, c), e in self.c.items():
                if aa != a:
                    continue
                term = add(mul(u[b], v[c]), mul(MINUS_ONE, u[c], v[b]))
                total = add(total, mul(e, term))
            out.append(ctx.normalize(total))
        return out

    def _check_jacobi(self, ctx):
        n = self.n
        for a in range(n):
            for b, c, d in combinations(range(n), 3):
                total = ZERO
                for x, y, z in ((b, c, d), (c, d, b), (d, b, c)):
                    for e in range(n):
                        ce = self.struct(e, y, z)
                        if ce is ZERO:
                            continue
                        cae = self.struct(a, x, e)
                        if cae is ZERO:
                            continue
                        total = add(total, mul(cae, ce))
                if not ctx.is_zero(total):
                    raise ExprError(
                        f"Jacobi identity fails at (a,b,c,d)=({a},{b},{c},{d})"
                    )

    def __repr__(self):
        return f"LieAlgebra(n={self.n}, {len(self.c)} nonzero constants)"


class Subalgebra:
    """Subalgebra given by basis coefficient vectors over the parent basis."""

    def __init__(self, algebra: LieAlgebra, basis: list[list[Expr]], check: bool = True):
        self.algebra = algebra
        self.basis = [list(v) for v in basis]
        if check and self.basis:
            asm = algebra.assumptions
            if len(independent_rows(self.basis, asm)) != len(self.basis):
                raise ExprError("subalgebra basis is linearly dependent")
            for i in range(len(self.basis)):
                for j in range(i + 1, len(self.basis)):
                    br = algebra.bracket(self.basis[i], self.basis[j])
                    if not in_span(br, self.basis, asm):
                        raise ExprError("basis is not closed under the bracket")

    @property
    def dim(self) -> int:
        return len(self.basis)


def trivial_subalgebra(algebra: LieAlgebra) -> Subalgebra:
    return Subalgebra(algebra, [])


# ---------------------------------------------------------------------------
# forms on the algebra


@dataclass
class AlgForm:
    """Left-invariant k-form: Expr coefficients over ordered coframe monomials."""

    n: int
    degree: int
    comps: dict = field(default_factory=dict)

    def comp(self, idx: tuple[int, ...]) -> Expr:
        sign = _perm_sign(idx)
        if sign == 0:
            return ZERO
        e = self.comps.get(tuple(sorted(idx)), ZERO)
        return e if sign == 1 or e is ZERO else mul(MINUS_ONE, e)

    def merge(self, idx: tuple[int, ...], e: Expr):
        sign = _perm_sign(idx)
        if sign == 0 or e is ZERO:
            return
        key = tuple(sorted(idx))
        if sign == -1:
            e = mul(MINUS_ONE, e)
        cur = self.comps.get(key)
        e = e if cur is None else add(cur, e)
        if e is ZERO:
            self.comps.pop(key, None)
        else:
            self.comps[key] = e

    def scaled(self, c: Expr) -> "AlgForm":
        return AlgForm(self.n, self.degree, {k: mul(c, e) for k, e in self.comps.items()})

    def plus(self, other: "AlgForm") -> "AlgForm":
        out = AlgForm(self.n, self.degree, dict(self.comps))
        for k, e in other.comps.items():
            out.merge(k, e)
        return out

    def vector(self, keys) -> list[Expr]:
        return [self.comps.get(k, ZERO) for k in keys]

    def __repr__(self):
        body = ", ".join(
            "θ" + "".join(str(i + 1) for i in k) + f": {e!r}"
            for k, e in sorted(self.comps.items())
        )
        return f"AlgForm({body})"


def basis_monomials(n: int, k: int):
    return list(combinations(range(n), k))


def ce_d(L: LieAlgebra, w: AlgForm) -> AlgForm:
    """Chevalley-Eilenberg differential extended as a derivation."""
    ctx = context_for(L.assumptions)
    out = AlgForm(L.n, w.degree + 1)
    for idx, coeff in w.comps.items():
        for j, a in enumerate(idx):
            rest = idx[:j] + idx[j + 1 :]
            sign = 1 if j % 2 == 0 else -1
            # d theta^a = - sum_{b<c} c^a_{bc} theta^b ^ theta^c
            for (aa, b, c), cval in L.c.items():
                if aa != a:
                    continue
                term = mul(rational(-sign), cval, coeff)
                out.merge((b, c) + rest, term)
    out.comps = {
        k: v
        for k, v in ((k, ctx.normalize(v)) for k, v in out.comps.items())
        if v is not ZERO
    }
    return out


def alg_interior(L: LieAlgebra, v: list[Expr], w: AlgForm) -> AlgForm:
    """i_V w for a coefficient vector V over the algebra basis."""
    out = AlgForm(L.n, w.degree - 1)
    if w.degree == 0:
        raise ExprError("cannot contract a 0-form")
    ctx = context_for(L.assumptions)
    for idx, coeff in w.comps.items():
        for j, a in enumerate(idx):
            va = v[a]
            if va is ZERO:
                continue
            rest = idx[:j] + idx[j + 1 :]
            sign = 1 if j % 2 == 0 else -1
            out.merge(rest, mul(rational(sign), va, coeff))
    out.comps = {
        k: v_
        for k, v_ in ((k, ctx.normalize(v_)) for k, v_ in out.comps.items())
        if v_ is not ZERO
    }
    return out


def alg_lie(L: LieAlgebra, v: list[Expr], w: AlgForm) -> AlgForm:
    """L_V w via the Cartan identity (coefficients of V must be constants)."""
    if w.degree == 0:
        return AlgForm(L.n, 0)
    a = alg_interior(L, v, ce_d(L, w))
    b = ce_d(L, alg_interior(L, v, w)) if w.degree >= 1 else AlgForm(L.n, 1)
    return a.plus(b)


def relative_cochain_basis(L: LieAlgebra, h: Subalgebra, k: int) -> list[AlgForm]:
    """Basis of k-forms annihilated by and invariant under the subalgebra."""
    if not 0 <= k <= L.n:
        return []
    monos = basis_monomials(L.n, k)
    if k == 0:
        return [AlgForm(L.n, 0, {(): ONE})]
    # constraint rows: components of i_V w and L_V w, linear in the unknown comps
    rows: list[list[Expr]] = []
    for v in h.basis:
        for constraint in ("interior", "lie"):
            target_monos = (
                basis_monomials(L.n, k - 1) if constraint == "interior" else monos
            )
            for tm in target_monos:
                row = []
                for bm in monos:
                    unit = AlgForm(L.n, k, {bm: ONE})
                    img = (
                        alg_interior(L, v, unit)
                        if constraint == "interior"
                        else alg_lie(L, v, unit)
                    )
                    row.append(img.comps.get(tm, ZERO))
                rows.append(row)
    if not rows:
        return [AlgForm(L.n, k, {m: ONE}) for m in monos]
    kernel = nullspace(rows, L.assumptions)
    out = []
    for vec in kernel:
        f = AlgForm(L.n, k)
        for m, e in zip(monos, vec):
            if e is not ZERO:
                f.merge(m, e)
        out.append(f)
    return out


def ce_matrix(
    L: LieAlgebra, src: list[AlgForm], dst: list[AlgForm], k: int
) -> list[list[Expr]]:
    """Matrix of d: span(src) -> span(dst) in the dst basis; exact."""
    if not src:
        return []
    monos = basis_monomials(L.n, k + 1)
    dst_cols = [[f.comps.get(m, ZERO) for m in monos] for f in dst]
    cols = []
    for f in src:
        df = ce_d(L, f)
        vec = [df.comps.get(m, ZERO) for m in monos]
        if not dst:
            if any(e is not ZERO for e in vec):
                raise ExprError("differential image leaves the relative complex")
            cols.append([])
            continue
        mt = [[dst_cols[j][i] for j in range(len(dst))] for i in range(len(monos))]
        sol = solve(mt, vec, L.assumptions)
        if sol is None:
            raise ExprError("differential image leaves the relative complex")
        cols.append(sol)
    if dst and src:
        return [[cols[j][i] for j in range(len(src))] for i in range(len(dst))]
    return []


@dataclass
class CohomologyResult:
    degree: int
    cochain_basis: list
    d_below: list  # matrix on Omega^{k-1}
    d_here: list  # matrix on Omega^k
    generic_dimension: int
    degeneracy_conditions: list
    representatives: list

    @property
    def nonzero(self) -> bool:
        return self.generic_dimension > 0


def relative_cohomology(L: LieAlgebra, h: Subalgebra, k: int) -> CohomologyResult:
    asm = L.assumptions
    basis_k = relative_cochain_basis(L, h, k)
    basis_up = relative_cochain_basis(L, h, k + 1) if k < L.n else []
    basis_dn = relative_cochain_basis(L, h, k - 1) if k > 0 else []
    d_here = ce_matrix(L, basis_k, basis_up, k) if basis_k else []
    d_below = ce_matrix(L, basis_dn, basis_k, k - 1) if basis_dn else []
    conditions: list[Expr] = []
    seen = set()

    def note(conds):
        for c in conds:
            if c.skey not in seen:
                seen.add(c.skey)
                conditions.append(c)

    rank_here = 0
    if d_here and basis_k:
        ech = eliminate(d_here, asm)
        rank_here = ech.rank
        note(ech.conditions)
    rank_below = 0
    if d_below and basis_dn:
        ech = eliminate(d_below, asm)
        rank_below = ech.rank
        note(ech.conditions)
    dim = len(basis_k) - rank_here - rank_below
    # representative cocycles: kernel vectors independent modulo the image
    reps = []
    if basis_k:
        if d_here:
            kernel = nullspace(d_here, asm)
        else:
            kernel = [[ONE if i == j else ZERO for i in range(len(basis_k))] for j in range(len(basis_k))]
        image = (
            [[d_below[i][j] for i in range(len(basis_k))] for j in range(len(basis_dn))]
            if d_below
            else []
        )
        chosen = list(image)
        for vec in kernel:
            if len(reps) >= dim:
                break
            if not in_span(vec, chosen, asm):
                chosen.append(vec)
                rep = AlgForm(L.n, k)
                for f, coeff in zip(basis_k, vec):
                    rep = rep.plus(f.scaled(coeff))
                reps.append(rep)
    return CohomologyResult(
        degree=k,
        cochain_basis=basis_k,
        d_below=d_below,
        d_here=d_here,
        generic_dimension=dim,
        degeneracy_conditions=conditions,
        representatives=reps,
    )


# ---------------------------------------------------------------------------
# unimodularity


@dataclass
class UnimodularityReport:
    verdict: str  # unimodular | not_unimodular | conditional
    traces: list  # Expr per basis element

    @property
    def is_unimodular(self) -> bool:
        return self.verdict == "unimodular"


def is_unimodular(L: LieAlgebra) -> UnimodularityReport:
    """trace(ad_{e_b}) = c^a_{ba} for every b; zero traces iff unimodular."""
    ctx = context_for(L.assumptions)
    traces = []
    for b in range(L.n):
        total = ZERO
        for a in range(L.n):
            total = add(total, L.struct(a, b, a))
        traces.append(ctx.normalize(total))
    if all(t is ZERO for t in traces):
        return UnimodularityReport("unimodular", traces)
    if any(isinstance(t, Rational) and t.value != 0 for t in traces):
        return UnimodularityReport("not_unimodular", traces)
    return UnimodularityReport("conditional", traces)


# ---------------------------------------------------------------------------
# from vector fields


def lie_algebra_from_fields(
    generators: list[TensorField],
    chart: Chart,
    assumptions: AssumptionSet | None = None,
    labels=None,
) -> LieAlgebra:
    """Structure constants of a closed generator set, verified symbolically.

    Solves ``[X_b, X_c] = c^a_{bc} X_a`` by matching coefficients of
    coordinate-dependent monomials; the constants may involve parameters but
    not coordinates.  Raises when the generators are linearly dependent over
    the parameter field or do not close.
    """
    asm = assumptions or chart.assumptions
    ctx = context_for(asm)
    m = len(generators)
    coord_names = {c.name for c in chart.coords}

    def coord_atom(atom: Expr) -> bool:
        return bool(free_symbols(atom) & coord_names)

    # rows indexed by (component, coordinate-monomial); columns by generator
    split = [
        [ctx.split_coefficients(g.comp((a,)), coord_atom) for a in range(chart.n)]
        for g in generators
    ]
    row_keys = []
    seen = set()
    for gi in range(m):
        for a in range(chart.n):
            for mono in split[gi][a]:
                if (a, mono) not in seen:
                    seen.add((a, mono))
                    row_keys.append((a, mono))

    def rhs_rows(expr_by_comp):
        rows = {}
        for a, e in enumerate(expr_by_comp):
            if e is ZERO:
                continue
            for mono, coeff in ctx.split_coefficients(e, coord_atom).items():
                rows[(a, mono)] = coeff
        return rows

    matrix = []
    for a, mono in row_keys:
        matrix.append([split[gi][a].get(mono, ZERO) for gi in range(m)])
    if len(independent_rows(matrix, asm)) < m:
        raise ExprError("generators are linearly dependent")

    constants: dict[tuple[int, int, int], Expr] = {}
    for b in range(m):
        for c in range(b + 1, m):
            br = lie_bracket(generators[b], generators[c])
            extra = rhs_rows([br.comp((a,)) for a in range(chart.n)])
            unknown = set(extra) - set(row_keys)
            if unknown:
                raise ExprError(
                    "generators do not close: bracket has monomials outside the span"
                )
            rhs = [extra.get(key, ZERO) for key in row_keys]
            sol = solve(matrix, rhs, asm)
            if sol is None:
                raise ExprError("generators do not close under the bracket")
            for a, coeff in enumerate(sol):
                coeff = ctx.normalize(coeff)
                if coeff is not ZERO:
                    constants[(a, b, c)] = coeff
    return LieAlgebra(
        m,
        constants,
        labels=labels,
        assumptions=asm,
        provenance="from fields",
    )
