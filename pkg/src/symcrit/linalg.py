"""Exact linear algebra over symbolic expressions.

Matrices are lists of rows of Expr.  Internally each row is cleared to
polynomial form and eliminated fraction-free (Bareiss cross-multiplication;
the exact division by the previous pivot is attempted per row and skipped
when an atom relation blocks it, which only rescales rows and never changes
rank).  Pivots are chosen to prefer rational constants so that parameter
expressions only enter pivots when unavoidable; every parameter-dependent
pivot is reported as a degeneracy condition: a polynomial whose vanishing
may change the generic rank computed over the rational-function field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (
    AssumptionSet,
    Cos,
    Exp,
    Expr,
    MINUS_ONE,
    ONE,
    Rational,
    Sin,
    ZERO,
    mul,
    rational,
)
from .poly import Inexact, NormContext, P_ONE, Poly, _mono_sort_key, _radical_parts, context_for

Matrix = list  # list[list[Expr]]


@dataclass
class Echelon:
    """Result of a fraction-free forward elimination."""

    rows: list[list[Poly]]
    pivot_cols: list[int]
    pivot_polys: list[Poly]
    conditions: list[Expr]
    ncols: int

    @property
    def rank(self) -> int:
        return len(self.pivot_cols)

    @property
    def is_generic(self) -> bool:
        """False when some pivot depends on parameters (rank may degenerate)."""
        return not self.conditions


def _poly_conditions(ctx: NormContext, poly: Poly) -> list[Expr]:
    """Polynomials/atoms whose vanishing can kill this pivot.

    Factors that are known nonzero under the assumptions are not reported.
    """
    coeff, mono, primitive = ctx._content(poly)
    out = []
    for atom, _ in mono:
        if isinstance(atom, Exp):
            continue  # never zero
        rad = _radical_parts(atom)
        cand = ctx.normalize(rad[0]) if rad is not None else atom
        if not ctx.assumptions.is_nonzero(cand):
            out.append(cand)
    prim_expr = ctx.poly_to_expr(primitive)
    if not isinstance(prim_expr, Rational):
        # sign-normalize for deduplication
        first = min(primitive, key=_mono_sort_key)
        if primitive[first] < 0:
            prim_expr = ctx.normalize(mul(MINUS_ONE, prim_expr))
        if not ctx.assumptions.is_nonzero(prim_expr):
            out.append(prim_expr)
    return out


def _clear_row(ctx: NormContext, row: list[Expr]) -> list[Poly]:
    fracs = [ctx.frac(e) for e in row]
    dens = []
    seen = set()
    for _, d in fracs:
        key = tuple(sorted((_mono_sort_key(m), str(c)) for m, c in d.items()))
        if d != P_ONE and key not in seen:
            seen.add(key)
            dens.append(d)
    out = []
    for n, d in fracs:
        p = n
        for other in dens:
            if other != d:
                p = ctx.pmul(p, other)
        out.append(p)
    return out


def eliminate(matrix: Matrix, assumptions: AssumptionSet | None = None) -> Echelon:
    ctx = context_for(assumptions)
    rows = [_clear_row(ctx, list(r)) for r in matrix]
    ncols = len(matrix[0]) if matrix else 0
    pivot_cols: list[int] = []
    pivot_polys: list[Poly] = []
    conditions: list[Expr] = []
    seen_conditions = set()
    ech: list[list[Poly]] = []
    prev_piv: Poly | None = None
    work = [r for r in rows if any(r)]
    col = 0
    while col < ncols and work:
        # prefer a rational-constant pivot in this column
        pick = None
        for i, r in enumerate(work):
            if r[col] and list(r[col].keys()) == [()]:
                pick = i
                break
        if pick is None:
            for i, r in enumerate(work):
                if r[col]:
                    pick = i
                    break
        if pick is None:
            col += 1
            continue
        prow = work.pop(pick)
        piv = prow[col]
        pivot_cols.append(col)
        pivot_polys.append(piv)
        for cond in _poly_conditions(ctx, piv):
            if cond.skey not in seen_conditions and not isinstance(cond, Rational):
                seen_conditions.add(cond.skey)
                conditions.append(cond)
        nxt = []
        for r in work:
            if r[col]:
                new = [
                    ctx.psub(ctx.pmul(r[j], piv), ctx.pmul(prow[j], r[col]))
                    for j in range(ncols)
                ]
                if prev_piv is not None and prev_piv != P_ONE:
                    try:
                        divided = [ctx.divexact(x, prev_piv) if x else {} for x in new]
                    except Inexact:
                        pass
                    else:
                        new = divided
                r = new
            if any(r):
                nxt.append(r)
        work = nxt
        ech.append(prow)
        prev_piv = piv
        col += 1
    return Echelon(ech, pivot_cols, pivot_polys, conditions, ncols)


def rank(matrix: Matrix, assumptions: AssumptionSet | None = None) -> int:
    return eliminate(matrix, assumptions).rank


# ---------------------------------------------------------------------------
# fraction arithmetic for back substitution


class _Field:
    def __init__(self, ctx: NormContext):
        self.ctx = ctx
        self.zero = ({}, dict(P_ONE))
        self.one = (dict(P_ONE), dict(P_ONE))

    def make(self, p: Poly):
        return (p, dict(P_ONE))

    def add(self, a, b):
        ctx = self.ctx
        if a[1] == b[1]:
            return ctx._reduce(ctx.padd(a[0], b[0]), dict(a[1]))
        num = ctx.padd(ctx.pmul(a[0], b[1]), ctx.pmul(b[0], a[1]))
        return ctx._reduce(num, ctx.pmul(a[1], b[1]))

    def mul(self, a, b):
        ctx = self.ctx
        return ctx._reduce(ctx.pmul(a[0], b[0]), ctx.pmul(a[1], b[1]))

    def neg(self, a):
        return (self.ctx.pneg(a[0]), a[1])

    def div(self, a, b):
        if not b[0]:
            raise ZeroDivisionError("symbolic pivot is zero")
        ctx = self.ctx
        return ctx._reduce(ctx.pmul(a[0], b[1]), ctx.pmul(a[1], b[0]))

    def to_expr(self, a) -> Expr:
        return self.ctx.frac_to_expr(*a)


def nullspace(matrix: Matrix, assumptions: AssumptionSet | None = None) -> list[list[Expr]]:
    """Basis of the right kernel, entries normalized to cleared polynomials."""
    if not matrix:
        return []
    ctx = context_for(assumptions)
    ech = eliminate(matrix, assumptions)
    ncols = ech.ncols
    fld = _Field(ctx)
    free_cols = [c for c in range(ncols) if c not in ech.pivot_cols]
    basis = []
    for fc in free_cols:
        vec = [fld.zero] * ncols
        vec[fc] = fld.one
        for r in range(len(ech.rows) - 1, -1, -1):
            pc = ech.pivot_cols[r]
            acc = fld.zero
            for j in range(pc + 1, ncols):
                if ech.rows[r][j] and vec[j][0]:
                    acc = fld.add(acc, fld.mul(fld.make(ech.rows[r][j]), vec[j]))
            vec[pc] = fld.div(fld.neg(acc), fld.make(ech.rows[r][pc]))
        basis.append(_clear_vector(ctx, [fld.to_expr(v) for v in vec]))
    return basis


def _clear_vector(ctx: NormContext, vec: list[Expr]) -> list[Expr]:
    """Scale a vector of ratios to polynomial entries (content untouched)."""
    dens = []
    seen = set()
    for e in vec:
        _, d = ctx.frac(e)
        if d != P_ONE:
            key = tuple(sorted((_mono_sort_key(m), str(c)) for m, c in d.items()))
            if key not in seen:
                seen.add(key)
                dens.append(ctx.frac_to_expr(d, dict(P_ONE)))
    if not dens:
        return [ctx.normalize(e) for e in vec]
    scale = mul(*dens)
    return [ctx.normalize(mul(e, scale)) for e in vec]


def solve(
    matrix: Matrix, rhs: list[Expr], assumptions: AssumptionSet | None = None
) -> list[Expr] | None:
    """One exact solution of ``matrix @ x = rhs``; None when inconsistent.

    Free variables are set to zero.
    """
    ctx = context_for(assumptions)
    aug = [list(r) + [rhs[i]] for i, r in enumerate(matrix)]
    ech = eliminate(aug, assumptions)
    ncols = len(matrix[0]) if matrix else 0
    if ncols in ech.pivot_cols:
        return None  # pivot in the rhs column: inconsistent
    fld = _Field(ctx)
    vec = [fld.zero] * ncols
    for r in range(len(ech.rows) - 1, -1, -1):
        pc = ech.pivot_cols[r]
        acc = fld.neg(fld.make(ech.rows[r][ncols]))
        for j in range(pc + 1, ncols):
            if ech.rows[r][j] and vec[j][0]:
                acc = fld.add(acc, fld.mul(fld.make(ech.rows[r][j]), vec[j]))
        vec[pc] = fld.div(fld.neg(acc), fld.make(ech.rows[r][pc]))
    return [fld.to_expr(v) for v in vec]


def determinant(matrix: Matrix, assumptions: AssumptionSet | None = None) -> Expr:
    """Cofactor-expansion determinant (intended for n <= 5)."""
    ctx = context_for(assumptions)
    n = len(matrix)

    def det(rows, cols):
        if len(cols) == 1:
            return matrix[rows[0]][cols[0]]
        total = ZERO
        r = rows[0]
        rest = rows[1:]
        for i, c in enumerate(cols):
            a = matrix[r][c]
            if a is ZERO:
                continue
            sub = det(rest, cols[:i] + cols[i + 1 :])
            term = mul(a, sub)
            total = total + (term if i % 2 == 0 else mul(MINUS_ONE, term))
        return ctx.normalize(total)

    return det(tuple(range(n)), tuple(range(n)))


def adjugate_inverse(
    matrix: Matrix, assumptions: AssumptionSet | None = None
) -> tuple[Matrix, Expr]:
    """(inverse, determinant) via adjugate over determinant; exact."""
    ctx = context_for(assumptions)
    n = len(matrix)
    d = determinant(matrix, assumptions)
    if ctx.is_zero(d):
        raise ZeroDivisionError("symbolically singular matrix")
    inv = [[ZERO] * n for _ in range(n)]
    idx = tuple(range(n))
    for i in range(n):
        for j in range(n):
            rows = tuple(r for r in idx if r != j)
            cols = tuple(c for c in idx if c != i)
            minor = [[matrix[r][c] for c in cols] for r in rows]
            m = determinant(minor, assumptions) if minor else ONE
            sign = ONE if (i + j) % 2 == 0 else MINUS_ONE
            inv[i][j] = ctx.normalize(mul(sign, m, d**-1))
    return inv, d


def independent_rows(
    vectors: list[list[Expr]], assumptions: AssumptionSet | None = None
) -> list[int]:
    """Indices of a maximal independent subset, scanned in order (greedy)."""
    picked: list[int] = []
    chosen: list[list[Expr]] = []
    r = 0
    for i, v in enumerate(vectors):
        cand = chosen + [list(v)]
        nr = rank(cand, assumptions)
        if nr > r:
            picked.append(i)
            chosen = cand
            r = nr
    return picked


def in_span(
    v: list[Expr], vectors: list[list[Expr]], assumptions: AssumptionSet | None = None
) -> bool:
    if not vectors:
        ctx = context_for(assumptions)
        return all(ctx.is_zero(e) for e in v)
    cols = [[vectors[j][i] for j in range(len(vectors))] for i in range(len(v))]
    return solve(cols, list(v), assumptions) is not None


def intersect_spans(
    a: list[list[Expr]], b: list[list[Expr]], assumptions: AssumptionSet | None = None
) -> list[list[Expr]]:
    """Basis of span(a) ∩ span(b)."""
    if not a or not b:
        return []
    dim = len(a[0])
    ctx = context_for(assumptions)
    # columns are [a's | b's]; kernel vectors give sum a_i alpha_i = sum b_j beta_j
    cols = []
    for i in range(dim):
        cols.append([v[i] for v in a] + [mul(MINUS_ONE, w[i]) for w in b])
    combos = []
    for k in nullspace(cols, assumptions):
        alpha = k[: len(a)]
        vec = [
            ctx.normalize(sum((mul(alpha[j], a[j][i]) for j in range(len(a))), ZERO))
            for i in range(dim)
        ]
        if any(not ctx.is_zero(e) for e in vec):
            combos.append(vec)
    keep = independent_rows(combos, assumptions)
    return [combos[i] for i in keep]
