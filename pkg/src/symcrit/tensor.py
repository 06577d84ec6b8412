"""Chart-based symbolic tensor calculus.

Components are stored densely over canonical multi-indices: sorted tuples
for symmetric tensors, strictly increasing tuples for antisymmetric ones
(the accessor restores permutation signs).  Contravariant slots come first
in every multi-index.  The interior product follows the iterated-contraction
convention: for a decomposable ``X1 ^ ... ^ Xl`` it equals
``i_{Xl} ... i_{X1} omega``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

from .expr import (
    AssumptionSet,
    EMPTY_ASSUMPTIONS,
    Expr,
    ExprError,
    MINUS_ONE,
    ONE,
    Symbol,
    ZERO,
    add,
    differentiate,
    mul,
    pow_,
    rational,
    sym,
)
from .linalg import adjugate_inverse
from .poly import context_for


class Chart:
    """Coordinate chart: ordered coordinate symbols plus sign assumptions."""

    def __init__(self, coords, assumptions: AssumptionSet | None = None):
        self.coords = tuple(sym(c) if isinstance(c, str) else c for c in coords)
        if len(set(self.coords)) != len(self.coords):
            raise ExprError("coordinate symbols must be distinct")
        if not self.coords:
            raise ExprError("chart needs at least one coordinate")
        self.assumptions = assumptions or EMPTY_ASSUMPTIONS

    @property
    def n(self) -> int:
        return len(self.coords)

    def index(self, c) -> int:
        if isinstance(c, str):
            c = sym(c)
        return self.coords.index(c)

    def ctx(self):
        return context_for(self.assumptions)

    def __repr__(self):
        return f"Chart({', '.join(c.name for c in self.coords)})"


def _perm_sign(idx: tuple[int, ...]) -> int:
    """Sign of the permutation sorting idx; 0 on repeats."""
    if len(set(idx)) != len(idx):
        return 0
    sign = 1
    lst = list(idx)
    for i in range(len(lst)):
        m = min(range(i, len(lst)), key=lst.__getitem__)
        if m != i:
            lst[i], lst[m] = lst[m], lst[i]
            sign = -sign
    return sign


class TensorField:
    """Tensor field of valence (r, s) with declared symmetry.

    ``symmetry`` is one of ``none | sym | antisym`` and may only be declared
    for purely contravariant or purely covariant tensors.
    """

    def __init__(self, chart: Chart, r: int, s: int, comps=None, symmetry: str = "none"):
        if symmetry not in ("none", "sym", "antisym"):
            raise ExprError(f"unknown symmetry {symmetry!r}")
        if symmetry != "none" and r and s:
            raise ExprError("symmetry declarations need a pure tensor type")
        self.chart = chart
        self.r = r
        self.s = s
        self.symmetry = symmetry
        self.comps: dict[tuple[int, ...], Expr] = {}
        if comps:
            for idx, e in comps.items():
                self.merge_comp(tuple(idx), e)

    # -- storage ------------------------------------------------------------

    def _canon(self, idx: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
        if self.symmetry == "sym":
            return tuple(sorted(idx)), 1
        if self.symmetry == "antisym":
            sign = _perm_sign(idx)
            return tuple(sorted(idx)), sign
        return idx, 1

    def comp(self, idx) -> Expr:
        idx = tuple(idx)
        key, sign = self._canon(idx)
        if sign == 0:
            return ZERO
        e = self.comps.get(key, ZERO)
        if e is ZERO:
            return ZERO
        return e if sign == 1 else mul(MINUS_ONE, e)

    def merge_comp(self, idx, e: Expr):
        idx = tuple(idx)
        if len(idx) != self.r + self.s:
            raise ExprError(f"index {idx} has wrong length for valence ({self.r},{self.s})")
        if any(not 0 <= i < self.chart.n for i in idx):
            raise ExprError(f"index {idx} out of range")
        key, sign = self._canon(idx)
        if sign == 0:
            if e is not ZERO and not self.chart.ctx().is_zero(e):
                raise ExprError(f"nonzero component on repeated antisymmetric index {idx}")
            return
        if sign == -1:
            e = mul(MINUS_ONE, e)
        cur = self.comps.get(key)
        e = e if cur is None else add(cur, e)
        if e is ZERO:
            self.comps.pop(key, None)
        else:
            self.comps[key] = e

    def keys(self):
        return sorted(self.comps)

    # -- algebra --------------------------------------------------------------

    def _like(self, comps=None) -> "TensorField":
        return TensorField(self.chart, self.r, self.s, comps, self.symmetry)

    def map(self, f) -> "TensorField":
        out = self._like()
        for k, e in self.comps.items():
            v = f(e)
            if v is not ZERO:
                out.comps[k] = v
        return out

    def normalized(self) -> "TensorField":
        ctx = self.chart.ctx()
        out = self._like()
        for k, e in self.comps.items():
            v = ctx.normalize(e)
            if v is not ZERO:
                out.comps[k] = v
        return out

    def __add__(self, other: "TensorField") -> "TensorField":
        self._check_compatible(other)
        if self.symmetry == other.symmetry:
            out = TensorField(self.chart, self.r, self.s, None, self.symmetry)
            for t in (self, other):
                for k, e in t.comps.items():
                    out.merge_comp(k, e)
            return out
        out = TensorField(self.chart, self.r, self.s)
        for idx in product(range(self.chart.n), repeat=self.r + self.s):
            e = add(self.comp(idx), other.comp(idx))
            if e is not ZERO:
                out.merge_comp(idx, e)
        return out

    def __sub__(self, other: "TensorField") -> "TensorField":
        return self + other.scale(MINUS_ONE)

    def scale(self, c) -> "TensorField":
        return self.map(lambda e: mul(c, e))

    def _check_compatible(self, other):
        if self.chart is not other.chart and self.chart.coords != other.chart.coords:
            raise ExprError("chart mismatch")
        if (self.r, self.s) != (other.r, other.s):
            raise ExprError("valence mismatch")

    def is_zero(self) -> bool:
        ctx = self.chart.ctx()
        return all(ctx.is_zero(e) for e in self.comps.values())

    def tensor_product(self, other: "TensorField") -> "TensorField":
        """Plain tensor product; covariant slots of both factors trail."""
        if self.chart.coords != other.chart.coords:
            raise ExprError("chart mismatch")
        out = TensorField(self.chart, self.r + other.r, self.s + other.s)
        n = self.chart.n
        for a in product(range(n), repeat=self.r + self.s):
            ea = self.comp(a)
            if ea is ZERO:
                continue
            for b in product(range(n), repeat=other.r + other.s):
                eb = other.comp(b)
                if eb is ZERO:
                    continue
                idx = a[: self.r] + b[: other.r] + a[self.r :] + b[other.r :]
                out.merge_comp(idx, mul(ea, eb))
        return out

    def __repr__(self):
        body = ", ".join(f"{k}: {e!r}" for k, e in sorted(self.comps.items()))
        return f"TensorField(({self.r},{self.s}), {{{body}}})"


def vector_field(chart: Chart, comps) -> TensorField:
    v = TensorField(chart, 1, 0)
    for i, e in enumerate(comps):
        if e is not ZERO:
            v.merge_comp((i,), e)
    return v


def one_form(chart: Chart, comps) -> TensorField:
    w = TensorField(chart, 0, 1, symmetry="antisym")
    for i, e in enumerate(comps):
        if e is not ZERO:
            w.merge_comp((i,), e)
    return w


def coordinate_vector(chart: Chart, i: int) -> TensorField:
    return vector_field(chart, [ONE if j == i else ZERO for j in range(chart.n)])


def coordinate_form(chart: Chart, i: int) -> TensorField:
    return one_form(chart, [ONE if j == i else ZERO for j in range(chart.n)])


def metric_field(chart: Chart, comps) -> TensorField:
    return TensorField(chart, 0, 2, comps, symmetry="sym")


def sym_product(a: TensorField, b: TensorField) -> TensorField:
    """a (.) b = a (x) b + b (x) a (no 1/2)."""
    out = a.tensor_product(b) + b.tensor_product(a)
    res = TensorField(a.chart, out.r, out.s, None, "sym" if out.r == 0 or out.s == 0 else "none")
    if res.symmetry == "sym":
        n = a.chart.n
        for idx in combinations_with_repeats(n, out.r + out.s):
            e = out.comp(idx)
            if e is not ZERO:
                res.merge_comp(idx, e)
        return res
    return out


def combinations_with_repeats(n: int, k: int):
    """Non-decreasing index tuples (canonical keys of symmetric storage)."""
    from itertools import combinations_with_replacement

    return combinations_with_replacement(range(n), k)


def _as_antisym(t: TensorField) -> TensorField:
    """Degree-1 tensors are trivially antisymmetric; lift their storage."""
    if t.symmetry == "antisym":
        return t
    if t.r + t.s != 1:
        raise ExprError("wedge needs antisymmetric factors")
    out = TensorField(t.chart, t.r, t.s, None, "antisym")
    for k, e in t.comps.items():
        out.merge_comp(k, e)
    return out


def wedge(a: TensorField, b: TensorField) -> TensorField:
    """Exterior product of forms or multivectors (determinant convention)."""
    a = _as_antisym(a)
    b = _as_antisym(b)
    if (a.r and b.s) or (a.s and b.r):
        raise ExprError("cannot wedge a multivector with a form")
    k, l = a.r + a.s, b.r + b.s
    out = TensorField(a.chart, a.r + b.r, a.s + b.s, None, "antisym")
    n = a.chart.n
    for idx in combinations(range(n), k + l):
        total = ZERO
        for sub in combinations(range(k + l), k):
            ai = tuple(idx[i] for i in sub)
            bi = tuple(idx[i] for i in range(k + l) if i not in sub)
            ea = a.comps.get(ai, ZERO)
            eb = b.comps.get(bi, ZERO)
            if ea is ZERO or eb is ZERO:
                continue
            sign = _perm_sign(ai + bi)
            term = mul(ea, eb)
            total = add(total, term if sign == 1 else mul(MINUS_ONE, term))
        if total is not ZERO:
            out.merge_comp(idx, total)
    return out


def wedge_all(factors: list[TensorField]) -> TensorField:
    out = factors[0]
    for f in factors[1:]:
        out = wedge(out, f)
    return out


def lie_bracket(x: TensorField, y: TensorField) -> TensorField:
    """[X, Y]^a = X^b d_b Y^a - Y^b d_b X^a."""
    if (x.r, x.s) != (1, 0) or (y.r, y.s) != (1, 0):
        raise ExprError("lie_bracket needs vector fields")
    if x.chart.coords != y.chart.coords:
        raise ExprError("chart mismatch")
    chart = x.chart
    ctx = chart.ctx()
    comps = []
    for a in range(chart.n):
        total = ZERO
        for b in range(chart.n):
            xb = x.comp((b,))
            yb = y.comp((b,))
            if xb is not ZERO:
                total = add(total, mul(xb, differentiate(y.comp((a,)), chart.coords[b])))
            if yb is not ZERO:
                total = add(
                    total, mul(MINUS_ONE, yb, differentiate(x.comp((a,)), chart.coords[b]))
                )
        comps.append(ctx.normalize(total))
    return vector_field(chart, comps)


def exterior_derivative(w: TensorField) -> TensorField:
    if w.r != 0 or w.symmetry != "antisym":
        raise ExprError("exterior derivative needs a differential form")
    chart = w.chart
    ctx = chart.ctx()
    out = TensorField(chart, 0, w.s + 1, None, "antisym")
    for idx in combinations(range(chart.n), w.s + 1):
        total = ZERO
        for j, i in enumerate(idx):
            rest = idx[:j] + idx[j + 1 :]
            e = w.comps.get(rest, ZERO)
            if e is ZERO:
                continue
            d = differentiate(e, chart.coords[i])
            if d is ZERO:
                continue
            total = add(total, d if j % 2 == 0 else mul(MINUS_ONE, d))
        total = ctx.normalize(total)
        if total is not ZERO:
            out.merge_comp(idx, total)
    return out


def interior_product(chi: TensorField, w: TensorField) -> TensorField:
    """Contract a degree-l multivector into the first l slots of a form.

    Equals ``i_{Xl} ... i_{X1} w`` on decomposables ``chi = X1 ^ ... ^ Xl``.
    """
    if chi.s != 0 or w.r != 0:
        raise ExprError("interior product needs a multivector and a form")
    l, m = chi.r, w.s
    if l > m:
        raise ExprError("multivector degree exceeds form degree")
    chart = w.chart
    ctx = chart.ctx()
    out = TensorField(chart, 0, m - l, None, "antisym")
    if l == 1:
        for j in combinations(range(chart.n), m - 1):
            total = ZERO
            for a in range(chart.n):
                xa = chi.comp((a,))
                if xa is ZERO:
                    continue
                wc = w.comp((a,) + j)
                if wc is ZERO:
                    continue
                total = add(total, mul(xa, wc))
            total = ctx.normalize(total)
            if total is not ZERO:
                out.merge_comp(j, total)
        return out
    for j in combinations(range(chart.n), m - l):
        total = ZERO
        for i in combinations(range(chart.n), l):
            ci = chi.comps.get(i, ZERO)
            if ci is ZERO:
                continue
            wc = w.comp(i + j)
            if wc is ZERO:
                continue
            total = add(total, mul(ci, wc))
        total = ctx.normalize(total)
        if total is not ZERO:
            out.merge_comp(j, total)
    return out


def lie_derivative(x: TensorField, t: TensorField) -> TensorField:
    """Standard Lie derivative along a vector field, arbitrary valence."""
    if (x.r, x.s) != (1, 0):
        raise ExprError("lie_derivative needs a vector field")
    chart = t.chart
    ctx = chart.ctx()
    n = chart.n
    out = TensorField(chart, t.r, t.s, None, t.symmetry)
    dX = [[differentiate(x.comp((a,)), chart.coords[b]) for b in range(n)] for a in range(n)]
    if t.symmetry != "none":
        index_iter = t.keys()
        # components missing from canonical storage can still get nonzero
        # derivatives only through existing ones, so canonical keys suffice
        # for sym/antisym results; fall back to all indices when unsure.
        index_iter = list(
            combinations_with_repeats(n, t.r + t.s)
            if t.symmetry == "sym"
            else combinations(range(n), t.r + t.s)
        )
    else:
        index_iter = list(product(range(n), repeat=t.r + t.s))
    for idx in index_iter:
        total = ZERO
        e = t.comp(idx)
        for c in range(n):
            xc = x.comp((c,))
            if xc is not ZERO and e is not ZERO:
                total = add(total, mul(xc, differentiate(e, chart.coords[c])))
        for pos in range(t.r):
            a = idx[pos]
            for c in range(n):
                d = dX[a][c]
                if d is ZERO:
                    continue
                swapped = idx[:pos] + (c,) + idx[pos + 1 :]
                tc = t.comp(swapped)
                if tc is ZERO:
                    continue
                total = add(total, mul(MINUS_ONE, d, tc))
        for pos in range(t.r, t.r + t.s):
            b = idx[pos]
            for c in range(n):
                d = dX[c][b]
                if d is ZERO:
                    continue
                swapped = idx[:pos] + (c,) + idx[pos + 1 :]
                tc = t.comp(swapped)
                if tc is ZERO:
                    continue
                total = add(total, mul(d, tc))
        total = ctx.normalize(total)
        if total is not ZERO:
            out.merge_comp(idx, total)
    return out


# ---------------------------------------------------------------------------
# curvature


@dataclass
class CurvatureBundle:
    """Levi-Civita data of a metric; conventions as in the module docstring."""

    metric: TensorField
    inverse: list  # matrix of Expr
    det: Expr
    det_sign: int
    sqrt_abs_det: Expr
    christoffel: dict  # (a, b, c) b<=c -> Expr
    riemann: dict  # (a, b, c, d) c<d -> Expr
    ricci: dict  # (a, b) a<=b -> Expr
    scalar: Expr
    einstein: dict  # (a, b) a<=b -> Expr, contravariant
    volume_form: TensorField

    def christoffel_at(self, a, b, c) -> Expr:
        return self.christoffel.get((a,) + tuple(sorted((b, c))), ZERO)

    def riemann_at(self, a, b, c, d) -> Expr:
        if c == d:
            return ZERO
        if c < d:
            return self.riemann.get((a, b, c, d), ZERO)
        e = self.riemann.get((a, b, d, c), ZERO)
        return mul(MINUS_ONE, e) if e is not ZERO else ZERO

    def ricci_at(self, a, b) -> Expr:
        return self.ricci.get(tuple(sorted((a, b))), ZERO)

    def einstein_at(self, a, b) -> Expr:
        return self.einstein.get(tuple(sorted((a, b))), ZERO)


def curvature_suite(g: TensorField, det_sign: int) -> CurvatureBundle:
    """Christoffels, Riemann, Ricci, scalar, contravariant Einstein, volume.

    ``det_sign`` declares the sign of det(g) so that ``|g| = det_sign * det``
    is positive under the chart assumptions.
    """
    if (g.r, g.s) != (0, 2) or g.symmetry != "sym":
        raise ExprError("curvature_suite needs a symmetric (0,2) metric")
    if det_sign not in (1, -1):
        raise ExprError("det_sign must be +1 or -1")
    chart = g.chart
    ctx = chart.ctx()
    n = chart.n
    gm = [[g.comp((a, b)) for b in range(n)] for a in range(n)]
    ginv, det = adjugate_inverse(gm, chart.assumptions)
    sqrt_abs = ctx.normalize(pow_(mul(rational(det_sign), det), Fraction(1, 2)))

    def d(e, i):
        return differentiate(e, chart.coords[i])

    gamma: dict[tuple, Expr] = {}
    for a in range(n):
        for b in range(n):
            for c in range(b, n):
                total = ZERO
                for e_ in range(n):
                    gae = ginv[a][e_]
                    if gae is ZERO:
                        continue
                    piece = add(
                        d(gm[e_][c], b), d(gm[b][e_], c), mul(MINUS_ONE, d(gm[b][c], e_))
                    )
                    if piece is not ZERO:
                        total = add(total, mul(gae, piece))
                total = ctx.normalize(mul(rational(1, 2), total))
                if total is not ZERO:
                    gamma[(a, b, c)] = total

    def G(a, b, c):
        return gamma.get((a,) + tuple(sorted((b, c))), ZERO)

    riem: dict[tuple, Expr] = {}
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for dd in range(c + 1, n):
                    total = add(d(G(a, dd, b), c), mul(MINUS_ONE, d(G(a, c, b), dd)))
                    for e_ in range(n):
                        t1 = mul(G(a, c, e_), G(e_, dd, b))
                        t2 = mul(G(a, dd, e_), G(e_, c, b))
                        total = add(total, t1, mul(MINUS_ONE, t2))
                    total = ctx.normalize(total)
                    if total is not ZERO:
                        riem[(a, b, c, dd)] = total

    def R(a, b, c, dd):
        if c == dd:
            return ZERO
        if c < dd:
            return riem.get((a, b, c, dd), ZERO)
        e = riem.get((a, b, dd, c), ZERO)
        return mul(MINUS_ONE, e) if e is not ZERO else ZERO

    ricci: dict[tuple, Expr] = {}
    for a in range(n):
        for b in range(a, n):
            total = ZERO
            for c in range(n):
                total = add(total, R(c, a, c, b))
            total = ctx.normalize(total)
            if total is not ZERO:
                ricci[(a, b)] = total

    def Ric(a, b):
        return ricci.get(tuple(sorted((a, b))), ZERO)

    scalar = ZERO
    for a in range(n):
        for b in range(n):
            if ginv[a][b] is not ZERO:
                scalar = add(scalar, mul(ginv[a][b], Ric(a, b)))
    scalar = ctx.normalize(scalar)

    einstein: dict[tuple, Expr] = {}
    for a in range(n):
        for b in range(a, n):
            ric_up = ZERO
            for c in range(n):
                for e_ in range(n):
                    if ginv[a][c] is ZERO or ginv[b][e_] is ZERO:
                        continue
                    rc = Ric(c, e_)
                    if rc is ZERO:
                        continue
                    ric_up = add(ric_up, mul(ginv[a][c], ginv[b][e_], rc))
            total = ctx.normalize(
                add(ric_up, mul(rational(-1, 2), scalar, ginv[a][b]))
            )
            if total is not ZERO:
                einstein[(a, b)] = total

    vol = TensorField(chart, 0, n, None, "antisym")
    vol.merge_comp(tuple(range(n)), sqrt_abs)
    return CurvatureBundle(
        metric=g,
        inverse=ginv,
        det=det,
        det_sign=det_sign,
        sqrt_abs_det=sqrt_abs,
        christoffel=gamma,
        riemann=riem,
        ricci=ricci,
        scalar=scalar,
        einstein=einstein,
        volume_form=vol,
    )


def covariant_divergence_einstein(bundle: CurvatureBundle) -> list[Expr]:
    """nabla_a E^{ab} per free index b (contracted Bianchi check)."""
    chart = bundle.metric.chart
    ctx = chart.ctx()
    n = chart.n
    out = []
    for b in range(n):
        total = ZERO
        for a in range(n):
            e = bundle.einstein_at(a, b)
            if e is not ZERO:
                total = add(total, differentiate(e, chart.coords[a]))
            for c in range(n):
                t1 = mul(bundle.christoffel_at(a, a, c), bundle.einstein_at(c, b))
                t2 = mul(bundle.christoffel_at(b, a, c), bundle.einstein_at(a, c))
                total = add(total, t1, t2)
        out.append(ctx.normalize(total))
    return out
