"""Shared fixture builders and independent numeric oracles.

The oracles here deliberately avoid the package's own symbolic pipelines:
numeric curvature uses float finite differences, ranks use Fraction Gaussian
elimination written out locally, and the Chevalley-Eilenberg differential is
recomputed from its value-on-basis definition.
"""

from __future__ import annotations

import random
from fractions import Fraction

from symcrit.expr import (
    AssumptionSet,
    MINUS_ONE,
    ONE,
    ZERO,
    fnapp,
    mul,
    sym,
)
from symcrit.parse import parse
from symcrit.tensor import Chart, metric_field, vector_field


# ---------------------------------------------------------------------------
# the homogeneous-spacetime setup


def homogeneous_assumptions() -> AssumptionSet:
    return AssumptionSet(
        [
            (parse("4*c*a-b^2"), "positive"),
            (sym("d"), "positive"),
            (sym("a"), "positive"),
            (sym("c"), "positive"),
            (sym("k"), "nonzero"),
        ]
    )


def homogeneous_chart() -> Chart:
    return Chart(["x1", "x2", "x3", "x4"], homogeneous_assumptions())


def homogeneous_generators(chart: Chart):
    return [
        vector_field(chart, [ZERO, ONE, ZERO, ZERO]),
        vector_field(chart, [ZERO, ZERO, ONE, ZERO]),
        vector_field(chart, [MINUS_ONE, sym("x3"), ZERO, ZERO]),
        vector_field(chart, [parse("-x1"), ZERO, sym("x3"), ZERO]),
        vector_field(chart, [parse("s*x1"), parse("s*x2"), ZERO, ONE]),
    ]


def homogeneous_metric(chart: Chart):
    return metric_field(
        chart,
        {
            (0, 2): parse("1/2*d*exp(-s*x4)"),
            (1, 1): parse("c*exp(-2*s*x4)"),
            (1, 2): parse("c*exp(-2*s*x4)*x1"),
            (2, 2): parse("c*exp(-2*s*x4)*x1^2"),
            (1, 3): parse("1/2*b*exp(-s*x4)"),
            (2, 3): parse("1/2*b*exp(-s*x4)*x1"),
            (3, 3): sym("a"),
        },
    )


# ---------------------------------------------------------------------------
# the plane-wave setup


def planewave_assumptions() -> AssumptionSet:
    return AssumptionSet(
        [
            (parse("diff(P(u),u,1)"), "positive"),
            (parse("diff(Q(u),u,1)"), "positive"),
            (parse("b(u)"), "positive"),
        ]
    )


def planewave_chart() -> Chart:
    return Chart(["u", "v", "x", "y"], planewave_assumptions())


def planewave_generators(chart: Chart):
    return [
        vector_field(chart, [ZERO, ONE, ZERO, ZERO]),
        vector_field(chart, [ZERO, ZERO, ONE, ZERO]),
        vector_field(chart, [ZERO, ZERO, ZERO, ONE]),
        vector_field(chart, [ZERO, sym("x"), parse("P(u)"), ZERO]),
        vector_field(chart, [ZERO, sym("y"), ZERO, parse("Q(u)")]),
    ]


def planewave_metric(chart: Chart):
    return metric_field(
        chart,
        {
            (0, 0): parse("a(u)"),
            (0, 1): parse("-diff(Q(u),u,1)*diff(P(u),u,1)*b(u)"),
            (2, 2): parse("diff(Q(u),u,1)*b(u)"),
            (3, 3): parse("diff(P(u),u,1)*b(u)"),
        },
    )


# ---------------------------------------------------------------------------
# the spherical setup


def spherical_assumptions() -> AssumptionSet:
    return AssumptionSet([(parse("x^2+y^2+z^2"), "positive"), (sym("pi"), "positive")])


def spherical_chart() -> Chart:
    return Chart(["x", "y", "z"], spherical_assumptions())


def rotation_generators(chart: Chart):
    x, y, z = chart.coords
    return [
        vector_field(chart, [ZERO, mul(MINUS_ONE, z), y]),
        vector_field(chart, [z, ZERO, mul(MINUS_ONE, x)]),
        vector_field(chart, [mul(MINUS_ONE, y), x, ZERO]),
    ]


# ---------------------------------------------------------------------------
# Bianchi table (three-dimensional real Lie algebras)
#
# class A (unimodular): I, II, VI0, VII0, VIII, IX; class B: III, IV, V.
# Constants as {(a, b, c): value} for [e_b, e_c] = c^a_{bc} e_a with b < c.

BIANCHI = {
    "I": {},
    "II": {(0, 1, 2): 1},
    "III": {(0, 0, 2): 1},
    "IV": {(0, 0, 2): 1, (0, 1, 2): 1, (1, 1, 2): 1},
    "V": {(0, 0, 2): 1, (1, 1, 2): 1},
    "VI0": {(0, 0, 2): 1, (1, 1, 2): -1},
    "VII0": {(0, 1, 2): 1, (1, 0, 2): -1},
    "VIII": {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): -1},
    "IX": {(2, 0, 1): 1, (0, 1, 2): 1, (1, 2, 0): 1},
}

BIANCHI_UNIMODULAR = {"I", "II", "VI0", "VII0", "VIII", "IX"}


# ---------------------------------------------------------------------------
# numeric oracles


def frac_rank(rows: list[list[Fraction]]) -> int:
    """Plain Fraction Gaussian elimination, independent of symcrit.linalg."""
    m = [list(map(Fraction, r)) for r in rows]
    rank = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        piv = None
        for r in range(rank, len(m)):
            if m[r][c] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pr = m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                f = m[r][c] / pr[c]
                m[r] = [a - f * b for a, b in zip(m[r], pr)]
        rank += 1
    return rank


def numeric_inverse(mat):
    n = len(mat)
    a = [row[:] + [1.0 if i == j else 0.0 for j in range(n)] for i, row in enumerate(mat)]
    for i in range(n):
        p = max(range(i, n), key=lambda r: abs(a[r][i]))
        a[i], a[p] = a[p], a[i]
        piv = a[i][i]
        a[i] = [v / piv for v in a[i]]
        for r in range(n):
            if r != i and a[r][i]:
                f = a[r][i]
                a[r] = [v - f * w for v, w in zip(a[r], a[i])]
    return [row[n:] for row in a]


def numeric_christoffel(metric_fn, point, h=1e-5):
    """Gamma^a_bc by central differences of the metric; floats."""
    n = len(point)
    g0 = metric_fn(point)
    ginv = numeric_inverse(g0)
    dg = []
    for c in range(n):
        pp = list(point)
        pm = list(point)
        pp[c] += h
        pm[c] -= h
        gp = metric_fn(pp)
        gm = metric_fn(pm)
        dg.append([[(gp[i][j] - gm[i][j]) / (2 * h) for j in range(n)] for i in range(n)])
    gamma = [[[0.0] * n for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(n):
            for c in range(n):
                s = 0.0
                for e in range(n):
                    s += ginv[a][e] * (dg[b][e][c] + dg[c][b][e] - dg[e][b][c])
                gamma[a][b][c] = 0.5 * s
    return gamma


def numeric_einstein(metric_fn, point, h=1e-3):
    """Contravariant Einstein tensor by nested central differences; floats."""
    n = len(point)

    def gamma_at(p):
        return numeric_christoffel(metric_fn, p, h=1e-5)

    g0 = metric_fn(point)
    ginv = numeric_inverse(g0)
    gam = gamma_at(point)
    dgam = []
    for c in range(n):
        pp = list(point)
        pm = list(point)
        pp[c] += h
        pm[c] -= h
        gp = gamma_at(pp)
        gm = gamma_at(pm)
        dgam.append(
            [
                [[(gp[a][b][d] - gm[a][b][d]) / (2 * h) for d in range(n)] for b in range(n)]
                for a in range(n)
            ]
        )

    def riem(a, b, c, d):
        s = dgam[c][a][d][b] - dgam[d][a][c][b]
        for e in range(n):
            s += gam[a][c][e] * gam[e][d][b] - gam[a][d][e] * gam[e][c][b]
        return s

    ricci = [[sum(riem(c, i, c, j) for c in range(n)) for j in range(n)] for i in range(n)]
    scal = sum(ginv[i][j] * ricci[i][j] for i in range(n) for j in range(n))
    out = [[0.0] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            up = 0.0
            for c in range(n):
                for e in range(n):
                    up += ginv[a][c] * ginv[b][e] * ricci[c][e]
            out[a][b] = up - 0.5 * scal * ginv[a][b]
    return out


def ce_d_by_definition(constants, n, form_comps, degree):
    """CE differential from its value-on-basis-tuples definition.

    d w(e_{i0},...,e_{ik}) = sum_{p<q} (-1)^{p+q} w([e_p, e_q], rest...),
    with [e_b, e_c] = c^a_{bc} e_a read off the constants table.  Components
    are Fractions; used as an independent oracle for rational algebras.
    """
    from itertools import combinations

    def struct(a, b, c):
        if (a, b, c) in constants:
            return Fraction(constants[(a, b, c)])
        if (a, c, b) in constants:
            return -Fraction(constants[(a, c, b)])
        return Fraction(0)

    def comp(idx):
        # full antisymmetric lookup over sorted storage
        key = tuple(sorted(idx))
        if len(set(idx)) != len(idx):
            return Fraction(0)
        sign = 1
        lst = list(idx)
        for i in range(len(lst)):
            m = min(range(i, len(lst)), key=lst.__getitem__)
            if m != i:
                lst[i], lst[m] = lst[m], lst[i]
                sign = -sign
        return sign * form_comps.get(key, Fraction(0))

    out = {}
    for idx in combinations(range(n), degree + 1):
        total = Fraction(0)
        for p in range(len(idx)):
            for q in range(p + 1, len(idx)):
                rest = tuple(v for t, v in enumerate(idx) if t not in (p, q))
                for a in range(n):
                    cab = struct(a, idx[p], idx[q])
                    if cab:
                        total += (-1) ** (p + q) * cab * comp((a,) + rest)
        if total:
            out[idx] = total
    return out


def h_top_by_definition(constants, n):
    """dim H^n(g) for a rational 3-ish-dim algebra, by brute force."""
    from itertools import combinations

    top = list(combinations(range(n), n))
    below = list(combinations(range(n), n - 1))
    rows = []
    for bm in below:
        img = ce_d_by_definition(constants, n, {bm: Fraction(1)}, n - 1)
        rows.append([img.get(t, Fraction(0)) for t in top])
    rk = frac_rank(rows) if rows else 0
    return len(top) - rk
