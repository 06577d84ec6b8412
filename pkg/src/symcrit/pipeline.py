"""Pipeline orchestration: run problem stages and assemble reports."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .action import condition2_check, isotropy_subalgebra, orbit_dimension
from .expr import (
    Expr,
    ExprError,
    MINUS_ONE,
    Symbol,
    ZERO,
    differentiate,
    mul,
    rational,
    substitute,
    sym,
)
from .liealg import Subalgebra, is_unimodular, relative_cohomology
from .parse import parse, to_source
from .poly import context_for
from .problem import ProblemSpec
from .reduce import (
    einstein_hilbert_form,
    euler_operator,
    psc_compare,
    reduce_lagrangian,
    reduced_field_equations,
    verify_chi,
)
from .tensor import TensorField, curvature_suite

REPORT_VERSION = "1"


@dataclass
class Report:
    verdict: str = ""
    condition1: dict | None = None
    condition2: dict | None = None
    reduced_lagrangian: dict | None = None
    el_equations: dict | None = None
    reduced_equations: dict | None = None
    discrepancies: list | None = None
    timings: dict = field(default_factory=dict)
    version: str = REPORT_VERSION

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "condition1": self.condition1,
            "condition2": self.condition2,
            "reduced_lagrangian": self.reduced_lagrangian,
            "el_equations": self.el_equations,
            "reduced_equations": self.reduced_equations,
            "discrepancies": self.discrepancies,
            "timings": self.timings,
            "version": self.version,
        }


def _s(e: Expr) -> str:
    return to_source(e)


def _form_dict(form) -> dict:
    return {
        ",".join(str(i + 1) for i in k): _s(v) for k, v in sorted(form.comps.items())
    }


class _Timer:
    def __init__(self, report: Report):
        self.report = report

    def __call__(self, name):
        return _Stage(self.report, name)


class _Stage:
    def __init__(self, report, name):
        self.report = report
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.report.timings[self.name] = round(time.perf_counter() - self.t0, 6)


def stage_condition1(spec: ProblemSpec, report: Report) -> dict:
    """Relative Lie algebra cohomology in the orbit-dimension degree."""
    if spec.point is None:
        raise ExprError("condition (i) needs a point (isotropy is computed there)")
    algebra = spec.action.algebra()
    uni = is_unimodular(algebra)
    iso = isotropy_subalgebra(spec.action, spec.point)
    orb = orbit_dimension(spec.action, spec.point)
    degree = spec.degree if spec.degree is not None else orb.dim
    sub = Subalgebra(algebra, iso.basis)
    coh = relative_cohomology(algebra, sub, degree)
    holds = coh.generic_dimension > 0
    out = {
        "degree": degree,
        "orbit_dimension": orb.dim,
        "isotropy_dimension": iso.dim,
        "structure_constants": {
            f"[{b+1},{c+1}]->{a+1}": _s(v) for (a, b, c), v in sorted(algebra.c.items())
        },
        "unimodular": {"verdict": uni.verdict, "traces": [_s(t) for t in uni.traces]},
        "generic_dimension": coh.generic_dimension,
        "degeneracy_conditions": [_s(c) for c in coh.degeneracy_conditions],
        "representatives": [_form_dict(r) for r in coh.representatives],
        "holds": holds,
    }
    report.condition1 = out
    return out


def stage_condition2(spec: ProblemSpec, report: Report) -> dict:
    if spec.point is None:
        raise ExprError("condition (ii) needs a point")
    fb = condition2_check(spec.action, spec.point)
    pair_names = [f"{i+1},{j+1}" for i, j in fb.pairs]
    out = {
        "pairs": pair_names,
        "invariant_fiber": [[_s(e) for e in v] for v in fb.invariant],
        "invariant_dual": [[_s(e) for e in v] for v in fb.invariant_dual],
        "annihilator": [[_s(e) for e in v] for v in fb.annihilator],
        "intersection": [[_s(e) for e in v] for v in fb.intersection],
        "intersection_dimension": len(fb.intersection),
        "conditions": [_s(c) for c in fb.conditions],
        "verdict": fb.verdict,
        "holds": fb.verdict == "pass",
    }
    report.condition2 = out
    return out


def _lagrangian_form(spec: ProblemSpec):
    """(lambda form, curvature suite or None) for the declared Lagrangian."""
    if spec.lagrangian == "einstein_hilbert":
        if spec.ansatz is None:
            raise ExprError("einstein_hilbert needs a metric ansatz")
        suite = curvature_suite(spec.ansatz, spec.det_sign)
        return einstein_hilbert_form(suite), suite
    if isinstance(spec.lagrangian, dict):
        chart = spec.chart
        fname = spec.lagrangian["field"]
        fn_names = set(spec.functions) | {
            f.name for f in spec.reduced_fields if f.kind == "function"
        }
        ansatz = parse(spec.lagrangian["ansatz"], fn_names)
        inv_map = {sym(n): e for n, e in spec.invariants if e is not sym(n)}
        ansatz = substitute(ansatz, inv_map)
        density = parse(spec.lagrangian["density"], fn_names)
        mapping = {sym(fname): ansatz}
        for i, c in enumerate(chart.coords):
            mapping[sym(f"{fname}_{c.name}")] = differentiate(ansatz, c)
        comp = substitute(density, mapping)
        lam = TensorField(chart, 0, chart.n, None, "antisym")
        lam.merge_comp(tuple(range(chart.n)), comp)
        return lam, None
    raise ExprError("no lagrangian declared")


def _el_base(spec: ProblemSpec):
    args = {f.argument for f in spec.reduced_fields if f.kind == "function"}
    if not args:
        return None
    if len(args) > 1:
        raise ExprError("reduced fields must share one quotient argument")
    return sym(args.pop())


def stage_reduce(spec: ProblemSpec, report: Report) -> dict:
    if spec.chi is None:
        raise ExprError("reduction needs chi")
    cv = verify_chi(spec.action, spec.chi)
    if not cv.ok:
        raise ExprError("chi verification failed: " + "; ".join(cv.messages))
    lam, _suite = _lagrangian_form(spec)
    extra = set(spec.parameters) | {
        f.name for f in spec.reduced_fields if f.kind == "constant"
    }
    rl = reduce_lagrangian(lam, spec.chi, spec.action, spec.invariants, extra)
    base = _el_base(spec)
    el = euler_operator(rl.coefficient, spec.field_names, base)
    report.reduced_lagrangian = {
        "quotient_coordinates": rl.quotient,
        "coefficient": _s(rl.coefficient),
        "degree": rl.degree,
    }
    report.el_equations = {f: _s(e) for f, e in sorted(el.items())}
    return {"reduced": rl, "el": el}


def stage_compare(spec: ProblemSpec, report: Report, el: dict) -> list:
    if spec.ansatz is None:
        raise ExprError("compare needs a metric ansatz")
    req = reduced_field_equations(
        spec.action, spec.ansatz, spec.det_sign, spec.field_names
    )
    ctx = context_for(spec.assumptions)
    absdet = ctx.normalize(mul(rational(spec.det_sign), req.suite.det))
    pairings = {}
    for fname, (w, eq) in spec.pairings.items():
        pairings[fname] = (substitute(w, {sym("det"): absdet}), eq)
    conditions = []
    if report.condition1:
        for c in report.condition1.get("degeneracy_conditions", []):
            e = parse(c)
            if isinstance(e, Symbol):
                conditions.append(e)
    discs = psc_compare(el, req, pairings, spec.assumptions, conditions)
    report.reduced_equations = {
        "components": {k: _s(v) for k, v in sorted(req.components.items())},
        "independent": req.independent,
    }
    report.discrepancies = [
        {
            "field": d.field_name,
            "expression": _s(d.expr),
            "status": d.status,
            "condition": _s(d.condition) if d.condition is not None else None,
        }
        for d in discs
    ]
    return discs


def overall_verdict(report: Report) -> str:
    c1 = report.condition1
    c2 = report.condition2
    parts = []
    if c1 is not None and not c1["holds"]:
        msg = f"condition (i) fails: H^{c1['degree']}(G,G_x) = 0"
        if c1["degeneracy_conditions"]:
            msg += " generically (degenerate when " + " or ".join(
                f"{c} = 0" for c in c1["degeneracy_conditions"]
            ) + ")"
        parts.append(msg)
    if c2 is not None and not c2["holds"]:
        parts.append(
            f"condition (ii) fails: intersection dimension {c2['intersection_dimension']}"
        )
    nonzero = [d for d in (report.discrepancies or []) if d["status"] == "nonzero"]
    if nonzero:
        parts.append("reduction disagrees")
    if parts:
        return "; ".join(parts)
    if c1 is not None and c2 is not None:
        return "PSC holds (local test)"
    return "computed"


def run_problem(spec: ProblemSpec, command: str) -> Report:
    report = Report()
    stage = _Timer(report)
    if command in ("check-psc", "cohomology"):
        with stage("condition1"):
            stage_condition1(spec, report)
    if command in ("check-psc", "condition2"):
        with stage("condition2"):
            stage_condition2(spec, report)
    wants_reduce = command in ("reduce", "compare") or (
        command == "check-psc" and spec.chi is not None and spec.lagrangian is not None
    )
    el = None
    if wants_reduce:
        with stage("reduce"):
            el = stage_reduce(spec, report)["el"]
    wants_compare = command == "compare" or (
        command == "check-psc" and el is not None and spec.pairings
    )
    if wants_compare:
        with stage("compare"):
            stage_compare(spec, report, el)
    report.verdict = overall_verdict(report)
    return report


def render_text(report: Report, name: str = "") -> str:
    lines = []
    push = lines.append
    push(f"== PSC report{': ' + name if name else ''} ==")
    push(f"verdict: {report.verdict}")
    c1 = report.condition1
    if c1:
        push("")
        push(f"condition (i): H^{c1['degree']}(G, G_x)")
        push(f"  orbit dimension: {c1['orbit_dimension']}")
        push(f"  isotropy dimension: {c1['isotropy_dimension']}")
        push(f"  unimodular: {c1['unimodular']['verdict']}")
        push(f"  generic dimension: {c1['generic_dimension']}")
        if c1["degeneracy_conditions"]:
            push(f"  degeneracy conditions: {', '.join(c1['degeneracy_conditions'])}")
        push(f"  holds (H != 0): {c1['holds']}")
    c2 = report.condition2
    if c2:
        push("")
        push("condition (ii): V_p* . V_p^0")
        push(f"  dim V_p = {len(c2['invariant_fiber'])}, dim V_p* = {len(c2['invariant_dual'])}, dim V_p^0 = {len(c2['annihilator'])}")
        push(f"  intersection dimension: {c2['intersection_dimension']}")
        if c2["conditions"]:
            push(f"  conditions: {', '.join(c2['conditions'])}")
        push(f"  verdict: {c2['verdict']}")
    if report.reduced_lagrangian:
        push("")
        rl = report.reduced_lagrangian
        qc = ", ".join(rl["quotient_coordinates"]) or "(point)"
        push(f"reduced Lagrangian over [{qc}]:")
        push(f"  {rl['coefficient']}")
        for f, e in (report.el_equations or {}).items():
            push(f"  EL[{f}] = {e}")
    if report.reduced_equations:
        push("")
        push("reduced field equations (independent set: "
             + ", ".join(report.reduced_equations["independent"]) + ")")
        for k, v in report.reduced_equations["components"].items():
            push(f"  {k} = {v}")
    if report.discrepancies is not None:
        push("")
        push("discrepancies E(lambda-hat) - weight * equation:")
        for d in report.discrepancies:
            line = f"  {d['field']}: {d['status']}"
            if d["condition"]:
                line += f" (vanishes when {d['condition']} = 0)"
            line += f"  [{d['expression']}]"
            push(line)
    push("")
    for k, v in report.timings.items():
        push(f"timing {k}: {v:.6f}s")
    return "\n".join(lines) + "\n"
