"""Declarative problem files: schema validation and loading.

Problems are JSON; every expression is a string in the package grammar.
Validation errors carry the JSON path of the offending field.  See
README.md for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (
    AssumptionSet,
    Expr,
    ExprError,
    ONE,
    ZERO,
    fnapp,
    free_symbols,
    function_atoms,
    mul,
    substitute,
    sym,
)
from .parse import ParseError, parse
from .action import ActionSpec, PointSpec
from .reduce import ChiSpec
from .tensor import Chart, TensorField, metric_field, vector_field, wedge_all


class ProblemError(ValueError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


_TOP_KEYS = {
    "name",
    "chart",
    "parameters",
    "functions",
    "assumptions",
    "generators",
    "point",
    "reduced_fields",
    "ansatz",
    "det_sign",
    "chi",
    "lagrangian",
    "invariants",
    "pairings",
    "degree",
}

_SIGNS = {"positive", "negative", "nonzero"}


@dataclass
class ReducedField:
    name: str
    kind: str  # constant | function
    argument: str | None = None


@dataclass
class ProblemSpec:
    name: str
    chart: Chart
    action: ActionSpec
    parameters: list
    functions: list
    assumptions: AssumptionSet
    point: PointSpec | None
    reduced_fields: list  # [ReducedField]
    ansatz: TensorField | None
    det_sign: int
    chi: ChiSpec | None
    lagrangian: object  # "einstein_hilbert" | dict
    invariants: list  # [(name, Expr)]
    pairings: dict  # field -> (weight Expr with 'det' placeholder, eq name)
    degree: int | None

    @property
    def field_names(self) -> list:
        return [f.name for f in self.reduced_fields]


def _expect(cond, message, path):
    if not cond:
        raise ProblemError(message, path)


def _parse_expr(text, functions, path):
    _expect(isinstance(text, str), f"expected an expression string, got {text!r}", path)
    try:
        return parse(text, functions)
    except ParseError as e:
        raise ProblemError(f"expression error: {e}", path) from None


def load_problem(path: str) -> ProblemSpec:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ProblemError(f"no such file: {path}")
    except json.JSONDecodeError as e:
        raise ProblemError(f"invalid JSON: {e}", path)
    return build_problem(raw)


def build_problem(raw: dict) -> ProblemSpec:
    _expect(isinstance(raw, dict), "problem file must be a JSON object", "")
    for key in raw:
        _expect(key in _TOP_KEYS, f"unknown key {key!r}", key)

    chart_raw = raw.get("chart")
    _expect(isinstance(chart_raw, dict), "missing chart object", "chart")
    coords = chart_raw.get("coordinates")
    _expect(
        isinstance(coords, list) and coords and all(isinstance(c, str) for c in coords),
        "chart.coordinates must be a non-empty list of names",
        "chart.coordinates",
    )
    for key in chart_raw:
        _expect(key == "coordinates", f"unknown key {key!r}", f"chart.{key}")

    parameters = raw.get("parameters", [])
    _expect(
        isinstance(parameters, list) and all(isinstance(p, str) for p in parameters),
        "parameters must be a list of names",
        "parameters",
    )
    functions = raw.get("functions", [])
    _expect(
        isinstance(functions, list) and all(isinstance(f, str) for f in functions),
        "functions must be a list of names",
        "functions",
    )

    reduced_fields = []
    rf_raw = raw.get("reduced_fields", {})
    _expect(isinstance(rf_raw, dict), "reduced_fields must be an object", "reduced_fields")
    for fname, spec in rf_raw.items():
        p = f"reduced_fields.{fname}"
        _expect(isinstance(spec, dict), "field spec must be an object", p)
        kind = spec.get("kind")
        _expect(kind in ("constant", "function"), "kind must be constant|function", p)
        arg = spec.get("argument")
        if kind == "function":
            _expect(isinstance(arg, str), "function fields need an argument name", p)
        reduced_fields.append(ReducedField(fname, kind, arg))

    invariants_raw = raw.get("invariants", {})
    _expect(isinstance(invariants_raw, dict), "invariants must be an object", "invariants")

    fn_names = set(functions) | {
        f.name for f in reduced_fields if f.kind == "function"
    }

    # symbol namespace for validation
    known = set(coords) | set(parameters) | set(invariants_raw)
    field_consts = {f.name for f in reduced_fields if f.kind == "constant"}
    known |= field_consts

    def check_symbols(e: Expr, p: str, extra=frozenset()):
        bad = free_symbols(e) - known - extra
        _expect(not bad, f"unresolved symbol(s) {sorted(bad)}", p)

    assumptions = AssumptionSet()
    for i, entry in enumerate(raw.get("assumptions", [])):
        p = f"assumptions[{i}]"
        _expect(
            isinstance(entry, dict) and set(entry) == {"expr", "sign"},
            'each assumption is {"expr": ..., "sign": ...}',
            p,
        )
        _expect(entry["sign"] in _SIGNS, f"sign must be one of {sorted(_SIGNS)}", p)
        e = _parse_expr(entry["expr"], fn_names, p)
        try:
            assumptions.declare(e, entry["sign"])
        except ExprError as err:
            raise ProblemError(str(err), p) from None

    chart = Chart(coords, assumptions)

    gens_raw = raw.get("generators")
    _expect(
        isinstance(gens_raw, list) and gens_raw,
        "generators must be a non-empty list",
        "generators",
    )
    generators = []
    for i, comps in enumerate(gens_raw):
        p = f"generators[{i}]"
        _expect(
            isinstance(comps, list) and len(comps) == len(coords),
            f"generator needs {len(coords)} components",
            p,
        )
        parsed = [_parse_expr(c, fn_names, f"{p}[{j}]") for j, c in enumerate(comps)]
        for j, e in enumerate(parsed):
            check_symbols(e, f"{p}[{j}]")
        generators.append(vector_field(chart, parsed))

    point = None
    if "point" in raw:
        pr = raw["point"]
        _expect(isinstance(pr, dict), "point must be an object", "point")
        for key in pr:
            _expect(
                key in ("values", "atoms", "assumptions"),
                f"unknown key {key!r}",
                f"point.{key}",
            )
        values_raw = pr.get("values")
        _expect(isinstance(values_raw, dict), "point.values must be an object", "point.values")
        point_syms = set()
        values = {}
        for cname, text in values_raw.items():
            p = f"point.values.{cname}"
            _expect(cname in coords, f"{cname!r} is not a chart coordinate", p)
            e = _parse_expr(text, fn_names, p)
            point_syms |= free_symbols(e)
            values[cname] = e
        atoms = {}
        for aname, aspec in pr.get("atoms", {}).items():
            p = f"point.atoms.{aname}"
            _expect(
                isinstance(aspec, dict) and set(aspec) <= {"function", "order"},
                'atoms entries are {"function": name, "order": k}',
                p,
            )
            _expect(aspec.get("function") in fn_names, "unknown function", p)
            order = aspec.get("order", 0)
            _expect(isinstance(order, int) and order >= 0, "order must be >= 0", p)
            atoms[aname] = (aspec["function"], order)
            point_syms.add(aname)
        known.update(point_syms)
        pt_assumptions = AssumptionSet()
        for i, entry in enumerate(pr.get("assumptions", [])):
            p = f"point.assumptions[{i}]"
            _expect(
                isinstance(entry, dict) and set(entry) == {"expr", "sign"},
                'each assumption is {"expr": ..., "sign": ...}',
                p,
            )
            _expect(entry["sign"] in _SIGNS, f"sign must be one of {sorted(_SIGNS)}", p)
            pt_assumptions.declare(_parse_expr(entry["expr"], fn_names, p), entry["sign"])
        point = PointSpec(chart, values, atoms, pt_assumptions)

    invariants = []
    for name, text in invariants_raw.items():
        p = f"invariants.{name}"
        e = _parse_expr(text, fn_names, p)
        check_symbols(e, p, extra={name})
        invariants.append((name, e))
    inv_map = {sym(name): e for name, e in invariants if e is not sym(name)}

    def expand_invariants(e: Expr) -> Expr:
        return substitute(e, inv_map)

    ansatz = None
    det_sign = raw.get("det_sign", -1)
    _expect(det_sign in (1, -1), "det_sign must be 1 or -1", "det_sign")
    if "ansatz" in raw:
        ar = raw["ansatz"]
        _expect(isinstance(ar, dict), "ansatz must be an object", "ansatz")
        for key in ar:
            _expect(
                key in ("valence", "symmetry", "components"),
                f"unknown key {key!r}",
                f"ansatz.{key}",
            )
        valence = ar.get("valence", [0, 2])
        _expect(valence == [0, 2], "only metric ansatz (valence [0,2]) is supported", "ansatz.valence")
        symmetry = ar.get("symmetry", "sym")
        _expect(symmetry == "sym", "metric ansatz must be symmetric", "ansatz.symmetry")
        comps = {}
        for key, text in ar.get("components", {}).items():
            p = f"ansatz.components.{key}"
            idx = _parse_index(key, len(coords), 2, p)
            e = _parse_expr(text, fn_names, p)
            check_symbols(e, p)
            comps[idx] = expand_invariants(e)
        ansatz = metric_field(chart, comps)

    chi = None
    if "chi" in raw:
        cr = raw["chi"]
        _expect(isinstance(cr, dict), "chi must be an object", "chi")
        factor = ONE
        if "factor" in cr:
            factor = _parse_expr(cr["factor"], fn_names, "chi.factor")
            check_symbols(factor, "chi.factor")
            factor = expand_invariants(factor)
        if "wedge_of_generators" in cr:
            idxs = cr["wedge_of_generators"]
            _expect(
                isinstance(idxs, list)
                and all(isinstance(i, int) and 1 <= i <= len(generators) for i in idxs),
                "wedge_of_generators must be 1-based generator indices",
                "chi.wedge_of_generators",
            )
            mv = wedge_all([generators[i - 1] for i in idxs])
            mv = mv.map(lambda e: mul(factor, e)).normalized()
        else:
            comps_raw = cr.get("components")
            _expect(isinstance(comps_raw, dict), "chi needs components or wedge_of_generators", "chi")
            degree = None
            comps = {}
            for key, text in comps_raw.items():
                p = f"chi.components.{key}"
                idx = _parse_index(key, len(coords), None, p)
                degree = len(idx) if degree is None else degree
                _expect(len(idx) == degree, "inconsistent multivector degree", p)
                e = _parse_expr(text, fn_names, p)
                check_symbols(e, p)
                comps[idx] = expand_invariants(mul(factor, e))
            mv = TensorField(chart, degree, 0, comps, "antisym")
        chi = ChiSpec(mv, factor)

    lagrangian = raw.get("lagrangian")
    if lagrangian is not None and lagrangian != "einstein_hilbert":
        _expect(isinstance(lagrangian, dict), 'lagrangian is "einstein_hilbert" or an object', "lagrangian")
        for key in lagrangian:
            _expect(
                key in ("kind", "density", "field", "ansatz"),
                f"unknown key {key!r}",
                f"lagrangian.{key}",
            )
        _expect(
            lagrangian.get("kind") == "scalar_field",
            'lagrangian.kind must be "scalar_field"',
            "lagrangian.kind",
        )
        _expect(isinstance(lagrangian.get("density"), str), "missing density", "lagrangian.density")
        _expect(isinstance(lagrangian.get("field"), str), "missing field", "lagrangian.field")
        _expect(isinstance(lagrangian.get("ansatz"), str), "missing ansatz", "lagrangian.ansatz")

    pairings = {}
    for fname, pr in raw.get("pairings", {}).items():
        p = f"pairings.{fname}"
        _expect(fname in {f.name for f in reduced_fields}, f"unknown reduced field {fname!r}", p)
        _expect(
            isinstance(pr, dict) and set(pr) == {"weight", "equation"},
            'pairings entries are {"weight": ..., "equation": ...}',
            p,
        )
        w = _parse_expr(pr["weight"], fn_names, f"{p}.weight")
        check_symbols(w, f"{p}.weight", extra={"det"})
        pairings[fname] = (expand_invariants(w), pr["equation"])

    degree = raw.get("degree")
    if degree is not None:
        _expect(isinstance(degree, int) and degree >= 0, "degree must be a non-negative int", "degree")

    name = raw.get("name", "problem")
    action = ActionSpec(chart, generators, assumptions, {})
    return ProblemSpec(
        name=name,
        chart=chart,
        action=action,
        parameters=list(parameters),
        functions=list(functions),
        assumptions=assumptions,
        point=point,
        reduced_fields=reduced_fields,
        ansatz=ansatz,
        det_sign=det_sign,
        chi=chi,
        lagrangian=lagrangian,
        invariants=invariants,
        pairings=pairings,
        degree=degree,
    )


def _parse_index(key: str, n: int, expected_len, path) -> tuple:
    try:
        idx = tuple(int(p) - 1 for p in key.split(","))
    except ValueError:
        raise ProblemError(f"bad index key {key!r}", path) from None
    _expect(all(0 <= i < n for i in idx), f"index out of range in {key!r}", path)
    if expected_len is not None:
        _expect(len(idx) == expected_len, f"index {key!r} has wrong length", path)
    return idx


def apply_substitutions(spec: ProblemSpec, sets: dict) -> ProblemSpec:
    """Substitute parameter values (--set name=value) through the problem."""
    if not sets:
        return spec
    mapping = {}
    for name, text in sets.items():
        if name not in spec.parameters:
            raise ProblemError(f"--set target {name!r} is not a declared parameter")
        mapping[sym(name)] = parse(text)
    sub = lambda e: substitute(e, mapping)

    chart = Chart([c.name for c in spec.chart.coords], _sub_assumptions(spec.assumptions, mapping))
    gens = [
        vector_field(chart, [sub(g.comp((a,))) for a in range(chart.n)])
        for g in spec.action.generators
    ]
    action = ActionSpec(chart, gens, chart.assumptions, {})
    point = None
    if spec.point is not None:
        point = PointSpec(
            chart,
            {k: sub(v) for k, v in spec.point.values.items()},
            spec.point.atoms,
            spec.point.assumptions,
        )
    ansatz = None
    if spec.ansatz is not None:
        ansatz = metric_field(chart, {k: sub(v) for k, v in spec.ansatz.comps.items()})
    chi = None
    if spec.chi is not None:
        mv = TensorField(chart, spec.chi.multivector.r, 0, None, "antisym")
        for k, v in spec.chi.multivector.comps.items():
            mv.merge_comp(k, sub(v))
        chi = ChiSpec(mv, sub(spec.chi.factor))
    pairings = {f: (sub(w), eq) for f, (w, eq) in spec.pairings.items()}
    return ProblemSpec(
        name=spec.name,
        chart=chart,
        action=action,
        parameters=[p for p in spec.parameters if p not in sets],
        functions=spec.functions,
        assumptions=chart.assumptions,
        point=point,
        reduced_fields=spec.reduced_fields,
        ansatz=ansatz,
        det_sign=spec.det_sign,
        chi=chi,
        lagrangian=spec.lagrangian,
        invariants=[(n, sub(e)) for n, e in spec.invariants],
        pairings=pairings,
        degree=spec.degree,
    )


def _sub_assumptions(assumptions: AssumptionSet, mapping) -> AssumptionSet:
    out = AssumptionSet()
    for e, s in assumptions.items():
        e2 = substitute(e, mapping)
        from .expr import Rational

        if isinstance(e2, Rational):
            continue  # a numeric substitution discharged this declaration
        out.declare(e2, s)
    return out
