"""Command-line driver.

    psc <command> <problem-file> [--set name=value]... [--format text|json]
                                 [--degree k] [--out path]

Commands: check-psc, cohomology, condition2, reduce, compare.
Exit codes: 0 computed (whatever the verdict), 1 computation error,
2 invalid input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .expr import ExprError
from .parse import ParseError
from .pipeline import render_text, run_problem
from .problem import ProblemError, apply_substitutions, load_problem

COMMANDS = ("check-psc", "cohomology", "condition2", "reduce", "compare")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="psc",
        description="Local principle-of-symmetric-criticality tests for a "
        "Lie group action given by vector-field generators.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("problem", help="problem file (JSON)")
    ap.add_argument(
        "--set",
        dest="sets",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="substitute a parameter before running (repeatable)",
    )
    ap.add_argument("--format", choices=("text", "json"), default="text")
    ap.add_argument("--degree", type=int, default=None, help="cohomology degree override")
    ap.add_argument("--out", default=None, help="write the report to a file")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_problem(args.problem)
        sets = {}
        for item in args.sets:
            if "=" not in item:
                raise ProblemError(f"--set expects NAME=VALUE, got {item!r}")
            name, value = item.split("=", 1)
            sets[name.strip()] = value.strip()
        spec = apply_substitutions(spec, sets)
        if args.degree is not None:
            spec = dataclasses.replace(spec, degree=args.degree)
    except (ProblemError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        report = run_problem(spec, args.command)
    except (ExprError, ZeroDivisionError) as e:
        print(f"computation error: {e}", file=sys.stderr)
        return 1
    if args.format == "json":
        payload = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    else:
        payload = render_text(report, spec.name)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
