"""Command-line entry point.

    qcauchy solve problem.txt -o solution.csv
    qcauchy verify all
    qcauchy table qgamma --range 1:5:1 --q 0.5

Exit codes: 0 success, 2 parse or validation error, 3 partition failure,
4 non-convergence, 5 I/O error, 1 any other numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import sys
from typing import Callable, Sequence, TextIO

import numpy as np

from qcauchy.cli.problem_file import ProblemFileError, build_problem, parse_problem_spec, validate
from qcauchy.cli.verify import SUITES, run_checks
from qcauchy.errors import NonConvergenceError, PartitionError, QCalcError, QDomainError
from qcauchy.qcore import QContext, q_gamma, q_number, q_power
from qcauchy.qfractional import rl_integral
from qcauchy.solver import Solution, picard_solve

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_PARTITION = 3
EXIT_NONCONVERGENCE = 4
EXIT_IO = 5

log = logging.getLogger("qcauchy")


def fmt(v: float) -> str:
    return f"{v:.17g}"


def _fail(code: int, message: str) -> int:
    print(f"qcauchy: {message}", file=sys.stderr)
    return code


def write_solution(sol: Solution, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "y", "residual"])
    for x, y, r in zip(sol.points, sol.y_values, sol.residuals):
        writer.writerow([fmt(x), fmt(y), fmt(r)])
    out.write(f"# segments: {len(sol.segments)}\n")
    for i, (seg, its) in enumerate(zip(sol.segments, sol.iterations_per_segment), start=1):
        out.write(
            f"# segment {i}: left={fmt(seg.left)} right={fmt(seg.right)} "
            f"omega={fmt(seg.omega)} iterations={its}\n"
        )
    out.write(f"# residual_sup: {fmt(sol.residual_sup)}\n")
    errs = ",".join(fmt(e) for e in sol.initial_condition_errors)
    out.write(f"# initial_condition_errors: {errs}\n")


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.input}: {exc}")
    try:
        spec = parse_problem_spec(text)
        overrides = {}
        if args.q is not None:
            overrides["q"] = args.q
        if args.tol is not None:
            overrides["tol"] = args.tol
        if args.max_terms is not None:
            overrides["max_terms"] = args.max_terms
        if overrides:
            spec = dataclasses.replace(spec, **overrides)
            validate(spec)
        problem = build_problem(spec)
    except (ProblemFileError, QDomainError) as exc:
        return _fail(EXIT_USAGE, f"{args.input}: {exc}")

    try:
        sol = picard_solve(problem)
    except PartitionError as exc:
        return _fail(EXIT_PARTITION, f"partition failed: {exc}")
    except NonConvergenceError as exc:
        return _fail(EXIT_NONCONVERGENCE, f"no convergence: {exc}")
    except QCalcError as exc:
        return _fail(EXIT_FAILURE, f"solve failed: {type(exc).__name__}: {exc}")

    if args.output in (None, "-"):
        write_solution(sol, sys.stdout)
        return EXIT_OK
    try:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_solution(sol, fh)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write {args.output}: {exc}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_checks(SUITES[args.suite])
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAILURE


def parse_range(text: str) -> np.ndarray:
    """``start:stop:step``, stop included; a bare number is a single point."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise QDomainError(f"bad range {text!r}; expected start:stop:step") from None
    if len(nums) == 1:
        return np.array(nums)
    if len(nums) != 3:
        raise QDomainError(f"bad range {text!r}; expected start:stop:step")
    start, stop, step = nums
    if not all(map(math.isfinite, nums)) or step <= 0.0 or stop < start:
        raise QDomainError(f"bad range {text!r}; need start <= stop and step > 0")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def parse_params(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise QDomainError(f"bad --param {item!r}; expected name=value")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise QDomainError(f"bad --param {item!r}; value is not a number") from None
    return out


TableFn = Callable[[float, dict, QContext], list[float]]


def _qpower_row(x: float, p: dict, ctx: QContext) -> list[float]:
    return [q_power(x, p.get("a", 0.0), p.get("alpha", 1.0), ctx)]


def _rlint_power_row(x: float, p: dict, ctx: QContext) -> list[float]:
    a, alpha, lam = p.get("a", 0.0), p.get("alpha", 0.5), p.get("lam", 0.0)
    closed = q_gamma(lam + 1.0, ctx) / q_gamma(alpha + lam + 1.0, ctx) * q_power(x, a, alpha + lam, ctx)
    numeric = rl_integral(lambda t: q_power(t, a, lam, ctx), alpha, a, x, ctx)
    return [closed, numeric]


# name -> (column names after x, row function, allowed parameters)
TABLES: dict[str, tuple[list[str], TableFn, tuple[str, ...]]] = {
    "qgamma": (["qgamma"], lambda x, p, ctx: [q_gamma(x, ctx)], ()),
    "qnumber": (["qnumber"], lambda x, p, ctx: [q_number(x, ctx)], ()),
    "qpower": (["qpower"], _qpower_row, ("a", "alpha")),
    "rlint-power": (["closed_form", "rl_integral"], _rlint_power_row, ("a", "alpha", "lam")),
}


def cmd_table(args: argparse.Namespace) -> int:
    columns, row, allowed = TABLES[args.function]
    try:
        xs = parse_range(args.range)
        params = parse_params(args.param or [])
        unknown = sorted(set(params) - set(allowed))
        if unknown:
            raise QDomainError(
                f"{args.function} takes no parameter {', '.join(unknown)}; allowed: {', '.join(allowed) or 'none'}"
            )
        q = 0.5 if args.q is None else args.q
        ctx = QContext(q, max_terms=args.max_terms) if args.max_terms else QContext(q)
        if args.tol is not None:
            ctx = dataclasses.replace(ctx, series_tol=args.tol)
        rows = [[float(x)] + row(float(x), params, ctx) for x in xs]
    except QDomainError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except QCalcError as exc:
        return _fail(EXIT_FAILURE, f"{type(exc).__name__}: {exc}")
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["x", *columns])
    writer.writerows([fmt(v) for v in r] for r in rows)
    return EXIT_OK


def _global_options(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--q", type=float, default=default, help="override the base q")
    parser.add_argument("--tol", type=float, default=default, help="override the solve tolerance (series tolerance for table)")
    parser.add_argument("--max-terms", type=int, default=default, help="cap on terms of infinite products and series")
    parser.add_argument("-v", "--verbose", action="store_true", default=default or False, help="log solver progress")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcauchy", description="Fractional q-calculus and q-Cauchy problem solver.")
    _global_options(parser, None)
    # the same options after the subcommand; SUPPRESS keeps them from resetting the top-level values
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", parents=[common], help="solve the problem in a problem file")
    solve.add_argument("input", help="problem file")
    solve.add_argument("-o", "--output", help="CSV output path (default: stdout)")
    solve.set_defaults(run=cmd_solve)

    verify = sub.add_parser("verify", parents=[common], help="run a property suite")
    verify.add_argument("suite", choices=sorted(SUITES))
    verify.set_defaults(run=cmd_verify)

    table = sub.add_parser("table", parents=[common], help="tabulate a function as CSV")
    table.add_argument("function", choices=sorted(TABLES))
    table.add_argument("--range", required=True, help="start:stop:step, stop included")
    table.add_argument("--param", action="append", metavar="NAME=VALUE", help="function parameter (repeatable)")
    table.set_defaults(run=cmd_table)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.q is not None and not 0.0 < args.q < 1.0:
        return _fail(EXIT_USAGE, f"--q must lie in (0, 1), got {args.q}")
    if args.tol is not None and not args.tol > 0.0:
        return _fail(EXIT_USAGE, f"--tol must be positive, got {args.tol}")
    if args.max_terms is not None and args.max_terms < 1:
        return _fail(EXIT_USAGE, f"--max-terms must be >= 1, got {args.max_terms}")
    return args.run(args)


if __name__ == "__main__":
    sys.exit(main())
