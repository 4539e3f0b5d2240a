"""Command-line interface and the on-disk problem format.

A problem file is a JSON document:

    {
      "n": 2, "d": 1,
      "constraints": [FUNC, ...],
      "numerator": FUNC,
      "denominator_neg": FUNC
    }

where FUNC = {"h": [POLY, ...], "omega": {"s": int, "p": int, "t": int,
"A": [MATRIX, ...], "B": [MATRIX, ...]}}, POLY is a list of
{"alpha": [ints], "coef": number} records, and MATRIX is a row-major list of
t*t numbers (symmetry is validated).  "denominator_neg" stores the negated
denominator: the minimized ratio is numerator / (-denominator_neg).

Exit codes: 0 certified optimal (or all checks passed), 1 input error,
2 degenerate/uncertified result or a failed check, 3 infeasible or
unbounded, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .extract import SolveReport, solve_program
from .model import (CheckReport, FractionalProgram, LmiSet, SemialgFunction,
                    check_omega_interior, check_slater, validate)
from .polycore import Poly
from .sdpsolve import SolveOptions
from .verify import EmptyGridError, GridSpec, grid_oracle

REPORT_SCHEMA = "fracsos/1"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNCERTIFIED = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4


class ProblemFormatError(ValueError):
    pass


def _poly_from_json(obj, n: int, where: str) -> Poly:
    if not isinstance(obj, list):
        raise ProblemFormatError(f"{where}: polynomial must be a list of terms")
    terms = {}
    for k, rec in enumerate(obj):
        try:
            alpha = tuple(int(e) for e in rec["alpha"])
            coef = float(rec["coef"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProblemFormatError(f"{where}: bad term {k}: {exc}") from None
        if len(alpha) != n:
            raise ProblemFormatError(
                f"{where}: term {k} has {len(alpha)} exponents, expected {n}")
        if any(e < 0 for e in alpha):
            raise ProblemFormatError(f"{where}: term {k} has a negative exponent")
        terms[alpha] = terms.get(alpha, 0.0) + coef
    return Poly(n, terms)


def _matrix_from_json(obj, t: int, where: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != t * t:
        raise ProblemFormatError(f"{where}: expected {t * t} row-major entries")
    M = np.array([float(v) for v in obj]).reshape(t, t)
    if not np.array_equal(M, M.T):
        raise ProblemFormatError(f"{where}: matrix not symmetric")
    return M


def _function_from_json(obj, n: int, where: str) -> SemialgFunction:
    try:
        om = obj["omega"]
        s, p, t = int(om["s"]), int(om["p"]), int(om["t"])
        A_raw, B_raw = om["A"], om.get("B", [])
        h_raw = obj["h"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError(f"{where}: {exc}") from None
    if len(A_raw) != s + 1:
        raise ProblemFormatError(f"{where}: expected s+1 = {s + 1} A-matrices, got {len(A_raw)}")
    if len(B_raw) != p:
        raise ProblemFormatError(f"{where}: expected p = {p} B-matrices, got {len(B_raw)}")
    if len(h_raw) != s + 1:
        raise ProblemFormatError(f"{where}: expected s+1 = {s + 1} polynomials, got {len(h_raw)}")
    A = tuple(_matrix_from_json(Mr, t, f"{where}.A[{j}]") for j, Mr in enumerate(A_raw))
    B = tuple(_matrix_from_json(Mr, t, f"{where}.B[{l}]") for l, Mr in enumerate(B_raw))
    h = tuple(_poly_from_json(pr, n, f"{where}.h[{j}]") for j, pr in enumerate(h_raw))
    return SemialgFunction(h=h, omega=LmiSet(A=A, B=B))


def problem_from_dict(doc: dict) -> FractionalProgram:
    try:
        n, d = int(doc["n"]), int(doc["d"])
        cons_raw = doc["constraints"]
        num_raw = doc["numerator"]
        den_raw = doc["denominator_neg"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError(f"problem document: {exc}") from None
    constraints = tuple(_function_from_json(c, n, f"constraints[{i}]")
                        for i, c in enumerate(cons_raw))
    prog = FractionalProgram(
        n=n, d=d, constraints=constraints,
        numerator=_function_from_json(num_raw, n, "numerator"),
        denominator_neg=_function_from_json(den_raw, n, "denominator_neg"))
    report = validate(prog)
    if not report.passed:
        raise ProblemFormatError("problem fails validation:\n" + "\n".join(report.lines()))
    return prog


def load_problem(path: str) -> FractionalProgram:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    doc = json.loads(text)
    return problem_from_dict(doc)


def _jsonable(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    if isinstance(v, np.ndarray):
        return [_jsonable(float(e)) for e in v.ravel()] if v.ndim == 1 else \
            [[_jsonable(float(e)) for e in row] for row in v]
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(float(v))
    return v


def report_to_dict(report: SolveReport) -> dict:
    cert = None
    if report.certification is not None:
        c = report.certification
        cert = {
            "constraint_values": [_jsonable(v) for v in c.constraint_values],
            "denominator_value": _jsonable(c.denominator_value),
            "ratio_at_xbar": _jsonable(c.ratio_at_xbar),
            "ratio_gap": _jsonable(c.ratio_gap),
            "dinkelbach_residual": _jsonable(c.dinkelbach_residual),
            "passed": c.passed,
            "failures": list(c.failures),
        }
    y_doc = None
    if report.y_bar is not None:
        y_doc = [{"alpha": list(a), "value": _jsonable(v)}
                 for a, v in ((a, report.y_bar.values[a]) for a in report.y_bar.support)]
    solver = {"sub_statuses": dict(report.sub_statuses)}
    if report.solution is not None:
        solver["iterations"] = report.solution.iterations
        solver["residuals"] = {
            "primal": _jsonable(report.solution.res_primal),
            "dual": _jsonable(report.solution.res_dual),
            "gap": _jsonable(report.solution.res_gap),
        }
    return {
        "schema": REPORT_SCHEMA,
        "status": report.status,
        "certified": report.certified,
        "optimal_value": _jsonable(report.optimal_value),
        "x_bar": None if report.x_bar is None else [_jsonable(v) for v in report.x_bar],
        "degenerate": report.degenerate,
        "y_bar": y_doc,
        "z_blocks": {name: _jsonable(M) for name, M in sorted(report.Z_blocks.items())},
        "certification": cert,
        "solver": solver,
    }


def _print_report_text(report: SolveReport, out):
    print(f"status: {report.status}", file=out)
    if not math.isnan(report.optimal_value):
        print(f"optimal value: {report.optimal_value!r}", file=out)
    if report.x_bar is not None:
        print("x_bar: " + " ".join(repr(float(v)) for v in report.x_bar), file=out)
    if report.degenerate:
        print("degenerate: leading pseudo-moment is numerically zero; "
              "no optimizer recovered", file=out)
    if report.y_bar is not None:
        for a in report.y_bar.support:
            print(f"y[{','.join(str(e) for e in a)}] = {report.y_bar.values[a]!r}", file=out)
    c = report.certification
    if c is not None:
        print(f"certified: {'yes' if report.certified else 'NO'}", file=out)
        for i, v in enumerate(c.constraint_values, start=1):
            print(f"  f{i}(x_bar) = {v!r}", file=out)
        print(f"  denominator(x_bar) = {c.denominator_value!r}", file=out)
        print(f"  ratio(x_bar) = {c.ratio_at_xbar!r}  (gap {c.ratio_gap!r})", file=out)
        print(f"  parametric zero-value residual = {c.dinkelbach_residual!r}", file=out)
        for msg in c.failures:
            print(f"  FAIL: {msg}", file=out)


def _report_exit_code(report: SolveReport) -> int:
    if report.status in ("infeasible", "unbounded"):
        return EXIT_INFEASIBLE
    if report.status == "solver_failure":
        return EXIT_SOLVER
    if report.status == "degenerate" or not report.certified:
        return EXIT_UNCERTIFIED
    return EXIT_OK


def cmd_solve(args) -> int:
    prog = load_problem(args.problem)
    opts = SolveOptions(tol_gap=args.tol, tol_feas=args.tol, max_iter=args.max_iter)
    report = solve_program(prog, options=opts, reduce_support=args.basis_reduction)
    if args.json:
        print(json.dumps(report_to_dict(report), indent=2, sort_keys=True))
    else:
        _print_report_text(report, sys.stdout)
    return _report_exit_code(report)


def _print_check_lines(title: str, rep: CheckReport):
    print(title)
    for line in rep.lines():
        print("  " + line)


def cmd_check(args) -> int:
    prog = load_problem(args.problem)
    ok = True
    rep = validate(prog, convexity_samples=args.convexity_samples)
    _print_check_lines("structure and sampled convexity:", rep)
    ok &= rep.passed
    rep = check_omega_interior(prog)
    _print_check_lines("LMI strict feasibility:", rep)
    ok &= rep.passed
    if args.slater_point is not None:
        point = _parse_point(args.slater_point, prog.n)
        rep = check_slater(prog, point)
        _print_check_lines(f"strict feasibility of {point.tolist()}:", rep)
        ok &= rep.passed
    print("all checks passed" if ok else "CHECKS FAILED")
    return EXIT_OK if ok else EXIT_UNCERTIFIED


def cmd_oracle(args) -> int:
    prog = load_problem(args.problem)
    box = _parse_box(args.box, prog.n)
    spec = GridSpec(box=box, steps=args.steps)
    result = grid_oracle(prog, spec)
    print(f"oracle value: {result.value!r}")
    print("argmin: " + " ".join(repr(float(v)) for v in result.argmin))
    print(f"feasible points: {result.feasible}/{result.total}")
    if args.compare is not None:
        with open(args.compare, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        ref = doc.get("optimal_value")
        if ref is None:
            raise ProblemFormatError("comparison report has no optimal_value")
        print(f"solver value: {ref!r}")
        print(f"oracle - solver gap: {result.value - float(ref)!r}")
    return EXIT_OK


def _parse_point(text: str, n: int) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ProblemFormatError(f"bad point {text!r}: {exc}") from None
    if len(vals) != n:
        raise ProblemFormatError(f"point has {len(vals)} coordinates, expected {n}")
    return np.array(vals)


def _parse_box(text: str, n: int) -> tuple:
    out = []
    for part in text.split(","):
        pieces = part.split(":")
        if len(pieces) != 2:
            raise ProblemFormatError(f"bad interval {part!r}; expected lo:hi")
        try:
            out.append((float(pieces[0]), float(pieces[1])))
        except ValueError as exc:
            raise ProblemFormatError(f"bad interval {part!r}: {exc}") from None
    if len(out) != n:
        raise ProblemFormatError(f"box has {len(out)} intervals, expected {n}")
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracsos",
        description="solve fractional programs with SOS-convex semi-algebraic data "
                    "through one semidefinite relaxation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a problem file and print the report")
    p_solve.add_argument("problem")
    p_solve.add_argument("--tol", type=float, default=1e-8)
    p_solve.add_argument("--max-iter", type=int, default=200)
    p_solve.add_argument("--basis-reduction", action="store_true",
                         help="restrict moments to the half-Newton-polytope support")
    fmt = p_solve.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="machine-readable report")
    fmt.add_argument("--text", dest="json", action="store_false")
    p_solve.set_defaults(func=cmd_solve, json=False)

    p_check = sub.add_parser("check", help="validate a problem file and its assumptions")
    p_check.add_argument("problem")
    p_check.add_argument("--slater-point", default=None,
                         help="comma-separated strictly feasible candidate")
    p_check.add_argument("--convexity-samples", type=int, default=8)
    p_check.set_defaults(func=cmd_check)

    p_oracle = sub.add_parser("oracle", help="brute-force grid search (n <= 3)")
    p_oracle.add_argument("problem")
    p_oracle.add_argument("--box", required=True, help="per-axis lo:hi, comma separated")
    p_oracle.add_argument("--steps", type=int, default=201)
    p_oracle.add_argument("--compare", default=None,
                          help="JSON report to diff the oracle value against")
    p_oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
              file=sys.stderr)
        return EXIT_INPUT
    except (ProblemFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EmptyGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCERTIFIED


if __name__ == "__main__":
    sys.exit(main())
