"""Solve a fractional program end to end and certify the recovered optimizer.

One solve of the moment-side program yields both the optimal ratio and, when
the leading pseudo-moment y0 is away from zero, the optimizer itself as the
normalized first-order moments x_k = y_{e_k} / y0.  The report cross-checks
feasibility of the recovered point, the match between its objective ratio and
the conic optimum, and the classical parametric identity: the certified lower
bound of numerator + value * denominator_neg over the feasible set must
vanish at the optimum.  All of that is post-hoc validation; the solve path
itself never iterates on a parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import FractionalProgram, eval_semialg, validate
from .polycore import MomentVector
from .relax import build_moment_relaxation, build_multiplier_dual
from .sdpsolve import ConicSolution, SolveOptions, solve

DEGENERATE_Y0 = 1e-6
FEAS_TOL = 1e-6
RATIO_TOL = 1e-5


def extract_minimizer(y: MomentVector, tol0: float = DEGENERATE_Y0) -> np.ndarray | None:
    """Normalized first-order moments, or None when y0 is numerically zero.

    A vanishing leading moment is outside the recovery guarantee; it is
    reported as degenerate rather than repaired.
    """
    if abs(y.y0) <= tol0:
        return None
    n = y.n
    out = np.empty(n)
    for k in range(n):
        e_k = tuple(1 if i == k else 0 for i in range(n))
        out[k] = y.get(e_k) / y.y0
    return out


@dataclass
class Certification:
    constraint_values: list[float] = field(default_factory=list)
    denominator_value: float = np.nan
    ratio_at_xbar: float = np.nan
    ratio_gap: float = np.nan
    dinkelbach_residual: float = np.nan
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def certify(prog: FractionalProgram, x_bar, sdp_value: float,
            options: SolveOptions | None = None,
            feas_tol: float = FEAS_TOL, ratio_tol: float = RATIO_TOL) -> Certification:
    """Check the recovered point against the conic optimum.

    Verifies every constraint value is <= feas_tol, the denominator is
    positive, and |ratio(x_bar) - sdp_value| <= ratio_tol * (1 + |sdp_value|).
    Violations are recorded with their margins; nothing raises.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    cert = Certification()
    for i, f in enumerate(prog.constraints, start=1):
        v = eval_semialg(f, x_bar, options)
        cert.constraint_values.append(v)
        if v > feas_tol:
            cert.failures.append(f"constraint {i} violated by {v:.3g}")
    den = -eval_semialg(prog.denominator_neg, x_bar, options)
    cert.denominator_value = den
    if den <= 0:
        cert.failures.append(f"denominator {den:.3g} not positive at the point")
        return cert
    num = eval_semialg(prog.numerator, x_bar, options)
    cert.ratio_at_xbar = num / den
    cert.ratio_gap = abs(cert.ratio_at_xbar - sdp_value)
    if cert.ratio_gap > ratio_tol * (1.0 + abs(sdp_value)):
        cert.failures.append(
            f"ratio {cert.ratio_at_xbar:.8g} differs from the conic optimum "
            f"{sdp_value:.8g} by {cert.ratio_gap:.3g}")
    return cert


def dinkelbach_value(prog: FractionalProgram, gamma: float,
                     options: SolveOptions | None = None,
                     reduce_support: bool = False) -> float:
    """Certified lower bound of numerator + gamma * denominator_neg over the
    feasible set, by one certificate-side solve with the denominator weight
    pinned to gamma.

    At gamma equal to the optimal ratio this value is zero (the classical
    parametric characterization); it is used here only as a diagnostic.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    cp = build_multiplier_dual(prog, reduce_support=reduce_support,
                               fixed_denominator_weight=gamma)
    sol = solve(cp, options)
    if sol.status != "optimal":
        raise RuntimeError(f"parametric diagnostic solve failed: {sol.status} {sol.message}")
    return sol.obj_primal


@dataclass
class SolveReport:
    status: str  # optimal | degenerate | infeasible | unbounded | solver_failure
    optimal_value: float
    x_bar: np.ndarray | None
    y_bar: MomentVector | None
    Z_blocks: dict[str, np.ndarray]
    degenerate: bool
    certification: Certification | None
    sub_statuses: dict[str, str]
    solution: ConicSolution | None = None

    @property
    def certified(self) -> bool:
        return (self.status == "optimal" and not self.degenerate
                and self.certification is not None and self.certification.passed)


def _moment_vector_from(cp, sol, prog) -> MomentVector:
    yvals = cp.layout.get(sol.x, "y")
    support = cp.meta["support"]
    values = {a: float(v) for a, v in zip(support, yvals)}
    if cp.meta["reduced"]:
        return MomentVector.on_support(prog.n, prog.d, cp.meta["gram_order"], values)
    return MomentVector.full(prog.n, prog.d, values)


def solve_program(prog: FractionalProgram, options: SolveOptions | None = None,
                  reduce_support: bool = False,
                  run_dinkelbach: bool = True) -> SolveReport:
    """Build the moment-side program, solve it once, extract and certify.

    Every failed sub-step is surfaced in the report; a failed certification
    never silently downgrades into a success.
    """
    options = options or SolveOptions()
    report_status = validate(prog)
    if not report_status.passed:
        raise ValueError("invalid program:\n" + "\n".join(report_status.lines()))

    cp = build_moment_relaxation(prog, reduce_support=reduce_support)
    sol = solve(cp, options)
    sub = {"moment_program": sol.status}

    if sol.status in ("infeasible", "unbounded"):
        return SolveReport(status=sol.status, optimal_value=np.nan, x_bar=None,
                           y_bar=None, Z_blocks={}, degenerate=False,
                           certification=None, sub_statuses=sub, solution=sol)
    if sol.status != "optimal":
        return SolveReport(status="solver_failure", optimal_value=np.nan, x_bar=None,
                           y_bar=None, Z_blocks={}, degenerate=False,
                           certification=None, sub_statuses=sub, solution=sol)

    value = sol.obj_primal
    y_bar = _moment_vector_from(cp, sol, prog)
    Z_blocks = {sp.name: cp.layout.get(sol.x, sp.name)
                for sp in cp.layout.spans if sp.name.startswith("Z")}
    x_bar = extract_minimizer(y_bar)
    if x_bar is None:
        return SolveReport(status="degenerate", optimal_value=value, x_bar=None,
                           y_bar=y_bar, Z_blocks=Z_blocks, degenerate=True,
                           certification=None, sub_statuses=sub, solution=sol)

    cert = certify(prog, x_bar, value, options)
    if run_dinkelbach:
        try:
            cert.dinkelbach_residual = dinkelbach_value(
                prog, max(value, 0.0), options, reduce_support=reduce_support)
            sub["parametric_diagnostic"] = "optimal"
            if abs(cert.dinkelbach_residual) > 1e-4 * (1.0 + abs(value)):
                cert.failures.append(
                    f"parametric zero-value check off by {cert.dinkelbach_residual:.3g}")
        except RuntimeError as exc:
            sub["parametric_diagnostic"] = str(exc)
    return SolveReport(status="optimal", optimal_value=value, x_bar=x_bar,
                       y_bar=y_bar, Z_blocks=Z_blocks, degenerate=False,
                       certification=cert, sub_statuses=sub, solution=sol)
