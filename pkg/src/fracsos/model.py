"""Problem data: LMI-described compact sets, sup-type convex functions,
and fractional programs.

A SemialgFunction evaluates as h0(x) + sup over the set Omega of the linear
combination sum_j y_j h_j(x); Omega is the projection of a spectrahedron
{(y, z) : A0 + sum_j y_j A_j + sum_l z_l B_l >= 0} onto the y coordinates.
A FractionalProgram minimizes numerator / (-denominator_neg) over the points
where every constraint function is <= 0 (the denominator is stored negated
so that all member functions share one representation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conic import ProgramBuilder, smat, svec, svec_len
from .polycore import Poly, check_sos_convex, eval_poly
from .sdpsolve import SolveOptions, solve


class OmegaEmptyError(ValueError):
    """The LMI set behind a sup-type function has no feasible point."""


class OmegaUnboundedError(RuntimeError):
    """The inner maximization diverged: the LMI set is not compact."""


@dataclass(frozen=True)
class LmiSet:
    """Spectrahedral projection {y : exists z, A0 + sum y_j A_j + sum z_l B_l >= 0}."""

    A: tuple[np.ndarray, ...]  # A0..As
    B: tuple[np.ndarray, ...] = ()  # B1..Bp

    def __post_init__(self):
        A = tuple(np.asarray(M, dtype=float) for M in self.A)
        B = tuple(np.asarray(M, dtype=float) for M in self.B)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if not A:
            raise ValueError("need at least the constant matrix A0")

    @property
    def s(self) -> int:
        return len(self.A) - 1

    @property
    def p(self) -> int:
        return len(self.B)

    @property
    def t(self) -> int:
        return self.A[0].shape[0]

    @property
    def trivial(self) -> bool:
        """No y and no lifted z variables: the set is a singleton."""
        return self.s == 0 and self.p == 0

    def violations(self) -> list[str]:
        out = []
        for label, M in [(f"A{j}", M) for j, M in enumerate(self.A)] + \
                        [(f"B{l + 1}", M) for l, M in enumerate(self.B)]:
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                out.append(f"matrix {label} is not square")
            elif M.shape[0] != self.t:
                out.append(f"matrix {label} has order {M.shape[0]}, expected {self.t}")
            elif not np.array_equal(M, M.T):
                out.append(f"matrix {label} is not symmetric")
        return out


@dataclass(frozen=True)
class SemialgFunction:
    """h0 + sup over the LMI set of sum_j y_j h_j."""

    h: tuple[Poly, ...]
    omega: LmiSet

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(self.h))

    @property
    def n(self) -> int:
        return self.h[0].n

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.h)

    def violations(self) -> list[str]:
        out = self.omega.violations()
        if len(self.h) != self.omega.s + 1:
            out.append(f"{len(self.h)} polynomials for {self.omega.s} set variables "
                       f"(expected s+1 = {self.omega.s + 1})")
        if len({p.n for p in self.h}) > 1:
            out.append("polynomials disagree on the ambient dimension")
        if self.omega.trivial:
            ev = np.linalg.eigvalsh(self.omega.A[0])
            if ev.min() < -1e-9:
                out.append("constant function has an infeasible LMI (A0 not PSD)")
        return out


@dataclass(frozen=True)
class FractionalProgram:
    """min numerator/(-denominator_neg) subject to every constraint <= 0."""

    n: int
    d: int
    constraints: tuple[SemialgFunction, ...]
    numerator: SemialgFunction
    denominator_neg: SemialgFunction

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @property
    def m(self) -> int:
        return len(self.constraints)

    def functions(self) -> list[SemialgFunction]:
        """All member functions, indexed 1..m+2 (1-based as in the layouts)."""
        return list(self.constraints) + [self.numerator, self.denominator_neg]

    def ratio_at(self, x) -> float:
        den = -eval_semialg(self.denominator_neg, x)
        if den <= 0:
            raise ValueError(f"denominator {den} is not positive at {np.asarray(x)}")
        return eval_semialg(self.numerator, x) / den


@dataclass
class CheckItem:
    name: str
    passed: bool
    margin: float
    message: str = ""
    informational: bool = False


@dataclass
class CheckReport:
    items: list[CheckItem] = field(default_factory=list)

    def add(self, name, passed, margin, message="", informational=False):
        self.items.append(CheckItem(name, bool(passed), float(margin), message, informational))

    @property
    def passed(self) -> bool:
        return all(it.passed for it in self.items if not it.informational)

    def lines(self) -> list[str]:
        out = []
        for it in self.items:
            tag = "PASS" if it.passed else "FAIL"
            if it.informational:
                tag = "info"
            msg = f"  ({it.message})" if it.message else ""
            out.append(f"[{tag}] {it.name}: margin {it.margin:.6g}{msg}")
        return out


@dataclass
class InnerSolution:
    """Optimal data of the inner sup-SDP at a fixed point x."""

    value: float  # the function value h0(x) + sup(...)
    y: np.ndarray  # maximizing set variables
    z: np.ndarray  # lifted variables
    W: np.ndarray  # dual matrix: <A_j, W> = -h_j(x), value-h0(x) = <A0, W>


class InnerEvaluator:
    """Reusable inner-SDP machinery for one SemialgFunction.

    The LMI data is assembled once; evaluating at a point only swaps the
    objective.  Grid sweeps call value() many thousands of times.
    """

    def __init__(self, f: SemialgFunction, options: SolveOptions | None = None):
        self.f = f
        self.options = options or SolveOptions()
        om = f.omega
        if not om.trivial:
            builder = ProgramBuilder("max")
            if om.s:
                builder.add_free("y", om.s)
            if om.p:
                builder.add_free("z", om.p)
            builder.add_psd("L", om.t)
            # svec(L) - sum_j y_j svec(A_j) - sum_l z_l svec(B_l) = svec(A0), row per svec coord
            nsvec = svec_len(om.t)
            L_eye = np.eye(nsvec)
            Acols = np.column_stack([svec(M) for M in om.A[1:]]) if om.s else None
            Bcols = np.column_stack([svec(M) for M in om.B]) if om.p else None
            rhs = svec(om.A[0])
            for r in range(nsvec):
                coeffs = {"L": L_eye[r]}
                if om.s:
                    coeffs["y"] = -Acols[r]
                if om.p:
                    coeffs["z"] = -Bcols[r]
                builder.add_row(f"lmi{r}", coeffs, rhs[r])
            builder.set_objective({"y": np.zeros(om.s)} if om.s else {})
            self._template = builder.build()
        else:
            self._template = None

    def _solve_inner(self, cvec: np.ndarray):
        cp = self._template
        cp.c[:self.f.omega.s] = cvec
        sol = solve(cp, self.options)
        if sol.status == "infeasible":
            raise OmegaEmptyError("the LMI set is empty")
        if sol.status == "unbounded":
            raise OmegaUnboundedError(
                "inner maximization is unbounded: the LMI set is not compact")
        if sol.status != "optimal":
            raise RuntimeError(f"inner SDP failed: {sol.status} {sol.message}")
        return sol

    def value(self, x) -> float:
        h0 = eval_poly(self.f.h[0], x)
        if self._template is None:
            return h0
        cvec = np.array([eval_poly(hj, x) for hj in self.f.h[1:]])
        sol = self._solve_inner(cvec)
        return h0 + sol.obj_primal

    def full(self, x) -> InnerSolution:
        h0 = eval_poly(self.f.h[0], x)
        om = self.f.omega
        if self._template is None:
            return InnerSolution(value=h0, y=np.zeros(0), z=np.zeros(0),
                                 W=np.zeros((om.t, om.t)))
        cvec = np.array([eval_poly(hj, x) for hj in self.f.h[1:]])
        sol = self._solve_inner(cvec)
        W = -smat(sol.y)
        layout = self._template.layout
        yv = layout.get(sol.x, "y") if om.s else np.zeros(0)
        zv = layout.get(sol.x, "z") if om.p else np.zeros(0)
        return InnerSolution(value=h0 + sol.obj_primal, y=yv, z=zv, W=W)

    def maximize_direction(self, u) -> np.ndarray:
        """argmax of u . y over the set (used to sample extreme-ish points)."""
        om = self.f.omega
        if om.s == 0:
            return np.zeros(0)
        sol = self._solve_inner(np.asarray(u, dtype=float))
        return self._template.layout.get(sol.x, "y")


def eval_semialg(f: SemialgFunction, x, options: SolveOptions | None = None) -> float:
    """Evaluate h0(x) + sup over the LMI set of sum_j y_j h_j(x)."""
    return InnerEvaluator(f, options).value(x)


def inner_solution(f: SemialgFunction, x, options: SolveOptions | None = None) -> InnerSolution:
    return InnerEvaluator(f, options).full(x)


def lmi_interior_margin(om: LmiSet, options: SolveOptions | None = None) -> float:
    """sup tau with A0 + sum y_j A_j + sum z_l B_l >= tau I (inf if unbounded)."""
    if om.trivial:
        return float(np.linalg.eigvalsh(om.A[0]).min())
    builder = ProgramBuilder("max")
    if om.s:
        builder.add_free("y", om.s)
    if om.p:
        builder.add_free("z", om.p)
    builder.add_free("tau", 1)
    builder.add_psd("L", om.t)
    rhs = svec(om.A[0])
    eyerow = svec(np.eye(om.t))
    Acols = np.column_stack([svec(M) for M in om.A[1:]]) if om.s else None
    Bcols = np.column_stack([svec(M) for M in om.B]) if om.p else None
    nsvec = rhs.size
    L_eye = np.eye(nsvec)
    for r in range(nsvec):
        coeffs = {"L": L_eye[r], "tau": np.array([eyerow[r]])}
        if om.s:
            coeffs["y"] = -Acols[r]
        if om.p:
            coeffs["z"] = -Bcols[r]
        builder.add_row(f"lmi{r}", coeffs, rhs[r])
    builder.set_objective({"tau": np.ones(1)})
    sol = solve(builder.build(), options)
    if sol.status == "unbounded":
        return np.inf
    if sol.status != "optimal":
        raise RuntimeError(f"interior-margin SDP failed: {sol.status} {sol.message}")
    return sol.obj_primal


INTERIOR_MARGIN_TOL = 1e-7
SLATER_TOL = 1e-8


def check_omega_interior(prog: FractionalProgram,
                         options: SolveOptions | None = None) -> CheckReport:
    """Strict feasibility of every function's LMI (needed for inner strong duality).

    For each function solves sup tau with the LMI shifted by tau I; passing
    means tau* exceeds INTERIOR_MARGIN_TOL.
    """
    report = CheckReport()
    for i, f in enumerate(prog.functions(), start=1):
        try:
            margin = lmi_interior_margin(f.omega, options)
        except RuntimeError as exc:
            report.add(f"f{i} LMI interior", False, np.nan, f"undetermined: {exc}")
            continue
        report.add(f"f{i} LMI interior", margin > INTERIOR_MARGIN_TOL, margin)
    return report


def check_slater(prog: FractionalProgram, xhat,
                 options: SolveOptions | None = None) -> CheckReport:
    """Strict feasibility of the supplied point for every constraint.

    Also reports, informationally, that the denominator is positive and the
    numerator nonnegative at the point (the standing sign assumptions).
    """
    xhat = np.asarray(xhat, dtype=float)
    if xhat.shape != (prog.n,):
        raise ValueError(f"point has shape {xhat.shape}, expected ({prog.n},)")
    report = CheckReport()
    for i, f in enumerate(prog.constraints, start=1):
        v = eval_semialg(f, xhat, options)
        report.add(f"f{i}(xhat) < 0", v < -SLATER_TOL, -v)
    den = -eval_semialg(prog.denominator_neg, xhat, options)
    report.add("denominator positive at xhat", den > 0, den, informational=True)
    num = eval_semialg(prog.numerator, xhat, options)
    report.add("numerator nonnegative at xhat", num >= -SLATER_TOL, num, informational=True)
    return report


def validate(prog: FractionalProgram, convexity_samples: int = 0,
             rng: np.random.Generator | None = None,
             options: SolveOptions | None = None) -> CheckReport:
    """Structural validation; collects every violation instead of raising.

    With convexity_samples > 0, additionally spot-checks that
    h0 + sum y_j h_j is SOS-convex at that many sampled extreme-ish points
    of each function's set (a heuristic screen, not a proof: the convexity
    condition quantifies over the whole set).
    """
    report = CheckReport()
    names = [f"f{i}" for i in range(1, prog.m + 1)] + \
            [f"f{prog.m + 1} (numerator)", f"f{prog.m + 2} (denominator)"]
    if prog.n < 1:
        report.add("dimension", False, prog.n, "n must be >= 1")
    if prog.d < 0:
        report.add("half-degree", False, prog.d, "d must be >= 0")
    for name, f in zip(names, prog.functions()):
        probs = f.violations()
        for msg in probs:
            report.add(f"{name} structure", False, 0.0, msg)
        if not probs:
            report.add(f"{name} structure", True, 0.0)
        for k, p in enumerate(f.h):
            if p.n != prog.n:
                report.add(f"{name} h{k} dimension", False, p.n,
                           f"polynomial in {p.n} variables, program has {prog.n}")
            if p.degree > 2 * prog.d:
                report.add(f"{name} h{k} degree", False, p.degree,
                           f"degree exceeds 2d = {2 * prog.d}")
    if convexity_samples > 0 and report.passed:
        rng = rng or np.random.default_rng(0)
        for name, f in zip(names, prog.functions()):
            ev = InnerEvaluator(f, options)
            worst = None
            for _ in range(convexity_samples):
                if f.omega.s:
                    u = rng.standard_normal(f.omega.s)
                    u /= max(np.linalg.norm(u), 1e-12)
                    try:
                        ypt = ev.maximize_direction(u)
                    except (OmegaEmptyError, OmegaUnboundedError, RuntimeError) as exc:
                        report.add(f"{name} set sampling", False, np.nan, str(exc))
                        break
                else:
                    ypt = np.zeros(0)
                combo = f.h[0]
                for yj, hj in zip(ypt, f.h[1:]):
                    combo = combo + float(yj) * hj
                res = check_sos_convex(combo, options)
                if res.status == "not_sos":
                    worst = res
                    break
                if f.omega.s == 0:
                    break
            if worst is not None:
                report.add(f"{name} SOS-convexity sample", False, worst.margin,
                           "sampled combination is not SOS-convex")
            else:
                report.add(f"{name} SOS-convexity sample", True, 0.0)
    return report
