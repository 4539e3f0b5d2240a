"""Solve standard-form conic programs with a primal-dual interior-point method.

The numerical engine is cvxopt's conelp (a Nesterov-Todd scaled path-following
method with self-dual-embedding style infeasibility detection).  This module
owns the contract: translation to/from the ConicProgram layout, residual
recomputation against the raw (A, b, c) data, status classification, and
certificate extraction.  Free variables stay free (no nonnegative splitting).

Conventions: duals (y, z) always refer to the minimization form
    min c_min.x  s.t.  A x = b,  x in K,
whose dual is  max b.y  s.t.  z = c_min - A'y in K*.  For sense="max"
programs the reported objective values are in the original sense.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from cvxopt import matrix as cvxmat
from cvxopt import solvers as cvxsolvers

from .conic import ConicProgram, smat, svec_len


@dataclass(frozen=True)
class SolveOptions:
    tol_gap: float = 1e-8
    tol_feas: float = 1e-8
    max_iter: int = 200
    verbosity: int = 0

    def __post_init__(self):
        if self.tol_gap <= 0 or self.tol_feas <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class ConicSolution:
    status: str  # optimal | infeasible | unbounded | max_iter | numerical_failure
    x: np.ndarray | None
    y: np.ndarray | None
    z: np.ndarray | None
    obj_primal: float
    obj_dual: float
    res_primal: float
    res_dual: float
    res_gap: float
    iterations: int
    cert_margin: float = 0.0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def residuals(cp: ConicProgram, x: np.ndarray, y: np.ndarray, z: np.ndarray):
    """Recompute (primal, dual, gap) residuals from the program data.

    primal: ||Ax - b|| / (1 + ||b||), folded with the cone violation of x;
    dual:   ||c_min - A'y - z|| / (1 + ||c||);
    gap:    |c_min.x - b.y| / (1 + max(|c_min.x|, |b.y|)).
    """
    c = cp.c_min()
    rp = np.linalg.norm(cp.A @ x - cp.b) / (1.0 + np.linalg.norm(cp.b)) if cp.n_rows else 0.0
    rp = max(rp, cp.cone_violation(x) / (1.0 + float(np.linalg.norm(x))))
    rd = np.linalg.norm(c - (cp.A.T @ y if cp.n_rows else 0.0) - z) / (1.0 + np.linalg.norm(c))
    pobj = float(c @ x)
    dobj = float(cp.b @ y) if cp.n_rows else 0.0
    gap = abs(pobj - dobj) / (1.0 + max(abs(pobj), abs(dobj)))
    return float(rp), float(rd), float(gap)


def _cone_rows(cp: ConicProgram):
    """cvxopt G, h, dims for the cone segment of the variable vector.

    Nonnegative coordinates map one-to-one; each PSD block's svec coordinates
    expand to the full t*t column-major matrix cvxopt expects.
    """
    n = cp.n
    grows = []
    off = cp.n_free
    for i in range(cp.n_nonneg):
        row = np.zeros(n)
        row[off + i] = -1.0
        grows.append(row)
    off += cp.n_nonneg
    for t in cp.psd_dims:
        iu, ju = np.triu_indices(t)
        colmap = {}
        for k, (i, j) in enumerate(zip(iu, ju)):
            colmap[(i, j)] = (off + k, 1.0 if i == j else 1.0 / np.sqrt(2.0))
        for cidx in range(t):  # column-major full matrix
            for ridx in range(t):
                row = np.zeros(n)
                key = (min(ridx, cidx), max(ridx, cidx))
                col, scale = colmap[key]
                row[col] = -scale
                grows.append(row)
        off += svec_len(t)
    G = np.array(grows) if grows else np.zeros((0, n))
    h = np.zeros(G.shape[0])
    dims = {"l": cp.n_nonneg, "q": [], "s": list(cp.psd_dims)}
    return G, h, dims


def _pull_cone_dual(cp: ConicProgram, G: np.ndarray, zraw: np.ndarray) -> np.ndarray:
    """Map cvxopt's cone dual back into the variable space: z = -G'z_raw."""
    return -(G.T @ zraw)


def solve(cp: ConicProgram, opts: SolveOptions | None = None) -> ConicSolution:
    """Solve a ConicProgram; statuses are decided by recomputed residuals.

    Infeasible/unbounded results surface their certificates: an improving
    dual ray in (y, z) for infeasibility, a primal ray in x for
    unboundedness, each with a normalized margin in cert_margin.
    """
    opts = opts or SolveOptions()
    c = cp.c_min()
    G, h, dims = _cone_rows(cp)
    has_eq = cp.n_rows > 0
    cvx_options = {
        "show_progress": opts.verbosity > 1,
        "maxiters": opts.max_iter,
        # push past the contract tolerances; final status is decided below
        "abstol": 0.1 * opts.tol_gap,
        "reltol": 0.1 * opts.tol_gap,
        "feastol": 0.1 * opts.tol_feas,
    }
    kwargs = {"options": cvx_options}
    if has_eq:
        kwargs["A"] = cvxmat(cp.A)
        kwargs["b"] = cvxmat(cp.b)
    try:
        sol = cvxsolvers.conelp(cvxmat(c), cvxmat(G), cvxmat(h), dims=dims, **kwargs)
    except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
        return ConicSolution(
            status="numerical_failure", x=None, y=None, z=None,
            obj_primal=np.nan, obj_dual=np.nan,
            res_primal=np.inf, res_dual=np.inf, res_gap=np.inf,
            iterations=0, message=f"conelp failed: {exc}")

    iters = int(sol.get("iterations", 0))
    raw_status = sol["status"]

    def vec(key):
        v = sol.get(key)
        return None if v is None else np.asarray(v, dtype=float).ravel()

    xv, yv, zv = vec("x"), vec("y"), vec("z")
    if yv is None:
        yv = np.zeros(0)

    if raw_status == "primal infeasible":
        # certificate: z_raw in K*, A'y + G'z_raw = 0, b'y + h'z_raw = -1
        ycert = -yv if has_eq else np.zeros(cp.n_rows)
        zcert = _pull_cone_dual(cp, G, zv) if zv is not None else None
        scale = 1.0 + (np.linalg.norm(ycert) if ycert.size else 0.0) + (
            np.linalg.norm(zv) if zv is not None else 0.0)
        drift = np.linalg.norm((cp.A.T @ (-ycert) if has_eq else 0.0) + (G.T @ zv if zv is not None else 0.0))
        improving = float(cp.b @ ycert) if has_eq else 0.0
        margin = improving / scale if drift / scale < 1e-7 else 0.0
        return ConicSolution(
            status="infeasible", x=None, y=ycert, z=zcert,
            obj_primal=np.nan, obj_dual=np.nan,
            res_primal=np.inf, res_dual=0.0, res_gap=np.inf,
            iterations=iters, cert_margin=margin,
            message="equality system has no point in the cone")

    if raw_status == "dual infeasible":
        # certificate ray: A x = 0, x in K, c_min.x = -1
        scale = 1.0 + (np.linalg.norm(xv) if xv is not None else 0.0)
        drift = np.linalg.norm(cp.A @ xv) if (has_eq and xv is not None) else 0.0
        drift = max(drift, cp.cone_violation(xv) if xv is not None else np.inf)
        improving = -float(c @ xv) if xv is not None else 0.0
        margin = improving / scale if drift / scale < 1e-7 else 0.0
        return ConicSolution(
            status="unbounded", x=xv, y=None, z=None,
            obj_primal=np.nan, obj_dual=np.nan,
            res_primal=0.0, res_dual=np.inf, res_gap=np.inf,
            iterations=iters, cert_margin=margin,
            message="objective is unbounded along a feasible ray")

    if xv is None or zv is None:
        return ConicSolution(
            status="numerical_failure", x=None, y=None, z=None,
            obj_primal=np.nan, obj_dual=np.nan,
            res_primal=np.inf, res_dual=np.inf, res_gap=np.inf,
            iterations=iters, message=f"conelp returned no iterate (status {raw_status!r})")

    y_min = -yv if has_eq else np.zeros(0)
    z_min = _pull_cone_dual(cp, G, zv)
    rp, rd, gap = residuals(cp, xv, y_min, z_min)
    pobj_min = float(c @ xv)
    dobj_min = float(cp.b @ y_min) if has_eq else 0.0
    sign = 1.0 if cp.sense == "min" else -1.0
    sol_out = ConicSolution(
        status="optimal", x=xv, y=y_min, z=z_min,
        obj_primal=sign * pobj_min, obj_dual=sign * dobj_min,
        res_primal=rp, res_dual=rd, res_gap=gap, iterations=iters)
    if rp <= opts.tol_feas and rd <= opts.tol_feas and gap <= opts.tol_gap:
        return sol_out
    status = "max_iter" if iters >= opts.max_iter else "numerical_failure"
    return replace(sol_out, status=status,
                   message=f"residuals {rp:.2e}/{rd:.2e}/{gap:.2e} exceed tolerances "
                           f"(conelp status {raw_status!r})")
