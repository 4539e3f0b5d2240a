"""Independent brute-force oracle: exhaustive grid search at desk scale.

Evaluates feasibility and the objective ratio at every point of a rectangular
grid and returns the best feasible point.  The result is an upper bound on
the true optimal value that tightens as the grid is refined, which is what
the main solve path is checked against (its value is a lower bound).

Plain polynomial members are evaluated vectorized; sup-type members whose
LMIs are all diagonal (polytope sets) are reduced to a max over the
polytope's vertices, enumerated once; everything else falls back to one
small SDP per grid point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import FractionalProgram, InnerEvaluator, SemialgFunction
from .polycore import Poly
from .sdpsolve import SolveOptions

ORACLE_MAX_DIM = 3


class EmptyGridError(RuntimeError):
    """No grid point satisfied all the constraints."""


@dataclass(frozen=True)
class GridSpec:
    box: tuple[tuple[float, float], ...]
    steps: int = 201

    def __post_init__(self):
        object.__setattr__(self, "box", tuple((float(lo), float(hi)) for lo, hi in self.box))
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        for lo, hi in self.box:
            if lo > hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")

    @property
    def n(self) -> int:
        return len(self.box)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, self.steps) for lo, hi in self.box]


@dataclass
class OracleResult:
    value: float
    argmin: np.ndarray
    feasible: int
    total: int


def eval_poly_grid(p: Poly, pts: np.ndarray) -> np.ndarray:
    """Evaluate a polynomial at every row of an (N, n) point array."""
    out = np.zeros(pts.shape[0])
    for a, c in p.terms.items():
        term = np.full(pts.shape[0], c)
        for i, e in enumerate(a):
            if e:
                term = term * pts[:, i] ** e
        out += term
    return out


def _diagonal_polytope_vertices(om) -> np.ndarray | None:
    """Vertices of {u : diag entries of A0 + sum u_j A_j >= 0}, or None.

    Applies only to sets without lifted variables whose matrices are all
    diagonal; returns None when the fast path does not apply or the
    polytope is unbounded (the sup could then diverge and must go through
    the lazy SDP path).
    """
    if om.p or om.s == 0:
        return None
    mats = list(om.A)
    if any(np.any(M != np.diag(np.diag(M))) for M in mats):
        return None
    a0 = np.diag(mats[0])
    U = np.column_stack([np.diag(M) for M in mats[1:]])  # rows: a0_r + U[r] @ u >= 0
    t, s = U.shape

    # bounded iff the recession cone {u : U u >= 0} is trivial
    from scipy.optimize import linprog
    for k in range(s):
        for sign in (1.0, -1.0):
            obj = np.zeros(s)
            obj[k] = -sign
            res = linprog(obj, A_ub=-U, b_ub=a0, bounds=(None, None), method="highs")
            if res.status == 3:  # unbounded
                return None

    verts = []
    for rows in itertools.combinations(range(t), s):
        M = U[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        u = np.linalg.solve(M, -a0[list(rows)])
        if np.all(a0 + U @ u >= -1e-9):
            verts.append(u)
    if not verts:
        return None
    return np.unique(np.round(np.array(verts), 12), axis=0)


class _GridFunction:
    """Evaluates one member function on many points, cheapest way available."""

    def __init__(self, f: SemialgFunction, options: SolveOptions | None = None):
        self.f = f
        self.vertices = None if f.omega.trivial else _diagonal_polytope_vertices(f.omega)
        self.evaluator = None
        if not f.omega.trivial and self.vertices is None:
            self.evaluator = InnerEvaluator(f, options)

    def values(self, pts: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        out = np.full(pts.shape[0], np.nan)
        idx = np.arange(pts.shape[0]) if mask is None else np.flatnonzero(mask)
        if idx.size == 0:
            return out
        sub = pts[idx]
        if self.f.omega.trivial:
            out[idx] = eval_poly_grid(self.f.h[0], sub)
        elif self.vertices is not None:
            h0 = eval_poly_grid(self.f.h[0], sub)
            H = np.column_stack([eval_poly_grid(hj, sub) for hj in self.f.h[1:]])
            out[idx] = h0 + (H @ self.vertices.T).max(axis=1)
        else:
            out[idx] = [self.evaluator.value(x) for x in sub]
        return out


def grid_oracle(prog: FractionalProgram, spec: GridSpec,
                options: SolveOptions | None = None) -> OracleResult:
    """Best feasible grid point of the ratio; raises EmptyGridError if none.

    Exact float ties are broken toward the point whose index tuple is
    smallest in graded-lexicographic order, so merged partial sweeps are
    deterministic.
    """
    if prog.n > ORACLE_MAX_DIM:
        raise ValueError(f"oracle limited to n <= {ORACLE_MAX_DIM}")
    if spec.n != prog.n:
        raise ValueError(f"grid has {spec.n} axes, program has {prog.n} variables")
    axes = spec.axes()
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([M.ravel(order="C") for M in mesh])
    total = pts.shape[0]

    mask = np.ones(total, dtype=bool)
    for f in prog.constraints:
        vals = _GridFunction(f, options).values(pts, mask)
        mask &= ~np.isnan(vals) & (vals <= 0.0)
        if not mask.any():
            raise EmptyGridError("no feasible point on the grid")

    num = _GridFunction(prog.numerator, options).values(pts, mask)
    den = -_GridFunction(prog.denominator_neg, options).values(pts, mask)
    ratio = np.full(total, np.inf)
    ok = mask & (den > 0)
    if not ok.any():
        raise EmptyGridError("no feasible grid point with a positive denominator")
    ratio[ok] = num[ok] / den[ok]

    best = ratio.min()
    ties = np.flatnonzero(ratio == best)
    shape = tuple(spec.steps for _ in range(prog.n))
    key = lambda flat: (sum(np.unravel_index(flat, shape)), np.unravel_index(flat, shape))
    winner = min(ties, key=key)
    return OracleResult(value=float(best), argmin=pts[winner].copy(),
                        feasible=int(mask.sum()), total=total)
