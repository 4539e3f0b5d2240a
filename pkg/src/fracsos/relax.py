"""Assembly of the two conic formulations attached to a fractional program.

build_moment_relaxation produces the moment-side program: variables are a
pseudo-moment vector y, one PSD multiplier block Z_i per sup-type member
function, and an auxiliary PSD block S tied to sum_a y_a B_a; minimizing the
numerator functional under the denominator normalization 1 + <denominator
data, (y, Z)> <= 0.  Its optimum equals the program's optimal ratio and the
optimizer is read off y directly -- no parameter iteration anywhere.

build_multiplier_dual produces the certificate-side program: nonnegative
weights lam0_i, set multipliers lam_j^i and lifted z_l^i, one LMI block per
sup-type function and a Gram block X matching the aggregated polynomial
coefficientwise; maximizing the denominator weight.  The two programs are
conic duals of each other.

Degenerate member functions with no set variables at all (plain polynomials)
get no multiplier block: their LMI reduces to a scalar sign constraint and
the corresponding Z_i would be pure slack.

Row and variable orders are deterministic: moment rows follow (denominator,
constraints, couplings by function then index, moment-matrix tie in svec
order); coefficient rows follow the graded-lex monomial order.
"""

from __future__ import annotations

import numpy as np

# svec/smat and the layout types are re-exported as part of this module's surface
from .conic import (ConicProgram, ProgramBuilder, VariableLayout,  # noqa: F401
                    smat, svec, svec_len)
from .model import FractionalProgram, inner_solution, validate
from .polycore import (MultiIndex, Poly, _basis_matrices_for, monomial_basis,
                       monomials_upto, support_products)


class SupportError(ValueError):
    """A polynomial monomial cannot be represented on the reduced support."""


def half_support_basis(prog: FractionalProgram) -> tuple[MultiIndex, ...]:
    """Monomial candidates for the Gram/moment bases under support reduction.

    Takes the integer points of half the Newton polytope of the union of all
    member-polynomial supports (any square in a certificate lives there),
    and always includes the constant and linear monomials so that the
    optimizer can still be read off the moment vector.
    """
    from scipy.optimize import linprog

    pts: set[MultiIndex] = set()
    for f in prog.functions():
        for p in f.h:
            pts |= set(p.terms)
    pts.add((0,) * prog.n)
    V = np.array(sorted(pts), dtype=float)
    keep: list[MultiIndex] = []
    ones = np.ones((1, V.shape[0]))
    for beta in monomials_upto(prog.n, prog.d):
        target = 2.0 * np.array(beta, dtype=float)
        res = linprog(c=np.zeros(V.shape[0]),
                      A_eq=np.vstack([V.T, ones]),
                      b_eq=np.concatenate([target, [1.0]]),
                      bounds=(0, None), method="highs")
        if res.status == 0:
            keep.append(beta)
    unit = {(0,) * prog.n}
    unit |= {tuple(1 if k == i else 0 for k in range(prog.n)) for i in range(prog.n)}
    keep = sorted(set(keep) | unit, key=lambda a: (sum(a), tuple(-e for e in a)))
    return tuple(keep)


def moment_support(prog: FractionalProgram, reduce_support: bool = False):
    """The (gram basis, moment support) pair used by both formulations."""
    if reduce_support:
        gram = half_support_basis(prog)
    else:
        gram = tuple(monomial_basis(prog.n, prog.d).order)
    support = support_products(gram)
    covered = set(support)
    for f in prog.functions():
        for p in f.h:
            for a in p.terms:
                if a not in covered:
                    raise SupportError(
                        f"monomial {a} is outside the moment support "
                        f"({'reduced' if reduce_support else 'full'} basis)")
    return gram, support


def _poly_row(p: Poly, index: dict[MultiIndex, int], size: int) -> np.ndarray:
    v = np.zeros(size)
    for a, c in p.terms.items():
        v[index[a]] += c
    return v


def _require_valid(prog: FractionalProgram):
    report = validate(prog)
    if not report.passed:
        bad = "; ".join(line for line in report.lines() if line.startswith("[FAIL]"))
        raise ValueError(f"invalid program: {bad}")


def build_moment_relaxation(prog: FractionalProgram,
                            reduce_support: bool = False) -> ConicProgram:
    """Assemble the moment-side program (a minimization).

    Layout spans: "y" (free pseudo-moments), "slack" (one nonnegative slack
    per inequality: denominator normalization first, then each constraint),
    "Z{i}" PSD blocks for sup-type member functions, "S" for the moment
    matrix.  meta records the bases in use.
    """
    _require_valid(prog)
    gram, support = moment_support(prog, reduce_support)
    index = {a: k for k, a in enumerate(support)}
    ny = len(support)
    funcs = prog.functions()
    m = prog.m

    builder = ProgramBuilder("min")
    builder.add_free("y", ny)
    builder.add_nonneg("slack", m + 1)
    for i, f in enumerate(funcs, start=1):
        if not f.omega.trivial:
            builder.add_psd(f"Z{i}", f.omega.t)
    builder.add_psd("S", len(gram))

    def zname(i):
        return f"Z{i}" if builder.has_span(f"Z{i}") else None

    def slack_unit(k):
        e = np.zeros(m + 1)
        e[k] = 1.0
        return e

    # denominator normalization: 1 + <h0_den, y> + <A0_den, Z_den> + slack0 = 0
    den = funcs[m + 1]
    coeffs = {"y": _poly_row(den.h[0], index, ny), "slack": slack_unit(0)}
    if zname(m + 2):
        coeffs[zname(m + 2)] = svec(den.omega.A[0])
    builder.add_row("den", coeffs, -1.0)

    # constraint rows: <h0_i, y> + <A0_i, Z_i> + slack_i = 0
    for i, f in enumerate(prog.constraints, start=1):
        coeffs = {"y": _poly_row(f.h[0], index, ny), "slack": slack_unit(i)}
        if zname(i):
            coeffs[zname(i)] = svec(f.omega.A[0])
        builder.add_row(f"con{i}", coeffs, 0.0)

    # couplings: <h_j^i, y> + <A_j^i, Z_i> = 0
    for i, f in enumerate(funcs, start=1):
        for j in range(1, f.omega.s + 1):
            builder.add_row(f"h{i}.{j}", {
                "y": _poly_row(f.h[j], index, ny),
                zname(i): svec(f.omega.A[j]),
            }, 0.0)

    # lifted couplings: <B_l^i, Z_i> = 0
    for i, f in enumerate(funcs, start=1):
        for l in range(1, f.omega.p + 1):
            builder.add_row(f"lift{i}.{l}", {zname(i): svec(f.omega.B[l - 1])}, 0.0)

    # moment-matrix tie: svec(S) - sum_a y_a svec(B_a) = 0
    bmats = _basis_matrices_for(prog.n, gram)
    nS = svec_len(len(gram))
    Scols = np.zeros((nS, ny))
    for a, B in bmats.table.items():
        Scols[:, index[a]] = svec(B)
    eye = np.eye(nS)
    for r in range(nS):
        builder.add_row(f"moment{r}", {"S": eye[r], "y": -Scols[r]}, 0.0)

    # objective: numerator functional
    num = funcs[m]
    obj = {"y": _poly_row(num.h[0], index, ny)}
    if zname(m + 1):
        obj[zname(m + 1)] = svec(num.omega.A[0])
    builder.set_objective(obj)
    return builder.build(meta={
        "gram_order": gram, "support": support, "reduced": reduce_support,
        "kind": "moment",
    })


def build_multiplier_dual(prog: FractionalProgram,
                          reduce_support: bool = False,
                          fixed_denominator_weight: float | None = None) -> ConicProgram:
    """Assemble the certificate-side program (a maximization).

    Coefficient rows equate, monomial by monomial, the weighted sum of
    member polynomials with a Gram expansion <B_a, X>; each sup-type
    function gets an LMI block over its multipliers; the numerator weight
    is pinned to one.

    With fixed_denominator_weight=g the denominator weight is pinned to g
    and a free offset is subtracted from the constant coefficient and
    maximized instead; the optimum is then the certified lower bound of
    numerator + g * denominator_neg over the feasible set (the classical
    parametric subproblem, used here only as a diagnostic).
    """
    _require_valid(prog)
    gram, support = moment_support(prog, reduce_support)
    funcs = prog.functions()
    m = prog.m
    dinkelbach = fixed_denominator_weight is not None

    builder = ProgramBuilder("max")
    for i, f in enumerate(funcs, start=1):
        if f.omega.s:
            builder.add_free(f"lam{i}", f.omega.s)
        if f.omega.p:
            builder.add_free(f"zeta{i}", f.omega.p)
    if dinkelbach:
        builder.add_free("offset", 1)
    builder.add_nonneg("lam0", m + 2)
    for i, f in enumerate(funcs, start=1):
        if not f.omega.trivial:
            builder.add_psd(f"L{i}", f.omega.t)
    builder.add_psd("X", len(gram))

    bmats = _basis_matrices_for(prog.n, gram)
    zero_a = (0,) * prog.n

    # coefficient rows, one per monomial in the support
    for a in support:
        coeffs = {"X": -svec(bmats.table[a])}
        lam0_row = np.zeros(m + 2)
        for i, f in enumerate(funcs, start=1):
            lam0_row[i - 1] = f.h[0].terms.get(a, 0.0)
            if f.omega.s:
                lam_row = np.array([f.h[j].terms.get(a, 0.0)
                                    for j in range(1, f.omega.s + 1)])
                if lam_row.any():
                    coeffs[f"lam{i}"] = lam_row
        if lam0_row.any():
            coeffs["lam0"] = lam0_row
        if dinkelbach and a == zero_a:
            coeffs["offset"] = -np.ones(1)
        builder.add_row(f"coef{a}", coeffs, 0.0)

    # LMI tie per sup-type function:
    # svec(L_i) - lam0_i svec(A0) - sum_j lam_j svec(A_j) - sum_l zeta_l svec(B_l) = 0
    for i, f in enumerate(funcs, start=1):
        if f.omega.trivial:
            continue
        om = f.omega
        nsvec = svec_len(om.t)
        eye = np.eye(nsvec)
        a0 = svec(om.A[0])
        Acols = np.column_stack([svec(M) for M in om.A[1:]]) if om.s else None
        Bcols = np.column_stack([svec(M) for M in om.B]) if om.p else None
        for r in range(nsvec):
            lam0_row = np.zeros(m + 2)
            lam0_row[i - 1] = -a0[r]
            coeffs = {f"L{i}": eye[r], "lam0": lam0_row}
            if om.s:
                coeffs[f"lam{i}"] = -Acols[r]
            if om.p:
                coeffs[f"zeta{i}"] = -Bcols[r]
            builder.add_row(f"lmi{i}.{r}", coeffs, 0.0)

    # pins
    pin = np.zeros(m + 2)
    pin[m] = 1.0
    builder.add_row("pin_numerator", {"lam0": pin}, 1.0)
    if dinkelbach:
        pin2 = np.zeros(m + 2)
        pin2[m + 1] = 1.0
        builder.add_row("pin_denominator", {"lam0": pin2},
                        float(fixed_denominator_weight))

    if dinkelbach:
        builder.set_objective({"offset": np.ones(1)})
    else:
        obj = np.zeros(m + 2)
        obj[m + 1] = 1.0
        builder.set_objective({"lam0": obj})
    return builder.build(meta={
        "gram_order": gram, "support": support, "reduced": reduce_support,
        "kind": "dinkelbach" if dinkelbach else "multiplier",
    })


def charnes_cooper_point(prog: FractionalProgram, x, cp: ConicProgram) -> np.ndarray:
    """Map a strictly feasible x into a feasible point of the moment program.

    Normalizes the monomial vector of x by the (positive) denominator value
    and scales each inner-optimal dual matrix the same way; the resulting
    objective equals the ratio at x.  Used to validate the relaxation
    against primal feasible points.
    """
    if cp.meta.get("kind") != "moment":
        raise ValueError("expected a moment-side program")
    x = np.asarray(x, dtype=float)
    support = cp.meta["support"]
    funcs = prog.functions()
    m = prog.m
    inners = [inner_solution(f, x) for f in funcs]
    den = -inners[m + 1].value
    if den <= 0:
        raise ValueError(f"denominator {den} not positive at {x}")
    values = {"y": np.array([float(np.prod(x ** np.array(a))) for a in support]) / den}
    for i, (f, sol) in enumerate(zip(funcs, inners), start=1):
        if not f.omega.trivial:
            values[f"Z{i}"] = sol.W / den

    gram = cp.meta["gram_order"]
    V = np.array([float(np.prod(x ** np.array(a))) for a in gram])
    values["S"] = np.outer(V, V) / den

    slack = np.zeros(m + 1)
    den_f = funcs[m + 1]
    s0 = 1.0 + sum(c * values["y"][support.index(a)] for a, c in den_f.h[0].terms.items())
    if not den_f.omega.trivial:
        s0 += float(np.sum(den_f.omega.A[0] * (inners[m + 1].W / den)))
    slack[0] = -s0
    for i, f in enumerate(prog.constraints, start=1):
        si = sum(c * values["y"][support.index(a)] for a, c in f.h[0].terms.items())
        if not f.omega.trivial:
            si += float(np.sum(f.omega.A[0] * (inners[i - 1].W / den)))
        slack[i] = -si
    values["slack"] = np.maximum(slack, 0.0)
    return cp.layout.pack(values)
