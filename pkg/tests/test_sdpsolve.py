import numpy as np
import pytest

from fracsos.conic import ProgramBuilder, svec
from fracsos.relax import build_moment_relaxation
from fracsos.sdpsolve import SolveOptions, residuals, solve


def _lp_min_x():
    b = ProgramBuilder("min")
    b.add_nonneg("x", 1)
    b.set_objective({"x": [1.0]})
    return b.build()


def _sdp_unit_corner():
    # min <I, X> s.t. X[0,0] = 1, X PSD 2x2; analytic optimum at e1 e1'
    b = ProgramBuilder("min")
    b.add_psd("X", 2)
    row = np.zeros(3)
    row[0] = 1.0
    b.add_row("x00", {"X": row}, 1.0)
    b.set_objective({"X": svec(np.eye(2))})
    return b.build()


def test_lp_trivial():
    sol = solve(_lp_min_x())
    assert sol.status == "optimal"
    assert abs(sol.obj_primal) <= 1e-8
    assert abs(sol.x[0]) <= 1e-8


def test_sdp_analytic():
    sol = solve(_sdp_unit_corner())
    assert sol.status == "optimal"
    assert np.isclose(sol.obj_primal, 1.0, atol=1e-7)
    X = _sdp_unit_corner().layout.get(sol.x, "X")
    assert np.allclose(X, np.array([[1.0, 0.0], [0.0, 0.0]]), atol=1e-6)


def test_moment_program_matches_reported_value(ex2):
    cp = build_moment_relaxation(ex2)
    sol = solve(cp)
    assert sol.status == "optimal"
    assert abs(sol.obj_primal - 1.4907) <= 1e-3


def test_infeasible_with_certificate():
    b = ProgramBuilder("min")
    b.add_nonneg("x", 1)
    b.add_row("pin", {"x": [1.0]}, -1.0)
    b.set_objective({"x": [0.0]})
    sol = solve(b.build())
    assert sol.status == "infeasible"
    assert sol.cert_margin > 1e-7
    assert sol.y is not None


def test_unbounded_with_ray():
    b = ProgramBuilder("min")
    b.add_nonneg("x", 1)
    b.set_objective({"x": [-1.0]})
    sol = solve(b.build())
    assert sol.status == "unbounded"
    assert sol.cert_margin > 1e-7
    assert sol.x is not None and sol.x[0] > 0


def test_scaling_objective_only():
    cp = _sdp_unit_corner()
    base = solve(cp)
    cp10 = _sdp_unit_corner()
    cp10.c = cp10.c * 10.0
    scaled = solve(cp10)
    assert scaled.status == base.status == "optimal"
    assert np.isclose(scaled.obj_primal, 10.0 * base.obj_primal, rtol=1e-7)
    assert np.allclose(scaled.x, base.x, atol=1e-6)


def test_scaling_rhs_only():
    cp = _sdp_unit_corner()
    base = solve(cp)
    cp10 = _sdp_unit_corner()
    cp10.b = cp10.b * 10.0
    scaled = solve(cp10)
    assert scaled.status == base.status == "optimal"
    assert np.isclose(scaled.obj_primal, 10.0 * base.obj_primal, rtol=1e-7)
    assert np.allclose(scaled.x / 10.0, base.x, atol=1e-6)


def test_residuals_recomputable(ex2):
    cp = build_moment_relaxation(ex2)
    sol = solve(cp)
    rp, rd, gap = residuals(cp, sol.x, sol.y, sol.z)
    assert abs(rp - sol.res_primal) <= 1e-12
    assert abs(rd - sol.res_dual) <= 1e-12
    assert abs(gap - sol.res_gap) <= 1e-12
    assert max(rp, rd, gap) <= 1e-8  # optimal status implies contract tolerances


def test_max_iter_status(ex2):
    cp = build_moment_relaxation(ex2)
    sol = solve(cp, SolveOptions(max_iter=2))
    assert sol.status in ("max_iter", "optimal")
    if sol.status == "max_iter":
        assert sol.iterations >= 2


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(tol_gap=0.0)
    with pytest.raises(ValueError):
        SolveOptions(max_iter=0)


def test_deterministic_resolve(ex2):
    cp1 = build_moment_relaxation(ex2)
    cp2 = build_moment_relaxation(ex2)
    s1, s2 = solve(cp1), solve(cp2)
    assert s1.status == s2.status == "optimal"
    assert np.array_equal(s1.x, s2.x)
    assert s1.obj_primal == s2.obj_primal
