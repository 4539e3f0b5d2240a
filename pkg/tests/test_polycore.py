import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsos.polycore import (MomentVector, Poly, basis_matrices, check_sos,
                              check_sos_convex, eval_poly, gram_poly, hessian,
                              moment_functional, moment_matrix, monomial_basis,
                              variables)
from fracsos.relax import build_multiplier_dual
from fracsos.sdpsolve import solve


# ---------------------------------------------------------------- bases

def test_basis_n2_d1():
    b = monomial_basis(2, 1)
    assert b.order == ((0, 0), (1, 0), (0, 1))


def test_basis_constant_only():
    assert monomial_basis(1, 0).order == ((0,),)


def test_basis_size_binomial():
    assert len(monomial_basis(3, 2)) == math.comb(5, 3) == 10


def test_basis_graded_descending_lex():
    b = monomial_basis(2, 2)
    assert b.order == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def test_basis_rejects_bad_dims():
    with pytest.raises(ValueError):
        monomial_basis(0, 1)
    with pytest.raises(ValueError):
        monomial_basis(2, -1)


def test_basis_matrices_univariate():
    bm = basis_matrices(1, 1)
    assert np.array_equal(bm[(0,)], [[1, 0], [0, 0]])
    assert np.array_equal(bm[(1,)], [[0, 1], [1, 0]])
    assert np.array_equal(bm[(2,)], [[0, 0], [0, 1]])


def test_basis_matrices_reconstruct_moment_layout():
    # assembling sum_a y_a B_a must reproduce the textbook hankel-like layout
    bm = basis_matrices(2, 1)
    y = {(0, 0): 1.0, (1, 0): 2.0, (0, 1): 3.0, (2, 0): 4.0, (1, 1): 5.0, (0, 2): 6.0}
    M = sum(v * bm[a] for a, v in y.items())
    expected = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
    assert np.array_equal(M, expected)


@pytest.mark.parametrize("n,d", [(1, 3), (2, 2), (2, 3), (3, 2)])
def test_outer_product_identity(n, d):
    bm = basis_matrices(n, d)
    rng = np.random.default_rng(42 + n * 10 + d)
    for _ in range(50):
        x = rng.uniform(-2.0, 2.0, size=n)
        V = bm.basis.vector(x)
        S = sum(float(np.prod(x ** np.array(a))) * B for a, B in bm.table.items())
        assert np.abs(S - np.outer(V, V)).max() < 1e-10


# ---------------------------------------------------------------- moments

def test_moment_matrix_only_y0():
    y = MomentVector.full(2, 1, [1.0, 0, 0, 0, 0, 0])
    assert np.array_equal(moment_matrix(y), np.diag([1.0, 0.0, 0.0]))


def test_moment_matrix_point_mass():
    y = MomentVector.from_point([1.0, 1.0], 1)
    M = moment_matrix(y)
    assert np.array_equal(M, np.ones((3, 3)))
    ev = np.linalg.eigvalsh(M)
    assert ev.min() >= -1e-10
    assert ev[-2] <= 1e-8 * np.abs(M).max()  # rank one


def test_moment_matrix_scaled_ones():
    y = MomentVector.full(2, 1, np.full(6, 1.0 / 3.0))
    M = moment_matrix(y)
    assert np.allclose(M, np.full((3, 3), 1.0 / 3.0))
    assert np.linalg.eigvalsh(M).min() >= -1e-12


def test_moment_matrix_point_mass_property():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(1, 4))
        d = int(rng.integers(1, 3))
        x = rng.uniform(-1.5, 1.5, size=n)
        M = moment_matrix(MomentVector.from_point(x, d))
        ev = np.linalg.eigvalsh(M)
        assert ev.min() >= -1e-10
        if len(ev) > 1:
            assert ev[-2] <= 1e-8 * max(np.abs(M).max(), 1.0)


def test_moment_vector_requires_completeness():
    with pytest.raises(ValueError, match="incomplete"):
        MomentVector.full(2, 1, {(0, 0): 1.0})


def test_moment_functional_constant():
    y = MomentVector.full(2, 1, np.arange(6.0) + 1.0)
    assert moment_functional(y, Poly.constant(2, 1.0)) == y.y0 == 1.0


def test_moment_functional_first_order():
    y = MomentVector.full(2, 1, np.full(6, 1.0 / 3.0))
    x1, _ = variables(2)
    assert np.isclose(moment_functional(y, x1), 1.0 / 3.0)


def test_moment_functional_degree_overflow():
    y = MomentVector.full(2, 1, np.zeros(6))
    x1, _ = variables(2)
    with pytest.raises(ValueError, match="degree"):
        moment_functional(y, x1 ** 3)


def test_moment_functional_linearity():
    rng = np.random.default_rng(9)
    y = MomentVector.full(2, 2, rng.standard_normal(15))
    for _ in range(20):
        fa = Poly(2, {(2, 0): rng.standard_normal(), (1, 1): rng.standard_normal()})
        fb = Poly(2, {(0, 0): rng.standard_normal(), (0, 2): rng.standard_normal()})
        a, b = rng.standard_normal(2)
        lhs = moment_functional(y, a * fa + b * fb)
        rhs = a * moment_functional(y, fa) + b * moment_functional(y, fb)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def _random_convex_quadratic(rng, n):
    A = rng.standard_normal((n, n))
    b = rng.standard_normal(n)
    c = rng.standard_normal()
    xs = variables(n)
    out = Poly.constant(n, float(c))
    for i in range(n):
        row = Poly.zero(n)
        for j in range(n):
            row = row + float(A[i, j]) * xs[j]
        out = out + row * row
    for i in range(n):
        out = out + float(b[i]) * xs[i]
    return out


def _convex_combination_moments(rng, n, d, k=3):
    pts = rng.uniform(-2.0, 2.0, size=(k, n))
    w = rng.dirichlet(np.ones(k))
    vals = None
    for wk, pk in zip(w, pts):
        yk = MomentVector.from_point(pk, d)
        arr = yk.as_array() * wk
        vals = arr if vals is None else vals + arr
    return MomentVector.full(n, d, vals)


def test_jensen_inequality_for_convex_moments():
    rng = np.random.default_rng(123)
    for _ in range(100):
        n = int(rng.integers(1, 3))
        f = _random_convex_quadratic(rng, n)
        y = _convex_combination_moments(rng, n, 1)
        assert np.isclose(y.y0, 1.0)
        mean = np.array([moment_functional(y, v) for v in variables(n)])
        assert moment_functional(y, f) >= eval_poly(f, mean) - 1e-8


# ---------------------------------------------------------------- evaluation

def test_eval_poly_origin():
    x1, x2 = variables(2)
    assert eval_poly(x1 ** 2 + x2 ** 2, [0.0, 0.0]) == 0.0


def test_eval_poly_shifted_square():
    x1, x2 = variables(2)
    f = (x1 + x2) ** 2 - 10.0
    assert eval_poly(f, [1.0, 1.0]) == -6.0


def test_eval_poly_even_power():
    x1, _ = variables(2)
    assert eval_poly(x1 ** 8, [-1.0, 5.0]) == 1.0


def test_eval_poly_dimension_mismatch():
    x1, _ = variables(2)
    with pytest.raises(ValueError):
        eval_poly(x1, [1.0])


# ---------------------------------------------------------------- hessian

def test_hessian_univariate_square():
    (x,) = variables(1)
    H = hessian(x ** 2)
    assert H[0][0].terms == {(0,): 2.0}


def test_hessian_bilinear():
    x1, x2 = variables(2)
    H = hessian(x1 * x2)
    assert H[0][0].terms == {}
    assert H[0][1].terms == {(0, 0): 1.0}
    assert H[1][0].terms == {(0, 0): 1.0}


def test_hessian_high_power():
    (x,) = variables(1)
    H = hessian(x ** 8)
    assert H[0][0].terms == {(6,): 56.0}


def _sympy_hessian_terms(f):
    xs = sympy.symbols(f"v0:{f.n}")
    expr = sum(c * sympy.prod([xs[i] ** e for i, e in enumerate(a)])
               for a, c in f.terms.items())
    out = []
    for i in range(f.n):
        row = []
        for j in range(f.n):
            d = sympy.expand(sympy.diff(expr, xs[i], xs[j]))
            p = sympy.Poly(d, *xs) if d != 0 else None
            row.append({} if p is None else
                       {tuple(int(e) for e in mono): float(c)
                        for mono, c in p.terms()})
        out.append(row)
    return out


def test_hessian_against_symbolic_oracle():
    rng = np.random.default_rng(77)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        terms = {}
        for _ in range(6):
            a = tuple(int(e) for e in rng.integers(0, 4, size=n))
            terms[a] = float(rng.standard_normal())
        f = Poly(n, terms)
        ours = hessian(f)
        ref = _sympy_hessian_terms(f)
        for i in range(n):
            for j in range(n):
                keys = set(ours[i][j].terms) | set(ref[i][j])
                for a in keys:
                    assert np.isclose(ours[i][j].terms.get(a, 0.0),
                                      ref[i][j].get(a, 0.0), atol=1e-12)


# ---------------------------------------------------------------- SOS checks

def test_check_sos_simple_square():
    x1, x2 = variables(2)
    res = check_sos(x1 ** 2)
    assert res.status == "sos"
    assert res.order == ((0, 0), (1, 0), (0, 1))
    assert np.allclose(res.gram, np.diag([0.0, 1.0, 0.0]), atol=1e-7)


def test_check_sos_negative_at_origin():
    x1, _ = variables(2)
    res = check_sos(x1 ** 2 - 1.0)
    assert res.status == "not_sos"
    assert res.margin > 1e-7


def test_check_sos_odd_degree():
    (x,) = variables(1)
    assert check_sos(x ** 3).status == "not_sos"


def test_check_sos_zero_polynomial():
    assert check_sos(Poly.zero(2)).status == "sos"


def test_check_sos_aggregate_certificate(ex2):
    # the optimal multipliers of the certificate-side program assemble into a
    # polynomial that must itself admit a Gram certificate
    cp = build_multiplier_dual(ex2)
    sol = solve(cp)
    assert sol.status == "optimal"
    lam0 = cp.layout.get(sol.x, "lam0")
    phi = Poly.zero(ex2.n)
    for i, f in enumerate(ex2.functions(), start=1):
        phi = phi + float(lam0[i - 1]) * f.h[0]
        if f.omega.s:
            lam = cp.layout.get(sol.x, f"lam{i}")
            for j, hj in enumerate(f.h[1:]):
                phi = phi + float(lam[j]) * hj
    res = check_sos(phi)
    assert res.status == "sos"
    assert np.linalg.eigvalsh(res.gram).min() >= -1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_gram_roundtrip_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    qs = []
    for _ in range(int(rng.integers(1, 4))):
        terms = {tuple(int(e) for e in rng.integers(0, 2, size=n)): float(rng.standard_normal())
                 for _ in range(3)}
        qs.append(Poly(n, terms))
    f = Poly.zero(n)
    for q in qs:
        f = f + q * q
    res = check_sos(f)
    assert res.status == "sos"
    rec = gram_poly(n, res.order, res.gram)
    pts = rng.uniform(-2, 2, size=(20, n))
    for x in pts:
        fx = eval_poly(f, x)
        assert abs(eval_poly(rec, x) - fx) <= 1e-8 * max(1.0, abs(fx))


def test_check_sos_convex_quadratic():
    x1, x2 = variables(2)
    assert check_sos_convex(x1 ** 2 + x2 ** 2).status == "sos"


def test_check_sos_convex_degree8():
    x1, x2 = variables(2)
    f = x1 ** 8 + x1 ** 2 + x1 * x2 + x2 ** 2
    assert check_sos_convex(f).status == "sos"


def test_check_sos_convex_cubic_fails():
    (x,) = variables(1)
    assert check_sos_convex(x ** 3).status == "not_sos"


def test_check_sos_convex_affine():
    x1, x2 = variables(2)
    assert check_sos_convex(3.0 * x1 - x2 + 1.0).status == "sos"
