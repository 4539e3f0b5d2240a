"""Multi-index polynomials, monomial bases, moment matrices and SOS checks.

Polynomials are sparse maps from exponent tuples to float coefficients.
Monomial bases are graded (by total degree) with descending lexicographic
order inside each degree, so for n=2, d=1 the basis reads (1, x1, x2) and
for d=2 it continues (x1^2, x1*x2, x2^2).  All layouts and serialized
indices in the package refer to this order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conic import ProgramBuilder, smat, svec
from .sdpsolve import SolveOptions, solve

MultiIndex = tuple[int, ...]


def _check_index(alpha, n: int) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise ValueError(f"multi-index {alpha} has length {len(alpha)}, expected {n}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index {alpha} has negative exponents")
    return alpha


@dataclass(frozen=True)
class Poly:
    """Real polynomial as a sparse exponent-tuple -> coefficient map."""

    n: int
    terms: dict[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be at least 1")
        clean = {}
        for alpha, coef in self.terms.items():
            alpha = _check_index(alpha, self.n)
            coef = float(coef)
            if coef != 0.0:
                clean[alpha] = coef
        object.__setattr__(self, "terms", clean)

    @staticmethod
    def zero(n: int) -> "Poly":
        return Poly(n, {})

    @staticmethod
    def constant(n: int, value: float) -> "Poly":
        return Poly(n, {(0,) * n: value})

    @staticmethod
    def variable(n: int, i: int) -> "Poly":
        alpha = tuple(1 if k == i else 0 for k in range(n))
        return Poly(n, {alpha: 1.0})

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def coeff(self, alpha) -> float:
        return self.terms.get(_check_index(alpha, self.n), 0.0)

    def __add__(self, other):
        other = other if isinstance(other, Poly) else Poly.constant(self.n, other)
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0.0) + c
        return Poly(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.n, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-(other if isinstance(other, Poly) else Poly.constant(self.n, other)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.n, {a: c * float(other) for a, c in self.terms.items()})
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        out: dict[MultiIndex, float] = {}
        for a1, c1 in self.terms.items():
            for a2, c2 in other.terms.items():
                a = tuple(x + y for x, y in zip(a1, a2))
                out[a] = out.get(a, 0.0) + c1 * c2
        return Poly(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = Poly.constant(self.n, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, x) -> float:
        return eval_poly(self, x)


def variables(n: int) -> tuple[Poly, ...]:
    """Convenience: the coordinate polynomials (x1, ..., xn)."""
    return tuple(Poly.variable(n, i) for i in range(n))


def monomials_upto(n: int, d: int) -> list[MultiIndex]:
    """All exponent tuples with |alpha| <= d, graded, descending-lex in each degree."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    if d < 0:
        raise ValueError("degree must be nonnegative")

    def exact(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in exact(total - first, parts - 1):
                yield (first,) + rest

    out: list[MultiIndex] = []
    for k in range(d + 1):
        out.extend(exact(k, n))
    return out


def basis_size(n: int, d: int) -> int:
    return math.comb(n + d, n)


@dataclass(frozen=True)
class MonomialBasis:
    """Graded monomial basis of degree <= d in n variables."""

    n: int
    d: int
    order: tuple[MultiIndex, ...]
    index: dict[MultiIndex, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {a: i for i, a in enumerate(self.order)})

    def __len__(self) -> int:
        return len(self.order)

    def vector(self, x) -> np.ndarray:
        """Evaluate every basis monomial at the point x."""
        x = np.asarray(x, dtype=float)
        return np.array([np.prod(x ** np.array(a)) for a in self.order])


def monomial_basis(n: int, d: int) -> MonomialBasis:
    order = tuple(monomials_upto(n, d))
    assert len(order) == basis_size(n, d)
    return MonomialBasis(n=n, d=d, order=order)


@dataclass(frozen=True)
class BasisMatrices:
    """The symmetric matrices B_a with  v_d(x) v_d(x)' = sum_a x^a B_a.

    Entries count multiplicities: B_a[i, j] = 1 exactly when the i-th and
    j-th basis monomials multiply to x^a.
    """

    basis: MonomialBasis
    table: dict[MultiIndex, np.ndarray]

    def __getitem__(self, alpha) -> np.ndarray:
        return self.table[_check_index(alpha, self.basis.n)]


def basis_matrices(n: int, d: int) -> BasisMatrices:
    basis = monomial_basis(n, d)
    return _basis_matrices_for(basis.n, basis.order)


def _basis_matrices_for(n: int, order) -> BasisMatrices:
    N = len(order)
    table: dict[MultiIndex, np.ndarray] = {}
    for i in range(N):
        for j in range(N):
            a = tuple(x + y for x, y in zip(order[i], order[j]))
            table.setdefault(a, np.zeros((N, N)))[i, j] += 1.0
    d = max((sum(a) for a in order), default=0)
    return BasisMatrices(basis=MonomialBasis(n=n, d=d, order=tuple(order)), table=table)


@dataclass(frozen=True)
class MomentVector:
    """Pseudo-moment values indexed by monomials.

    The default support is all |alpha| <= 2d; a restricted support (paired
    with the matching restricted half-degree basis) is used when moment
    support reduction is switched on.  Completeness over the declared
    support is enforced: a missing entry is an error, never a zero.
    """

    n: int
    d: int
    basis: MonomialBasis
    support: tuple[MultiIndex, ...]
    values: dict[MultiIndex, float]

    def __post_init__(self):
        missing = [a for a in self.support if a not in self.values]
        if missing:
            raise ValueError(f"moment vector incomplete; first missing index {missing[0]}")
        extra = [a for a in self.values if a not in set(self.support)]
        if extra:
            raise ValueError(f"moment value at {extra[0]} outside the declared support")

    @staticmethod
    def full(n: int, d: int, values) -> "MomentVector":
        support = tuple(monomials_upto(n, 2 * d))
        if not isinstance(values, dict):
            vec = np.asarray(values, dtype=float).ravel()
            if vec.size != len(support):
                raise ValueError(f"expected {len(support)} moment values, got {vec.size}")
            values = {a: float(v) for a, v in zip(support, vec)}
        return MomentVector(n=n, d=d, basis=monomial_basis(n, d), support=support,
                            values={a: float(values[a]) for a in support if a in values})

    @staticmethod
    def on_support(n: int, d: int, gram_order, values: dict) -> "MomentVector":
        gram_order = tuple(_check_index(a, n) for a in gram_order)
        support = support_products(gram_order)
        basis = MonomialBasis(n=n, d=d, order=gram_order)
        return MomentVector(n=n, d=d, basis=basis, support=support,
                            values={a: float(values[a]) for a in support if a in values})

    @staticmethod
    def from_point(x, d: int) -> "MomentVector":
        """Moments of the unit point mass at x: y_a = x^a."""
        x = np.asarray(x, dtype=float)
        n = x.size
        support = monomials_upto(n, 2 * d)
        vals = {a: float(np.prod(x ** np.array(a))) for a in support}
        return MomentVector.full(n, d, vals)

    @property
    def y0(self) -> float:
        return self.values[(0,) * self.n]

    def get(self, alpha) -> float:
        alpha = _check_index(alpha, self.n)
        if alpha not in self.values:
            raise KeyError(f"moment index {alpha} outside the stored support")
        return self.values[alpha]

    def as_array(self) -> np.ndarray:
        return np.array([self.values[a] for a in self.support])


def support_products(order) -> tuple[MultiIndex, ...]:
    """All pairwise sums of the given monomials, graded-lex sorted."""
    prods = {tuple(x + y for x, y in zip(a, b)) for a in order for b in order}
    return tuple(sorted(prods, key=lambda a: (sum(a), tuple(-e for e in a))))


def moment_matrix(y: MomentVector) -> np.ndarray:
    """The symmetric matrix M[i, j] = y_{b_i + b_j} over y's half-degree basis."""
    order = y.basis.order
    N = len(order)
    M = np.empty((N, N))
    for i in range(N):
        for j in range(i, N):
            a = tuple(x + v for x, v in zip(order[i], order[j]))
            M[i, j] = M[j, i] = y.get(a)
    return M


def moment_functional(y: MomentVector, f: Poly) -> float:
    """The pairing sum_a f_a y_a of a polynomial with pseudo-moments."""
    if f.n != y.n:
        raise ValueError("dimension mismatch")
    if f.degree > 2 * y.d:
        raise ValueError(f"degree {f.degree} exceeds the moment degree {2 * y.d}")
    total = 0.0
    for a, c in f.terms.items():
        total += c * y.get(a)
    return total


def eval_poly(f: Poly, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (f.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({f.n},)")
    total = 0.0
    for a, c in f.terms.items():
        total += c * float(np.prod(x ** np.array(a)))
    return total


def partial(f: Poly, i: int) -> Poly:
    """Exact partial derivative with respect to x_i."""
    if not 0 <= i < f.n:
        raise ValueError(f"variable index {i} out of range")
    out: dict[MultiIndex, float] = {}
    for a, c in f.terms.items():
        if a[i] == 0:
            continue
        da = list(a)
        da[i] -= 1
        out[tuple(da)] = c * a[i]
    return Poly(f.n, out)


def gradient(f: Poly) -> list[Poly]:
    return [partial(f, i) for i in range(f.n)]


def hessian(f: Poly) -> list[list[Poly]]:
    """Exact symbolic Hessian, symmetric by construction."""
    grads = gradient(f)
    H = [[Poly.zero(f.n) for _ in range(f.n)] for _ in range(f.n)]
    for i in range(f.n):
        for j in range(i, f.n):
            H[i][j] = H[j][i] = partial(grads[i], j)
    return H


def gram_poly(n: int, order, Q: np.ndarray) -> Poly:
    """Expand a Gram matrix over the given monomials into a polynomial."""
    Q = np.asarray(Q, dtype=float)
    out: dict[MultiIndex, float] = {}
    for i, bi in enumerate(order):
        for j, bj in enumerate(order):
            a = tuple(x + y for x, y in zip(bi, bj))
            out[a] = out.get(a, 0.0) + Q[i, j]
    return Poly(n, out)


NOT_SOS_MARGIN = 1e-7  # below this certificate margin we refuse to conclude


@dataclass
class SosCheck:
    """Outcome of a Gram-matrix feasibility check.

    status is "sos" (gram/order carry the certificate), "not_sos" (the
    feasibility SDP is infeasible with certificate margin above
    NOT_SOS_MARGIN), or "undetermined" (solver gave up, or the margin is
    too thin to call).
    """

    status: str
    gram: np.ndarray | None = None
    order: tuple[MultiIndex, ...] | None = None
    margin: float = 0.0
    message: str = ""

    def __bool__(self) -> bool:
        return self.status == "sos"


def check_sos(f: Poly, order=None, options: SolveOptions | None = None) -> SosCheck:
    """Decide whether f is a sum of squares via Gram-matrix feasibility.

    Searches for Q >= 0 with <B_a, Q> = f_a over the monomial candidates
    `order` (default: every monomial of degree <= ceil(deg f / 2)).  A
    custom order must be exhaustive for f, i.e. chosen so that any SOS
    decomposition of f can be written over it.
    """
    if not f.terms:
        return SosCheck(status="sos", gram=np.zeros((1, 1)), order=((0,) * f.n,))
    if f.degree % 2 == 1:
        return SosCheck(status="not_sos", margin=np.inf, message="odd degree")
    if order is None:
        order = tuple(monomials_upto(f.n, (f.degree + 1) // 2))
    else:
        order = tuple(_check_index(a, f.n) for a in order)
    prods = support_products(order)
    uncovered = [a for a in f.terms if a not in set(prods)]
    if uncovered:
        return SosCheck(status="not_sos", margin=np.inf,
                        message=f"monomial {uncovered[0]} not reachable from the basis")

    bmats = _basis_matrices_for(f.n, order)
    N = len(order)
    builder = ProgramBuilder("min")
    builder.add_psd("Q", N)
    for a in prods:
        builder.add_row(f"coef{a}", {"Q": svec(bmats.table[a])}, f.terms.get(a, 0.0))
    builder.set_objective({"Q": svec(np.eye(N))})  # min trace keeps the SDP bounded
    sol = solve(builder.build(), options)

    if sol.status == "optimal":
        return SosCheck(status="sos", gram=smat(sol.x), order=order)
    if sol.status == "infeasible":
        if sol.cert_margin > NOT_SOS_MARGIN:
            return SosCheck(status="not_sos", margin=sol.cert_margin)
        return SosCheck(status="undetermined", margin=sol.cert_margin,
                        message="infeasibility margin too thin to call")
    return SosCheck(status="undetermined", message=f"solver: {sol.status} {sol.message}")


def check_sos_convex(f: Poly, options: SolveOptions | None = None) -> SosCheck:
    """Decide SOS-convexity of f.

    Tests whether g(x, w) = w' H(x) w is a sum of squares in the doubled
    variables, H the Hessian of f.  Since g is a quadratic form in w, every
    square in a decomposition is w-linear, so the Gram basis is restricted
    to monomials x^b * w_i without loss of generality.
    """
    n = f.n
    H = hessian(f)
    terms: dict[MultiIndex, float] = {}
    for i in range(n):
        for j in range(n):
            for a, c in H[i][j].terms.items():
                key = list(a) + [0] * n
                key[n + i] += 1
                key[n + j] += 1
                key = tuple(key)
                terms[key] = terms.get(key, 0.0) + c
    g = Poly(2 * n, terms)
    if not g.terms:
        # affine f: zero Hessian is trivially a sum of (no) squares
        w_only = tuple((0,) * n + tuple(1 if k == i else 0 for k in range(n)) for i in range(n))
        return SosCheck(status="sos", gram=np.zeros((n, n)), order=w_only)
    dx = max(0, (max(f.degree, 2) - 2 + 1) // 2)
    order = []
    for b in monomials_upto(n, dx):
        for i in range(n):
            order.append(b + tuple(1 if k == i else 0 for k in range(n)))
    return check_sos(g, order=tuple(order), options=options)
