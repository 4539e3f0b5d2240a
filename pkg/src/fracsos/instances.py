"""Deterministic random fractional programs for cross-checking.

Every generated instance is valid by construction: ball-shaped constraints
keep the feasible set compact with a known strictly feasible center, box
sets give each member function a small nonsmooth absolute-value part, the
numerator is a nonnegative convex polynomial (optionally with a quartic
term), and the negated denominator is bounded away from zero on the
feasible set by an explicit norm estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FractionalProgram, LmiSet, SemialgFunction
from .polycore import Poly, variables


def box_lmi(radii) -> LmiSet:
    """The diagonal LMI describing the box  prod_j [-r_j, r_j]."""
    radii = np.asarray(radii, dtype=float)
    s = radii.size
    t = 2 * s
    A0 = np.diag(np.repeat(radii, 2))
    As = []
    for j in range(s):
        D = np.zeros((t, t))
        D[2 * j, 2 * j] = -1.0
        D[2 * j + 1, 2 * j + 1] = 1.0
        As.append(D)
    return LmiSet(A=(A0, *As))


def _ball(n: int, center, radius: float) -> Poly:
    xs = variables(n)
    out = Poly.constant(n, -float(radius) ** 2)
    for xi, ci in zip(xs, center):
        out = out + (xi - float(ci)) * (xi - float(ci))
    return out


def _abs_box_function(n: int, h0: Poly, delta: float) -> SemialgFunction:
    """h0 plus delta * (|x_1| + ... + |x_n|), as a sup over a box."""
    return SemialgFunction(h=(h0, *variables(n)), omega=box_lmi([delta] * n))


@dataclass
class RandomInstance:
    program: FractionalProgram
    box: tuple[tuple[float, float], ...]  # covers the feasible set
    slater_point: np.ndarray


def random_box_program(rng: np.random.Generator, quartic: bool | None = None) -> RandomInstance:
    """One random valid instance with n <= 2 and half-degree d <= 2."""
    n = int(rng.integers(1, 3))
    xs = variables(n)
    center = rng.uniform(-0.5, 0.5, size=n)
    radius = float(rng.uniform(0.8, 1.5))
    if quartic is None:
        quartic = bool(rng.integers(0, 2))

    constraints = [_abs_box_function(n, _ball(n, center, radius),
                                     float(rng.uniform(0.05, 0.3)))]
    if rng.random() < 0.5:
        direction = rng.standard_normal(n)
        direction /= max(np.linalg.norm(direction), 1e-12)
        center2 = center + 0.2 * radius * direction
        constraints.append(_abs_box_function(n, _ball(n, center2, radius),
                                             float(rng.uniform(0.05, 0.3))))

    q = rng.uniform(-1.0, 1.0, size=n)
    h0_num = _ball(n, q, 0.0)  # ||x - q||^2, nonnegative everywhere
    if quartic:
        a = rng.standard_normal(n)
        a /= max(np.linalg.norm(a), 1e-12)
        lin = Poly.zero(n)
        for xi, ai in zip(xs, a):
            lin = lin + float(ai) * xi
        h0_num = h0_num + float(rng.uniform(0.1, 1.0)) * lin * lin * lin * lin
    numerator = _abs_box_function(n, h0_num, float(rng.uniform(0.05, 0.3)))

    u = rng.uniform(-0.5, 0.5, size=n)
    delta_den = float(rng.uniform(0.05, 0.3))
    # on the feasible set (inside the first ball): u.x + delta*|x|_1 <= bound
    bound = float(u @ center) + np.linalg.norm(u) * radius \
        + delta_den * (np.abs(center).sum() + np.sqrt(n) * radius)
    C = 1.0 + bound
    h0_den = Poly.constant(n, -C)
    for xi, ui in zip(xs, u):
        h0_den = h0_den + float(ui) * xi
    denominator_neg = _abs_box_function(n, h0_den, delta_den)

    prog = FractionalProgram(n=n, d=2 if quartic else 1,
                             constraints=tuple(constraints),
                             numerator=numerator, denominator_neg=denominator_neg)
    box = tuple((float(center[i] - radius - 0.05), float(center[i] + radius + 0.05))
                for i in range(n))
    return RandomInstance(program=prog, box=box, slater_point=center.copy())
