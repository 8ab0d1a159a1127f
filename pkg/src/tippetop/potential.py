"""Effective potential of the main equation, its convexity and its minimum.

In the rational regime the shape of V(z, D, lambda) is governed by
f(z) = -beta*z + (a*z + b)^2/(1 - z^2), with V = f/scale + const.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import NoSignChange, NonPositiveRHS, NotSquareFree, PoleAtBoundary
from .model import TopParameters, boundary_values, d_general
from .polynomial import RealPolynomial, count_roots, sturm_sequence

DEGENERATE_RTOL = 1e-12
BISECTION_WIDTH = 1e-12


class PotentialParams(NamedTuple):
    a: float
    b: float
    beta: float
    lam: float
    D: float


def _require_positive_lambda(lam):
    if not lam > 0:
        raise ValueError("lambda must be positive")


def ab_beta(D: float, lam: float, p: TopParameters) -> PotentialParams:
    p.require_rational()
    _require_positive_lambda(lam)
    kappa = p.kappa
    a = -(1 - p.gamma) * lam - p.R * D * kappa
    b = p.alpha * lam + p.alpha * p.R * D * kappa
    return PotentialParams(a, b, _beta(p), lam, D)


def f_scale(p: TopParameters) -> float:
    """Denominator 2*I3*R^2*gamma^2*(gamma + alpha^2 - 1) mapping f onto V."""
    return 2 * p.I3 * p.R ** 2 * p.gamma ** 2 * p.kappa ** 2


def _check_open_interval(z):
    if np.any(np.abs(z) >= 1):
        raise PoleAtBoundary("the potential has poles at z = +-1")


def v_rational(z, D: float, lam: float, p: TopParameters):
    p.require_rational()
    _check_open_interval(z)
    k2 = p.kappa ** 2
    num = lam * (p.alpha - (1 - p.gamma) * z) + p.R * D * p.kappa * (p.alpha - z)
    const = (p.R ** 2 * D ** 2 * k2 - (1 - p.gamma) * lam ** 2) / (2 * p.R ** 2 * p.I1 * k2)
    return p.m * p.g * p.R * (1 - p.alpha * z) + num ** 2 / (f_scale(p) * (1 - z * z)) + const


def v_rational_dz(z, D: float, lam: float, p: TopParameters):
    a, b, beta, *_ = ab_beta(D, lam, p)
    _check_open_interval(z)
    return -p.m * p.g * p.R * p.alpha + 2 * (a * z + b) * (b * z + a) / (f_scale(p) * (1 - z * z) ** 2)


def v_algebraic(z, D: float, lam: float, p: TopParameters):
    """Effective potential for general (not necessarily rational) parameters."""
    _check_open_interval(z)
    num = lam * np.sqrt(d_general(z, p)) + p.R * D * (p.alpha - z)
    return (p.m * p.g * p.R * (1 - p.alpha * z)
            + num ** 2 / (2 * p.I3 * p.R ** 2 * p.gamma ** 2 * (1 - z * z))
            + (p.R ** 2 * D ** 2 - p.sigma * lam ** 2) / (2 * p.R ** 2 * p.I1))


def g_coefficient(z, p: TopParameters):
    """Coefficient of theta_dot^2 in the main equation (general form)."""
    return 0.5 * p.I3 * (p.sigma * ((p.alpha - z) ** 2 + 1 - z * z) + p.gamma)


def g_coefficient_rational(z, p: TopParameters):
    p.require_rational()
    k2 = p.kappa ** 2
    return 0.5 * p.I3 * (p.alpha ** 2 + (1 - p.gamma) ** 2 - 2 * p.alpha * (1 - p.gamma) * z) / k2


def g_coefficient_dz(p: TopParameters) -> float:
    # g is affine in z: sigma*((alpha - z)^2 + 1 - z^2) = sigma*(1 + alpha^2 - 2*alpha*z)
    return -p.I3 * p.sigma * p.alpha


def convexity_polynomial(a: float, b: float) -> RealPolynomial:
    """q(z) with d^2/dz^2 (a z + b)^2/(1 - z^2) = 2 q(z)/(1 - z^2)^3."""
    s = a * a + b * b
    return RealPolynomial([s, 6 * a * b, 3 * s, 2 * a * b])


def _second_difference_convex(a: float, b: float, n: int = 2001) -> bool:
    z = np.linspace(-0.999, 0.999, n)
    f = (a * z + b) ** 2 / (1 - z * z)
    dd = f[:-2] - 2 * f[1:-1] + f[2:]
    return bool(np.all(dd >= -1e-12 * np.max(np.abs(f))))


def convexity_witness(D: float, lam: float, p: TopParameters) -> bool:
    """Certify that V(., D, lambda) is convex on (-1, 1).

    The generic case is certified by a Sturm count of q on (-1, 1] plus
    q(-1) > 0 and q(0) > 0. The branches a = +-b and ab = 0 (and chains
    that are numerically not square-free next to them) fall back to a
    second-difference check of (a z + b)^2/(1 - z^2).
    """
    a, b, *_ = ab_beta(D, lam, p)
    size = max(abs(a), abs(b))
    if size == 0.0:
        return True
    if (abs(a - b) <= DEGENERATE_RTOL * size or abs(a + b) <= DEGENERATE_RTOL * size
            or abs(a * b) <= DEGENERATE_RTOL * size * size):
        return _second_difference_convex(a, b)
    q = convexity_polynomial(a, b)
    try:
        seq = sturm_sequence(q)
    except NotSquareFree:
        return _second_difference_convex(a, b)
    return count_roots(q, -1.0, 1.0, seq) == 0 and q(-1.0) > 0 and q(0.0) > 0


def p_polynomial(D: float, lam: float, p: TopParameters) -> RealPolynomial:
    """Numerator p(z) of f'(z) = p(z)/(1 - z^2)^2."""
    a, b, beta, *_ = ab_beta(D, lam, p)
    return RealPolynomial([2 * a * b - beta, 2 * (a * a + b * b), 2 * a * b + 2 * beta, 0.0, -beta])


def _p_factored(z, a, b, beta):
    return 2 * (a * z + b) * (b * z + a) - beta * ((1 - z) * (1 + z)) ** 2


def find_minimum(D: float, lam: float, p: TopParameters) -> float:
    """Location z_min of the unique minimum of V(., D, lambda) on [-1, 1].

    Returns exactly 1.0 when a = -b and exactly -1.0 when a = b with
    2*beta < b^2; in both cases V has its infimum at the pole, so the
    result must not be fed back into ``v_rational``.
    """
    a, b, beta, *_ = ab_beta(D, lam, p)
    size = max(abs(a), abs(b))
    if abs(a + b) <= DEGENERATE_RTOL * size:
        return 1.0
    if abs(a - b) <= DEGENERATE_RTOL * size:
        if 2 * beta < b * b:
            return -1.0
        lo, hi = -1.0 + BISECTION_WIDTH, 1.0 - BISECTION_WIDTH
    else:
        lo, hi = -1.0, 1.0
    f_lo, f_hi = _p_factored(lo, a, b, beta), _p_factored(hi, a, b, beta)
    if not (f_lo < 0 < f_hi):
        raise NoSignChange(f"p(z) does not change sign on [{lo}, {hi}]")
    while hi - lo > BISECTION_WIDTH:
        mid = 0.5 * (lo + hi)
        if _p_factored(mid, a, b, beta) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def guard_scale_lower(p: TopParameters) -> float:
    """Factor R(1+alpha)kappa turning a delta bound into a D offset near D1."""
    return p.R * (1 + p.alpha) * p.kappa


def guard_scale_upper(p: TopParameters) -> float:
    """Factor R(1-alpha)kappa turning a delta bound into a D offset near D0."""
    return p.R * (1 - p.alpha) * p.kappa


def _positive_root(A: float, B: float, C: float) -> float:
    """Smallest positive root of A x^2 + B x = C for B > 0, C > 0.

    Written as 2C/(B + sqrt(B^2 + 4AC)) to avoid cancellation; returns
    inf when A < 0 and the left side never reaches C.
    """
    disc = B * B + 4 * A * C
    if disc < 0:
        return math.inf
    return 2 * C / (B + math.sqrt(disc))


def _check_delta_inputs(epsilon, lam, p):
    p.require_rational()
    _require_positive_lambda(lam)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")


def _beta(p: TopParameters) -> float:
    return 2 * p.m * p.g * p.R ** 3 * p.alpha * p.I3 * p.gamma ** 2 * p.kappa ** 2


def delta_minus(epsilon: float, lam: float, p: TopParameters) -> float:
    """Bound keeping z_min in [-1, -1 + epsilon] near D1."""
    _check_delta_inputs(epsilon, lam, p)
    alpha, gamma = p.alpha, p.gamma
    A = alpha + (1 - epsilon) * (1 + alpha) ** 2 / epsilon ** 2
    B = alpha * (1 - alpha) * gamma * lam
    C = (alpha * gamma * lam) ** 2 - 0.5 * _beta(p) * (2 - epsilon) ** 2 * (1 + alpha) ** 2
    if C <= 0:
        raise NonPositiveRHS("lambda is not far enough above threshold for this epsilon")
    return _positive_root(A, B, C)


def delta_plus(epsilon: float, lam: float, p: TopParameters) -> float:
    """Bound keeping z_min in [1 - epsilon, 1] near D0."""
    _check_delta_inputs(epsilon, lam, p)
    alpha, gamma = p.alpha, p.gamma
    delta1 = gamma * (1 + alpha) * lam
    A = (1 - epsilon) * (1 - alpha) ** 2 / epsilon ** 2 - alpha
    B = alpha * gamma * lam * (1 + alpha)
    C = (alpha * gamma * lam) ** 2 + 0.5 * _beta(p) * (2 - epsilon) ** 2 * (1 - alpha) ** 2
    return min(delta1, _positive_root(A, B, C))


def minimum_path(lam: float, p: TopParameters, n: int):
    """z_min along n evenly spaced D values from D0 down to D1."""
    if n < 2:
        raise ValueError("n must be at least 2")
    p.require_rational()
    _require_positive_lambda(lam)
    bv = boundary_values(lam, p)
    Ds = np.linspace(bv.D0, bv.D1, n)
    return [(float(D), find_minimum(float(D), lam, p)) for D in Ds]
