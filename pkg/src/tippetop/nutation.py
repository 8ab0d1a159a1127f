"""Nutation band, elliptic-integral period estimates and their bounds.

Notation: z = cos(theta), z1 < z2 are the turning points of the main
equation, z3 < -1 is the spurious third root of the cubic
(1 - z^2)(E_tilde - V(z)).
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import (BelowMinimum, ComplexRoots, DegenerateB, DegenerateDenominator, EpsilonTooLarge,
                     OutOfDomain, QuadratureNonConvergence, WOutOfRange)
from .model import TopParameters
from .potential import (PotentialParams, ab_beta, f_scale, find_minimum, g_coefficient_rational,
                        v_rational)

EDGE = 1e-12
LEVEL_RTOL = 1e-11
GL_ORDER = 64
QUAD_RTOL = 1e-10
MAX_PANELS = 1024
EPSILON_MAX = 0.9
W_MAX = 0.9999
UPPER_CONSTANT = 21.95


def epsilon_w(D: float, lam: float, p: TopParameters):
    """(epsilon, w) = (2 beta/b^2, a/b)."""
    a, b, beta, *_ = ab_beta(D, lam, p)
    if b == 0:
        raise DegenerateB("b = 0")
    return 2 * beta / (b * b), a / b


def _bisect_level(fun, lo, hi):
    """Root of a function that changes sign on [lo, hi], to machine precision."""
    f_lo = fun(lo)
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        f_mid = fun(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid


def _interior_minimum(D, lam, p):
    z_min = find_minimum(D, lam, p)
    if not -1 < z_min < 1:
        raise OutOfDomain("V has no interior minimum for this D")
    return z_min


def turning_points(E_tilde: float, D: float, lam: float, p: TopParameters):
    """Turning points z1 <= z2 with V(z1) = V(z2) = E_tilde."""
    z_min = _interior_minimum(D, lam, p)
    v_min = v_rational(z_min, D, lam, p)
    if E_tilde <= v_min:
        if v_min - E_tilde <= LEVEL_RTOL * abs(E_tilde):
            return z_min, z_min
        raise BelowMinimum("E_tilde is below the minimum of V")

    def excess(z):
        return v_rational(z, D, lam, p) - E_tilde

    lo, hi = -1 + EDGE, 1 - EDGE
    if excess(lo) <= 0 or excess(hi) <= 0:
        raise OutOfDomain("band reaches the poles of V")
    return _bisect_level(excess, lo, z_min), _bisect_level(excess, z_min, hi)


def companion_roots(z1: float, pp: PotentialParams):
    """Remaining roots (z2, z3) of the cubic once z1 is known."""
    a, b, beta = pp.a, pp.b, pp.beta
    if not -1 < z1 < 1:
        raise OutOfDomain("z1 must lie in (-1, 1)")
    den = beta * (1 - z1 * z1)
    B = (a * a + b * b + 2 * a * b * z1) / den
    C = -1 + ((a * a + b * b) * z1 + 2 * a * b) / den
    disc = B * B - 4 * C
    if disc < 0:
        raise ComplexRoots("companion quadratic has complex roots")
    # B > 0: take the large-magnitude root first, the other via Vieta
    z3 = 0.5 * (-B - math.sqrt(disc))
    return C / z3, z3


def elliptic_K(k2: float) -> float:
    """Complete elliptic integral of the first kind by the AGM."""
    if not 0 <= k2 < 1:
        raise OutOfDomain("need 0 <= k^2 < 1")
    a, b = 1.0, math.sqrt(1 - k2)
    # quadratic convergence; the cap guards against ulp-level cycling
    for _ in range(64):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (a + b)


def k_squared(z1: float, pp: PotentialParams) -> float:
    z2, z3 = companion_roots(z1, pp)
    return (z2 - z1) / (z2 - z3)


def _uv(z1, w):
    den = 1 + w * w + 2 * w * z1
    if np.any(den == 0):
        raise DegenerateDenominator("1 + w^2 + 2 w z1 = 0")
    one = 1 - z1 * z1
    return one / den, one * ((1 + w * w) * z1 + 2 * w) / den ** 2


def k_squared_scaled(z1, w, epsilon):
    """k^2 in terms of (z1, w, epsilon) only; elementwise."""
    u, v = _uv(z1, w)
    return 0.5 - 0.5 * (z1 * u * epsilon + 1) / np.sqrt(1 + u * u * epsilon ** 2 - 2 * v * epsilon)


def h_functions(z1, w, epsilon):
    """(h1, h2, h3) of the small-epsilon expansions; elementwise.

    h3 is nan only where its radicand vanishes; it is never negative.
    """
    z1, w = np.asarray(z1, dtype=float), np.asarray(w, dtype=float)
    u, v = _uv(z1, w)
    den = 1 + w * w + 2 * w * z1
    h1 = -(1 + z1 * w) * (w + z1) * (1 - z1 * z1) / den ** 2
    h2 = 0.5 * v
    radicand = 1 + u * u * epsilon ** 2 - 2 * v * epsilon
    with np.errstate(invalid="ignore", divide="ignore"):
        h3 = np.where(radicand > 0, radicand, np.nan) ** -0.25
    return h1, h2, h3


@lru_cache(maxsize=None)
def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _panel_quadrature(fun, lo, hi, n_panels, order=GL_ORDER):
    x, wts = _gauss_legendre(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    return float(np.sum(fun(nodes).reshape(n_panels, order) * wts[None, :] * half[:, None]))


def _adaptive_quadrature(fun, lo, hi):
    panels = 1
    prev = _panel_quadrature(fun, lo, hi, panels)
    while panels < MAX_PANELS:
        panels *= 2
        cur = _panel_quadrature(fun, lo, hi, panels)
        if abs(cur - prev) <= QUAD_RTOL * abs(cur):
            return cur
        prev = cur
    raise QuadratureNonConvergence(f"no convergence with {MAX_PANELS} panels")


def _mgra(p):
    return p.m * p.g * p.R * p.alpha


def _small_oscillation_period(z, pp, p):
    _, z3 = companion_roots(z, pp)
    return 2 * math.pi * math.sqrt(g_coefficient_rational(z, p) / (_mgra(p) * (z - z3)))


def _level_quotient(z, zt, D, lam, p):
    """Q with V(zt) - V(z) = (z - zt) * Q(z), written without cancellation."""
    a, b, *_ = ab_beta(D, lam, p)
    A = a * zt + b
    one_t = 1 - zt * zt
    frac = (A * A * (z + zt) + one_t * (2 * A * a + a * a * (z - zt))) / (f_scale(p) * one_t * (1 - z * z))
    return _mgra(p) - frac


def period_exact(E_tilde: float, D: float, lam: float, p: TopParameters) -> float:
    """T = 2 int_{z1}^{z2} sqrt(g) dz / sqrt((1 - z^2)(E_tilde - V)).

    With z = c + h sin(u) the factor E_tilde - V is split off at the
    nearer turning point, E_tilde - V(z) = (z - z1) Q1(z) on the left half
    and (z2 - z)(-Q2(z)) on the right, which removes both the endpoint
    singularity and the cancellation in E_tilde - V. At E_tilde = min V
    the small-oscillation limit is returned.
    """
    z1, z2 = turning_points(E_tilde, D, lam, p)
    if z1 == z2:
        return _small_oscillation_period(z1, ab_beta(D, lam, p), p)
    c, h = 0.5 * (z1 + z2), 0.5 * (z2 - z1)

    def left(u):
        s = np.sin(u)
        z = c + h * s
        q = (1 - z * z) * _level_quotient(z, z1, D, lam, p)
        return 2 * np.sqrt(g_coefficient_rational(z, p) * h * (1 - s) / q)

    def right(u):
        s = np.sin(u)
        z = c + h * s
        q = -(1 - z * z) * _level_quotient(z, z2, D, lam, p)
        return 2 * np.sqrt(g_coefficient_rational(z, p) * h * (1 + s) / q)

    return (_adaptive_quadrature(left, -0.5 * math.pi, 0.0)
            + _adaptive_quadrature(right, 0.0, 0.5 * math.pi))


def period_factorized(E_tilde: float, D: float, lam: float, p: TopParameters) -> float:
    """Same period via the cubic factorization with the companion root z3."""
    z1, z2 = turning_points(E_tilde, D, lam, p)
    pp = ab_beta(D, lam, p)
    if z1 == z2:
        return _small_oscillation_period(z1, pp, p)
    _, z3 = companion_roots(z1, pp)
    c, h = 0.5 * (z1 + z2), 0.5 * (z2 - z1)

    def integrand(u):
        z = c + h * np.sin(u)
        return np.sqrt(g_coefficient_rational(z, p) / (z - z3))

    return 2 / math.sqrt(_mgra(p)) * _adaptive_quadrature(integrand, -0.5 * math.pi, 0.5 * math.pi)


def period_elliptic(E_tilde: float, D: float, lam: float, p: TopParameters):
    """(T_low, T_mid, T_high): the elliptic form with g at z2, midpoint and z1."""
    z1, z2 = turning_points(E_tilde, D, lam, p)
    _, z3 = companion_roots(z1, ab_beta(D, lam, p))
    k2 = (z2 - z1) / (z2 - z3)
    factor = 4 * elliptic_K(k2) / (math.sqrt(_mgra(p)) * math.sqrt(z2 - z3))
    return tuple(factor * math.sqrt(g_coefficient_rational(z, p)) for z in (z2, 0.5 * (z1 + z2), z1))


def _leading_factor(p: TopParameters) -> float:
    return p.R * p.I3 * p.gamma * (p.alpha + 1 - p.gamma)


def _positive_b(D, lam, p):
    b = ab_beta(D, lam, p).b
    if not b > 0:
        raise DegenerateB("b must be positive")
    return b


def t_max(D: float, lam: float, p: TopParameters) -> float:
    return 2 * math.pi * _leading_factor(p) / _positive_b(D, lam, p)


def t_upp(D: float, lam: float, p: TopParameters) -> float:
    """Uniform upper bound for the period, valid for epsilon < 0.9 and |w| <= 0.9999."""
    b = _positive_b(D, lam, p)
    epsilon, w = epsilon_w(D, lam, p)
    if epsilon >= EPSILON_MAX:
        raise EpsilonTooLarge(f"epsilon = {epsilon:.4g} >= 0.9")
    if abs(w) > W_MAX:
        raise WOutOfRange(f"|w| = {abs(w):.6g} > 0.9999")
    return UPPER_CONSTANT * _leading_factor(p) / b


def oscillation_condition(T_inv: float, D: float, lam: float, p: TopParameters):
    """(T_inv/T_upp, ratio > 10)."""
    ratio = T_inv / t_upp(D, lam, p)
    return ratio, ratio > 10


class PeriodReport(NamedTuple):
    z1: float
    z2: float
    z3: float
    k2: float
    K: float
    T_exact: float
    T_elliptic_low: float
    T_elliptic_mid: float
    T_elliptic_high: float
    T_max: float
    T_upp: float
    epsilon: float
    w: float
    flag: str = ""


def period_report(E_tilde: float, D: float, lam: float, p: TopParameters) -> PeriodReport:
    """All period quantities for one (E_tilde, D, lambda).

    When the bound T_upp does not apply it is nan and ``flag`` names the
    failed precondition.
    """
    z1, z2 = turning_points(E_tilde, D, lam, p)
    _, z3 = companion_roots(z1, ab_beta(D, lam, p))
    k2 = (z2 - z1) / (z2 - z3)
    low, mid, high = period_elliptic(E_tilde, D, lam, p)
    epsilon, w = epsilon_w(D, lam, p)
    flag = ""
    try:
        upp = t_upp(D, lam, p)
    except (EpsilonTooLarge, WOutOfRange) as exc:
        upp, flag = math.nan, type(exc).__name__
    return PeriodReport(z1, z2, z3, k2, elliptic_K(k2), period_exact(E_tilde, D, lam, p),
                        low, mid, high, t_max(D, lam, p), upp, epsilon, w, flag)
