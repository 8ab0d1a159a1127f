"""Physical parameters, reduced state and the integrals of the tippe top.

Every function here is pure and works elementwise, so a ``GlideState``
whose fields are numpy arrays evaluates a whole trajectory at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from .errors import RegimeError

STANDARD_GRAVITY = 9.81
RATIONAL_RTOL = 1e-12


def derive_rational_inertia(I3: float, m: float, R: float, alpha: float) -> float:
    """Transverse moment I1 that makes d(z) a perfect square.

    With this I1 the ratio sigma = mR^2/I3 equals (1-gamma)/(gamma+alpha^2-1)
    and gamma = I1/I3 lies in (1-alpha^2, 1).
    """
    if not (I3 > 0 and m > 0 and R > 0):
        raise ValueError("I3, m and R must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    mR2 = m * R * R
    return (I3 * I3 + mR2 * I3 * (1 - alpha * alpha)) / (I3 + mR2)


@dataclass(frozen=True)
class TopParameters:
    """Mass, geometry and inertia of an axisymmetric spherical top.

    ``gamma`` and ``sigma`` are always recomputed from the stored moments.
    """

    m: float
    R: float
    alpha: float
    I1: float
    I3: float
    g: float = STANDARD_GRAVITY

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v!r}")
        if min(self.m, self.R, self.g, self.I1, self.I3) <= 0:
            raise ValueError("m, R, g, I1 and I3 must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    @classmethod
    def rational(cls, m: float, R: float, alpha: float, I3: float,
                 g: float = STANDARD_GRAVITY) -> "TopParameters":
        """Build parameters with I1 derived from the rational condition."""
        return cls(m=m, R=R, alpha=alpha, I1=derive_rational_inertia(I3, m, R, alpha), I3=I3, g=g)

    @property
    def gamma(self) -> float:
        return self.I1 / self.I3

    @property
    def sigma(self) -> float:
        return self.m * self.R ** 2 / self.I3

    @property
    def inversion_regime(self) -> bool:
        return 1 - self.alpha < self.gamma < 1 + self.alpha

    @property
    def rational_regime(self) -> bool:
        gamma, alpha = self.gamma, self.alpha
        if not 1 - alpha ** 2 < gamma < 1:
            return False
        mismatch = self.sigma * (gamma + alpha ** 2 - 1) - (1 - gamma)
        # rounding of gamma enters the mismatch amplified by sigma, hence the floor
        return abs(mismatch) <= RATIONAL_RTOL * (1 - gamma) + 16 * np.finfo(float).eps * (1 + self.sigma)

    @property
    def kappa(self) -> float:
        """sqrt(gamma + alpha^2 - 1); only meaningful in the rational regime."""
        return math.sqrt(self.gamma + self.alpha ** 2 - 1)

    def require_rational(self) -> None:
        if not self.rational_regime:
            raise RegimeError("parameters are not in the rational regime")


@dataclass(frozen=True)
class GlideState:
    """Reduced dynamical state (theta, theta_dot, phi_dot, omega3, nu_x, nu_y)."""

    theta: float
    theta_dot: float
    phi_dot: float
    omega3: float
    nu_x: float = 0.0
    nu_y: float = 0.0

    def __post_init__(self):
        arr = self.as_array()
        if not np.all(np.isfinite(arr)):
            raise ValueError("state fields must be finite")
        if not np.all((arr[0] > 0) & (arr[0] < math.pi)):
            raise ValueError("theta must lie in (0, pi)")

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.theta_dot, self.phi_dot,
                         self.omega3, self.nu_x, self.nu_y], dtype=float)

    @classmethod
    def from_array(cls, y) -> "GlideState":
        return cls(*(y[i] for i in range(6)))


class IntegralSnapshot(NamedTuple):
    lam: float
    D: float
    E_tilde: float
    E_total: float
    g_n: float


class BoundaryValues(NamedTuple):
    D0: float
    E_tilde_0: float
    D1: float
    E_tilde_1: float


def lambda_threshold(p: TopParameters) -> float:
    """Jellett value above which only the inverted spin is stable."""
    margin = 1 + p.alpha - p.gamma
    if not p.inversion_regime or margin <= 0:
        raise RegimeError("threshold undefined outside the inversion regime")
    return math.sqrt(p.m * p.g * p.R ** 3 * p.I3 * p.alpha) * (1 + p.alpha) ** 2 / math.sqrt(margin)


def jellett(s: GlideState, p: TopParameters):
    """lambda = -L.a, conserved by the rolling-and-gliding equations."""
    sin = np.sin(s.theta)
    return (p.R * p.I1 * s.phi_dot * sin * sin
            - p.R * p.I3 * s.omega3 * (p.alpha - np.cos(s.theta)))


def d_general(z, p: TopParameters):
    return p.gamma + p.sigma * (p.alpha - z) ** 2 + p.sigma * p.gamma * (1 - z * z)


def routh(s: GlideState, p: TopParameters):
    return p.I3 * s.omega3 * np.sqrt(d_general(np.cos(s.theta), p))


def _kinetic_parts(s: GlideState, p: TopParameters):
    sin, cos = np.sin(s.theta), np.cos(s.theta)
    rigid = 0.5 * (p.I1 * s.phi_dot ** 2 * sin ** 2 + p.I1 * s.theta_dot ** 2 + p.I3 * s.omega3 ** 2)
    potential = p.m * p.g * p.R * (1 - p.alpha * cos)
    return sin, cos, rigid, potential


def modified_energy(s: GlideState, p: TopParameters):
    """Part of the total energy that does not depend on the gliding velocity."""
    sin, cos, rigid, potential = _kinetic_parts(s, p)
    am = p.alpha - cos
    rolling = 0.5 * p.m * p.R ** 2 * (
        am ** 2 * (s.theta_dot ** 2 + s.phi_dot ** 2 * sin ** 2)
        + sin ** 2 * (s.theta_dot ** 2 + s.omega3 ** 2 + 2 * s.omega3 * s.phi_dot * am))
    return rigid + potential + rolling


def omega_cross_a(s: GlideState, p: TopParameters):
    """Components of omega x a in the (1, 2, 3) frame."""
    sin, cos = np.sin(s.theta), np.cos(s.theta)
    am = p.alpha - cos
    return (p.R * s.theta_dot * am,
            p.R * sin * (s.omega3 + s.phi_dot * am),
            -p.R * s.theta_dot * sin)


def contact_velocity(s: GlideState):
    """Gliding velocity v_A in the (1, 2, 3) frame."""
    return (s.nu_x * np.cos(s.theta), s.nu_y, s.nu_x * np.sin(s.theta))


def total_energy(s: GlideState, p: TopParameters):
    sin, cos, rigid, potential = _kinetic_parts(s, p)
    wa = omega_cross_a(s, p)
    va = contact_velocity(s)
    translational = 0.5 * p.m * sum((v - w) ** 2 for v, w in zip(va, wa))
    return translational + rigid + potential


def boundary_values(lam: float, p: TopParameters) -> BoundaryValues:
    """Values of (D, E_tilde) in the upright (0) and inverted (1) spinning states."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    R, alpha = p.R, p.alpha
    D0 = lam * math.sqrt(d_general(1.0, p)) / (R * (1 - alpha))
    D1 = -lam * math.sqrt(d_general(-1.0, p)) / (R * (1 + alpha))
    mgR = p.m * p.g * R
    E0 = lam ** 2 / (2 * R ** 2 * p.I3 * (1 - alpha) ** 2) + mgR * (1 - alpha)
    E1 = lam ** 2 / (2 * R ** 2 * p.I3 * (1 + alpha) ** 2) + mgR * (1 + alpha)
    return BoundaryValues(D0, E0, D1, E1)
