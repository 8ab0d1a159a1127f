"""Rolling-and-gliding equations of motion, trajectories and diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import dopri
from .errors import NegativeNormalForce, NonPositiveDenominator, SinThetaUnderflow
from .model import (GlideState, IntegralSnapshot, TopParameters, d_general, jellett,
                    modified_energy, omega_cross_a, routh, total_energy)
from .potential import g_coefficient_dz, g_coefficient_rational, v_rational_dz

SIN_THETA_MIN = 1e-8
ONSET_RISE = 0.1
COMPLETION_MARGIN = 0.2
SIGN_HYSTERESIS = 1e-6


@dataclass(frozen=True)
class FrictionModel:
    """Viscous gliding friction F = -mu * g_n * v_A with constant mu."""

    mu: float = 0.3

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ValueError("mu must be finite and non-negative")


def _normal_force_parts(theta, theta_dot, phi_dot, omega3, nu_x, p, mu):
    sin, cos = np.sin(theta), np.cos(theta)
    m, R, alpha, I1, I3 = p.m, p.R, p.alpha, p.I1, p.I3
    num = m * p.g * I1 + m * R * alpha * (
        cos * (I1 * phi_dot ** 2 * sin ** 2 + I1 * theta_dot ** 2) - I3 * phi_dot * omega3 * sin ** 2)
    den = I1 + m * R * R * alpha ** 2 * sin ** 2 - m * R * R * alpha * sin * (1 - alpha * cos) * mu * nu_x
    return num, den


def normal_force(s: GlideState, p: TopParameters, f: FrictionModel):
    """Normal reaction g_n keeping the sphere on the plane."""
    num, den = _normal_force_parts(s.theta, s.theta_dot, s.phi_dot, s.omega3, s.nu_x, p, f.mu)
    if np.any(den <= 0):
        raise NonPositiveDenominator("normal-force denominator is not positive")
    g_n = num / den
    if np.any(g_n < 0):
        raise NegativeNormalForce("normal force is negative: the top leaves the plane")
    return g_n


def _rates(theta, theta_dot, phi_dot, omega3, nu_x, nu_y, g_n, p, mu):
    sin, cos = np.sin(theta), np.cos(theta)
    m, R, alpha, I1, I3 = p.m, p.R, p.alpha, p.I1, p.I3
    one_ac = 1 - alpha * cos
    am = alpha - cos
    fric = mu * g_n
    theta_dd = (sin / I1 * (I1 * phi_dot ** 2 * cos - I3 * omega3 * phi_dot - R * alpha * g_n)
                + R * fric * nu_x * one_ac / I1)
    phi_dd = (I3 * theta_dot * omega3 - 2 * I1 * theta_dot * phi_dot * cos
              - fric * nu_y * R * am) / (I1 * sin)
    omega3_d = -fric * nu_y * R * sin / I3
    nu_x_d = (R * sin / I1 * (phi_dot * omega3 * (I3 * one_ac - I1) + g_n * R * alpha * one_ac
                              - I1 * alpha * (theta_dot ** 2 + phi_dot ** 2 * sin ** 2))
              - fric * nu_x / (m * I1) * (I1 + m * R * R * one_ac ** 2)
              + phi_dot * nu_y)
    nu_y_d = (-fric * nu_y / (m * I1 * I3) * (I1 * I3 + m * R * R * I3 * am ** 2 + m * R * R * I1 * sin ** 2)
              + omega3 * theta_dot * R / I1 * (I3 * am + I1 * cos)
              - phi_dot * nu_x)
    return theta_dot, theta_dd, phi_dd, omega3_d, nu_x_d, nu_y_d


def glide_derivative(s: GlideState, p: TopParameters, f: FrictionModel):
    """Time derivative (theta_dot, theta_dd, phi_dd, omega3_dot, nu_x_dot, nu_y_dot)."""
    if np.any(np.abs(np.sin(s.theta)) < SIN_THETA_MIN):
        raise SinThetaUnderflow("sin(theta) below 1e-8")
    g_n = normal_force(s, p, f)
    return _rates(s.theta, s.theta_dot, s.phi_dot, s.omega3, s.nu_x, s.nu_y, g_n, p, f.mu)


def _glide_rhs(p: TopParameters, mu: float):
    m, R, alpha, I1, I3, grav = p.m, p.R, p.alpha, p.I1, p.I3, p.g
    mR2 = m * R * R

    # scalar fast path of normal_force + _rates for the integrator loop
    def rhs(t, y):
        theta, theta_dot, phi_dot, omega3, nu_x, nu_y = y
        sin, cos = math.sin(theta), math.cos(theta)
        if abs(sin) < SIN_THETA_MIN:
            raise SinThetaUnderflow(f"sin(theta) = {sin:.3e} at t = {t:.6g}")
        sin2 = sin * sin
        one_ac = 1 - alpha * cos
        am = alpha - cos
        den = I1 + mR2 * alpha * alpha * sin2 - mR2 * alpha * sin * one_ac * mu * nu_x
        if den <= 0:
            raise NonPositiveDenominator(f"normal-force denominator {den:.3e} at t = {t:.6g}")
        g_n = (m * grav * I1 + m * R * alpha * (cos * (I1 * phi_dot ** 2 * sin2 + I1 * theta_dot ** 2)
                                                - I3 * phi_dot * omega3 * sin2)) / den
        if g_n < 0:
            raise NegativeNormalForce(f"g_n = {g_n:.3e} at t = {t:.6g}")
        fric = mu * g_n
        return np.array([
            theta_dot,
            sin / I1 * (I1 * phi_dot ** 2 * cos - I3 * omega3 * phi_dot - R * alpha * g_n)
            + R * fric * nu_x * one_ac / I1,
            (I3 * theta_dot * omega3 - 2 * I1 * theta_dot * phi_dot * cos - fric * nu_y * R * am) / (I1 * sin),
            -fric * nu_y * R * sin / I3,
            R * sin / I1 * (phi_dot * omega3 * (I3 * one_ac - I1) + g_n * R * alpha * one_ac
                            - I1 * alpha * (theta_dot ** 2 + phi_dot ** 2 * sin2))
            - fric * nu_x / (m * I1) * (I1 + mR2 * one_ac ** 2) + phi_dot * nu_y,
            -fric * nu_y / (m * I1 * I3) * (I1 * I3 + mR2 * I3 * am ** 2 + mR2 * I1 * sin2)
            + omega3 * theta_dot * R / I1 * (I3 * am + I1 * cos) - phi_dot * nu_x,
        ])

    return rhs


def rolling_derivative(theta, theta_dot, D: float, p: TopParameters, lam: float):
    """(theta_dot, theta_dd) of the pure-rolling main equation at fixed D, lambda."""
    sin = np.sin(theta)
    if np.any(np.abs(sin) < SIN_THETA_MIN):
        raise SinThetaUnderflow("sin(theta) below 1e-8")
    z = np.cos(theta)
    g = g_coefficient_rational(z, p)
    theta_dd = sin / (2 * g) * (g_coefficient_dz(p) * theta_dot ** 2 + v_rational_dz(z, D, lam, p))
    return theta_dot, theta_dd


def routh_rate(s: GlideState, p: TopParameters, f: FrictionModel):
    """dD/dt = gamma*m*R*sin(theta)*(phi_dot*nu_x + nu_y_dot)/sqrt(d(cos theta))."""
    nu_y_d = glide_derivative(s, p, f)[5]
    return (p.gamma * p.m * p.R * np.sin(s.theta) * (s.phi_dot * s.nu_x + nu_y_d)
            / np.sqrt(d_general(np.cos(s.theta), p)))


def modified_energy_rate(s: GlideState, p: TopParameters, f: FrictionModel):
    """dE_tilde/dt = m * dv_A/dt . (omega x a)."""
    rates = glide_derivative(s, p, f)
    nu_x_d, nu_y_d = rates[4], rates[5]
    sin, cos = np.sin(s.theta), np.cos(s.theta)
    w1, w2, w3 = omega_cross_a(s, p)
    # v_A = nu_x x + nu_y y in the frame turning with phi_dot about z
    dva_x = nu_x_d - s.phi_dot * s.nu_y
    dva_y = nu_y_d + s.phi_dot * s.nu_x
    return p.m * (dva_x * (cos * w1 + sin * w3) + dva_y * w2)


@dataclass(frozen=True)
class TrajectoryMeta:
    n_accepted: int
    n_rejected: int
    max_error: float
    reason: str
    rtol: float
    atol: float
    sample_dt: float
    t_end: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of a glide integration with per-sample integrals.

    Stored column-wise; ``sample(i)`` or iteration give the row view.
    """

    t: np.ndarray
    y: np.ndarray
    g_n: np.ndarray
    lam: np.ndarray
    D: np.ndarray
    E_tilde: np.ndarray
    E_total: np.ndarray
    params: TopParameters
    friction: FrictionModel
    meta: TrajectoryMeta

    def __len__(self):
        return len(self.t)

    @property
    def completed(self) -> bool:
        return self.meta.reason == "completed"

    @property
    def states(self) -> GlideState:
        return GlideState(*self.y.T)

    @property
    def theta(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def theta_dot(self) -> np.ndarray:
        return self.y[:, 1]

    def sample(self, i: int):
        return (float(self.t[i]), GlideState.from_array(self.y[i]),
                IntegralSnapshot(self.lam[i], self.D[i], self.E_tilde[i], self.E_total[i], self.g_n[i]))

    def __iter__(self):
        return (self.sample(i) for i in range(len(self)))


def integrals(s: GlideState, p: TopParameters, f: FrictionModel) -> IntegralSnapshot:
    num, den = _normal_force_parts(s.theta, s.theta_dot, s.phi_dot, s.omega3, s.nu_x, p, f.mu)
    return IntegralSnapshot(jellett(s, p), routh(s, p), modified_energy(s, p), total_energy(s, p), num / den)


def integrate(s0: GlideState, p: TopParameters, f: FrictionModel, t_end: float,
              rtol: float = 1e-9, atol: float = 1e-12, sample_dt: float = 1e-3) -> Trajectory:
    """Integrate the reduced equations and sample at multiples of sample_dt.

    A derivative error (negative normal force, chart breakdown, ...) or a
    step-size underflow ends the run early; the samples reached so far are
    kept and ``meta.reason`` names the cause.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not (rtol > 0 and atol > 0 and sample_dt > 0):
        raise ValueError("rtol, atol and sample_dt must be positive")
    glide_derivative(s0, p, f)
    n = int(math.floor(t_end / sample_dt + 1e-9)) + 1
    times = np.arange(n) * sample_dt
    sol = dopri.solve(_glide_rhs(p, f.mu), 0.0, s0.as_array(), t_end, times, rtol=rtol, atol=atol)
    st = sol.stats
    meta = TrajectoryMeta(st.n_accepted, st.n_rejected, st.max_error, st.reason,
                          rtol, atol, sample_dt, t_end)
    return trajectory_from_samples(sol.t, sol.y, p, f, meta)


def trajectory_from_samples(t, y, p, f, meta) -> Trajectory:
    y = np.asarray(y, dtype=float).reshape(-1, 6)
    states = GlideState(*y.T)
    snap = integrals(states, p, f)
    return Trajectory(np.asarray(t, dtype=float), y, np.atleast_1d(snap.g_n), np.atleast_1d(snap.lam),
                      np.atleast_1d(snap.D), np.atleast_1d(snap.E_tilde), np.atleast_1d(snap.E_total),
                      p, f, meta)


class InversionReport(NamedTuple):
    onset_time: float
    inversion_time: float
    final_theta: float
    sign_changes: int
    completed: bool


def count_sign_changes(x, hysteresis: float = SIGN_HYSTERESIS) -> int:
    """Sign flips of x, ignoring samples with |x| <= hysteresis."""
    x = np.asarray(x)
    signs = np.sign(x[np.abs(x) > hysteresis])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def detect_inversion(traj: Trajectory) -> InversionReport:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    theta, t = traj.theta, traj.t
    final = float(theta[-1])
    completed = final > math.pi - COMPLETION_MARGIN
    risen = np.nonzero(theta > theta[0] + ONSET_RISE)[0]
    if len(risen) == 0:
        return InversionReport(math.nan, math.nan, final, count_sign_changes(traj.theta_dot), completed)
    i_onset = risen[0]
    onset = float(t[i_onset])
    flipped = np.nonzero(theta[i_onset:] > math.pi - COMPLETION_MARGIN)[0]
    duration = float(t[i_onset + flipped[0]] - onset) if len(flipped) else math.nan
    return InversionReport(onset, duration, final, count_sign_changes(traj.theta_dot[i_onset:]), completed)


class ConservationReport(NamedTuple):
    lambda_drift: float
    energy_monotone: bool
    max_energy_rise: float
    d_derivative_residual: float
    e_tilde_derivative_residual: float


def _fd_residual(t, values, exact):
    """Centered-difference derivative vs exact rate, relative to max |exact|."""
    fd = (values[2:] - values[:-2]) / (t[2:] - t[:-2])
    ref = exact[1:-1]
    scale = np.max(np.abs(ref))
    if scale == 0:
        return float(np.max(np.abs(fd)))
    return float(np.max(np.abs(fd - ref)) / scale)


def conservation_report(traj: Trajectory, energy_tol: float | None = None) -> ConservationReport:
    """Drift of lambda, monotonicity of E and finite-difference rate checks.

    ``energy_tol`` is the rise of E allowed between consecutive samples;
    by default 10*atol plus 10*rtol*|E(0)|, the integrator's error scale.
    """
    if len(traj) < 3:
        raise ValueError("need at least 3 samples")
    lam0 = traj.lam[0]
    lambda_drift = float(np.max(np.abs(traj.lam - lam0)) / abs(lam0))
    if energy_tol is None:
        energy_tol = 10 * traj.meta.atol + 10 * traj.meta.rtol * abs(traj.E_total[0])
    rise = float(max(0.0, np.max(np.diff(traj.E_total))))
    states = traj.states
    d_res = _fd_residual(traj.t, traj.D, routh_rate(states, traj.params, traj.friction))
    e_res = _fd_residual(traj.t, traj.E_tilde, modified_energy_rate(states, traj.params, traj.friction))
    return ConservationReport(lambda_drift, rise <= energy_tol, rise, d_res, e_res)
