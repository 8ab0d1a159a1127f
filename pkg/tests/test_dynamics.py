import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import random_state
from tippetop.dynamics import (FrictionModel, Trajectory, TrajectoryMeta, conservation_report,
                               count_sign_changes, detect_inversion, glide_derivative, integrate,
                               modified_energy_rate, normal_force, rolling_derivative, routh_rate,
                               trajectory_from_samples)
from tippetop.errors import NegativeNormalForce, NonPositiveDenominator, SinThetaUnderflow
from tippetop.model import GlideState, d_general, jellett, omega_cross_a, modified_energy, routh, total_energy
from tippetop.potential import find_minimum, g_coefficient_rational, v_rational

FIELDS = ("theta", "theta_dot", "phi_dot", "omega3", "nu_x", "nu_y")
STEP = 1e-30


def directional(fn, s, rates, p):
    """(d/dt fn, sum of |partial terms|) along the flow, by complex step."""
    y = s.as_array()
    total, scale = 0.0, 0.0
    for i in range(6):
        yc = y.astype(complex)
        yc[i] += 1j * STEP
        part = np.imag(fn(SimpleNamespace(**dict(zip(FIELDS, yc))), p)) / STEP * rates[i]
        total += part
        scale += abs(part)
    return total, scale


def _rate(bound):
    # tiny rates drive the complex-step products into the subnormal range
    return st.floats(-bound, bound).map(lambda x: 0.0 if abs(x) < 1e-6 * bound else x)


states = st.builds(
    GlideState,
    theta=st.floats(0.05, math.pi - 0.05), theta_dot=_rate(20), phi_dot=_rate(60),
    omega3=_rate(200), nu_x=_rate(0.05), nu_y=_rate(0.05))
mus = st.floats(0.0, 1.0)


def _rates_or_skip(s, p, f):
    try:
        return np.array(glide_derivative(s, p, f))
    except (NegativeNormalForce, NonPositiveDenominator):
        assume(False)


@settings(max_examples=300, deadline=None)
@given(s=states, mu=mus)
def test_jellett_is_conserved(ex1, s, mu):
    r = _rates_or_skip(s, ex1, FrictionModel(mu))
    rate, scale = directional(jellett, s, r, ex1)
    assert abs(rate) <= 1e-11 * scale + 1e-300


@settings(max_examples=300, deadline=None)
@given(s=states, mu=mus)
def test_energy_rate_is_friction_power(ex1, s, mu):
    f = FrictionModel(mu)
    r = _rates_or_skip(s, ex1, f)
    rate, scale = directional(total_energy, s, r, ex1)
    g_n = normal_force(s, ex1, f)
    # |v_A|^2 = nu_x^2 + nu_y^2
    assert rate == pytest.approx(-mu * g_n * (s.nu_x ** 2 + s.nu_y ** 2), abs=1e-11 * scale + 1e-300)


@settings(max_examples=300, deadline=None)
@given(s=states, mu=mus)
def test_routh_rate_formula(ex1, s, mu):
    f = FrictionModel(mu)
    r = _rates_or_skip(s, ex1, f)
    rate, scale = directional(routh, s, r, ex1)
    # the formula itself cancels phi_dot*nu_x against nu_y_dot
    terms = (ex1.gamma * ex1.m * ex1.R * math.sin(s.theta) * (abs(s.phi_dot * s.nu_x) + abs(r[5]))
             / math.sqrt(d_general(math.cos(s.theta), ex1)))
    assert routh_rate(s, ex1, f) == pytest.approx(rate, abs=1e-11 * scale + 1e-13 * terms + 1e-300)


@settings(max_examples=300, deadline=None)
@given(s=states, mu=mus)
def test_modified_energy_rate_formula(ex1, s, mu):
    f = FrictionModel(mu)
    r = _rates_or_skip(s, ex1, f)
    rate, scale = directional(modified_energy, s, r, ex1)
    w = np.abs(omega_cross_a(s, ex1))
    terms = ex1.m * ((abs(r[4]) + abs(s.phi_dot * s.nu_y)) * (w[0] + w[2])
                     + (abs(r[5]) + abs(s.phi_dot * s.nu_x)) * w[1])
    assert modified_energy_rate(s, ex1, f) == pytest.approx(rate, abs=1e-11 * scale + 1e-13 * terms + 1e-300)


@settings(max_examples=300, deadline=None)
@given(s=states, mu=mus)
def test_normal_force_keeps_contact(cohen, s, mu):
    # height of the centre of mass is R(1 - alpha cos theta); m h'' = g_n - m g
    f = FrictionModel(mu)
    r = _rates_or_skip(s, cohen, f)
    g_n = normal_force(s, cohen, f)
    p = cohen
    accel = p.R * p.alpha * (math.cos(s.theta) * s.theta_dot ** 2 + math.sin(s.theta) * r[1])
    assert g_n == pytest.approx(p.m * p.g + p.m * accel, rel=1e-10, abs=1e-12 * p.m * p.g)


def test_static_normal_force(ex1):
    f = FrictionModel(0.3)
    for theta in (0.3, 1.0, 2.5):
        s = GlideState(theta, 0, 0, 0)
        expected = ex1.m * ex1.g * ex1.I1 / (ex1.I1 + ex1.m * ex1.R ** 2 * ex1.alpha ** 2 * math.sin(theta) ** 2)
        assert normal_force(s, ex1, f) == pytest.approx(expected, rel=1e-14)
    for theta in (1e-6, math.pi - 1e-6):
        assert normal_force(GlideState(theta, 0, 0, 0), ex1, f) == pytest.approx(ex1.m * ex1.g, rel=1e-10)


def test_equator_example_without_friction(ex1):
    s = GlideState(math.pi / 2, 0, 0, 50.0)
    f = FrictionModel(0.0)
    r = glide_derivative(s, ex1, f)
    g_n = normal_force(s, ex1, f)
    assert r[1] == pytest.approx(-ex1.R * ex1.alpha * g_n / ex1.I1, rel=1e-14)
    assert r[3] == 0.0


def test_contact_point_starts_to_slip(ex1):
    r = glide_derivative(GlideState(0.1, 0, 0, 155.0), ex1, FrictionModel(0.3))
    assert r[4] > 0 and r[5] == 0.0


def test_no_friction_keeps_spin(ex1, rng):
    checked = 0
    while checked < 20:
        try:
            r = glide_derivative(random_state(rng), ex1, FrictionModel(0.0))
        except NegativeNormalForce:
            continue
        assert r[3] == 0.0
        checked += 1


def test_errors(ex1):
    f = FrictionModel(0.3)
    with pytest.raises(SinThetaUnderflow):
        glide_derivative(GlideState(1e-9, 0, 0, 1), ex1, f)
    with pytest.raises(NegativeNormalForce):
        normal_force(GlideState(2.5, 1000.0, 0, 0), ex1, f)
    with pytest.raises(NonPositiveDenominator):
        normal_force(GlideState(1.0, 0, 0, 0, nu_x=1e6), ex1, f)
    with pytest.raises(ValueError):
        FrictionModel(-0.1)


def test_rolling_equilibrium_and_restoring(ex1, lam, bv):
    D = 0.5 * (bv.D0 + bv.D1)
    z = find_minimum(D, lam, ex1)
    theta = math.acos(z)
    _, acc = rolling_derivative(theta, 0.0, D, ex1, lam)
    _, acc_up = rolling_derivative(theta + 0.05, 0.0, D, ex1, lam)
    _, acc_down = rolling_derivative(theta - 0.05, 0.0, D, ex1, lam)
    assert abs(acc) < 1e-6 * abs(acc_up)
    # V(cos theta) grows away from the minimum in both directions
    h = 1e-6
    for th, a in ((theta + 0.05, acc_up), (theta - 0.05, acc_down)):
        slope = (v_rational(math.cos(th + h), D, lam, ex1) - v_rational(math.cos(th - h), D, lam, ex1)) / (2 * h)
        assert np.sign(a) == -np.sign(slope)


def test_rolling_first_integral_pointwise(ex1, lam, bv, rng):
    D = 0.4 * bv.D0 + 0.6 * bv.D1
    for _ in range(50):
        theta, rate = rng.uniform(0.5, 2.5), rng.uniform(-10, 10)
        _, acc = rolling_derivative(theta, rate, D, ex1, lam)
        z = math.cos(theta)
        h = 1e-7
        def E(th, td):
            zz = math.cos(th)
            return g_coefficient_rational(zz, ex1) * td ** 2 + v_rational(zz, D, lam, ex1)
        dE = (E(theta + h * rate, rate + h * acc) - E(theta - h * rate, rate - h * acc)) / (2 * h)
        scale = abs(g_coefficient_rational(z, ex1) * rate * acc) + abs(rate * v_rational(z, D, lam, ex1))
        assert abs(dE) < 1e-6 * scale


def test_integrate_without_friction_conserves(ex1):
    traj = integrate(GlideState(0.1, 0, 0, 155.0), ex1, FrictionModel(0.0), 2.0, rtol=1e-10, atol=1e-13)
    assert traj.completed
    cons = conservation_report(traj)
    assert cons.lambda_drift < 1e-8
    assert np.ptp(traj.E_total) < 1e-9 * traj.E_total[0]
    assert np.ptp(traj.y[:, 3]) == 0.0


def test_trajectory_invariants(ex1):
    traj = integrate(GlideState(0.1, 0, 0, 155.0), ex1, FrictionModel(0.3), 0.5)
    assert np.all(np.diff(traj.t) > 0)
    t, s, snap = traj.sample(123)
    assert snap.D == pytest.approx(routh(s, ex1), rel=1e-15)
    assert snap.E_tilde == pytest.approx(modified_energy(s, ex1), rel=1e-15)
    assert len(list(traj)) == len(traj) == 501


def test_sampling_does_not_change_solution(ex1):
    s0, f = GlideState(0.1, 0, 0, 155.0), FrictionModel(0.3)
    coarse = integrate(s0, ex1, f, 1.0, sample_dt=2e-3)
    fine = integrate(s0, ex1, f, 1.0, sample_dt=1e-3)
    np.testing.assert_allclose(fine.y[::2], coarse.y, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(fine.D[::2], coarse.D, rtol=1e-13)


def test_integration_stops_when_top_leaves_plane(ex1):
    traj = integrate(GlideState(1.5, 100.0, 0, 0), ex1, FrictionModel(0.3), 1.0)
    assert not traj.completed
    assert traj.meta.reason.startswith("NegativeNormalForce")
    assert 0 < len(traj) < 1001


def test_integrate_validates(ex1):
    with pytest.raises(ValueError):
        integrate(GlideState(0.1, 0, 0, 1), ex1, FrictionModel(0.3), 0.0)
    with pytest.raises(NegativeNormalForce):
        integrate(GlideState(2.5, 1000.0, 0, 0), ex1, FrictionModel(0.3), 1.0)


def _synthetic(theta, p, dt):
    t = np.arange(len(theta)) * dt
    rate = np.gradient(theta, dt)
    y = np.column_stack([theta, rate, np.zeros_like(theta), np.full_like(theta, 10.0),
                         np.zeros_like(theta), np.zeros_like(theta)])
    meta = TrajectoryMeta(0, 0, 0.0, "completed", 1e-9, 1e-12, dt, t[-1])
    return trajectory_from_samples(t, y, p, FrictionModel(0.3), meta)


def test_detect_inversion_constant(ex1):
    inv = detect_inversion(_synthetic(np.full(100, 1.0), ex1, 0.01))
    assert not inv.completed and inv.sign_changes == 0 and math.isnan(inv.onset_time)


def test_detect_inversion_sine(ex1):
    t = np.arange(0, 20.0 + 1e-9, 1e-3)
    traj = _synthetic(math.pi / 2 + 0.1 * np.sin(t), ex1, 1e-3)
    traj = Trajectory(traj.t, np.column_stack([traj.y[:, 0], 0.1 * np.cos(t), traj.y[:, 2:]]), traj.g_n,
                      traj.lam, traj.D, traj.E_tilde, traj.E_total, traj.params, traj.friction, traj.meta)
    assert detect_inversion(traj).sign_changes == 6


def test_sign_change_hysteresis():
    assert count_sign_changes([1.0, 1e-7, -1e-7, 1e-7, -1.0, 1.0]) == 2


def test_detect_inversion_fig3a(fig3a):
    inv = detect_inversion(fig3a)
    assert inv.completed and inv.sign_changes >= 10 and inv.inversion_time > 0
    assert 2.0 <= inv.onset_time <= 5.0


def test_energy_monotone_fig3a(fig3a):
    cons = conservation_report(fig3a)
    assert cons.energy_monotone
    assert cons.lambda_drift < 100 * 1e-9


def test_contact_consistency_along_flow(fig3a):
    p = fig3a.params
    dt = fig3a.meta.sample_dt
    height = p.R * (1 - p.alpha * np.cos(fig3a.theta))
    accel = (height[2:] - 2 * height[1:-1] + height[:-2]) / dt ** 2
    recovered = p.m * (accel + p.g)
    np.testing.assert_allclose(recovered, fig3a.g_n[1:-1], rtol=1e-4)


def test_conservation_report_needs_samples(ex1):
    traj = _synthetic(np.full(2, 1.0), ex1, 0.01)
    with pytest.raises(ValueError):
        conservation_report(traj)
