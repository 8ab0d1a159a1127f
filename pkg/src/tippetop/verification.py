"""Acceptance criteria and invariant checks shared by `tippetop verify` and the tests.

Each criterion returns a ``CriterionResult`` holding named sub-checks, so a
failure points at the exact quantity that missed its bound.
"""
from __future__ import annotations

import math
import time
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from . import dopri
from .dynamics import (FrictionModel, conservation_report, detect_inversion, integrate,
                       rolling_derivative)
from .model import GlideState, TopParameters, boundary_values, lambda_threshold
from .nutation import (companion_roots, elliptic_K, epsilon_w, h_functions, period_elliptic,
                       period_exact, t_max, t_upp, turning_points)
from .polynomial import RealPolynomial, count_roots
from .potential import (ab_beta, convexity_witness, delta_minus, delta_plus, find_minimum,
                        g_coefficient_rational, guard_scale_lower, guard_scale_upper, v_rational)


class Check(NamedTuple):
    label: str
    value: float
    bound: str
    passed: bool


class CriterionResult(NamedTuple):
    key: str
    title: str
    checks: list
    seconds: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [c.label for c in self.checks if not c.passed]
        tail = f"; failed: {', '.join(failed)}" if failed else ""
        return f"[{status}] {self.key} {self.title} ({len(self.checks)} checks, {self.seconds:.1f} s){tail}"


def _rel_check(label, value, target, rtol):
    err = abs(value - target) / abs(target)
    return Check(label, value, f"{target:.5g} (rel. tol {rtol:g})", err <= rtol)


def _upper_check(label, value, bound, strict=True):
    ok = value < bound if strict else value <= bound
    return Check(label, value, f"{'<' if strict else '<='} {bound:.6g}", bool(ok))


def _lower_check(label, value, bound):
    return Check(label, value, f">= {bound:.6g}", bool(value >= bound))


def _flag(label, ok, value=math.nan, bound="true"):
    return Check(label, value, bound, bool(ok))


# reference configurations

def example1_parameters() -> TopParameters:
    m, R = 0.02, 0.02
    return TopParameters.rational(m=m, R=R, alpha=0.3, I3=0.4 * m * R * R)


def cohen_parameters() -> TopParameters:
    m, R = 0.015, 0.025
    I = 0.4 * m * R * R
    return TopParameters(m=m, R=R, alpha=0.2, I1=I, I3=I)


FIG3A_STATE = GlideState(theta=0.1, theta_dot=0.0, phi_dot=0.0, omega3=155.0)
COHEN_STATE = GlideState(theta=0.1, theta_dot=0.0, phi_dot=0.0, omega3=100.0)
FIG3_MU = 0.3
FIG3_T_END = 10.0


@lru_cache(maxsize=4)
def fig3a_trajectory(sample_dt: float = 1e-4, t_end: float = FIG3_T_END):
    return integrate(FIG3A_STATE, example1_parameters(), FrictionModel(FIG3_MU), t_end, sample_dt=sample_dt)


@lru_cache(maxsize=4)
def cohen_trajectory(sample_dt: float = 1e-3, t_end: float = FIG3_T_END):
    return integrate(COHEN_STATE, cohen_parameters(), FrictionModel(FIG3_MU), t_end, sample_dt=sample_dt)


def _example1_lambda():
    p = example1_parameters()
    return 2 * lambda_threshold(p), p


# criteria

def criterion_1(seed: int = 0) -> list:
    p = example1_parameters()
    lam_t = lambda_threshold(p)
    lam = 2 * lam_t
    return [
        _rel_check("gamma = 131/140", p.gamma, 131 / 140, 1e-12),
        _rel_check("lambda_thres", lam_t, 3.44e-6, 0.005),
        _rel_check("lambda = 2 lambda_thres", lam, 6.88e-6, 0.005),
        _rel_check("D1", boundary_values(lam, p).D1, -6.0e-4, 0.02),
        _rel_check("delta_minus(0.1)", delta_minus(0.1, lam, p), 1.48e-7, 0.01),
    ]


def criterion_2(seed: int = 0) -> list:
    lam, p = _example1_lambda()
    bv = boundary_values(lam, p)
    b_low, b_high = ab_beta(bv.D1, lam, p).b, ab_beta(bv.D0, lam, p).b
    factor = p.R * p.I3 * p.gamma * (p.alpha + 1 - p.gamma)
    return [
        _rel_check("b at D1", b_low, 1.4851e-6, 0.001),
        _rel_check("b at D0", b_high, 2.7581e-6, 0.001),
        _rel_check("R I3 gamma (alpha+1-gamma)", factor, 2.1816e-8, 0.001),
        _rel_check("T_max at b(D0)", t_max(bv.D0, lam, p), 0.0497, 0.01),
        _rel_check("T_max at b(D1)", t_max(bv.D1, lam, p), 0.0923, 0.01),
    ]


def criterion_3(seed: int = 0) -> list:
    traj = fig3a_trajectory()
    inv = detect_inversion(traj)
    cons = conservation_report(traj)
    return [
        _flag("integration completed", traj.completed, bound=traj.meta.reason),
        _flag("final theta > pi - 0.2", inv.completed, inv.final_theta, f"> {math.pi - 0.2:.4f}"),
        Check("inversion duration", inv.inversion_time, "in [2, 8] s", bool(2 <= inv.inversion_time <= 8)),
        _lower_check("theta_dot sign changes", inv.sign_changes, 10),
        _upper_check("lambda drift", cons.lambda_drift, 1e-6),
    ]


def criterion_4(seed: int = 0) -> list:
    traj = cohen_trajectory()
    inv = detect_inversion(traj)
    cons = conservation_report(traj)
    return [
        _flag("integration completed", traj.completed, bound=traj.meta.reason),
        _flag("final theta > pi - 0.2", inv.completed, inv.final_theta, f"> {math.pi - 0.2:.4f}"),
        _upper_check("lambda drift", cons.lambda_drift, 1e-6),
        _flag("energy non-increasing", cons.energy_monotone, cons.max_energy_rise, "rise <= 10 (atol + rtol |E0|)"),
    ]


def _v_convex_on_grid(D, lam, p, n=2001):
    z = np.linspace(-0.999, 0.999, n)
    v = v_rational(z, D, lam, p)
    dd = v[:-2] - 2 * v[1:-1] + v[2:]
    return bool(np.all(dd >= -1e-13 * np.max(np.abs(v))))


def constructed_polynomial(rng):
    """Random square-free polynomial of degree <= 6 with known real roots."""
    n_real = int(rng.integers(0, 7))
    n_pairs = int(rng.integers(0, (6 - n_real) // 2 + 1))
    if n_real + 2 * n_pairs == 0:
        n_real = 1
    # distinct real roots on a jittered lattice, so they stay well separated
    slots = rng.choice(np.arange(-12, 13), size=n_real, replace=False)
    roots = np.sort(slots * 0.25 + rng.uniform(-0.05, 0.05, n_real))
    coeffs = np.array([float(rng.uniform(0.5, 2.0))])
    for r in roots:
        coeffs = np.convolve(coeffs, [1.0, -r])
    for _ in range(n_pairs):
        re, im = rng.uniform(-3, 3), rng.uniform(0.3, 2.0)
        coeffs = np.convolve(coeffs, [1.0, -2 * re, re * re + im * im])
    # interval ends on the lattice midpoints, away from every root
    c, d = np.sort(rng.choice(np.arange(-13, 14), size=2, replace=False) * 0.25 + 0.125)
    return RealPolynomial(coeffs[::-1]), roots, float(c), float(d)


def criterion_5(seed: int = 0, n_potentials: int = 10_000, n_polys: int = 1000) -> list:
    rng = np.random.default_rng(seed + 5)
    lam_t = lambda_threshold(example1_parameters())
    p = example1_parameters()
    sturm_fail = grid_fail = 0
    for _ in range(n_potentials):
        lam = lam_t * rng.uniform(1.1, 10)
        bv = boundary_values(lam, p)
        D = rng.uniform(bv.D1, bv.D0)
        sturm_fail += not convexity_witness(D, lam, p)
        grid_fail += not _v_convex_on_grid(D, lam, p)
    count_fail = 0
    for _ in range(n_polys):
        q, roots, c, d = constructed_polynomial(rng)
        expected = int(np.count_nonzero((roots > c) & (roots <= d)))
        eig = q.real_roots()
        oracle = int(np.count_nonzero((eig > c) & (eig <= d)))
        count_fail += not (count_roots(q, c, d) == oracle == expected)
    return [
        Check("convexity_witness failures", sturm_fail, f"== 0 of {n_potentials}", sturm_fail == 0),
        Check("second-difference failures", grid_fail, f"== 0 of {n_potentials}", grid_fail == 0),
        Check("Sturm vs eigenvalue mismatches", count_fail, f"== 0 of {n_polys}", count_fail == 0),
    ]


def criterion_6(seed: int = 0, n: int = 100) -> list:
    rng = np.random.default_rng(seed + 6)
    p = example1_parameters()
    lam_t = lambda_threshold(p)
    lower_fail = upper_fail = 0
    for _ in range(n):
        eps = rng.uniform(0.01, 0.5)
        lam = lam_t * rng.uniform(1.1, 10)
        bv = boundary_values(lam, p)
        frac = rng.uniform(0.0, 1.0)
        dm = frac * delta_minus(eps, lam, p) / guard_scale_lower(p)
        dp = frac * delta_plus(eps, lam, p) / guard_scale_upper(p)
        for D in (bv.D1 + dm, bv.D1 - dm):
            z = find_minimum(D, lam, p)
            lower_fail += not (-1 <= z <= -1 + eps)
        for D in (bv.D0 - dp, bv.D0 + dp):
            z = find_minimum(D, lam, p)
            upper_fail += not (1 - eps <= z <= 1)
    return [
        Check("z_min outside [-1, -1+eps] near D1", lower_fail, f"== 0 of {2 * n}", lower_fail == 0),
        Check("z_min outside [1-eps, 1] near D0", upper_fail, f"== 0 of {2 * n}", upper_fail == 0),
    ]


def admissible_band(rng, p, lam, margin=0.02):
    """Random (E_tilde, D) with D inside (D1, D0) and a genuine band."""
    bv = boundary_values(lam, p)
    D = bv.D1 + (bv.D0 - bv.D1) * rng.uniform(margin, 1 - margin)
    z_min = find_minimum(D, lam, p)
    E = v_rational(z_min, D, lam, p) + p.m * p.g * p.R * 10 ** rng.uniform(-4, -1.3)
    return E, D


def rolling_period(E, D, lam, p, rtol=1e-12, atol=1e-14):
    """Period from theta_dot = 0 events of the rolling equation (scipy oracle)."""
    from scipy.integrate import solve_ivp

    z_min = find_minimum(D, lam, p)
    theta0 = math.acos(z_min)
    rate0 = math.sqrt((E - v_rational(z_min, D, lam, p)) / g_coefficient_rational(z_min, p))

    def rhs(t, y):
        return rolling_derivative(y[0], y[1], D, p, lam)

    def turn(t, y):
        return y[1]

    t_guess = period_exact(E, D, lam, p)
    sol = solve_ivp(rhs, (0.0, 2.2 * t_guess), [theta0, rate0], method="DOP853",
                    rtol=rtol, atol=atol, events=turn)
    ev = sol.t_events[0]
    if len(ev) < 3:
        raise RuntimeError("fewer than three turning events")
    return float(ev[2] - ev[0])


def criterion_7(seed: int = 0, n: int = 100) -> list:
    rng = np.random.default_rng(seed + 7)
    lam, p = _example1_lambda()
    worst = 0.0
    chain_fail = outside = 0
    for _ in range(n):
        E, D = admissible_band(rng, p, lam)
        T = period_exact(E, D, lam, p)
        worst = max(worst, abs(T - rolling_period(E, D, lam, p)) / T)
        eps, w = epsilon_w(D, lam, p)
        if not (eps < 0.9 and abs(w) <= 0.9999):
            outside += 1
            continue
        low, _, high = period_elliptic(E, D, lam, p)
        chain_fail += not (low <= T <= high <= t_upp(D, lam, p))
    return [
        _upper_check("max rel. error vs rolling ODE", worst, 1e-3),
        Check("bound-chain violations", chain_fail, f"== 0 of {n - outside}", chain_fail == 0),
    ]


H1_MAX = 2 / (3 * math.sqrt(3))


def constants_grid(n: int = 2001, eps_values=tuple(np.round(np.arange(1, 10) * 0.1, 10))):
    """Maxima of |h1|, |h2|, h3, k^2 and K over the (z1, w, eps) grid.

    |h1| and |h2| do not involve eps and use the full rectangle. h3, k^2
    and K are taken over admissible points, -1 < z1 <= z2 < 1.
    """
    z1 = np.linspace(-1.0, 1.0, n)
    w = np.linspace(-0.9999, 0.9999, n)
    Z, W = np.meshgrid(z1, w, indexing="ij")
    h1, h2, _ = h_functions(Z, W, 0.5)
    out = {"h1": float(np.max(np.abs(h1))), "h2": float(np.max(np.abs(h2)))}
    Zi, Wi = Z[1:-1], W[1:-1]
    den = 1 + Wi * Wi + 2 * Wi * Zi
    u = (1 - Zi * Zi) / den
    v = (1 - Zi * Zi) * ((1 + Wi * Wi) * Zi + 2 * Wi) / den ** 2
    h3_max = k2_max = -math.inf
    for eps in eps_values:
        B = 2 / (eps * u)
        C = -1 + 2 * v / (eps * u * u)
        with np.errstate(invalid="ignore"):
            z3 = -0.5 * (B + np.sqrt(B * B - 4 * C))
            z2 = C / z3
            k2 = (z2 - Zi) / (z2 - z3)
        _, _, h3 = h_functions(Zi, Wi, eps)
        ok = (z2 >= Zi) & (z2 < 1) & np.isfinite(h3)
        h3_max = max(h3_max, float(np.max(h3[ok])))
        k2_max = max(k2_max, float(np.max(k2[ok])))
    out.update(h3=h3_max, k2=k2_max, K=elliptic_K(k2_max))
    return out


def criterion_8(seed: int = 0) -> list:
    c = constants_grid()
    return [
        Check("max |h1|", c["h1"], f"2/(3 sqrt 3) +-1e-6", abs(c["h1"] - H1_MAX) <= 1e-6),
        _upper_check("max |h2|", c["h2"], 1.0, strict=False),
        _upper_check("max h3", c["h3"], 3.15),
        _upper_check("max k^2", c["k2"], 0.342),
        _upper_check("max K", c["K"], 1.74),
    ]


def criterion_9(seed: int = 0) -> list:
    p = example1_parameters()
    lam_t = lambda_threshold(p)
    checks = []
    for C in (1.1, 2.0, 5.0):
        lam = C * lam_t
        bv = boundary_values(lam, p)
        worst = max(epsilon_w(D, lam, p)[0] for D in np.linspace(bv.D1, bv.D0, 102)[1:-1])
        checks.append(_upper_check(f"max eps at C={C:g} (1/C^2 = {1 / C ** 2:.4g})", worst, 1 / C ** 2))
    return checks


def criterion_10(seed: int = 0) -> list:
    cons = conservation_report(fig3a_trajectory())
    return [
        _upper_check("dD/dt residual", cons.d_derivative_residual, 1e-3),
        _upper_check("dE_tilde/dt residual", cons.e_tilde_derivative_residual, 1e-3),
    ]


# invariants beyond the criteria

def _rolling_energy_drift(periods: int = 100) -> float:
    lam, p = _example1_lambda()
    bv = boundary_values(lam, p)
    D = 0.5 * (bv.D0 + bv.D1)
    z_min = find_minimum(D, lam, p)
    E = v_rational(z_min, D, lam, p) + p.m * p.g * p.R * 0.01
    rate0 = math.sqrt((E - v_rational(z_min, D, lam, p)) / g_coefficient_rational(z_min, p))
    T = period_exact(E, D, lam, p)

    def rhs(t, y):
        return np.array(rolling_derivative(y[0], y[1], D, p, lam))

    ts = np.linspace(0, periods * T, 20 * periods + 1)
    sol = dopri.solve(rhs, 0.0, [math.acos(z_min), rate0], periods * T, ts, rtol=1e-12, atol=1e-14)
    z = np.cos(sol.y[:, 0])
    energy = g_coefficient_rational(z, p) * sol.y[:, 1] ** 2 + v_rational(z, D, lam, p)
    return float(np.max(np.abs(energy - E)) / abs(E))


def invariant_suite(seed: int = 0, n: int = 100) -> list:
    rng = np.random.default_rng(seed + 11)
    lam, p = _example1_lambda()
    fact_worst = 0.0
    for _ in range(n):
        E, D = admissible_band(rng, p, lam)
        z1, z2 = turning_points(E, D, lam, p)
        _, z3 = companion_roots(z1, ab_beta(D, lam, p))
        z = np.linspace(-1 + 1e-3, 1 - 1e-3, 1000)
        lhs = (1 - z * z) * (E - v_rational(z, D, lam, p))
        rhs = p.m * p.g * p.R * p.alpha * (z1 - z) * (z2 - z) * (z3 - z)
        fact_worst = max(fact_worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs))))
    ks = [elliptic_K(k) for k in np.linspace(0, 0.99, 200)]
    cons = conservation_report(fig3a_trajectory())
    return [
        _upper_check("factorization identity", fact_worst, 1e-9),
        _flag("K strictly increasing on [0, 0.99]", all(np.diff(ks) > 0)),
        _upper_check("|K(0) - pi/2|", abs(elliptic_K(0.0) - math.pi / 2), 1e-15, strict=False),
        _upper_check("rolling E_tilde drift over 100 periods", _rolling_energy_drift(), 1e-9),
        _flag("Example 1 run: energy non-increasing", cons.energy_monotone, cons.max_energy_rise),
        _upper_check("Example 1 run: lambda drift (rtol 1e-9)", cons.lambda_drift, 100 * 1e-9),
    ]


CRITERIA: dict[str, tuple[str, Callable]] = {
    "C1": ("Example 1 reproduction", criterion_1),
    "C2": ("Example 2 reproduction", criterion_2),
    "C3": ("Example 1 inversion", criterion_3),
    "C4": ("Cohen top inversion", criterion_4),
    "C5": ("convexity certification", criterion_5),
    "C6": ("minimum-location bounds sweep", criterion_6),
    "C7": ("period oracle and bound chain", criterion_7),
    "C8": ("nutation constants by grid search", criterion_8),
    "C9": ("epsilon bound", criterion_9),
    "C10": ("quasi-integral derivative identities", criterion_10),
    "INV": ("module invariants", invariant_suite),
}


def run_criterion(key: str, seed: int = 0) -> CriterionResult:
    title, fn = CRITERIA[key]
    start = time.perf_counter()
    checks = fn(seed)
    return CriterionResult(key, title, checks, time.perf_counter() - start)


def run_all(seed: int = 0, jobs: int = 1, keys=None) -> list:
    keys = list(CRITERIA) if keys is None else list(keys)
    if jobs <= 1:
        return [run_criterion(k, seed) for k in keys]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_criterion, keys, [seed] * len(keys)))
