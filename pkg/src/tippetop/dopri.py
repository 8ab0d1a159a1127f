"""Dormand-Prince 5(4) integrator with PI step control and dense output.

Coefficients and the continuous extension follow Hairer, Norsett and
Wanner, Solving Ordinary Differential Equations I, section II.5/II.6.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelBreakdown, StepSizeUnderflow

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
D1, D3, D4 = -12715105075 / 11282082432, 87487479700 / 32700410799, -10690763975 / 1880347072
D5, D6, D7 = 701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423

SAFETY = 0.9
FAC_MIN, FAC_MAX = 0.2, 10.0
BETA_PI = 0.04
ALPHA_PI = 0.2 - 0.75 * BETA_PI


@dataclass
class SolverStats:
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    max_error: float = 0.0
    reason: str = "completed"
    t_last: float = 0.0


@dataclass
class DenseSolution:
    t: np.ndarray
    y: np.ndarray
    stats: SolverStats = field(default_factory=SolverStats)


def _initial_step(f, t0, y0, f0, rtol, atol, t_end):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_end - t0)


def solve(f, t0: float, y0, t_end: float, sample_times, rtol: float = 1e-9,
          atol: float = 1e-12, h_min: float = 1e-14, max_steps: int = 10_000_000) -> DenseSolution:
    """Integrate y' = f(t, y) and return y at the requested sample times.

    Integration stops early, keeping every sample reached so far, when the
    right-hand side raises a ``ModelBreakdown`` or the step size underflows;
    ``stats.reason`` records why.
    """
    y = np.asarray(y0, dtype=float).copy()
    sample_times = np.asarray(sample_times, dtype=float)
    out = np.empty((len(sample_times), len(y)))
    n_out = 0
    while n_out < len(sample_times) and sample_times[n_out] <= t0:
        out[n_out] = y
        n_out += 1

    stats = SolverStats(t_last=t0)
    t = t0
    try:
        k1 = f(t, y)
        stats.n_rhs += 1
        h = _initial_step(f, t0, y, k1, rtol, atol, t_end)
        stats.n_rhs += 1
    except ModelBreakdown as exc:
        stats.reason = f"{type(exc).__name__}: {exc}"
        return DenseSolution(sample_times[:n_out], out[:n_out], stats)

    err_old = 1e-4
    rejected_last = False
    while t < t_end:
        if stats.n_accepted + stats.n_rejected >= max_steps:
            stats.reason = "max_steps"
            break
        if h < h_min * max(1.0, abs(t)):
            stats.reason = f"{StepSizeUnderflow.__name__}: h={h:.3e} at t={t:.6g}"
            break
        if t + h > t_end:
            h = t_end - t
        try:
            k2 = f(t + C2 * h, y + h * (A21 * k1))
            k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
            k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
            k7 = f(t + h, y_new)
        except ModelBreakdown as exc:
            # a trial stage may leave the model's domain although the true
            # solution does not; retry smaller before giving up
            stats.n_rejected += 1
            h *= 0.25
            if h < h_min * max(1.0, abs(t)):
                stats.reason = f"{type(exc).__name__}: {exc}"
                break
            rejected_last = True
            continue
        stats.n_rhs += 6

        err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0:
            t_new = t + h
            while n_out < len(sample_times) and sample_times[n_out] <= t_new:
                theta = (sample_times[n_out] - t) / h
                out[n_out] = _dense(theta, h, y, y_new, k1, k3, k4, k5, k6, k7)
                n_out += 1
            stats.n_accepted += 1
            stats.max_error = max(stats.max_error, err)
            t, y, k1 = t_new, y_new, k7
            stats.t_last = t
            err = max(err, 1e-10)
            fac = SAFETY * err ** (-ALPHA_PI) * err_old ** BETA_PI
            fac = min(FAC_MAX, max(FAC_MIN, fac))
            if rejected_last:
                fac = min(fac, 1.0)
            h *= fac
            err_old = err
            rejected_last = False
        else:
            stats.n_rejected += 1
            h *= max(FAC_MIN, SAFETY * err ** (-ALPHA_PI))
            rejected_last = True
    return DenseSolution(sample_times[:n_out], out[:n_out], stats)


def _dense(theta, h, y, y_new, k1, k3, k4, k5, k6, k7):
    ydiff = y_new - y
    bspl = h * k1 - ydiff
    r3 = ydiff - h * k7 - bspl
    r4 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
    theta1 = 1.0 - theta
    return y + theta * (ydiff + theta1 * (bspl + theta * (r3 + theta1 * r4)))
