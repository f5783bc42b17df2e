"""Classical driven-damped Duffing oscillator baseline.

Integrates x'' + 2 Gamma x' + beta^2 x^3 - x = (g/beta) cos(Omega t) with a
fixed-step RK4, produces Poincare sections strobed at the drive period in the
rescaled coordinates (beta x, beta v), and estimates the largest Lyapunov
exponent with the twin-trajectory (Benettin) method: a perturbed copy is
rescaled back to separation d0 once per drive period and the accumulated
log-expansions are averaged over time.

Under X = beta x the dynamics are independent of beta, so the Lyapunov
exponent and the rescaled section depend only on (Gamma, g, Omega).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "ClassicalParams",
    "ClassicalState",
    "ClassicalTrajectory",
    "classical_rhs",
    "integrate_classical",
    "poincare_section",
    "classical_lyapunov",
]


@dataclass(frozen=True)
class ClassicalParams:
    Gamma: float = 0.10
    g: float = 0.3
    Omega: float = 1.0
    beta: float = 0.3

    def __post_init__(self):
        if self.Gamma < 0:
            raise ValueError("Gamma must be >= 0")
        if self.g < 0:
            raise ValueError("g must be >= 0")
        if self.Omega <= 0:
            raise ValueError("Omega must be > 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.Omega


@dataclass(frozen=True)
class ClassicalState:
    x: float
    v: float
    t: float = 0.0


@dataclass(frozen=True)
class ClassicalTrajectory:
    """Fixed-step time series produced by integrate_classical."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    params: ClassicalParams
    dt: float


def classical_rhs(state: ClassicalState, params: ClassicalParams) -> tuple[float, float]:
    """(dx/dt, dv/dt) of the driven-damped Duffing equation."""
    dx = state.v
    dv = (
        -2.0 * params.Gamma * state.v
        - params.beta**2 * state.x**3
        + state.x
        + (params.g / params.beta) * np.cos(params.Omega * state.t)
    )
    return dx, dv


@njit(cache=True)
def _rk4_run(x, v, t, dt, n_steps, Gamma, g, Omega, beta, store_every, xs, vs):
    b2 = beta * beta
    gb = g / beta
    idx = 0
    for k in range(n_steps):
        k1x = v
        k1v = -2 * Gamma * v - b2 * x**3 + x + gb * np.cos(Omega * t)
        x2, v2 = x + 0.5 * dt * k1x, v + 0.5 * dt * k1v
        k2x = v2
        k2v = -2 * Gamma * v2 - b2 * x2**3 + x2 + gb * np.cos(Omega * (t + 0.5 * dt))
        x3, v3 = x + 0.5 * dt * k2x, v + 0.5 * dt * k2v
        k3x = v3
        k3v = -2 * Gamma * v3 - b2 * x3**3 + x3 + gb * np.cos(Omega * (t + 0.5 * dt))
        x4, v4 = x + dt * k3x, v + dt * k3v
        k4x = v4
        k4v = -2 * Gamma * v4 - b2 * x4**3 + x4 + gb * np.cos(Omega * (t + dt))
        x = x + dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
        v = v + dt * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
        t = t + dt
        if (k + 1) % store_every == 0:
            xs[idx] = x
            vs[idx] = v
            idx += 1
    return x, v, t


def integrate_classical(
    s0: ClassicalState,
    params: ClassicalParams,
    t_end: float,
    dt: float | None = None,
    store_every: int = 1,
) -> ClassicalTrajectory:
    """Fixed-step RK4 integration from s0.t to s0.t + t_end.

    dt defaults to 1e-3 drive periods and must not exceed 1e-2 periods.
    """
    if dt is None:
        dt = 1e-3 * params.period
    if dt > 1e-2 * params.period:
        raise ValueError("dt must be <= 1e-2 drive periods")
    n_steps = int(round(t_end / dt))
    n_stored = n_steps // store_every
    xs = np.empty(n_stored)
    vs = np.empty(n_stored)
    _rk4_run(
        s0.x, s0.v, s0.t, dt, n_steps,
        params.Gamma, params.g, params.Omega, params.beta,
        store_every, xs, vs,
    )
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(vs))):
        raise RuntimeError("classical integration produced non-finite values")
    t = s0.t + dt * store_every * np.arange(1, n_stored + 1)
    return ClassicalTrajectory(t=t, x=xs, v=vs, params=params, dt=dt * store_every)


def poincare_section(
    traj: ClassicalTrajectory,
    Omega: float | None = None,
    discard_periods: int = 200,
) -> np.ndarray:
    """Strobe the trajectory at multiples of the drive period.

    Returns an (n, 2) array of rescaled coordinates (beta x, beta v), one row
    per drive period after the discarded transient.
    """
    if Omega is None:
        Omega = traj.params.Omega
    period = 2.0 * np.pi / Omega
    beta = traj.params.beta
    t0 = traj.t[0] - traj.dt  # integration start time
    k_first = int(np.floor(t0 / period + 1e-9)) + discard_periods + 1
    k_last = int(np.floor(traj.t[-1] / period + 1e-9))
    points = []
    for k in range(k_first, k_last + 1):
        idx = int(round((k * period - t0) / traj.dt)) - 1
        if 0 <= idx < traj.t.size:
            points.append((beta * traj.x[idx], beta * traj.v[idx]))
    return np.array(points).reshape(-1, 2)


@njit(cache=True)
def _benettin(x0, v0, dt, steps_per_reset, n_resets, transient_resets,
              Gamma, g, Omega, beta, d0):
    b2 = beta * beta
    gb = g / beta
    x1, v1 = x0, v0
    x2, v2 = x0 + d0, v0
    t = 0.0
    log_sum = 0.0
    t_acc = 0.0
    for k in range(n_resets):
        for _ in range(steps_per_reset):
            # fiducial
            k1x = v1
            k1v = -2 * Gamma * v1 - b2 * x1**3 + x1 + gb * np.cos(Omega * t)
            xa, va = x1 + 0.5 * dt * k1x, v1 + 0.5 * dt * k1v
            k2x = va
            k2v = -2 * Gamma * va - b2 * xa**3 + xa + gb * np.cos(Omega * (t + 0.5 * dt))
            xb, vb = x1 + 0.5 * dt * k2x, v1 + 0.5 * dt * k2v
            k3x = vb
            k3v = -2 * Gamma * vb - b2 * xb**3 + xb + gb * np.cos(Omega * (t + 0.5 * dt))
            xc, vc = x1 + dt * k3x, v1 + dt * k3v
            k4x = vc
            k4v = -2 * Gamma * vc - b2 * xc**3 + xc + gb * np.cos(Omega * (t + dt))
            x1 = x1 + dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
            v1 = v1 + dt * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
            # perturbed copy, same drive phase
            k1x = v2
            k1v = -2 * Gamma * v2 - b2 * x2**3 + x2 + gb * np.cos(Omega * t)
            xa, va = x2 + 0.5 * dt * k1x, v2 + 0.5 * dt * k1v
            k2x = va
            k2v = -2 * Gamma * va - b2 * xa**3 + xa + gb * np.cos(Omega * (t + 0.5 * dt))
            xb, vb = x2 + 0.5 * dt * k2x, v2 + 0.5 * dt * k2v
            k3x = vb
            k3v = -2 * Gamma * vb - b2 * xb**3 + xb + gb * np.cos(Omega * (t + 0.5 * dt))
            xc, vc = x2 + dt * k3x, v2 + dt * k3v
            k4x = vc
            k4v = -2 * Gamma * vc - b2 * xc**3 + xc + gb * np.cos(Omega * (t + dt))
            x2 = x2 + dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
            v2 = v2 + dt * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
            t = t + dt
        d = np.sqrt((x2 - x1) ** 2 + (v2 - v1) ** 2)
        if d == 0.0:
            return np.nan, t
        if k >= transient_resets:
            log_sum += np.log(d / d0)
            t_acc += steps_per_reset * dt
        scale = d0 / d
        x2 = x1 + (x2 - x1) * scale
        v2 = v1 + (v2 - v1) * scale
    return log_sum / t_acc, t


def classical_lyapunov(
    params: ClassicalParams,
    t_end: float,
    d0: float = 1e-6,
    reset_period: float | None = None,
    transient_periods: int = 200,
    dt: float | None = None,
    s0: ClassicalState | None = None,
) -> float:
    """Largest Lyapunov exponent by twin trajectories with periodic rescaling.

    t_end is total integration time (>= 5000 drive periods recommended for
    the converged value); the first `transient_periods` drive periods are
    excluded from the average.
    """
    if not 1e-9 <= d0 <= 1e-3:
        raise ValueError("d0 must lie in [1e-9, 1e-3]")
    if reset_period is None:
        reset_period = params.period
    if dt is None:
        dt = 1e-3 * params.period
    if s0 is None:
        s0 = ClassicalState(x=1.0 / params.beta, v=0.0)
    steps_per_reset = max(1, int(round(reset_period / dt)))
    n_resets = int(round(t_end / (steps_per_reset * dt)))
    transient_resets = int(round(transient_periods * params.period / (steps_per_reset * dt)))
    if n_resets <= transient_resets:
        raise ValueError("t_end too short for the requested transient")
    lam, _ = _benettin(
        s0.x, s0.v, dt, steps_per_reset, n_resets, transient_resets,
        params.Gamma, params.g, params.Omega, params.beta, d0,
    )
    if not np.isfinite(lam):
        raise RuntimeError("twin trajectories collapsed to zero separation")
    return float(lam)
