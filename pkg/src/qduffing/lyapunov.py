"""Quantum Lyapunov exponent from twin trajectories sharing one measurement record.

Two conditional states start as coherent states separated by a small
phase-space distance d0 and are propagated with identical noise increments
and identical LO phases (computed from the fiducial state's controller).
Once per reset period the log of the separation growth is recorded and the
shadow state is replaced by a displaced copy of the fiducial, re-targeting
separation d0 along the current expansion direction.  The exponent is the
time average of the accumulated logs,

    lambda = sum(ln(d_end / d_base)) / t_accumulated,

where d_base is the measured post-reset separation (not the nominal d0, so
the estimate is insensitive to the exact reset magnitude convention).

An initial transient (default 50 drive periods) is excluded from the
average; resets still happen during it to keep the pair in the linear
regime.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import ControlStrategy, PhaseController
from .fock import (
    FockState,
    TruncationError,
    centroid,
    coherent_state,
    displace,
    tail_weight,
)
from .sse import NoiseStream, SimParams, advance_state, hamiltonian_band_coeffs

__all__ = [
    "TwinTrajectory",
    "LyapunovEstimate",
    "TwinResult",
    "separation",
    "initialize_twins",
    "reset_shadow",
    "run_twin",
    "ensemble_lambda",
]

TRANSIENT_PERIODS_DEFAULT = 50.0


@dataclass
class TwinTrajectory:
    """Fiducial/shadow pair sharing one noise stream."""

    fiducial: FockState
    shadow: FockState
    noise: NoiseStream
    d0: float
    d_base: float
    window_logs: list[float] = field(default_factory=list)
    t_elapsed: float = 0.0


@dataclass(frozen=True)
class LyapunovEstimate:
    """Per-seed exponents with ensemble mean and twice the standard error."""

    per_seed_lambda: np.ndarray
    mean: float
    two_se: float
    seeds: np.ndarray
    partial: bool = False
    failures: tuple = ()

    @staticmethod
    def from_values(values, seeds, partial=False, failures=()):
        lam = np.asarray(values, dtype=float)
        mean = float(np.mean(lam))
        two_se = float(2.0 * np.std(lam) / np.sqrt(lam.size)) if lam.size > 1 else 0.0
        return LyapunovEstimate(
            per_seed_lambda=lam, mean=mean, two_se=two_se,
            seeds=np.asarray(seeds), partial=partial, failures=tuple(failures),
        )


@dataclass(frozen=True)
class TwinResult:
    """Single-realization outcome of run_twin."""

    lam: float
    seed: int
    window_logs: np.ndarray
    t_accumulated: float
    max_tail: float
    warned: bool
    series: np.ndarray  # per-window rows (t, q, p, d_base, window_log, phi)


def separation(pair: TwinTrajectory) -> float:
    """Phase-space distance between the two centroids."""
    q1, p1 = centroid(pair.fiducial)
    q2, p2 = centroid(pair.shadow)
    return float(np.hypot(q2 - q1, p2 - p1))


def initialize_twins(alpha0: complex, d0: float, params: SimParams,
                     seed: int = 0) -> TwinTrajectory:
    """Coherent pair separated by d0 along the Q axis, with a fresh noise stream.

    The shadow is the fiducial displaced by d0/sqrt(2), which moves its
    centroid by exactly d0 in Q.
    """
    if d0 <= 0:
        raise ValueError("d0 must be > 0")
    fiducial = coherent_state(alpha0, params.N)
    shadow = displace(fiducial, d0 / np.sqrt(2.0))
    pair = TwinTrajectory(
        fiducial=fiducial, shadow=shadow,
        noise=NoiseStream(seed, params.dt),
        d0=d0, d_base=0.0,
    )
    pair.d_base = separation(pair)
    return pair


def reset_shadow(pair: TwinTrajectory) -> TwinTrajectory:
    """Record the window's log-expansion and re-displace the shadow.

    The displacement targets centroid separation d0 along the current
    separation direction; the actually measured post-reset separation
    becomes the next window's baseline.
    """
    q1, p1 = centroid(pair.fiducial)
    q2, p2 = centroid(pair.shadow)
    dq, dp = q2 - q1, p2 - p1
    d_t = float(np.hypot(dq, dp))
    if d_t == 0.0:
        raise RuntimeError("twin trajectories collapsed to zero separation")
    pair.window_logs.append(float(np.log(d_t / pair.d_base)))
    alpha_reset = (pair.d0 / np.sqrt(2.0)) * complex(dq, dp) / d_t
    pair.shadow = displace(pair.fiducial, alpha_reset)
    pair.d_base = separation(pair)
    return pair


def run_twin(
    params: SimParams,
    strategy: ControlStrategy,
    seed: int,
    t_end: float,
    reset_period: float | None = None,
    alpha0: complex | None = None,
    transient: float | None = None,
) -> TwinResult:
    """Propagate one twin pair and return its Lyapunov contribution.

    t_end is the accumulation time (after the transient); both states are
    stepped with the same noise increments and the same LO phase, which the
    controller computes from the fiducial state only.  Truncation aborts
    propagate as TruncationError with the failure time in the message.
    """
    if reset_period is None:
        reset_period = params.period
    if alpha0 is None:
        alpha0 = params.well_alpha
    if transient is None:
        transient = TRANSIENT_PERIODS_DEFAULT * params.period
    steps_per_window = max(1, int(round(reset_period / params.dt)))
    n_windows = int(round(t_end / (steps_per_window * params.dt)))
    transient_windows = int(round(transient / (steps_per_window * params.dt)))
    if n_windows < 1:
        raise ValueError("t_end shorter than one reset period")

    pair = initialize_twins(alpha0, params.d0, params, seed=seed)
    bands = hamiltonian_band_coeffs(params.N, params)
    controller = PhaseController(strategy, params.N)
    c1 = pair.fiducial.coeffs.copy()
    c2 = pair.shadow.coeffs.copy()
    interval = strategy.update_interval

    max_tail = 0.0
    warned = False
    window_logs: list[float] = []
    series = []
    t = 0.0
    step_index = 0
    d_base = pair.d_base
    window_dur = steps_per_window * params.dt

    try:
        for w in range(transient_windows + n_windows):
            done_in_window = 0
            while done_in_window < steps_per_window:
                if strategy.adaptive:
                    # keep controller updates on the absolute step grid even
                    # when reset windows are not multiples of the interval
                    chunk = min(interval - step_index % interval,
                                steps_per_window - done_in_window)
                    phi = controller.tick(FockState(c1), step_index)
                else:
                    chunk = steps_per_window - done_in_window
                    phi = strategy.phi
                dWs = pair.noise.increments(chunk)
                tail1, _ = advance_state(c1, t, dWs, phi, params, bands)
                tail2, _ = advance_state(c2, t, dWs, phi, params, bands)
                tail = max(tail1, tail2)
                if tail > max_tail:
                    max_tail = tail
                t += chunk * params.dt
                step_index += chunk
                done_in_window += chunk
            if max_tail >= 1e-4:
                warned = True
            # window bookkeeping + reset
            pair.fiducial = FockState(c1)
            pair.shadow = FockState(c2)
            pair.d_base = d_base
            reset_shadow(pair)
            log = pair.window_logs[-1]
            if w >= transient_windows:
                window_logs.append(log)
                q1, p1 = centroid(pair.fiducial)
                series.append((t, q1, p1, d_base, log, phi))
            c2 = pair.shadow.coeffs.copy()
            d_base = pair.d_base
    except TruncationError as exc:
        raise TruncationError(
            f"seed {seed} ({strategy.label()}): {exc.message}", exc.tail
        ) from exc

    t_acc = len(window_logs) * window_dur
    lam = float(np.sum(window_logs) / t_acc)
    pair.t_elapsed = t
    return TwinResult(
        lam=lam, seed=seed, window_logs=np.asarray(window_logs),
        t_accumulated=t_acc, max_tail=max_tail, warned=warned,
        series=np.asarray(series).reshape(-1, 6),
    )


def ensemble_lambda(
    params: SimParams,
    strategy: ControlStrategy,
    seeds,
    t_end: float,
    reset_period: float | None = None,
    alpha0: complex | None = None,
    transient: float | None = None,
) -> LyapunovEstimate:
    """Mean exponent and twice its standard error over noise realizations.

    Seeds that abort (truncation) are reported in `failures` and the
    estimate is marked partial; surviving seeds are still averaged.
    """
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ValueError("need at least 2 seeds")
    values, good_seeds, failures = [], [], []
    for s in seeds:
        try:
            result = run_twin(params, strategy, s, t_end,
                              reset_period=reset_period, alpha0=alpha0,
                              transient=transient)
            values.append(result.lam)
            good_seeds.append(s)
        except (TruncationError, RuntimeError) as exc:
            failures.append((s, str(exc)))
    if not values:
        raise RuntimeError(f"all seeds failed: {failures}")
    return LyapunovEstimate.from_values(
        values, good_seeds, partial=bool(failures), failures=failures,
    )
