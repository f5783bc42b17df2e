"""Conditional-state propagation under continuous homodyne monitoring.

The state is advanced by the stochastic Schroedinger equation for the
damped, driven oscillator with collapse operator L = sqrt(2 Gamma) a and
real Wiener noise dW entering through exp(+i phi) dW, phi being the local
oscillator angle.  Two schemes are provided:

* ``ito-euler``: Euler-Maruyama discretization of the Ito form with
  per-step renormalization.  Conditionally stable only: the quartic part
  of the Hamiltonian makes the top of the truncated basis stiff, so this
  scheme is reliable for short horizons or small basis sizes (it is used
  here as a cross-validation scheme).
* ``stratonovich-midpoint``: semi-implicit midpoint rule on the
  Stratonovich form (drift corrected accordingly), solved by fixed-point
  iteration.  A-stable on the stiff diagonal; this is the production
  scheme for long runs.

A dense master-equation integrator over the same model is included as an
independent oracle: its operators are built from ladder-matrix algebra
rather than the closed-form band coefficients, so the two routes
cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _kernels
from .fock import TAIL_ABORT, TAIL_WARN, FockState, TruncationError, expect_annihilation

__all__ = [
    "SimParams",
    "NoiseStream",
    "HomodyneRecord",
    "BandCoefficients",
    "hamiltonian_band_coeffs",
    "sse_step_ito",
    "sse_step_stratonovich",
    "advance_state",
    "expect_xphi",
    "record_homodyne",
    "me_oracle_evolve",
    "dense_operators",
    "TruncationWarning",
]

SCHEMES = ("ito-euler", "stratonovich-midpoint")

#: fixed-point iteration control for the midpoint scheme; rare large Wiener
#: draws on high-n states contract slowly (~0.4/iteration), so the cap sits
#: well above the typical 5-7 iterations while still catching divergence
MIDPOINT_TOL = 1e-8
MIDPOINT_MAXIT = 24


class TruncationWarning(UserWarning):
    """State weight near the truncation edge exceeded the trust threshold."""


@dataclass(frozen=True)
class SimParams:
    """Model and integration parameters, all dimensionless."""

    beta: float = 0.3
    Gamma: float = 0.10
    g: float = 0.3
    Omega: float = 1.0
    N: int = 64
    dt: float = 1e-3
    d0: float = 1e-3
    scheme: str = "stratonovich-midpoint"

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.Gamma < 0:
            raise ValueError("Gamma must be >= 0")
        if self.Omega <= 0:
            raise ValueError("Omega must be > 0")
        if self.N < 16:
            raise ValueError("N must be >= 16")
        if self.dt <= 0 or self.dt * self.Omega > 1e-2 * 2 * np.pi:
            raise ValueError("dt must satisfy 0 < dt * Omega <= 1e-2 * 2 pi")
        if self.d0 <= 0:
            raise ValueError("d0 must be > 0")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.Omega

    @property
    def well_alpha(self) -> complex:
        """Coherent amplitude whose centroid sits at the well minimum Q = 1/beta."""
        return 1.0 / (np.sqrt(2.0) * self.beta)


class NoiseStream:
    """Deterministic Gaussian increments dW with variance dt, from a 64-bit seed.

    Draws are consumed sequentially, so splitting a run into segments of any
    size reproduces the same increment sequence.
    """

    def __init__(self, seed: int, dt: float):
        self.seed = int(seed) & (2**64 - 1)
        self.dt = float(dt)
        self._rng = np.random.Generator(np.random.PCG64(self.seed))

    def increments(self, count: int) -> np.ndarray:
        return self._rng.normal(0.0, np.sqrt(self.dt), size=count)


class HomodyneRecord:
    """Accumulated measurement increments I dt and their times."""

    def __init__(self):
        self._increments: list[float] = []
        self._times: list[float] = []

    def append(self, t: float, increment: float):
        self._times.append(float(t))
        self._increments.append(float(increment))

    @property
    def increments(self) -> np.ndarray:
        return np.asarray(self._increments)

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self._times)

    def __len__(self) -> int:
        return len(self._increments)


@dataclass(frozen=True)
class BandCoefficients:
    """Hamiltonian bands plus ladder tables for the damping terms.

    The full Hamiltonian is H(t) = diag(diagonal) + cos(Omega t) * drive on
    the +-1 bands + off2 on the +-2 bands (upper = off2, lower = conj) +
    off4 on the +-4 bands.
    """

    diagonal: np.ndarray   # (N,) real
    drive: np.ndarray      # (N-1,) real, H[n, n+1] = drive[n] cos(Omega t)
    off2: np.ndarray       # (N-2,) complex, H[n, n+2]
    off4: np.ndarray       # (N-4,) real, H[n, n+4]
    lowering: np.ndarray   # (N-1,) real, (a c)[n] = lowering[n] c[n+1]
    number: np.ndarray     # (N,) real

    def to_dense(self, coswt: float = 1.0) -> np.ndarray:
        N = self.diagonal.size
        H = np.diag(self.diagonal.astype(complex))
        idx = np.arange(N - 1)
        H[idx, idx + 1] += coswt * self.drive
        H[idx + 1, idx] += coswt * self.drive
        idx = np.arange(N - 2)
        H[idx, idx + 2] += self.off2
        H[idx + 2, idx] += np.conj(self.off2)
        idx = np.arange(N - 4)
        H[idx, idx + 4] += self.off4
        H[idx + 4, idx] += self.off4
        return H


@lru_cache(maxsize=32)
def _band_cache(N: int, beta: float, Gamma: float, g: float) -> BandCoefficients:
    n = np.arange(N, dtype=np.float64)
    s1 = np.sqrt(n[1:])                      # sqrt(n+1) indexed by the lower state
    s2 = np.sqrt((n[:-2] + 1) * (n[:-2] + 2))
    s4 = np.sqrt((n[:-4] + 1) * (n[:-4] + 2) * (n[:-4] + 3) * (n[:-4] + 4))
    q4 = beta**2 / 16.0                      # coefficient of (a + a+)^4
    diagonal = q4 * (6 * n**2 + 6 * n + 3)
    drive = -(g / (np.sqrt(2.0) * beta)) * s1
    off2 = (q4 * (4 * n[:-2] + 6) - 0.5 * (1 + 1j * Gamma)) * s2
    off4 = q4 * s4
    return BandCoefficients(
        diagonal=diagonal, drive=drive, off2=off2, off4=off4,
        lowering=s1, number=n,
    )


def hamiltonian_band_coeffs(N: int, params: SimParams) -> BandCoefficients:
    """Banded Hamiltonian coefficients for the dimensionless double-well model.

    H = P^2/2 + (beta^2/4) Q^4 - Q^2/2 + (Gamma/2)(QP + PQ)
        - (g/beta) Q cos(Omega t),   Q = (a + a+)/sqrt(2).

    The kinetic and quadratic terms cancel on the diagonal and combine with
    the damping cross-term into the +-2 bands -(1/2)(1 +- i Gamma); the
    quartic contributes with prefactor beta^2/16 in ladder form.
    """
    return _band_cache(N, params.beta, params.Gamma, params.g)


def _check_tail_policy(tail: float, t: float, context: str):
    if tail >= TAIL_ABORT:
        raise TruncationError(f"{context} aborted at t={t:.6g}", tail)


def _one_step(state: FockState, phi: float, dW: float, t: float,
              params: SimParams, scheme: str,
              record: HomodyneRecord | None) -> FockState:
    import warnings

    bands = hamiltonian_band_coeffs(state.dim, params)
    c = state.coeffs.copy()
    dWs = np.array([dW], dtype=np.float64)
    if scheme == "ito-euler":
        status, done, max_tail = _kernels.run_segment_euler(
            c, t, params.dt, dWs, phi, params.Omega,
            bands.diagonal, bands.drive, bands.off2, bands.off4,
            bands.lowering, bands.number, params.Gamma, TAIL_ABORT,
        )
    else:
        status, done, max_tail = _kernels.run_segment_midpoint(
            c, t, params.dt, dWs, phi, params.Omega,
            bands.diagonal, bands.drive, bands.off2, bands.off4,
            bands.lowering, bands.number, params.Gamma, TAIL_ABORT,
            MIDPOINT_TOL, MIDPOINT_MAXIT,
        )
    if status == _kernels.STATUS_NO_CONVERGENCE:
        raise RuntimeError(f"midpoint iteration did not converge at t={t:.6g}")
    if status == _kernels.STATUS_TAIL_ABORT:
        raise TruncationError(f"SSE step aborted at t={t:.6g}", max_tail)
    if max_tail >= TAIL_WARN:
        warnings.warn(
            f"tail weight {max_tail:.3e} at t={t:.6g} exceeds trust threshold",
            TruncationWarning,
            stacklevel=3,
        )
    if record is not None:
        record.append(t, record_homodyne(state, phi, dW, params))
    return FockState(c)


def sse_step_ito(state: FockState, phi: float, dW: float, t: float,
                 params: SimParams, record: HomodyneRecord | None = None) -> FockState:
    """One Euler-Maruyama step of the Ito SSE, renormalized.

    Drift (-iH - L+L/2 + <L+>L - <L+><L>/2) dt plus noise
    (L - <L>) exp(+i phi) dW with L = sqrt(2 Gamma) a.  Appends the
    homodyne increment to `record` when given.
    """
    return _one_step(state, phi, dW, t, params, "ito-euler", record)


def sse_step_stratonovich(state: FockState, phi: float, dW: float, t: float,
                          params: SimParams, record: HomodyneRecord | None = None) -> FockState:
    """One semi-implicit midpoint step of the Stratonovich form, renormalized.

    Statistically equivalent to sse_step_ito; A-stable on the stiff quartic
    diagonal, so it is the scheme of choice for long runs.
    """
    return _one_step(state, phi, dW, t, params, "stratonovich-midpoint", record)


def advance_state(coeffs: np.ndarray, t0: float, dWs: np.ndarray, phi: float,
                  params: SimParams, bands: BandCoefficients,
                  scheme: str | None = None) -> tuple[float, int]:
    """Advance raw coefficients in place through len(dWs) steps at fixed phi.

    Fast path used by the trajectory runners.  Returns (max_tail,
    steps_done); raises TruncationError / RuntimeError on aborts, with the
    failure time in the message.
    """
    scheme = scheme or params.scheme
    if scheme == "ito-euler":
        status, done, max_tail = _kernels.run_segment_euler(
            coeffs, t0, params.dt, dWs, phi, params.Omega,
            bands.diagonal, bands.drive, bands.off2, bands.off4,
            bands.lowering, bands.number, params.Gamma, TAIL_ABORT,
        )
    else:
        status, done, max_tail = _kernels.run_segment_midpoint(
            coeffs, t0, params.dt, dWs, phi, params.Omega,
            bands.diagonal, bands.drive, bands.off2, bands.off4,
            bands.lowering, bands.number, params.Gamma, TAIL_ABORT,
            MIDPOINT_TOL, MIDPOINT_MAXIT,
        )
    t_stop = t0 + done * params.dt
    if status == _kernels.STATUS_NO_CONVERGENCE:
        raise RuntimeError(f"midpoint iteration did not converge at t={t_stop:.6g}")
    if status == _kernels.STATUS_TAIL_ABORT:
        raise TruncationError(f"trajectory aborted at t={t_stop:.6g}", max_tail)
    return max_tail, done


def expect_xphi(state: FockState, phi: float) -> float:
    """<X_phi> = sqrt(2) Re(exp(+i phi) <a>)."""
    return float(np.sqrt(2.0) * (np.exp(1j * phi) * expect_annihilation(state)).real)


def record_homodyne(state: FockState, phi: float, dW: float, params: SimParams,
                    gain: float | None = None) -> float:
    """Measurement increment I dt = gain * <X_phi> dt + dW (diagnostic only)."""
    if gain is None:
        gain = np.sqrt(params.Gamma)
    return gain * expect_xphi(state, phi) * params.dt + dW


# --------------------------------------------------------------- master equation


def dense_operators(params: SimParams, N: int | None = None):
    """Dense (H0, H_drive, a) built from ladder-matrix algebra.

    Independent of the band-coefficient route; H(t) = H0 + cos(Omega t) Hd.
    Operator products are formed in a padded basis and then projected, so
    the result is the truncation of the infinite-dimensional operator
    (operator products of the truncated ladder matrices would be distorted
    near the corner).
    """
    if N is None:
        N = params.N
    M = N + 8
    a = np.diag(np.sqrt(np.arange(1.0, M)), 1).astype(complex)
    ad = a.conj().T
    Q = (a + ad) / np.sqrt(2.0)
    P = (a - ad) / (1j * np.sqrt(2.0))
    H0 = (0.5 * P @ P
          + 0.25 * params.beta**2 * np.linalg.matrix_power(Q, 4)
          - 0.5 * Q @ Q
          + 0.5 * params.Gamma * (Q @ P + P @ Q))
    Hd = -(params.g / params.beta) * Q
    return H0[:N, :N], Hd[:N, :N], a[:N, :N]


def me_oracle_evolve(rho0: np.ndarray, t_end: float, params: SimParams,
                     dt: float | None = None) -> np.ndarray:
    """Master-equation evolution by dense RK4 (validation oracle, N <= 40).

    rho' = -i[H, rho] + L rho L+ - {L+L, rho}/2 with L = sqrt(2 Gamma) a.
    Hermiticity is enforced by symmetrization each step; the trace is
    monitored and a drift beyond 1e-6 aborts.
    """
    rho = np.array(rho0, dtype=complex)
    N = rho.shape[0]
    if rho.ndim != 2 or rho.shape[1] != N:
        raise ValueError("rho0 must be a square matrix")
    if N > 40:
        raise ValueError("dense master-equation oracle is limited to N <= 40")
    if abs(np.trace(rho).real - 1.0) > 1e-9 or abs(np.trace(rho).imag) > 1e-12:
        raise ValueError("rho0 must have unit trace")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("rho0 must be Hermitian")
    if dt is None:
        dt = params.dt
    H0, Hd, a = dense_operators(params, N)
    ad = a.conj().T
    n_op = ad @ a
    twoG = 2.0 * params.Gamma

    def rhs(r, t):
        H = H0 + np.cos(params.Omega * t) * Hd
        comm = H @ r - r @ H
        arad = a @ r @ ad
        anti = n_op @ r + r @ n_op
        return -1j * comm + twoG * (arad - 0.5 * anti)

    steps = int(round(t_end / dt))
    t = 0.0
    for _ in range(steps):
        k1 = rhs(rho, t)
        k2 = rhs(rho + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(rho + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(rho + dt * k3, t + dt)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        t += dt
        drift = abs(np.trace(rho).real - 1.0)
        if drift > 1e-6:
            raise RuntimeError(f"master-equation trace drifted by {drift:.3e} at t={t:.6g}")
    return rho
