"""Truncated Fock-space states and phase-space tools.

The conditional state of the oscillator is a complex coefficient vector C_n
over the lowest N number states.  This module provides the state container,
coherent-state preparation, ladder-operator expectations, phase-space
displacement via the closed-form truncated displacement matrix, quadrature
wavefunctions (normalized Hermite-Gauss functions), rotated-quadrature
probability densities, and Wigner-function evaluation.

Conventions: Q = (a + a+)/sqrt(2), P = (a - a+)/(i sqrt(2)), so a coherent
state |alpha> sits at (q, p) = (sqrt(2) Re alpha, sqrt(2) Im alpha).  The
rotated-quadrature density uses the phase factor exp(+i n theta); rotating a
state via ``rotate(state, chi)`` carries features of the angular density from
theta to theta + chi.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "TruncationError",
    "FockState",
    "PhasePoint",
    "QuadratureGrid",
    "default_grid",
    "fock_state",
    "coherent_state",
    "expect_annihilation",
    "expect_number",
    "centroid",
    "rotate",
    "displacement_matrix",
    "displace",
    "quadrature_wavefunctions",
    "quadrature_pdf",
    "wigner",
    "tail_weight",
]

#: tail weight above which a simulation is no longer trusted (basis too small)
TAIL_WARN = 1e-4
#: tail weight at which evolution is aborted outright
TAIL_ABORT = 1e-2


class TruncationError(RuntimeError):
    """Raised when a state's weight near the truncation edge is too large."""

    def __init__(self, message: str, tail: float):
        super().__init__(f"{message} (tail weight {tail:.3e})")
        self.message = message
        self.tail = tail


@dataclass(frozen=True)
class FockState:
    """Pure state |psi> = sum_n C_n |n> in a truncated number basis."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coeffs must be a non-empty 1-D vector")
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> "FockState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockState(self.coeffs / n)


class PhasePoint(NamedTuple):
    q: float
    p: float


@dataclass(frozen=True)
class QuadratureGrid:
    """Equally spaced sample points for quadrature wavefunctions."""

    x_min: float
    x_max: float
    count: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be < x_max")
        if self.count < 3:
            raise ValueError("count must be >= 3")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.count)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.count - 1)

    def covers(self, N: int, margin: float = 0.0) -> bool:
        """Whether the grid spans the semiclassical support of |N-1>."""
        reach = np.sqrt(2.0 * N) + margin
        return self.x_min <= -reach and self.x_max >= reach


def default_grid(N: int, count: int = 1024, margin: float = 5.0) -> QuadratureGrid:
    """Grid spanning +-(sqrt(2N) + margin), wide enough for any state of dim N."""
    span = np.sqrt(2.0 * N) + margin
    return QuadratureGrid(-span, span, count)


def fock_state(n: int, N: int) -> FockState:
    """Number state |n> in an N-dimensional basis."""
    if not 0 <= n < N:
        raise ValueError(f"n={n} outside basis of dimension {N}")
    c = np.zeros(N, dtype=np.complex128)
    c[n] = 1.0
    return FockState(c)


def coherent_state(alpha: complex, N: int, max_tail: float = TAIL_WARN) -> FockState:
    """Truncated coherent state with C_n proportional to alpha^n / sqrt(n!).

    The coefficients are built by the stable recurrence
    C_n = C_{n-1} alpha / sqrt(n) with C_0 = exp(-|alpha|^2 / 2) and
    renormalized after truncation.  Rejects |alpha| too large for the basis.
    """
    if N < 8:
        raise ValueError("basis dimension must be >= 8")
    c = np.zeros(N, dtype=np.complex128)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, N):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    state = FockState(c).normalized()
    tw = tail_weight(state)
    if tw >= max_tail:
        raise TruncationError(
            f"coherent state alpha={alpha} does not fit in {N} basis states", tw
        )
    return state


def expect_annihilation(state: FockState) -> complex:
    """<a> = sum_n sqrt(n+1) C_n* C_{n+1}."""
    c = state.coeffs
    n = np.arange(1, c.size)
    return complex(np.sum(np.sqrt(n) * np.conj(c[:-1]) * c[1:]))


def expect_number(state: FockState) -> float:
    """<a+ a>."""
    c = state.coeffs
    return float(np.sum(np.arange(c.size) * np.abs(c) ** 2))


def centroid(state: FockState) -> PhasePoint:
    """Phase-space centroid (<Q>, <P>) = sqrt(2) (Re<a>, Im<a>)."""
    ea = expect_annihilation(state)
    return PhasePoint(np.sqrt(2.0) * ea.real, np.sqrt(2.0) * ea.imag)


def rotate(state: FockState, chi: float) -> FockState:
    """Phase-space rotation C_n -> C_n exp(-i n chi).

    Carries the feature of the quadrature density at angle theta to
    theta + chi (mod pi).
    """
    n = np.arange(state.dim)
    return FockState(state.coeffs * np.exp(-1j * n * chi))


def _genlaguerre_diag(k: int, m_count: int, x: np.ndarray) -> np.ndarray:
    """L_m^(k)(x) for m = 0 .. m_count-1, stacked along the first axis.

    Three-term recurrence in m; stable for the m, k, x ranges used here
    (N <= a few hundred on grids within the default span).
    """
    out = np.empty((m_count,) + x.shape, dtype=np.float64)
    out[0] = 1.0
    if m_count > 1:
        out[1] = 1.0 + k - x
    for m in range(2, m_count):
        out[m] = ((2 * m - 1 + k - x) * out[m - 1] - (m - 1 + k) * out[m - 2]) / m
    return out


def displacement_matrix(alpha: complex, N: int) -> np.ndarray:
    """Truncated displacement operator D(alpha) in the number basis.

    Closed-form matrix elements (m = row, n = column, k = |m - n|):
        D_mn = sqrt(n!/m!) alpha^k     exp(-|alpha|^2/2) L_n^(k)(|alpha|^2),  m >= n
        D_mn = sqrt(m!/n!) (-alpha*)^k exp(-|alpha|^2/2) L_m^(k)(|alpha|^2),  m <  n
    """
    x = abs(alpha) ** 2
    D = np.zeros((N, N), dtype=np.complex128)
    pref = np.exp(-0.5 * x)
    # sqrt(m!/(m+k)!) for each diagonal, built incrementally to avoid factorials
    for k in range(N):
        m = np.arange(N - k)
        lag = _genlaguerre_diag(k, N - k, np.asarray(x, dtype=float))
        # ratio_m = sqrt(m!/(m+k)!)
        ratio = np.ones(N - k)
        for j in range(1, k + 1):
            ratio /= np.sqrt(m + j)
        lower = pref * (alpha**k) * ratio * lag
        D[m + k, m] = lower
        if k > 0:
            upper = pref * ((-np.conj(alpha)) ** k) * ratio * lag
            D[m, m + k] = upper
    return D


def displace(state: FockState, alpha: complex, abort_tail: float = TAIL_ABORT) -> FockState:
    """Apply the truncated D(alpha) and renormalize.

    Shifts the centroid by (sqrt(2) Re alpha, sqrt(2) Im alpha) up to
    truncation error.  Aborts if the displaced state presses against the
    truncation edge.
    """
    D = displacement_matrix(alpha, state.dim)
    out = FockState(D @ state.coeffs).normalized()
    tw = tail_weight(out)
    if tw >= abort_tail:
        raise TruncationError(f"displacement by alpha={alpha} left the basis", tw)
    return out


def quadrature_wavefunctions(grid: QuadratureGrid, N: int) -> np.ndarray:
    """Normalized Hermite-Gauss functions psi_n(x_j), shape (N, count).

    psi_0 = pi^(-1/4) exp(-x^2/2); the normalized recurrence
    psi_n = x sqrt(2/n) psi_{n-1} - sqrt((n-1)/n) psi_{n-2}
    avoids the overflow of raw Hermite polynomials at large n.
    """
    x = grid.points
    psi = np.empty((N, x.size), dtype=np.float64)
    psi[0] = np.pi ** (-0.25) * np.exp(-0.5 * x**2)
    if N > 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for n in range(2, N):
        psi[n] = x * np.sqrt(2.0 / n) * psi[n - 1] - np.sqrt((n - 1) / n) * psi[n - 2]
    return psi


def quadrature_pdf(state: FockState, theta: float, grid: QuadratureGrid) -> np.ndarray:
    """Probability density of the rotated quadrature at angle theta.

    P(x_j) = |sum_n C_n psi_n(x_j) exp(+i n theta)|^2.  Integrates to the
    squared norm over a grid that covers the state's support.
    """
    psi = quadrature_wavefunctions(grid, state.dim)
    phases = np.exp(1j * theta * np.arange(state.dim))
    amp = (state.coeffs * phases) @ psi
    return np.abs(amp) ** 2


def _as_density_matrix(state) -> np.ndarray:
    if isinstance(state, FockState):
        c = state.coeffs
        return np.outer(c, np.conj(c))
    arr = np.asarray(state, dtype=np.complex128)
    if arr.ndim == 1:
        return np.outer(arr, np.conj(arr))
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr
    raise ValueError("state must be a FockState, coefficient vector, or square density matrix")


def wigner(state, q_grid: np.ndarray, p_grid: np.ndarray) -> np.ndarray:
    """Wigner function W(q, p) on a rectangular grid, shape (len(p_grid), len(q_grid)).

    Accepts a pure state (FockState or coefficient vector) or a density
    matrix.  Evaluated by summing the number-basis kernel diagonal by
    diagonal with associated-Laguerre recurrences:

        W = (1/pi) exp(-|g|^2/2) [ S_0 + 2 Re sum_{k>=1} g^k S_k ],
        g = sqrt(2) (q + i p),
        S_k = sum_m rho[m, m+k] (-1)^m sqrt(m!/(m+k)!) L_m^(k)(|g|^2).

    Normalized so that the double integral over (q, p) is 1.
    """
    rho = _as_density_matrix(state)
    N = rho.shape[0]
    q = np.asarray(q_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    gam = np.sqrt(2.0) * (q[None, :] + 1j * p[:, None])
    x = np.abs(gam) ** 2
    total = np.zeros(x.shape, dtype=np.complex128)
    gam_pow = np.ones_like(gam)
    sign = (-1.0) ** np.arange(N)
    for k in range(N):
        diag = np.diagonal(rho, offset=k)
        if k > 0:
            gam_pow = gam_pow * gam
        if not np.any(diag):
            continue
        lag = _genlaguerre_diag(k, N - k, x)
        ratio = np.ones(N - k)
        for j in range(1, k + 1):
            ratio /= np.sqrt(np.arange(N - k) + j)
        coeff = diag * sign[: N - k] * ratio
        S_k = np.tensordot(coeff, lag, axes=(0, 0))
        total += S_k if k == 0 else 2.0 * gam_pow * S_k
    return (np.exp(-0.5 * x) / np.pi) * total.real


def tail_weight(state: FockState) -> float:
    """Population in the top four basis states, sum_{n=N-4}^{N-1} |C_n|^2."""
    c = state.coeffs
    k = min(4, c.size)
    return float(np.sum(np.abs(c[-k:]) ** 2))
