"""Measurement-phase controller: fringe-direction estimation and LO-phase choice.

The controller estimates the orientation of interference fringes in the
state's Wigner function by counting local maxima of the rotated-quadrature
density over a grid of angles theta_k = k pi / M.  The angle with the most
peaks, theta_max, is perpendicular to the fringes.  Chaos is enhanced by
measuring parallel to the fringes (phi = theta_max - pi/2) and suppressed by
measuring perpendicular to them (phi = theta_max).

The per-tick angular scan is evaluated by folding C_n psi_n(x) over
n mod 2M and taking a length-2M inverse FFT, which is algebraically
identical to evaluating |sum_n C_n psi_n(x) exp(+i n theta_k)|^2 angle by
angle but costs O(N G + G M log M) per tick instead of O(N G M).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fock import FockState, QuadratureGrid, default_grid, quadrature_pdf

__all__ = [
    "ControlStrategy",
    "fixed_phase",
    "adaptive_parallel",
    "adaptive_perpendicular",
    "strategy_from_spec",
    "FringeEstimate",
    "count_peaks",
    "find_theta_max",
    "choose_phase",
    "PhaseController",
    "CONTROLLER_GRID_POINTS",
]

KIND_FIXED = "fixed"
KIND_PARALLEL = "adaptive-parallel"
KIND_PERPENDICULAR = "adaptive-perpendicular"

#: coarser grid for in-loop peak counting; topology, not precision
CONTROLLER_GRID_POINTS = 512


@dataclass(frozen=True)
class ControlStrategy:
    """LO-phase selection rule.

    kind: "fixed" (constant phi), "adaptive-parallel" (maximize the
    Lyapunov exponent) or "adaptive-perpendicular" (minimize it).
    grid_angles: number of scan angles M (defaults: 8 for parallel,
    32 for perpendicular).  update_interval: integration steps between
    controller invocations.
    """

    kind: str
    phi: float = 0.0
    grid_angles: int = 0
    update_interval: int = 1
    peak_floor: float = 0.0

    def __post_init__(self):
        if self.kind not in (KIND_FIXED, KIND_PARALLEL, KIND_PERPENDICULAR):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        object.__setattr__(self, "phi", float(self.phi) % np.pi)
        if self.grid_angles == 0:
            default_m = {KIND_FIXED: 8, KIND_PARALLEL: 8, KIND_PERPENDICULAR: 32}
            object.__setattr__(self, "grid_angles", default_m[self.kind])
        if self.grid_angles < 2:
            raise ValueError("grid_angles must be >= 2")
        if self.update_interval < 1:
            raise ValueError("update_interval must be >= 1")

    @property
    def adaptive(self) -> bool:
        return self.kind != KIND_FIXED

    def label(self) -> str:
        if self.kind == KIND_FIXED:
            return f"fixed:{self.phi:g}"
        return self.kind


def fixed_phase(phi: float, update_interval: int = 1) -> ControlStrategy:
    return ControlStrategy(kind=KIND_FIXED, phi=phi, update_interval=update_interval)

def adaptive_parallel(grid_angles: int = 8, update_interval: int = 1) -> ControlStrategy:
    return ControlStrategy(kind=KIND_PARALLEL, grid_angles=grid_angles,
                           update_interval=update_interval)

def adaptive_perpendicular(grid_angles: int = 32, update_interval: int = 1) -> ControlStrategy:
    return ControlStrategy(kind=KIND_PERPENDICULAR, grid_angles=grid_angles,
                           update_interval=update_interval)


_ANGLE_TOKENS = {"pi": np.pi, "pi/2": np.pi / 2, "pi/4": np.pi / 4, "pi/8": np.pi / 8,
                 "pi/16": np.pi / 16, "3pi/4": 3 * np.pi / 4}


def strategy_from_spec(text: str, update_interval: int = 1) -> ControlStrategy:
    """Parse "fixed:ANGLE" | "adaptive-parallel" | "adaptive-perpendicular".

    ANGLE is radians, or one of the tokens pi, pi/2, pi/4, pi/8, pi/16, 3pi/4.
    """
    text = text.strip()
    if text == KIND_PARALLEL:
        return adaptive_parallel(update_interval=update_interval)
    if text == KIND_PERPENDICULAR:
        return adaptive_perpendicular(update_interval=update_interval)
    if text.startswith("fixed:"):
        token = text.split(":", 1)[1].strip()
        if token in _ANGLE_TOKENS:
            angle = _ANGLE_TOKENS[token]
        else:
            try:
                angle = float(token)
            except ValueError:
                raise ValueError(f"cannot parse fixed-phase angle {token!r}") from None
        return fixed_phase(angle, update_interval=update_interval)
    raise ValueError(f"unknown strategy spec {text!r}")


@dataclass(frozen=True)
class FringeEstimate:
    """Result of the angular peak-count scan."""

    theta_max: float
    peak_counts: np.ndarray
    thetas: np.ndarray


def count_peaks(pdf: np.ndarray, peak_floor: float = 0.0) -> int:
    """Number of local maxima of a sampled density.

    Runs of equal values (which arise from symmetric states sampled on a
    symmetric grid) are merged into one peak; a maximum must exceed
    `peak_floor` to be counted.
    """
    p = np.asarray(pdf, dtype=np.float64).reshape(1, -1)
    return int(_kernels.count_peak_rows(p, peak_floor)[0])


#: relative floor below which turning points are treated as evaluation noise
REL_PEAK_FLOOR = 1e-12


class _AngularScan:
    """Precomputed tables for the folded-FFT angular scan on a fixed grid.

    The amplitude at angle theta_k = k pi / M is a 2M-point inverse DFT of
    C_n psi_n(x) folded over n mod 2M, evaluated for all angles at once.
    """

    def __init__(self, N: int, M: int, grid: QuadratureGrid):
        from .fock import quadrature_wavefunctions

        self.N, self.M = N, M
        self.grid = grid
        self.psi_t = np.ascontiguousarray(quadrature_wavefunctions(grid, N).T)  # (G, N)
        self._zfold = np.empty((grid.count, 2 * M), dtype=np.complex128)

    def amplitudes(self, coeffs: np.ndarray) -> np.ndarray:
        """sum_n C_n psi_n(x_j) exp(+i n theta_k) for k = 0 .. 2M-1, shape (G, 2M)."""
        _kernels.fold_product(coeffs, self.psi_t, 2 * self.M, self._zfold)
        return np.fft.ifft(self._zfold, axis=1) * (2 * self.M)

    def peak_counts(self, coeffs: np.ndarray, abs_floor: float = 0.0) -> np.ndarray:
        _kernels.fold_product(coeffs, self.psi_t, 2 * self.M, self._zfold)
        amp = np.fft.ifft(self._zfold, axis=1)
        # ifft carries a 1/(2M) scale; fold it into the absolute floor so the
        # floor refers to the same |amplitude|^2 scale as quadrature_pdf
        return _kernels.counts_from_amp(amp, self.M, abs_floor / (2 * self.M) ** 2,
                                        REL_PEAK_FLOOR)

    def pdfs(self, coeffs: np.ndarray) -> np.ndarray:
        """|amplitude|^2 normalized as densities, shape (M, G)."""
        amp = self.amplitudes(coeffs)[:, : self.M]
        pdf = (amp.real**2 + amp.imag**2).T
        return np.ascontiguousarray(pdf)


_scan_cache: dict[tuple, _AngularScan] = {}


def _get_scan(N: int, M: int, grid: QuadratureGrid) -> _AngularScan:
    key = (N, M, grid.x_min, grid.x_max, grid.count)
    scan = _scan_cache.get(key)
    if scan is None:
        scan = _AngularScan(N, M, grid)
        _scan_cache[key] = scan
    return scan


def find_theta_max(state: FockState, M: int, grid: QuadratureGrid | None = None,
                   peak_floor: float = 0.0) -> FringeEstimate:
    """Scan theta_k = k pi / M and return the angle with the most peaks.

    Ties are broken toward the smallest angle (np.argmax takes the first
    maximum), which matters only for fringe-free states.
    """
    if grid is None:
        grid = default_grid(state.dim, count=CONTROLLER_GRID_POINTS)
    scan = _get_scan(state.dim, M, grid)
    counts = scan.peak_counts(state.coeffs, peak_floor)
    k_max = int(np.argmax(counts))
    thetas = np.arange(M) * np.pi / M
    return FringeEstimate(theta_max=float(thetas[k_max]), peak_counts=counts,
                          thetas=thetas)


def choose_phase(strategy: ControlStrategy, estimate: FringeEstimate | None) -> float:
    """LO phase for the next step, in [0, pi)."""
    if strategy.kind == KIND_FIXED:
        return strategy.phi
    if estimate is None:
        raise ValueError("adaptive strategies need a fringe estimate")
    if strategy.kind == KIND_PARALLEL:
        return (estimate.theta_max - np.pi / 2) % np.pi
    return estimate.theta_max % np.pi


class PhaseController:
    """Per-trajectory controller state: one cached angle plus scan tables.

    tick(state, step_index) re-estimates the fringe direction whenever
    step_index is a multiple of the strategy's update_interval and returns
    the cached angle otherwise, so identical inputs always produce
    identical phases.
    """

    def __init__(self, strategy: ControlStrategy, N: int,
                 grid: QuadratureGrid | None = None):
        self.strategy = strategy
        if grid is None:
            grid = default_grid(N, count=CONTROLLER_GRID_POINTS)
        self.grid = grid
        self._scan = _get_scan(N, strategy.grid_angles, grid) if strategy.adaptive else None
        self._phi: float | None = None
        self.invocations = 0

    def tick(self, state: FockState, step_index: int) -> float:
        if self.strategy.kind == KIND_FIXED:
            return self.strategy.phi
        if self._phi is not None and step_index % self.strategy.update_interval != 0:
            return self._phi
        counts = self._scan.peak_counts(state.coeffs, self.strategy.peak_floor)
        k_max = int(np.argmax(counts))
        theta_max = k_max * np.pi / self.strategy.grid_angles
        if self.strategy.kind == KIND_PARALLEL:
            self._phi = (theta_max - np.pi / 2) % np.pi
        else:
            self._phi = theta_max % np.pi
        self.invocations += 1
        return self._phi
