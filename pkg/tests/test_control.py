import numpy as np
import pytest

from qduffing.control import (
    CONTROLLER_GRID_POINTS,
    REL_PEAK_FLOOR,
    ControlStrategy,
    PhaseController,
    adaptive_parallel,
    adaptive_perpendicular,
    choose_phase,
    count_peaks,
    find_theta_max,
    fixed_phase,
    strategy_from_spec,
)
from qduffing.fock import (
    FockState,
    coherent_state,
    default_grid,
    fock_state,
    quadrature_pdf,
    rotate,
)


def cat_state(alpha, N):
    c = coherent_state(alpha, N).coeffs + coherent_state(-alpha, N).coeffs
    return FockState(c).normalized()


def gaussian(x, mu, sig=1.0):
    return np.exp(-((x - mu) ** 2) / (2 * sig**2))


# -------------------------------------------------------------------- counting


def test_count_peaks_single_gaussian():
    x = np.linspace(-10, 10, 401)
    assert count_peaks(gaussian(x, 0.3)) == 1


def test_count_peaks_two_gaussians():
    x = np.linspace(-10, 10, 401)
    assert count_peaks(gaussian(x, -4) + gaussian(x, 4)) == 2


def test_count_peaks_merges_plateaus():
    # symmetric states sampled on an even grid produce exact twin values at
    # the top; a plateau counts as one peak
    v = np.array([0.0, 1.0, 2.0, 2.0, 1.0, 0.0, 3.0, 0.0])
    assert count_peaks(v) == 2


def test_count_peaks_amplitude_floor():
    x = np.linspace(-10, 10, 401)
    pdf = gaussian(x, -4) + 0.01 * gaussian(x, 4)
    assert count_peaks(pdf) == 2
    assert count_peaks(pdf, peak_floor=0.1) == 1


def test_count_peaks_monotone_edges():
    assert count_peaks(np.linspace(0, 1, 50)) == 0
    assert count_peaks(np.linspace(1, 0, 50)) == 0


def test_cat_fringe_angle_has_more_peaks():
    cat = cat_state(2.0, 64)
    grid = default_grid(64, count=512)
    n_fringe = count_peaks(quadrature_pdf(cat, np.pi / 2, grid))
    n_split = count_peaks(quadrature_pdf(cat, 0.0, grid))
    assert n_fringe > n_split


# ------------------------------------------------------------- fringe direction


def test_cat_theta_max_exact():
    est = find_theta_max(cat_state(2.0, 64), 32)
    assert est.theta_max == np.pi / 2
    # the peak-count profile is sharply concentrated around pi/2
    assert est.peak_counts[16] == est.peak_counts.max()
    assert est.peak_counts[16] > 2 * est.peak_counts[0]


def test_rotated_cat_theta_max_covariant_exact_grid_angle():
    cat = cat_state(2.0, 64)
    est = find_theta_max(rotate(cat, np.pi / 4), 32)
    assert est.theta_max == pytest.approx(3 * np.pi / 4, abs=1e-12)


@pytest.mark.parametrize("chi", [0.2, 0.9, 1.7, 2.8])
def test_rotation_covariance_within_grid_spacing(chi):
    cat = cat_state(2.0, 64)
    M = 32
    base = find_theta_max(cat, M).theta_max
    moved = find_theta_max(rotate(cat, chi), M).theta_max
    diff = (moved - base - chi + np.pi / 2) % np.pi - np.pi / 2
    assert abs(diff) <= np.pi / M + 1e-12


def test_coherent_tie_break_and_flat_counts():
    est = find_theta_max(coherent_state(1.0, 64), 32)
    assert est.theta_max == 0.0
    assert np.all(est.peak_counts == 1)


def test_vacuum_counts_all_ones():
    est = find_theta_max(fock_state(0, 64), 8)
    assert np.all(est.peak_counts == 1)


def test_fused_scan_matches_direct_pdf_route():
    grid = default_grid(64, count=CONTROLLER_GRID_POINTS)
    states = [cat_state(2.0, 64), coherent_state(1.2 + 0.4j, 64),
              rotate(cat_state(1.5, 64), 0.6)]
    M = 16
    for s in states:
        est = find_theta_max(s, M, grid)
        direct = []
        for k in range(M):
            pdf = quadrature_pdf(s, k * np.pi / M, grid)
            direct.append(count_peaks(pdf, peak_floor=REL_PEAK_FLOOR * pdf.max()))
        assert np.array_equal(est.peak_counts, np.array(direct))


# ----------------------------------------------------------------- phase choice


def test_choose_phase_fixed_ignores_estimate():
    est = find_theta_max(cat_state(2.0, 64), 8)
    assert choose_phase(fixed_phase(0.0), est) == 0.0
    assert choose_phase(fixed_phase(0.4), None) == pytest.approx(0.4)


def test_choose_phase_parallel_and_perpendicular():
    est = find_theta_max(cat_state(2.0, 64), 32)  # theta_max = pi/2
    assert choose_phase(adaptive_parallel(), est) == pytest.approx(0.0)
    assert choose_phase(adaptive_perpendicular(), est) == pytest.approx(np.pi / 2)


def test_adaptive_variants_differ_by_half_pi():
    rng = np.random.default_rng(5)
    for _ in range(6):
        c = rng.normal(size=48) + 1j * rng.normal(size=48)
        s = FockState(c * np.exp(-np.arange(48) / 6.0)).normalized()
        est = find_theta_max(s, 32)
        a = choose_phase(adaptive_parallel(), est)
        b = choose_phase(adaptive_perpendicular(), est)
        assert abs((a - b) % np.pi - np.pi / 2) < 1e-12


# -------------------------------------------------------------------- controller


def test_controller_fixed_phase_constant():
    ctrl = PhaseController(fixed_phase(0.7), 32)
    s = coherent_state(0.5, 32)
    assert all(ctrl.tick(s, k) == pytest.approx(0.7) for k in range(5))
    assert ctrl.invocations == 0


def test_controller_caches_between_updates():
    strat = adaptive_parallel(update_interval=10)
    ctrl = PhaseController(strat, 64)
    cat = cat_state(2.0, 64)
    phi0 = ctrl.tick(cat, 0)
    # a different state at a non-multiple index must not change the phase
    other = rotate(cat, 0.9)
    assert ctrl.tick(other, 7) == phi0
    assert ctrl.invocations == 1
    # at the next multiple the phase is recomputed from the new state
    phi1 = ctrl.tick(other, 10)
    assert ctrl.invocations == 2
    assert phi1 != phi0


def test_controller_deterministic():
    cat = cat_state(1.8, 64)
    phis = []
    for _ in range(2):
        ctrl = PhaseController(adaptive_perpendicular(), 64)
        phis.append([ctrl.tick(cat, k) for k in range(3)])
    assert phis[0] == phis[1]


def test_controller_update_interval_one_always_recomputes():
    ctrl = PhaseController(adaptive_parallel(update_interval=1), 64)
    cat = cat_state(2.0, 64)
    for k in range(4):
        ctrl.tick(cat, k)
    assert ctrl.invocations == 4


# ------------------------------------------------------------------- strategies


def test_strategy_defaults_per_kind():
    assert adaptive_parallel().grid_angles == 8
    assert adaptive_perpendicular().grid_angles == 32
    assert fixed_phase(0.3).update_interval == 1


def test_strategy_phi_wraps_mod_pi():
    assert fixed_phase(np.pi + 0.25).phi == pytest.approx(0.25)


def test_strategy_validation():
    with pytest.raises(ValueError):
        ControlStrategy(kind="bogus")
    with pytest.raises(ValueError):
        adaptive_parallel(grid_angles=1)
    with pytest.raises(ValueError):
        adaptive_parallel(update_interval=0)


def test_strategy_from_spec():
    s = strategy_from_spec("fixed:pi/2")
    assert s.kind == "fixed" and s.phi == pytest.approx(np.pi / 2)
    assert strategy_from_spec("fixed:0.25").phi == pytest.approx(0.25)
    assert strategy_from_spec("adaptive-parallel").kind == "adaptive-parallel"
    assert strategy_from_spec("adaptive-perpendicular").grid_angles == 32
    with pytest.raises(ValueError):
        strategy_from_spec("fixed:abc")
    with pytest.raises(ValueError):
        strategy_from_spec("gradient")
    assert strategy_from_spec("fixed:0").label() == "fixed:0"
