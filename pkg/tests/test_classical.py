import numpy as np
import pytest

from qduffing.classical import (
    ClassicalParams,
    ClassicalState,
    classical_lyapunov,
    classical_rhs,
    integrate_classical,
    poincare_section,
)

CHAOTIC = ClassicalParams(Gamma=0.1, g=0.3, Omega=1.0, beta=0.3)


# ---------------------------------------------------------------------- rhs


def test_rhs_drive_at_origin():
    p = ClassicalParams(Gamma=0.1, g=0.3, Omega=1.0, beta=0.3)
    dx, dv = classical_rhs(ClassicalState(0.0, 0.0, 0.0), p)
    assert dx == 0.0
    assert dv == pytest.approx(1.0)  # g/beta = 1 at t = 0


def test_rhs_well_minimum_is_stationary():
    p = ClassicalParams(Gamma=0.1, g=0.0, Omega=1.0, beta=0.25)
    _, dv = classical_rhs(ClassicalState(1.0 / p.beta, 0.0, 0.3), p)
    assert dv == pytest.approx(0.0, abs=1e-14)


def test_rhs_pure_damping():
    p = ClassicalParams(Gamma=0.07, g=0.0, Omega=1.0, beta=0.3)
    _, dv = classical_rhs(ClassicalState(0.0, 1.0, 0.0), p)
    assert dv == pytest.approx(-2 * p.Gamma)


# ---------------------------------------------------------------- integration


def test_undriven_relaxes_to_well():
    p = ClassicalParams(Gamma=0.1, g=0.0, Omega=1.0, beta=0.3)
    traj = integrate_classical(ClassicalState(2.5, 0.5, 0.0), p, t_end=300 * p.period)
    assert traj.x[-1] == pytest.approx(1.0 / p.beta, abs=1e-6)
    assert traj.v[-1] == pytest.approx(0.0, abs=1e-6)


def test_beta_rescaling_exact():
    # trajectories at different beta coincide pointwise under x -> beta x;
    # rounding is amplified by ~exp(lambda t) on the chaotic attractor, so the
    # 1e-8 per-step agreement is checked over a short horizon
    b1, b2 = 0.3, 0.45
    p1 = ClassicalParams(Gamma=0.1, g=0.3, Omega=1.0, beta=b1)
    p2 = ClassicalParams(Gamma=0.1, g=0.3, Omega=1.0, beta=b2)
    x0 = 1.7
    t1 = integrate_classical(ClassicalState(x0 / b1, 0.2 / b1, 0.0), p1, t_end=5 * p1.period)
    t2 = integrate_classical(ClassicalState(x0 / b2, 0.2 / b2, 0.0), p2, t_end=5 * p2.period)
    assert np.max(np.abs(b1 * t1.x - b2 * t2.x)) < 1e-8
    assert np.max(np.abs(b1 * t1.v - b2 * t2.v)) < 1e-8


def test_energy_conservation_undamped_undriven():
    p = ClassicalParams(Gamma=0.0, g=0.0, Omega=1.0, beta=0.3)
    x0, v0 = 0.5, 0.2

    def energy(x, v):
        return 0.5 * v**2 + 0.25 * p.beta**2 * x**4 - 0.5 * x**2

    traj = integrate_classical(ClassicalState(x0, v0, 0.0), p, t_end=100 * p.period)
    e = energy(traj.x, traj.v)
    assert np.max(np.abs(e - energy(x0, v0))) < 1e-6


def test_dt_bound_enforced():
    with pytest.raises(ValueError):
        integrate_classical(ClassicalState(1.0, 0.0, 0.0), CHAOTIC, t_end=10.0, dt=1.0)


# ------------------------------------------------------------------- poincare


def test_poincare_strobe_count():
    n_periods = 1250
    discard = 200
    traj = integrate_classical(
        ClassicalState(1.0 / CHAOTIC.beta, 0.0, 0.0), CHAOTIC,
        t_end=n_periods * CHAOTIC.period,
    )
    pts = poincare_section(traj, discard_periods=discard)
    assert pts.shape == (n_periods - discard, 2)


def test_poincare_periodic_orbit_clusters():
    # weak drive locks to a period-1 orbit: all strobe points coincide
    p = ClassicalParams(Gamma=0.1, g=0.05, Omega=1.0, beta=0.3)
    traj = integrate_classical(
        ClassicalState(1.0 / p.beta, 0.0, 0.0), p, t_end=1300 * p.period
    )
    pts = poincare_section(traj, discard_periods=300)
    spread = np.max(np.linalg.norm(pts - pts.mean(axis=0), axis=1))
    assert spread < 1e-3


def test_poincare_chaotic_attractor_spans_both_wells():
    traj = integrate_classical(
        ClassicalState(1.0 / CHAOTIC.beta, 0.0, 0.0), CHAOTIC,
        t_end=1200 * CHAOTIC.period,
    )
    pts = poincare_section(traj, discard_periods=200)
    assert pts[:, 0].min() < -0.5 and pts[:, 0].max() > 0.5
    spread = np.std(pts, axis=0)
    assert spread[0] > 0.3  # scattered cloud, not a cluster


# ------------------------------------------------------------------- lyapunov


def test_lyapunov_chaotic_benchmark():
    lam = classical_lyapunov(CHAOTIC, t_end=5000 * CHAOTIC.period)
    assert lam == pytest.approx(0.16, abs=0.02)


def test_lyapunov_negative_without_drive():
    p = ClassicalParams(Gamma=0.1, g=0.0, Omega=1.0, beta=0.3)
    lam = classical_lyapunov(
        p, t_end=600 * p.period, transient_periods=100,
        s0=ClassicalState(1.2 / p.beta, 0.0, 0.0),
    )
    assert lam < 0


def test_lyapunov_beta_independent():
    lams = [
        classical_lyapunov(
            ClassicalParams(Gamma=0.1, g=0.3, Omega=1.0, beta=b),
            t_end=1700 * 2 * np.pi,
        )
        for b in (0.15, 0.45)
    ]
    assert abs(lams[0] - lams[1]) < 0.02


def test_lyapunov_robust_to_dt_and_d0():
    base = classical_lyapunov(CHAOTIC, t_end=2200 * CHAOTIC.period)
    half_dt = classical_lyapunov(
        CHAOTIC, t_end=2200 * CHAOTIC.period, dt=0.5e-3 * CHAOTIC.period
    )
    d0_tenth = classical_lyapunov(CHAOTIC, t_end=2200 * CHAOTIC.period, d0=1e-7)
    assert abs(half_dt - base) < 0.01
    assert abs(d0_tenth - base) < 0.01


def test_lyapunov_validates_d0():
    with pytest.raises(ValueError):
        classical_lyapunov(CHAOTIC, t_end=100.0, d0=0.5)
