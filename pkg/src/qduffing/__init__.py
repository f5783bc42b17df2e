"""Continuously monitored quantum Duffing oscillator.

Library for simulating the driven-damped quantum Duffing oscillator under
continuous homodyne monitoring, with an adaptive local-oscillator phase
controller, quantum Lyapunov exponent estimation from twin trajectories,
and classical / master-equation baselines.
"""

__version__ = "0.1.0"

from .fock import (
    FockState,
    PhasePoint,
    QuadratureGrid,
    TruncationError,
    centroid,
    coherent_state,
    default_grid,
    displace,
    displacement_matrix,
    expect_annihilation,
    expect_number,
    fock_state,
    quadrature_pdf,
    quadrature_wavefunctions,
    rotate,
    tail_weight,
    wigner,
)
from .classical import (
    ClassicalParams,
    ClassicalState,
    classical_lyapunov,
    classical_rhs,
    integrate_classical,
    poincare_section,
)
from .sse import (
    BandCoefficients,
    HomodyneRecord,
    NoiseStream,
    SimParams,
    hamiltonian_band_coeffs,
    me_oracle_evolve,
    record_homodyne,
    sse_step_ito,
    sse_step_stratonovich,
)
from .control import (
    ControlStrategy,
    FringeEstimate,
    PhaseController,
    adaptive_parallel,
    adaptive_perpendicular,
    choose_phase,
    count_peaks,
    find_theta_max,
    fixed_phase,
    strategy_from_spec,
)
from .lyapunov import (
    LyapunovEstimate,
    TwinTrajectory,
    ensemble_lambda,
    initialize_twins,
    reset_shadow,
    run_twin,
    separation,
)
from .runner import (
    ExperimentConfig,
    RunManifest,
    accumulate_ensemble_state,
    derive_seed,
    parse_config,
    run_sweep,
)
