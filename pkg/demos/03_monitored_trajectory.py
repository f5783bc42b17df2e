"""A single monitored trajectory and its ensemble-averaged footprint.

One realization of the conditional state under continuous position
monitoring wanders chaotically between the wells; averaging the projector
over many realizations recovers the unconditional (master-equation-like)
state whose phase-space support shadows the classical strange attractor.

Writes trajectory.csv (centroid track of one realization), and
wigner_ensemble.csv (Wigner function of the strobe-averaged ensemble state).
Runtime: a couple of minutes.
"""

import numpy as np

from qduffing import (
    FockState,
    NoiseStream,
    SimParams,
    accumulate_ensemble_state,
    centroid,
    coherent_state,
    hamiltonian_band_coeffs,
)
from qduffing.runner import write_grid_csv, write_table_csv
from qduffing.sse import advance_state

params = SimParams(beta=0.3)
bands = hamiltonian_band_coeffs(params.N, params)
steps_per_cycle = int(round(params.period / params.dt))

# --- one realization, centroid recorded 20 times per cycle
c = coherent_state(params.well_alpha, params.N).coeffs.copy()
noise = NoiseStream(4, params.dt)
rows = []
cycles = 60
for k in range(cycles * 20):
    dWs = noise.increments(steps_per_cycle // 20)
    advance_state(c, k * (steps_per_cycle // 20) * params.dt, dWs, 0.0,
                  params, bands)
    q, p = centroid(FockState(c))
    rows.append((k / 20.0, params.beta * q, params.beta * p))
write_table_csv("trajectory.csv", ["cycle", "beta_q", "beta_p"], rows)
print(f"trajectory.csv: one {cycles}-cycle realization (phi = 0); "
      f"note the well-to-well excursions")

# --- ensemble of strobed snapshots approximates the steady state
n_traj = 40
strobe_from, strobe_to = 30, 60
snapshots = []
for traj in range(n_traj):
    c = coherent_state(params.well_alpha, params.N).coeffs.copy()
    noise = NoiseStream(100 + traj, params.dt)
    for cycle in range(strobe_to):
        advance_state(c, cycle * steps_per_cycle * params.dt,
                      noise.increments(steps_per_cycle), 0.0, params, bands)
        if cycle >= strobe_from:
            snapshots.append(c.copy())
    print(f"\rtrajectory {traj + 1}/{n_traj}", end="", flush=True)
print()
rho = accumulate_ensemble_state(snapshots)
purity = float(np.trace(rho @ rho).real)
print(f"ensemble state from {len(snapshots)} strobed snapshots, "
      f"purity {purity:.3f} (mixed)")

span = 9.0
axis = np.linspace(-span, span, 181)
from qduffing import wigner

write_grid_csv("wigner_ensemble.csv", wigner(rho, axis, axis), axis, axis)
print("wigner_ensemble.csv written; overlay demos/01 poincare.csv "
      "(multiply these axes by beta) to see the attractor correspondence")
