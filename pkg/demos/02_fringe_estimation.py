"""How the controller sees a state: quadrature densities and peak counting.

A superposition of two coherent states carries Wigner-function interference
fringes between its lobes.  Projecting the state onto rotated quadratures
X_theta and counting local maxima of the density locates those fringes:
the count spikes at the angle perpendicular to the fringe direction.  The
controller measures parallel to the fringes (theta_max - pi/2) to destroy
them fastest (enhancing chaos), or perpendicular to preserve them.

Writes peak_counts.csv (count vs angle), the two extreme densities as
pdf_*.csv, and the state's Wigner function as wigner_cat.csv.
"""

import numpy as np

from qduffing import (
    FockState,
    choose_phase,
    coherent_state,
    count_peaks,
    default_grid,
    find_theta_max,
    adaptive_parallel,
    adaptive_perpendicular,
    quadrature_pdf,
    rotate,
    wigner,
)
from qduffing.runner import write_grid_csv, write_table_csv

N = 64
cat = FockState(coherent_state(2.0, N).coeffs
                + coherent_state(-2.0, N).coeffs).normalized()

est = find_theta_max(cat, M=32)
write_table_csv("peak_counts.csv", ["theta", "peaks"],
                np.column_stack([est.thetas, est.peak_counts]))
print(f"peak counts over 32 angles written; maximum at theta = {est.theta_max:.4f} "
      f"(pi/2 = {np.pi/2:.4f})")
print(f"  enhance-chaos phase (parallel to fringes):      "
      f"{choose_phase(adaptive_parallel(), est):.4f}")
print(f"  suppress-chaos phase (perpendicular to fringes): "
      f"{choose_phase(adaptive_perpendicular(), est):.4f}")

grid = default_grid(N)
for theta, name in ((0.0, "pdf_splitting.csv"), (np.pi / 2, "pdf_fringes.csv")):
    pdf = quadrature_pdf(cat, theta, grid)
    write_table_csv(name, ["x", "density"], np.column_stack([grid.points, pdf]))
    # floor out double-precision wiggles in the far tails, as the scan does
    n_peaks = count_peaks(pdf, peak_floor=1e-12 * pdf.max())
    print(f"{name}: theta = {theta:.3f}, {n_peaks} peaks")

span = 5.0
axis = np.linspace(-span, span, 201)
write_grid_csv("wigner_cat.csv", wigner(cat, axis, axis), axis, axis)
print("wigner_cat.csv written (negative fringes between the lobes)")

# the estimate rotates with the state, up to the angular grid resolution
rot = rotate(cat, 0.6)
print(f"after rotating the state by 0.6: theta_max = "
      f"{find_theta_max(rot, 32).theta_max:.4f} "
      f"(expected ~ {(est.theta_max + 0.6) % np.pi:.4f})")
