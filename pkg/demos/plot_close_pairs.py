"""
Spikes closer than the resolution limit
=======================================

Six spikes with two pairs only 0.3 Rayleigh lengths apart.  The band radius
drops to half the closest gap, and BP-BLOT is the method that places both
members of each pair.
"""

import numpy as np

from superres import (AmplitudeModel, BpdnSettings, GridSpec, bloomp, bp_blot,
                      bottleneck_distance, build_sensing_matrix,
                      default_band_radius, measure, omp, rayleigh_index)
from superres.model import spikes_from_positions

positions = np.array([10, 10.3, 15, 20, 25, 25.3])
print("Rayleigh index:", rayleigh_index(positions))

grid = GridSpec(150, 50)
phi = build_sensing_matrix(grid)
x = spikes_from_positions(grid, positions, np.ones(6))
meas = measure(phi, x, snr=20, rng_seed=7)

radius = default_band_radius(0.3, grid.F)
print("band radius:", radius.radius_fine, "fine steps")

settings = BpdnSettings(epsilon=meas.noise_norm)
for name, out in [("omp", omp(phi, meas.y, 6)),
                  ("bloomp", bloomp(phi, meas.y, 6, radius)),
                  ("bp_blot", bp_blot(phi, meas.y, 6, settings, radius))]:
    found = np.round(out.support / grid.F, 2)
    print(f"{name:8s} bottleneck {bottleneck_distance(out.support, x.indices, grid):.2f}"
          f"  positions {found}")
