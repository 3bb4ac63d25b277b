"""
Fitting a noise amplification exponent
======================================

Below the grid size at which a method breaks down, its error grows like a
power of F.  A log-log least-squares fit recovers that exponent.
"""

import numpy as np

from superres import estimate_pla_exponent

# a synthetic curve: error = 0.002 F^1.5 with 5% multiplicative noise
rng = np.random.default_rng(0)
F = np.array([2, 5, 10, 15, 20])
errors = 0.002 * F**1.5 * np.exp(rng.normal(0, 0.05, F.size))
print("fitted exponent:", round(estimate_pla_exponent(errors, F), 3))

# the same fit runs on harness output through the command line:
#   superres sweep-f --config configs/f_sweep.json --out out
#   superres fit-pla --in out/results.csv --max-F 20
