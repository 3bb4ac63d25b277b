"""Super-resolution of grid-bound spike trains from low-frequency Fourier data.

Four recovery methods are provided (OMP, BLOOMP, basis pursuit denoising
and BP-BLOT) together with the filtered error metric, support distances and
a seeded experiment harness.
"""
from .bands import (BandRadius, band, band_of_set, default_band_radius,
                    rayleigh_index)
from .harness import (ExperimentConfig, ResultTable, emit_results,
                      estimate_pla_exponent, run_experiment,
                      sweep_superresolution_factor)
from .metrics import (EvaluationRecord, FilterSpec, bottleneck_distance,
                      filter_signal, filtered_error, hausdorff_distance,
                      relative_residual)
from .model import (AmplitudeModel, GridSpec, Measurement, SensingMatrix,
                    SpikeTrain, build_sensing_matrix, measure, synthesize_spikes)
from .solvers import (BpdnSettings, RecoveredSignal, blot, bloomp, bp_blot, bpdn,
                      least_squares_on_support, local_optimization, omp)

__version__ = "0.1.0"
