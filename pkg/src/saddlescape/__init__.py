"""Saddle-point search and solution landscapes for black-box force fields.

Shrinking-dimer saddle dynamics for index-k saddle points, both on the
true force and on a Gaussian-process surrogate trained online inside
trust regions, plus downward-search construction of solution landscapes.
"""

from .dynamics import (DimerSchedule, RunStatus, SaddleRunResult, SdParams,
                       SdState, dimer_schedule, run_sd, sd_step)
from .errors import (ConfigError, ConvergenceFailure, DegenerateInput,
                     DegenerateSpectrum, Diverged, FactorizationFailure,
                     FitFailure, SaddleSearchError, SimulationFailure)
from .forces import DimerEval, ForceOracle, dimer_hv, evaluate_counted
from .gp import (FitConfig, GpSurrogate, Hyperparams, NoiseModel, TrainingSet,
                 fit, log_marginal_likelihood, predict, se_kernel,
                 uncertainty_radius, update_data)
from .learner import (GpsdParams, TrustRegion, lhs_sample, run_gpsd,
                      trust_region_update)
from .linalg import (DirectionFrame, EigenDecomposition, default_zero_tol,
                     fd_jacobian_sym, gram_schmidt, morse_index, sym_eigen,
                     symmetrize)

__version__ = "0.1.0"
