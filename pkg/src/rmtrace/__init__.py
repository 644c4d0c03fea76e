"""Estimate ``Tr rho^n`` (n = 2, 3, 4) from random measurements on single copies."""

from .errors import RMTraceError
from .estimator import (CorrectionFactors, EstimateReport, correction_factors, estimate, forward_moments,
                        invert_bar, invert_gaussian, invert_moments, invert_tilde, predicted_error_p2,
                        pure_state_error_bound)
from .experiments import ExperimentConfig, run_experiment, run_nonidentical_source
from .haar import haar_invariance_test, sample_ginibre, sample_haar_batch, sample_haar_unitary, seeded_rng
from .measurement import (MeasurementScenario, OutcomeProbabilities, build_scenario, outcome_probabilities,
                          sample_counts)
from .moments import MomentAccumulator, MomentTable, moment_table
from .states import (DensityMatrix, StateEnsembleSpec, embed, make_footnote_state, make_maximally_mixed,
                     make_pure_random, mean_state, trace_powers)

__version__ = "0.1.0"
