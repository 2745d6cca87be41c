"""Sample diverse points from the inverse set of a differentiable unit.

The inverse set of a scalar function f under a generator G is the set of
codes c whose activation f(G(c)) lies in a band [z1, z2].  Seeds are found
with an augmented Lagrangian that rewards spread in an encoder space; the
rest of the samples come from a cheap walk that keeps the seed solver's
multipliers fixed.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .diffmap import (MLP, Affine, Composition, CoordinateProjection, DifferentiableMap,
                      GradCheckReport, Identity, LinearLogistic, Quadratic, compose,
                      compose_chain, finite_diff_check, forward, vjp)
from .model_io import dumps_model, load_model, loads_model, save_model
from .problem import (MODES, PAPER_ONE_SIDED, STRICT_TWO_SIDED, ActivationBand,
                      ConstraintSpec, FeasibilityVerdict, InverseSetProblem,
                      LogisticInverseSet, analytic_inverse_set_linear_logistic, band_new,
                      feasible_mask, is_feasible)
from .auglag import (AugLagSchedule, AugLagState, SeedResult, TraceRecord, find_seeds,
                     lagrangian_terms, lagrangian_value_and_grad, multiplier_update,
                     penalty_update, slack_closed_form, slack_update)
from .sampler import (SampleSet, WalkState, ablate_code_space, ablate_feasibility_only,
                      full_batch_solve, maximize_activation, run_sampler,
                      sample_objective_grad, sample_objective_terms, walk_step)
from .metrics import (CoverageGrid, coverage_curve, feasibility_rate, grid_coverage,
                      mean_pairwise_distance, metrics_report,
                      nearest_sample_distance_quantiles, step_accounting)
from .config import ExperimentConfig, fixture_config, load_config
