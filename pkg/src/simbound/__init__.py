"""Exact policy values, misspecification measures and value-error bounds for tabular MDPs."""
from .bounds import (BoundInputs, BoundReport, bound_report, fh_original_bound, fh_tight_bound,
                     hierarchy_existing_bound, hierarchy_tight_bound, l1_drift_bound,
                     linearization_gap, optimal_policy_loss_bound, original_bound,
                     overlap_lower_bound, tight_bound)
from .mdp import (DistributionSeries, Mdp, MisspecReport, Policy, PolicyMatrices,
                  build_policy_matrices, exact_value, finite_horizon_value, measure_misspec,
                  overlap, overlap_trajectory, policy_iteration, t_step_distribution)
from .witness import hierarchy_witness, two_state_witness, two_state_witness_fh

__version__ = "0.1.0"
