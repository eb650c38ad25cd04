"""Partially specified prior-posterior (PSPP) models: Bayesian updating from
first and second moments only, and the state-space filters built on it."""

from .bayes_linear import (JointMoments, MomentPair, Theorem1Report, bayes_linear_scalar,
                           goldstein_variance_modified, pspp1_condition, theorem1_check)
from .errors import (ConfigError, DataError, DegreesOfFreedomError, DimensionError,
                     DomainError, NotPSDError, NumericalError, PSPPError, SingularMatrixError)
from .filters import (ForecastMetrics, forecast_metrics, kalman_step_known_v, pspp_dlm_step,
                      pspp_initial_state, run_filter)
from .gsop import (MatrixVarBelief, VtildePair, gsop_posterior_fixed_A,
                   gsop_regression_posterior, gsop_tau, gsop_v_update, kronecker_correction,
                   vtilde_pair)
from .linalg import duplication_matrix, sym_sqrt, sym_sqrt_inv, unvech, vec, vech
from .simulation import (DLM1Priors, SimSpec, aggregate_tables, run_experiment,
                         run_replication, simulate_series)
from .sop import (ConjugateSOPPrior, ScalarVarBelief, conjugate_match_params,
                  conjugate_posterior, matching_k, sop_filter_step, sop_posterior_x, sop_tau,
                  sop_v_update)
from .statespace import FilterState, StateSpaceSpec, StepReport

__version__ = "0.1.0"
