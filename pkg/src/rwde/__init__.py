"""Random walks in i.i.d. Dirichlet environments on the integers with bounded
jumps: governing parameters, regime classification, exact finite-window linear
algebra, and seeded Monte Carlo verification of the model's structural
identities.
"""

from .environment import Environment, RngStream, amalgamate, sample_dirichlet, sample_environment
from .graphs import (
    DivergenceReport,
    WeightedDigraph,
    build_balanced_closure,
    build_drift_closure,
    build_halfline,
    build_window,
    divergence_report,
    strongly_connected,
)
from .kappa import (
    Kappa0Result,
    Regime,
    TrapSet,
    classify_regime,
    diameter_bound,
    exit_weights,
    kappa0_search,
    min_exit_weight,
)
from .model import (
    DerivedParams,
    DirichletParams,
    compute_m0,
    derive_params,
    parse_alphas,
    reflect,
    validate_params,
)
from .solver import (
    EscapeBracket,
    HittingProblem,
    escape_probability_bracket,
    expected_visits,
    hitting_probability,
    invariant_measure,
    redirect_to,
    time_reverse,
)
from .stats import (
    KsReport,
    beta_cdf,
    default_hill_k,
    hill_estimator,
    ks_test,
    mean_and_se,
    regularized_incomplete_beta,
)
from .walk import (
    MeanHittingEstimate,
    Trajectory,
    VelocityEstimate,
    WalkStats,
    annealed_path_probability,
    estimate_mean_hitting,
    estimate_velocity,
    regeneration_times,
    simulate_derrw,
    simulate_line,
    simulate_quenched,
    trajectory_stats,
)

__version__ = "0.1.0"
