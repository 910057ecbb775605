"""Influence maximization under the non-progressive linear threshold model."""

from .diffusion import (
    MonteCarloEstimate,
    SeedSets,
    ThresholdConfig,
    Trajectory,
    influence,
    monte_carlo_influence,
    run_nlt,
    run_path_effect,
    sample_thresholds,
    step_nlt,
)
from .exact import (
    ReachTable,
    exact_influence_cells,
    expected_indicator_cells,
    expected_indicator_dag,
    expected_influence_dag,
    pass_prob,
    reach_prob,
)
from .network import (
    InfoNetwork,
    amplify,
    build_network,
    load_network,
    save_network,
    topological_order,
    transform_permanent,
    vertex_cover_reduction,
)
from .optimize import Budget, Solution, brute_force_opt, greedy_max, make_evaluator, marginal_gain

__version__ = "0.1.0"
