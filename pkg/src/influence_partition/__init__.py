"""Influence-based community partitioning for directed social graphs.

Splits a graph into disjoint communities to maximize the total
within-community influence spread under the independent-cascade model,
bracketing the objective between a linear-threshold upper bound and an
arborescence-model lower bound, each optimized by a discretized continuous
greedy ascent with rounding, alongside a direct greedy; the best of the three
under the true objective is returned.
"""
from .diffusion import (
    ExactIcSpread,
    ExactLtSpread,
    IcMcSpread,
    LtMcSpread,
    SizeCapError,
    SpreadEstimate,
    exact_sigma_ic,
    exact_sigma_lt,
    sigma_community_ic,
    sigma_community_lt,
    simulate_ic,
    simulate_lt,
)
from .extensions import (
    GradientMatrix,
    SortedOrder,
    lovasz_gradient,
    lovasz_value,
    multilinear_gradient,
    multilinear_value_estimate,
    sorted_cells,
)
from .experiment import ExperimentConfig, ResultRow, emit_csv, run_experiment
from .graph import EdgeListError, InfluenceGraph, build_graph, induced_subgraph, load_edge_list, save_edge_list
from .mia import (
    Arborescence,
    InfluencePath,
    MiaSpread,
    activation_probability,
    build_miia,
    max_influence_path,
    sigma_m_community,
    sigma_m_node,
)
from .objectives import (
    Assignment,
    FractionalAssignment,
    Partition,
    complete_assignment,
    evaluate_f,
    is_independent,
    load_partition_csv,
    make_spread_model,
    save_partition_csv,
)
from .optimizers import (
    ContinuousGreedyConfig,
    SandwichConfig,
    SandwichResult,
    continuous_greedy,
    mamkcp,
    max_weight_independent_set,
    pipage_rounding,
    random_partition,
    randomized_rounding,
    samkcp,
    sandwich,
    simple_greedy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
