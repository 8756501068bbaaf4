"""Top-k critical node selection from cooperative-game values under diffusion models."""

from critnodes.diffusion import (DiffusionModel, SpreadEstimate, ValuationOracle, estimate_spread, make_valuation,
                                 simulate_ic, simulate_lt)
from critnodes.games import (Allocation, CoalitionGame, Ranking, banzhaf_mc, rank, shapley_exact, shapley_mc)
from critnodes.graph import Graph, dump_edge_list, erdos_renyi, load_edge_list
from critnodes.greedy import (HybridConfig, PermutationSchedule, greedy_hill_climb, hybrid_select, marginal_game,
                              shapley_greedy)
from critnodes.harness import ExperimentConfig, ResultRow, brute_force_topk, run_experiment
from critnodes.kernels import BACKEND
from critnodes.select import (DiscountMethod, Selection, ThresholdSpec, select_discount, select_eliminate_always,
                              select_eliminate_local, select_eliminate_threshold, select_naive)

__version__ = "0.1.0"
