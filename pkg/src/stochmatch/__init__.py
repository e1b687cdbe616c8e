"""Offline-guided online algorithms for i.i.d. stochastic bipartite matching."""

from .flow import build_boosted_network, build_sm_network, max_flow, reachability_cut
from .generators import (
    gen_complete_bipartite,
    gen_freqcap_family,
    gen_random_bipartite,
    gen_six_cycle_copies,
    gen_tsm_tight_family,
    gen_two_disjoint_matchings,
    unit_rate_reduction,
)
from .model import Instance, InvalidInstance, Scenario, make_instance, sample_scenario
from .plan import boosted_pipeline, decompose_and_color, sm_pipeline, surgery_cut
from .policies import (
    PolicyConfig,
    optimal_policy_value,
    run_greedy,
    run_suggested_matching,
    run_tsm,
)
from .sim import hardness_family_stats, offline_opt, run_trials

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "InvalidInstance",
    "PolicyConfig",
    "Scenario",
    "boosted_pipeline",
    "build_boosted_network",
    "build_sm_network",
    "decompose_and_color",
    "gen_complete_bipartite",
    "gen_freqcap_family",
    "gen_random_bipartite",
    "gen_six_cycle_copies",
    "gen_tsm_tight_family",
    "gen_two_disjoint_matchings",
    "hardness_family_stats",
    "make_instance",
    "max_flow",
    "offline_opt",
    "optimal_policy_value",
    "reachability_cut",
    "run_greedy",
    "run_suggested_matching",
    "run_trials",
    "run_tsm",
    "sample_scenario",
    "sm_pipeline",
    "surgery_cut",
    "unit_rate_reduction",
]
