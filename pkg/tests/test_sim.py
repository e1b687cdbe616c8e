from fractions import Fraction

import pytest

from oracles import brute_force_matching
from stochmatch.flow import build_realization_network, max_flow
from stochmatch.generators import (
    gen_freqcap_family,
    gen_random_bipartite,
    gen_six_cycle_copies,
    gen_two_disjoint_matchings,
)
from stochmatch.model import Scenario, make_instance, make_rng, sample_scenario
from stochmatch.policies import PolicyConfig
from stochmatch.sim import (
    OfflineOpt,
    TrialResult,
    aggregate,
    hardness_family_stats,
    offline_opt,
    offline_opt_freqcap,
    run_trials,
)


@pytest.mark.parametrize("seed", range(60))
def test_offline_opt_matches_flow_and_brute_force(seed):
    rng = make_rng(seed)
    caps = tuple(int(c) for c in rng.integers(1, 3, size=4))
    inst = gen_random_bipartite(4, 4, 0.45, 2, seed)
    inst = make_instance(4, inst.rates, inst.edges, capacities=caps)
    sc = sample_scenario(inst, seed)
    v = offline_opt(inst, sc)
    assert v == max_flow(build_realization_network(inst, sc)).value
    if inst.n <= 8:
        assert v == brute_force_matching(4, caps, inst.edges, sc.draws)


def test_offline_opt_edge_cases():
    inst = make_instance(1, [1, 1], [(0, 0)])
    assert offline_opt(inst, Scenario((1, 1))) == 0
    assert OfflineOpt(inst)([]) == 0


def test_offline_opt_freqcap_respects_user_cap():
    inst = make_instance(1, [1, 1], [(0, 0), (0, 1)], users=(0, 0), demands=(2,), freq_cap=1)
    assert offline_opt_freqcap(inst, Scenario((0, 1))) == 1


def test_aggregate_statistics_are_exact():
    recs = [TrialResult(t, t, alg, opt, opt) for t, (alg, opt) in enumerate([(1, 2), (2, 3), (3, 3), (0, 0)])]
    s = aggregate(recs)
    assert s.mean_ratio == (Fraction(1, 2) + Fraction(2, 3) + 1 + 1) / 4
    assert s.ratio_of_means == Fraction(6, 8)
    assert s.min_ratio == Fraction(1, 2) and s.max_ratio == 1
    assert s.q50 == Fraction(2, 3)  # nearest rank: 2nd of 4
    assert s.q01 == s.q05 == Fraction(1, 2)
    assert aggregate([]).trials == 0


def test_run_trials_is_deterministic_and_thread_independent():
    inst = gen_two_disjoint_matchings(30)
    cfg = PolicyConfig("tsm")
    a = run_trials(inst, cfg, 12, master_seed=5)
    b = run_trials(inst, cfg, 12, master_seed=5, threads=3)
    assert a == b
    assert run_trials(inst, cfg, 12, master_seed=6) != a


@pytest.mark.parametrize("kind", ["greedy", "suggested_matching", "tsm"])
def test_run_trials_bounds_hold(kind):
    inst = gen_random_bipartite(8, 6, 0.4, 3, seed=1)
    res = run_trials(inst, PolicyConfig(kind), 30, master_seed=2)
    for r in res.records:
        assert r.alg <= r.opt <= r.cut_bound


def test_freqcap_trials():
    inst = gen_freqcap_family(10)
    res = run_trials(inst, PolicyConfig("freqcap_sm"), 20, master_seed=4)
    for r in res.records:
        assert r.alg <= r.opt <= r.cut_bound


def test_zero_trials():
    res = run_trials(gen_six_cycle_copies(1), PolicyConfig("greedy"), 0, master_seed=1)
    assert res.records == () and res.stats.trials == 0


def test_hardness_stats_shape():
    h = hardness_family_stats(50, 5, seed=1)
    # cycles with no draw make up the rest
    assert 0 < h.gamma1 + h.gamma2 + h.gamma3 + h.gamma_plus <= 1
    assert 0 <= h.xyy_freq <= 1 and 0 <= h.xxx_freq <= 1
    with pytest.raises(ValueError):
        hardness_family_stats(0, 1, seed=1)
