from collections import Counter

import pytest

from stochmatch.flow import build_boosted_network, max_flow
from stochmatch.generators import (
    gen_complete_bipartite,
    gen_freqcap_family,
    gen_random_bipartite,
    gen_six_cycle_copies,
    gen_tsm_tight_family,
    gen_two_disjoint_matchings,
    unit_rate_reduction,
)
from stochmatch.model import Scenario, make_instance
from stochmatch.plan import (
    _color_path,
    boosted_pipeline,
    classify_counts,
    scenario_upper_bound,
    sm_crossing_edges,
    sm_pipeline,
    sm_scenario_upper_bound,
)
from oracles import brute_force_matching


def _random_unit(seed):
    k = 2 + seed % 7
    m = 2 + (seed * 7) % 9
    inst = gen_random_bipartite(k, m, 0.2 + (seed % 5) / 8, 1 + seed % 3, seed)
    return unit_rate_reduction(inst)[0] if not inst.unit_rates else inst


@pytest.mark.parametrize("seed", range(120))
def test_structure_checks_hold_on_random_instances(seed):
    pipe = boosted_pipeline(_random_unit(seed))
    failed = [c for c in pipe.checks() if not c.passed]
    assert not failed, failed


@pytest.mark.parametrize("inst", [
    gen_six_cycle_copies(1), gen_six_cycle_copies(4), gen_tsm_tight_family(16),
    gen_two_disjoint_matchings(7), gen_complete_bipartite(5), gen_freqcap_family(5),
], ids=["cycle", "cycles4", "tight", "two-matchings", "complete", "freqcap"])
def test_structure_checks_hold_on_families(inst):
    assert all(c.passed for c in boosted_pipeline(inst).checks())


def test_path_coloring_rules():
    assert _color_path(1, False) == ["B"]
    assert _color_path(3, True) == ["B", "R", "B"]
    assert _color_path(4, False) == ["B", "R", "B", "R"]
    assert _color_path(4, True) == ["B", "B", "R", "B"]
    assert _color_path(2, True) == ["B", "B"]


def test_coloring_is_a_pair_of_matchings():
    pipe = boosted_pipeline(_random_unit(11))
    p = pipe.plan
    blue_ads = Counter(a for a in p.blue if a is not None)
    red_ads = Counter(a for a in p.red if a is not None)
    # every ad carries at most two colored edges and never two reds
    for a in range(len(p.ad_class)):
        assert blue_ads[a] + red_ads[a] <= 2
        assert red_ads[a] <= 1
    colored = {(a, i) for i, a in enumerate(p.blue) if a is not None}
    colored |= {(a, i) for i, a in enumerate(p.red) if a is not None}
    assert colored == set(p.flow_edges)


def test_six_cycle_plan():
    pipe = boosted_pipeline(gen_six_cycle_copies(1))
    assert pipe.flow.value == 6
    assert [c.kind for c in pipe.plan.components] == ["cycle"]
    assert sorted(pipe.plan.ad_class) == ["BR", "BR", "BR"]
    assert classify_counts(pipe.plan) == (3, 0, 0, 0)


def test_two_matchings_is_one_cycle():
    pipe = boosted_pipeline(gen_two_disjoint_matchings(6))
    assert len(pipe.plan.components) == 1 and pipe.plan.components[0].length == 12


def test_surgery_moves_types_with_two_source_neighbors():
    # two ads fight over one type, one of them has a private type too
    inst = make_instance(3, [1, 1, 1], [(0, 0), (1, 0), (1, 1), (2, 2)])
    pipe = boosted_pipeline(inst)
    c = pipe.cut
    for i in c.I_T:
        assert sum(1 for a in inst.type_neighbors[i] if a in c.A_S) <= 1
    assert c.value_after <= c.value_before


@pytest.mark.parametrize("seed", range(40))
def test_scenario_bounds_dominate_brute_force(seed):
    inst = _random_unit(seed)
    boosted = boosted_pipeline(inst)
    sm = sm_pipeline(inst)
    assert sm_crossing_edges(sm.cut, inst) == []
    for t in range(5):
        draws = tuple((seed * 31 + t * 17 + j * j) % inst.num_types for j in range(inst.n))
        sc = Scenario(draws)
        opt = brute_force_matching(inst.num_ads, inst.capacities, inst.edges, draws) \
            if inst.n <= 8 else None
        if opt is None:
            continue
        assert opt <= scenario_upper_bound(boosted.cut, inst, sc)
        assert opt <= sm_scenario_upper_bound(sm.cut, inst, sc)


def test_boosted_value_is_at_most_twice_sm_value():
    inst = _random_unit(5)
    b = max_flow(build_boosted_network(inst)).value
    s = sm_pipeline(inst).flow.value
    assert s <= b <= 2 * s
