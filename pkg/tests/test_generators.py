from collections import Counter

import pytest

from stochmatch.generators import (
    FAMILIES,
    gen_complete_bipartite,
    gen_freqcap_family,
    gen_random_bipartite,
    gen_six_cycle_copies,
    gen_tsm_tight_family,
    gen_two_disjoint_matchings,
    rename_scenario,
    unit_rate_reduction,
)
from stochmatch.model import InvalidInstance, make_instance, make_rng, sample_scenario, validate_instance
from stochmatch.sim import offline_opt


def test_six_cycle_shape():
    inst = gen_six_cycle_copies(1)
    assert (inst.num_ads, inst.num_types, inst.n, len(inst.edges)) == (3, 3, 3, 6)
    assert inst.ad_names == ("a", "b", "c") and inst.type_names == ("x", "y", "z")
    assert all(len(nb) == 2 for nb in inst.ad_neighbors + inst.type_neighbors)


def test_tight_family_shape():
    inst = gen_tsm_tight_family(8)
    deg = Counter(a for a, _ in inst.edges)
    # u: 2, v: 2, w: 2 cycle edges + 2 to L, k: 2 to X
    assert [deg[a] for a in range(8)] == [2, 2, 2, 2, 4, 4, 2, 2]
    with pytest.raises(ValueError):
        gen_tsm_tight_family(6)


def test_two_matchings_degrees():
    inst = gen_two_disjoint_matchings(5)
    assert all(len(nb) == 2 for nb in inst.ad_neighbors + inst.type_neighbors)


def test_random_generator_is_seeded():
    a = gen_random_bipartite(5, 6, 0.4, 3, seed=9)
    assert a == gen_random_bipartite(5, 6, 0.4, 3, seed=9)
    assert validate_instance(a) == []
    assert a.n == sum(a.rates)


def test_freqcap_family_shape():
    inst = gen_freqcap_family(3)
    assert inst.n == 12 and inst.users[:4] == (0, 0, 1, 1)
    assert validate_instance(inst) == []


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_every_family_is_valid(name):
    arg = 2 if name in ("six-cycles", "freqcap") else 8
    assert validate_instance(FAMILIES[name](arg)) == []


def test_complete_bipartite():
    inst = gen_complete_bipartite(3)
    assert len(inst.edges) == 9


def test_unit_rate_reduction_copies_edges():
    inst = make_instance(2, [2, 1], [(0, 0), (1, 1)])
    red, r = unit_rate_reduction(inst)
    assert red.rates == (1, 1, 1)
    assert r.copies == ((0, 1), (2,)) and r.origin == (0, 0, 1)
    assert set(red.edges) == {(0, 0), (0, 1), (1, 2)}
    with pytest.raises(InvalidInstance):
        unit_rate_reduction(make_instance(1, [0.5], [(0, 0)], n=1))


def test_renamed_scenario_keeps_original_types():
    inst = gen_random_bipartite(4, 5, 0.5, 4, seed=2)
    red, r = unit_rate_reduction(inst)
    sc = sample_scenario(inst, 3)
    rsc = rename_scenario(sc, r, make_rng(1))
    assert [r.origin[j] for j in rsc.draws] == list(sc.draws)
    assert offline_opt(inst, sc) == offline_opt(red, rsc)
