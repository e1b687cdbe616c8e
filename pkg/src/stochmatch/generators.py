"""Named instance families, a seeded random generator, and the reduction from
integral rates to unit rates."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import Instance, InvalidInstance, Scenario, make_rng


def gen_complete_bipartite(n: int) -> Instance:
    """K_{n,n} with unit rates."""
    if n < 1:
        raise ValueError("n must be >= 1")
    edges = [(a, i) for a in range(n) for i in range(n)]
    return Instance(num_ads=n, rates=(Fraction(1),) * n, edges=tuple(edges), n=n,
                    ad_names=tuple(f"a{a}" for a in range(n)),
                    type_names=tuple(f"i{i}" for i in range(n)))


def gen_six_cycle_copies(kcopies: int) -> Instance:
    """Disjoint copies of the 6-cycle x-a-y-b-z-c-x, uniform arrivals, n = 3k.

    Copy j uses ads ``3j, 3j+1, 3j+2`` (a, b, c) and types ``3j..3j+2``
    (x, y, z); a serves {x, y}, b serves {y, z}, c serves {z, x}.
    """
    if kcopies < 1:
        raise ValueError("kcopies must be >= 1")
    edges = []
    for j in range(kcopies):
        a, b, c = 3 * j, 3 * j + 1, 3 * j + 2
        x, y, z = 3 * j, 3 * j + 1, 3 * j + 2
        edges += [(a, x), (a, y), (b, y), (b, z), (c, z), (c, x)]
    suffix = [""] if kcopies == 1 else [str(j) for j in range(kcopies)]
    ad_names = tuple(f"{s}{t}" for t in suffix for s in "abc")
    type_names = tuple(f"{s}{t}" for t in suffix for s in "xyz")
    return Instance(num_ads=3 * kcopies, rates=(Fraction(1),) * (3 * kcopies),
                    edges=tuple(sorted(edges)), n=3 * kcopies,
                    ad_names=ad_names, type_names=type_names)


def gen_tsm_tight_family(n: int) -> Instance:
    """The family on which two suggested matchings attains its worst ratio.

    Ads are ordered U, V, W, K and types X, Y, Z, L (blocks of n/4).  Edges:
    the 6-cycles u_j-x_j-v_j-y_j-w_j-z_j-u_j, K x X complete and L x W
    complete.  The ordering makes the deterministic max-flow route all flow
    along the 6-cycles.
    """
    if n < 4 or n % 4:
        raise ValueError("n must be a positive multiple of 4")
    q = n // 4
    U, V, W, K = 0, q, 2 * q, 3 * q
    X, Y, Z, L = 0, q, 2 * q, 3 * q
    edges = []
    for j in range(q):
        u, v, w = U + j, V + j, W + j
        x, y, z = X + j, Y + j, Z + j
        edges += [(u, x), (v, x), (v, y), (w, y), (w, z), (u, z)]
    edges += [(K + a, X + b) for a in range(q) for b in range(q)]
    edges += [(W + a, L + b) for a in range(q) for b in range(q)]
    ad_names = tuple(f"{p}{j}" for p in "uvwk" for j in range(q))
    type_names = tuple(f"{p}{j}" for p in "xyzl" for j in range(q))
    return Instance(num_ads=n, rates=(Fraction(1),) * n, edges=tuple(sorted(edges)), n=n,
                    ad_names=ad_names, type_names=type_names)


def gen_two_disjoint_matchings(n: int) -> Instance:
    """A single 2n-cycle: ad j serves types j and j+1 (mod n)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    edges = sorted({(j, j) for j in range(n)} | {(j, (j + 1) % n) for j in range(n)})
    return Instance(num_ads=n, rates=(Fraction(1),) * n, edges=tuple(edges), n=n,
                    ad_names=tuple(f"a{j}" for j in range(n)),
                    type_names=tuple(f"i{j}" for j in range(n)))


def gen_random_bipartite(k: int, m: int, edge_prob: float, max_rate: int, seed: int) -> Instance:
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must lie in [0, 1]")
    if k < 1 or m < 1 or max_rate < 1:
        raise ValueError("k, m and max_rate must be >= 1")
    rng = make_rng(seed)
    rates = rng.integers(1, max_rate + 1, size=m)
    mask = rng.random((k, m)) < edge_prob
    edges = tuple((int(a), int(i)) for a, i in zip(*np.nonzero(mask)))
    return Instance(num_ads=k, rates=tuple(Fraction(int(r)) for r in rates), edges=edges,
                    n=int(rates.sum()))


def gen_freqcap_family(num_ads: int, demand: int = 2, cap: int = 1) -> Instance:
    """Frequency-capped instance with 4 unit-rate types per ad (n = 4 * num_ads).

    Ad j serves types 4j..4j+3; the first two belong to user 0 and the last
    two to user 1.  It also serves type 4(j+1) of the next ad.
    """
    if num_ads < 1:
        raise ValueError("num_ads must be >= 1")
    m = 4 * num_ads
    users = tuple(0 if t % 4 < 2 else 1 for t in range(m))
    edges = set()
    for j in range(num_ads):
        for t in range(4):
            edges.add((j, 4 * j + t))
        edges.add((j, 4 * ((j + 1) % num_ads)))
    return Instance(num_ads=num_ads, rates=(Fraction(1),) * m, edges=tuple(sorted(edges)), n=m,
                    users=users, demands=(demand,) * num_ads, freq_cap=cap)


FAMILIES = {
    "complete": gen_complete_bipartite,
    "six-cycles": gen_six_cycle_copies,
    "tsm-tight": gen_tsm_tight_family,
    "two-matchings": gen_two_disjoint_matchings,
    "freqcap": gen_freqcap_family,
}


# ---------------------------------------------------------------------------
# unit-rate reduction


@dataclass(frozen=True)
class UnitReduction:
    """``copies[i]`` lists the reduced types standing for original type i;
    ``origin[j]`` is the original type of reduced type j."""

    copies: tuple[tuple[int, ...], ...]
    origin: tuple[int, ...]


def unit_rate_reduction(inst: Instance) -> tuple[Instance, UnitReduction]:
    """Split each type of rate e_i into e_i unit-rate copies."""
    if not inst.integral:
        raise InvalidInstance("unit-rate reduction needs integral rates")
    copies = []
    origin = []
    for i, r in enumerate(inst.rates):
        start = len(origin)
        origin += [i] * int(r)
        copies.append(tuple(range(start, len(origin))))
    edges = sorted((a, j) for a, i in inst.edges for j in copies[i])
    names = None
    if inst.type_names:
        names = tuple(
            inst.type_names[i] if len(copies[i]) == 1 else f"{inst.type_names[i]}#{c}"
            for i in range(inst.num_types) for c in range(len(copies[i]))
        )
    reduced = Instance(num_ads=inst.num_ads, rates=(Fraction(1),) * len(origin),
                       edges=tuple(edges), n=inst.n, capacities=inst.capacities,
                       ad_names=inst.ad_names, type_names=names)
    return reduced, UnitReduction(copies=tuple(copies), origin=tuple(origin))


def rename_scenario(sc: Scenario, red: UnitReduction, rng: np.random.Generator) -> Scenario:
    """Name each arrival uniformly at random after one of its type's copies."""
    picks = rng.random(len(sc.draws))
    out = []
    for i, u in zip(sc.draws, picks):
        cs = red.copies[i]
        out.append(cs[min(int(u * len(cs)), len(cs) - 1)])
    return Scenario(tuple(out))
