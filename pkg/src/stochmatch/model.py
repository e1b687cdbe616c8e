"""Problem instances, arrival sampling, scenarios and assignments.

Ads and impression types are dense 0-based integers.  External names live in
``ad_names`` / ``type_names`` and are only used at the I/O boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

MASK64 = (1 << 64) - 1

# linear scan (cumulative search) below this many types, alias table above
ALIAS_THRESHOLD = 64


class InvalidInstance(ValueError):
    pass


class InvalidAssignment(ValueError):
    pass


# ---------------------------------------------------------------------------
# seeding


def splitmix64(x: int) -> int:
    """One SplitMix64 output step for state ``x``."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, index: int) -> int:
    """Derive the seed of stream ``index`` from ``master_seed``.

    Streams are independent of evaluation order, so trials can be run in any
    order or in parallel and still see the same randomness.
    """
    s = splitmix64(master_seed & MASK64)
    return splitmix64((s + (index & MASK64) * 0x9E3779B97F4A7C15) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & MASK64))


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class Instance:
    """Bipartite ads x impression-types graph with arrival rates.

    ``edges`` holds ``(ad, type)`` pairs.  ``rates`` are exact Fractions; the
    arrival distribution is ``rates / sum(rates)`` and ``n`` is the number of
    arrivals.  ``capacities`` bound how often each ad may be assigned.
    ``users``, ``demands`` and ``freq_cap`` are only used by the
    frequency-capping extension.
    """

    num_ads: int
    rates: tuple[Fraction, ...]
    edges: tuple[tuple[int, int], ...]
    n: int
    capacities: Optional[tuple[int, ...]] = None
    users: Optional[tuple[int, ...]] = None
    demands: Optional[tuple[int, ...]] = None
    freq_cap: Optional[int] = None
    ad_names: Optional[tuple[str, ...]] = field(default=None, compare=False)
    type_names: Optional[tuple[str, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(Fraction(r) for r in self.rates))
        object.__setattr__(self, "edges", tuple((int(a), int(i)) for a, i in self.edges))
        if self.capacities is None:
            object.__setattr__(self, "capacities", (1,) * self.num_ads)
        else:
            object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))

    @property
    def num_types(self) -> int:
        return len(self.rates)

    @property
    def integral(self) -> bool:
        return all(r.denominator == 1 for r in self.rates)

    @property
    def unit_rates(self) -> bool:
        return all(r == 1 for r in self.rates)

    @property
    def unit_capacities(self) -> bool:
        return all(c == 1 for c in self.capacities)

    @cached_property
    def total_rate(self) -> Fraction:
        return sum(self.rates, Fraction(0))

    @cached_property
    def ad_neighbors(self) -> tuple[tuple[int, ...], ...]:
        nb = [[] for _ in range(self.num_ads)]
        for a, i in self.edges:
            nb[a].append(i)
        return tuple(tuple(sorted(x)) for x in nb)

    @cached_property
    def type_neighbors(self) -> tuple[tuple[int, ...], ...]:
        nb = [[] for _ in range(self.num_types)]
        for a, i in self.edges:
            nb[i].append(a)
        return tuple(tuple(sorted(x)) for x in nb)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def demand(self, a: int) -> int:
        if self.demands is None:
            return self.capacities[a]
        return self.demands[a]

    def ad_name(self, a: int) -> str:
        return self.ad_names[a] if self.ad_names else f"a{a}"

    def type_name(self, i: int) -> str:
        return self.type_names[i] if self.type_names else f"i{i}"

    @cached_property
    def sampler(self) -> "TypeSampler":
        return TypeSampler(self.rates)


def validate_instance(inst: Instance) -> list[str]:
    """Return the list of violated invariants; empty means valid."""
    problems = []
    k, m = inst.num_ads, inst.num_types
    if k < 0 or m == 0:
        problems.append("empty type set")
    seen = set()
    for a, i in inst.edges:
        if not (0 <= a < k and 0 <= i < m):
            problems.append(f"dangling edge ({a}, {i})")
        elif (a, i) in seen:
            problems.append(f"duplicate edge ({a}, {i})")
        seen.add((a, i))
    if any(r < 0 for r in inst.rates):
        problems.append("negative rate")
    if m and all(r == 0 for r in inst.rates):
        problems.append("no positive rate")
    if inst.n < 1:
        problems.append("horizon n must be positive")
    if inst.integral and m and inst.total_rate != inst.n:
        problems.append(f"n != sum e_i ({inst.n} != {inst.total_rate})")
    if len(inst.capacities) != k or any(c < 1 for c in inst.capacities):
        problems.append("capacities must be positive, one per ad")
    if inst.users is not None and len(inst.users) != m:
        problems.append("users must annotate every impression type")
    if inst.demands is not None and (
        len(inst.demands) != k or any(d < 0 for d in inst.demands)
    ):
        problems.append("demands must be nonnegative, one per ad")
    if inst.freq_cap is not None and inst.freq_cap < 0:
        problems.append("negative frequency cap")
    return problems


def check_instance(inst: Instance) -> None:
    problems = validate_instance(inst)
    if problems:
        raise InvalidInstance("; ".join(problems))


# ---------------------------------------------------------------------------
# sampling


def _integer_weights(rates: Sequence[Fraction]) -> list[int]:
    lcm = 1
    for r in rates:
        lcm = lcm * r.denominator // math.gcd(lcm, r.denominator)
    return [int(r * lcm) for r in rates]


class TypeSampler:
    """Exact sampler over types with rational weights.

    Uses inverse-CDF search on integer cumulative weights for small type
    counts, and an integer alias table otherwise.  Both are exact: every
    outcome probability is ``w_i / W``.
    """

    def __init__(self, rates: Sequence[Fraction]):
        self.weights = _integer_weights(rates)
        self.total = sum(self.weights)
        m = len(self.weights)
        self.m = m
        self.use_alias = m > ALIAS_THRESHOLD
        if self.total >= 1 << 62 or self.total * max(m, 1) >= 1 << 62:
            raise InvalidInstance("rate denominators too large for exact sampling")
        if self.use_alias:
            self._build_alias()
        else:
            self.cumulative = np.cumsum(np.array(self.weights, dtype=np.int64))

    def _build_alias(self):
        m, total = self.m, self.total
        # column height is `total`; type i owns w_i * m units overall
        scaled = [w * m for w in self.weights]
        prob = [0] * m
        alias = list(range(m))
        small = [j for j in range(m) if scaled[j] < total]
        large = [j for j in range(m) if scaled[j] >= total]
        while small and large:
            s = small.pop()
            g = large[-1]
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= total - scaled[s]
            if scaled[g] < total:
                large.pop()
                small.append(g)
        for j in large + small:
            prob[j] = total
        self.alias_prob = np.array(prob, dtype=np.int64)
        self.alias = np.array(alias, dtype=np.int64)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if size == 0:
            return np.zeros(0, dtype=np.int64)
        if self.use_alias:
            col = rng.integers(0, self.m, size=size)
            u = rng.integers(0, self.total, size=size)
            return np.where(u < self.alias_prob[col], col, self.alias[col])
        u = rng.integers(0, self.total, size=size)
        return np.searchsorted(self.cumulative, u, side="right")


@dataclass(frozen=True)
class Scenario:
    """Ordered arrivals: ``draws[t]`` is the type of the t-th impression."""

    draws: tuple[int, ...]

    def __len__(self):
        return len(self.draws)

    def counts(self, num_types: int) -> list[int]:
        c = [0] * num_types
        for i in self.draws:
            c[i] += 1
        return c


def sample_scenario(inst: Instance, seed: int) -> Scenario:
    check_instance(inst)
    return sample_scenario_rng(inst, make_rng(seed))


def sample_scenario_rng(inst: Instance, rng: np.random.Generator) -> Scenario:
    draws = inst.sampler.draw(rng, inst.n)
    return Scenario(tuple(int(i) for i in draws))


def check_scenario(inst: Instance, sc: Scenario) -> None:
    if len(sc.draws) != inst.n:
        raise InvalidInstance(f"scenario has {len(sc.draws)} draws, expected {inst.n}")
    m = inst.num_types
    for i in sc.draws:
        if not 0 <= i < m:
            raise InvalidInstance(f"unknown impression type {i}")


# ---------------------------------------------------------------------------
# assignments


@dataclass
class Assignment:
    """Partial map from draw position to the ad it was assigned to."""

    matches: dict[int, int] = field(default_factory=dict)

    def __len__(self):
        return len(self.matches)


def assignment_violations(inst: Instance, sc: Scenario, asg: Assignment) -> list[str]:
    problems = []
    load = [0] * inst.num_ads
    per_user: dict[tuple[int, int], int] = {}
    edges = inst.edge_set
    for pos, a in asg.matches.items():
        if not 0 <= pos < len(sc.draws):
            problems.append(f"position {pos} out of range")
            continue
        if not 0 <= a < inst.num_ads:
            problems.append(f"unknown ad {a}")
            continue
        i = sc.draws[pos]
        if (a, i) not in edges:
            problems.append(f"draw {pos} of type {i} assigned to non-neighbor ad {a}")
        load[a] += 1
        if inst.users is not None and inst.freq_cap is not None:
            key = (a, inst.users[i])
            per_user[key] = per_user.get(key, 0) + 1
    freqcap = inst.users is not None and inst.freq_cap is not None
    for a in range(inst.num_ads):
        limit = inst.demand(a) if freqcap else inst.capacities[a]
        if load[a] > limit:
            problems.append(f"ad {a} assigned {load[a]} > {limit} times")
    if freqcap:
        for (a, u), cnt in per_user.items():
            if cnt > inst.freq_cap:
                problems.append(f"ad {a} shown {cnt} > {inst.freq_cap} times to user {u}")
    return problems


def assignment_size(inst: Instance, sc: Scenario, asg: Assignment) -> int:
    problems = assignment_violations(inst, sc, asg)
    if problems:
        raise InvalidAssignment("; ".join(problems))
    return len(asg.matches)


def make_instance(
    num_ads: int,
    rates: Iterable,
    edges: Iterable[tuple[int, int]],
    n: Optional[int] = None,
    **kw,
) -> Instance:
    """Convenience constructor; ``n`` defaults to the total rate when integral."""
    rates = tuple(Fraction(r) for r in rates)
    if n is None:
        total = sum(rates, Fraction(0))
        n = math.ceil(total)
    return Instance(num_ads=num_ads, rates=rates, edges=tuple(edges), n=n, **kw)


def type_counts(inst: Instance, draws: Sequence[int]) -> list[int]:
    c = [0] * inst.num_types
    for i in draws:
        c[i] += 1
    return c

