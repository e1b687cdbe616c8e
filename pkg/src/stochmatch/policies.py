"""Online allocation policies and the exact optimal-policy oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .flow import IntegralFlow, build_realized_sm_network, max_flow
from .model import (
    Assignment,
    Instance,
    InvalidInstance,
    Scenario,
    check_scenario,
    make_rng,
)
from .plan import ColoredPlan

POLICY_KINDS = ("greedy", "suggested_matching", "tsm", "freqcap_sm")


@dataclass(frozen=True)
class PolicyConfig:
    kind: str = "suggested_matching"
    tsm_red_fallback: bool = False
    # SM only: on a failed suggestion take the lowest free neighbor instead
    sm_greedy_rescue: bool = False

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.tsm_red_fallback and self.kind != "tsm":
            raise ValueError("tsm_red_fallback only applies to the tsm policy")
        if self.sm_greedy_rescue and self.kind != "suggested_matching":
            raise ValueError("sm_greedy_rescue only applies to suggested_matching")


def run_greedy(inst: Instance, sc: Scenario) -> Assignment:
    """Match each arrival to its lowest-index neighbor with capacity left."""
    check_scenario(inst, sc)
    left = list(inst.capacities)
    nbrs = inst.type_neighbors
    matches = {}
    for pos, i in enumerate(sc.draws):
        for a in nbrs[i]:
            if left[a] > 0:
                left[a] -= 1
                matches[pos] = a
                break
    return Assignment(matches)


def _suggestion_table(inst: Instance, f: IntegralFlow, scale: int):
    """Per type: (ads, cumulative flow units, total units = e_i * scale)."""
    per_type: list[list[tuple[int, int]]] = [[] for _ in range(inst.num_types)]
    for (a, i), x in zip(inst.edges, f.mid_flows()):
        if x:
            per_type[i].append((a, x))
    table = []
    for i, lst in enumerate(per_type):
        lst.sort()
        ads = [a for a, _ in lst]
        cum = list(np.cumsum([x for _, x in lst])) if lst else []
        total = int(inst.rates[i] * scale)
        if cum and cum[-1] > total:
            raise InvalidInstance(f"flow into type {i} exceeds its rate")
        table.append((ads, [int(c) for c in cum], total))
    return table


def _pick(table_entry, u: int) -> Optional[int]:
    ads, cum, _ = table_entry
    for a, c in zip(ads, cum):
        if u < c:
            return a
    return None


def _draw_units(inst: Instance, sc: Scenario, table, seed: int) -> list[int]:
    highs = np.array([max(table[i][2], 1) for i in sc.draws], dtype=np.int64)
    if len(highs) == 0:
        return []
    return make_rng(seed).integers(0, highs).tolist()


def suggestion_table(inst: Instance, f: IntegralFlow) -> list:
    """Precomputed per-type suggestion lists; reusable across scenarios."""
    return _suggestion_table(inst, f, f.network.scale if f.network.kind == "sm" else 1)


def run_suggested_matching(inst: Instance, f: IntegralFlow, sc: Scenario, seed: int,
                           greedy_rescue: bool = False, table: Optional[list] = None) -> Assignment:
    """Each arrival of type i suggests ad a with probability f_ai / e_i.

    The suggestion is taken if the ad has capacity left; otherwise the arrival
    is dropped (or, with ``greedy_rescue``, given to the lowest free
    neighbor).  Works on scaled flows for fractional rates.
    """
    net = f.network
    if net.kind != "sm" or net.num_ads != inst.num_ads or net.mid_count != len(inst.edges):
        raise InvalidInstance("flow is not defined on this instance's SM network")
    check_scenario(inst, sc)
    if table is None:
        table = _suggestion_table(inst, f, net.scale)
    units = _draw_units(inst, sc, table, seed)
    left = list(inst.capacities)
    matches = {}
    for pos, (i, u) in enumerate(zip(sc.draws, units)):
        a = _pick(table[i], u)
        if a is not None and left[a] > 0:
            left[a] -= 1
            matches[pos] = a
        elif greedy_rescue:
            for b in inst.type_neighbors[i]:
                if left[b] > 0:
                    left[b] -= 1
                    matches[pos] = b
                    break
    return Assignment(matches)


def run_tsm(inst: Instance, p: ColoredPlan, sc: Scenario,
            cfg: PolicyConfig = PolicyConfig("tsm")) -> Assignment:
    """First arrival of a type tries its blue ad, the second its red ad."""
    if len(p.blue) != inst.num_types or len(p.ad_class) != inst.num_ads:
        raise InvalidInstance("plan does not belong to this instance")
    check_scenario(inst, sc)
    taken = [False] * inst.num_ads
    seen = [0] * inst.num_types
    fallback = cfg.tsm_red_fallback
    matches = {}
    for pos, i in enumerate(sc.draws):
        x = seen[i]
        seen[i] = x + 1
        if x == 0:
            tries = (p.blue[i], p.red[i]) if fallback else (p.blue[i],)
        elif x == 1:
            tries = (p.red[i],)
        else:
            continue
        for a in tries:
            if a is not None and not taken[a]:
                taken[a] = True
                matches[pos] = a
                break
    return Assignment(matches)


def run_freqcap_sm(inst: Instance, f: IntegralFlow, sc: Scenario, seed: int,
                   table: Optional[list] = None) -> Assignment:
    """Suggested matching routed through the (ad, user) layer.

    Never exceeds the per-user cap or an ad's total demand.
    """
    if inst.users is None or inst.freq_cap is None:
        raise InvalidInstance("frequency capping needs user annotations and a cap")
    net = f.network
    if net.kind != "freqcap" or net.mid_count != len(inst.edges):
        raise InvalidInstance("flow is not defined on this instance's frequency-cap network")
    check_scenario(inst, sc)
    if table is None:
        table = _suggestion_table(inst, f, 1)
    units = _draw_units(inst, sc, table, seed)
    left = [inst.demand(a) for a in range(inst.num_ads)]
    shown: dict[tuple[int, int], int] = {}
    cap = inst.freq_cap
    matches = {}
    for pos, (i, u) in enumerate(zip(sc.draws, units)):
        a = _pick(table[i], u)
        if a is None or left[a] <= 0:
            continue
        key = (a, inst.users[i])
        if shown.get(key, 0) >= cap:
            continue
        shown[key] = shown.get(key, 0) + 1
        left[a] -= 1
        matches[pos] = a
    return Assignment(matches)


# ---------------------------------------------------------------------------
# exact optimal online policy


class BudgetExceeded(RuntimeError):
    pass


def _leaf_opt(inst: Instance, history: tuple[int, ...], cache: dict) -> int:
    got = cache.get(history)
    if got is None:
        counts = [0] * inst.num_types
        for i in history:
            counts[i] += 1
        got = max_flow(build_realized_sm_network(inst, counts)).value
        cache[history] = got
    return got


def optimal_policy_value(inst: Instance, node_budget: int = 1_000_000) -> Fraction:
    """max over online policies of E[ALG/OPT], by backward induction.

    States are (remaining capacities, multiset of types drawn so far); the
    leaf value ALG/OPT depends on nothing else.  A scenario with OPT = 0
    counts as ratio 1.  Raises ``BudgetExceeded`` rather than approximating.
    """
    total = inst.total_rate
    probs = [(i, r / total) for i, r in enumerate(inst.rates) if r > 0]
    nbrs = inst.type_neighbors
    full = sum(inst.capacities)
    memo: dict = {}
    opt_cache: dict = {}

    def value(left: tuple[int, ...], hist: tuple[int, ...]) -> Fraction:
        key = (left, hist)
        got = memo.get(key)
        if got is not None:
            return got
        if len(memo) >= node_budget:
            raise BudgetExceeded(f"decision tree exceeds {node_budget} states")
        if len(hist) == inst.n:
            opt = _leaf_opt(inst, hist, opt_cache)
            alg = full - sum(left)
            v = Fraction(alg, opt) if opt else Fraction(1)
        else:
            v = Fraction(0)
            for i, p in probs:
                h2 = tuple(sorted(hist + (i,)))
                best = value(left, h2)
                for a in nbrs[i]:
                    if left[a] > 0:
                        l2 = left[:a] + (left[a] - 1,) + left[a + 1:]
                        best = max(best, value(l2, h2))
                v += p * best
        memo[key] = v
        return v

    return value(tuple(inst.capacities), ())


# ---------------------------------------------------------------------------
# fractional-rate analysis


def sm_pointwise_bound(x: float) -> tuple[float, float]:
    """(1 - e^-x, (1 - 1/e) x) for x in [0, 1]; the first is never smaller."""
    x = float(x)
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise ValueError("x must lie in [0, 1]")
    return 1.0 - math.exp(-x), (1.0 - math.exp(-1.0)) * x


def sm_program_sides(F) -> tuple[float, float]:
    """(sum_a 1 - e^-F_a, (1 - 1/e) sum_a F_a) for loads F_a in [0, 1]."""
    F = np.asarray(F, dtype=float)
    if F.size and (F.min() < 0 or F.max() > 1):
        raise ValueError("loads must lie in [0, 1]")
    return float(np.sum(1.0 - np.exp(-F))), float((1.0 - math.exp(-1.0)) * F.sum())
