"""Capacitated flow networks built from instances, integral max-flow, and
residual-reachability min cuts.

Node numbering is fixed: ``0`` is the source, ads are ``1..k``, impression
types (or draws) follow, then any (ad, user) layer nodes, and the sink is
last.  Every network built from an instance stores its middle arcs in the
instance's edge order, so flows can be read back per edge.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .model import Instance, InvalidInstance, Scenario, check_scenario


class NotMaximumFlow(ValueError):
    pass


@dataclass
class FlowNetwork:
    num_nodes: int
    source: int
    sink: int
    tails: list[int] = field(default_factory=list)
    heads: list[int] = field(default_factory=list)
    caps: list[int] = field(default_factory=list)
    kind: str = "generic"
    num_ads: int = 0
    num_right: int = 0
    # index of the first ad->impression arc and how many there are
    mid_start: int = 0
    mid_count: int = 0
    # freq-cap networks: (ad, user) of each layer node, in node order
    layer: tuple[tuple[int, int], ...] = ()
    # fractional inputs are solved on rates scaled by this factor
    scale: int = 1

    def add_arc(self, u: int, v: int, cap: int) -> int:
        if cap < 0:
            raise ValueError("negative capacity")
        if v == self.source or u == self.sink:
            raise ValueError("arcs may not enter the source or leave the sink")
        self.tails.append(u)
        self.heads.append(v)
        self.caps.append(int(cap))
        return len(self.caps) - 1

    @property
    def num_arcs(self) -> int:
        return len(self.caps)

    def ad_node(self, a: int) -> int:
        return 1 + a

    def right_node(self, i: int) -> int:
        return 1 + self.num_ads + i

    def is_ad(self, v: int) -> bool:
        return 1 <= v <= self.num_ads

    def is_right(self, v: int) -> bool:
        return self.num_ads < v <= self.num_ads + self.num_right


@dataclass(frozen=True)
class IntegralFlow:
    network: FlowNetwork = field(repr=False, compare=False)
    flows: tuple[int, ...]
    value: int

    def mid_flows(self) -> tuple[int, ...]:
        net = self.network
        return self.flows[net.mid_start: net.mid_start + net.mid_count]


@dataclass(frozen=True)
class CutPartition:
    source_side: frozenset[int]
    value: int

    def __contains__(self, v: int) -> bool:
        return v in self.source_side


def _scale_factor(inst: Instance) -> int:
    lcm = 1
    for r in inst.rates:
        d = r.denominator
        a, b = lcm, d
        while b:
            a, b = b, a % b
        lcm = lcm * d // a
    return lcm


def build_sm_network(inst: Instance, allow_fractional: bool = False) -> FlowNetwork:
    """Source -> ad (c_a), ad -> type (c_a), type -> sink (e_i).

    With ``allow_fractional`` every capacity is multiplied by the common
    denominator of the rates; the resulting flow divided by ``net.scale`` is
    a maximum fractional flow of the unscaled network.
    """
    if not inst.integral and not allow_fractional:
        raise InvalidInstance("fractional rates need allow_fractional=True (scaled solve)")
    scale = _scale_factor(inst) if allow_fractional else 1
    k, m = inst.num_ads, inst.num_types
    net = FlowNetwork(num_nodes=k + m + 2, source=0, sink=k + m + 1, kind="sm",
                      num_ads=k, num_right=m, scale=scale)
    for a in range(k):
        net.add_arc(0, 1 + a, inst.capacities[a] * scale)
    net.mid_start = net.num_arcs
    for a, i in inst.edges:
        net.add_arc(1 + a, 1 + k + i, inst.capacities[a] * scale)
    net.mid_count = len(inst.edges)
    for i, r in enumerate(inst.rates):
        net.add_arc(1 + k + i, net.sink, int(r * scale))
    return net


def build_boosted_network(inst: Instance) -> FlowNetwork:
    """Source -> ad (2), ad -> type (1), type -> sink (2); unit rates only."""
    if not inst.unit_rates:
        raise InvalidInstance("boosted network needs unit rates; reduce the instance first")
    if not inst.unit_capacities:
        raise InvalidInstance("boosted network needs unit ad capacities")
    k, m = inst.num_ads, inst.num_types
    net = FlowNetwork(num_nodes=k + m + 2, source=0, sink=k + m + 1, kind="boosted",
                      num_ads=k, num_right=m)
    for a in range(k):
        net.add_arc(0, 1 + a, 2)
    net.mid_start = net.num_arcs
    for a, i in inst.edges:
        net.add_arc(1 + a, 1 + k + i, 1)
    net.mid_count = len(inst.edges)
    for i in range(m):
        net.add_arc(1 + k + i, net.sink, 2)
    return net


def build_realization_network(inst: Instance, sc: Scenario) -> FlowNetwork:
    """One node per draw; max-flow value equals the offline optimum."""
    check_scenario(inst, sc)
    k, nd = inst.num_ads, len(sc.draws)
    net = FlowNetwork(num_nodes=k + nd + 2, source=0, sink=k + nd + 1,
                      kind="realization", num_ads=k, num_right=nd)
    for a in range(k):
        net.add_arc(0, 1 + a, inst.capacities[a])
    net.mid_start = net.num_arcs
    by_type: list[list[int]] = [[] for _ in range(inst.num_types)]
    for pos, i in enumerate(sc.draws):
        by_type[i].append(pos)
    for a in range(k):
        for i in inst.ad_neighbors[a]:
            for pos in by_type[i]:
                net.add_arc(1 + a, 1 + k + pos, 1)
    net.mid_count = net.num_arcs - net.mid_start
    for pos in range(nd):
        net.add_arc(1 + k + pos, net.sink, 1)
    return net


def build_realized_sm_network(inst: Instance, counts: Sequence[int]) -> FlowNetwork:
    """SM network topology with each type's sink capacity set to its draw count.

    Draws of one type are interchangeable, so the max-flow value equals the
    offline optimum of any scenario with these counts.
    """
    k, m = inst.num_ads, inst.num_types
    net = FlowNetwork(num_nodes=k + m + 2, source=0, sink=k + m + 1, kind="realized",
                      num_ads=k, num_right=m)
    for a in range(k):
        net.add_arc(0, 1 + a, inst.capacities[a])
    net.mid_start = net.num_arcs
    for a, i in inst.edges:
        net.add_arc(1 + a, 1 + k + i, inst.capacities[a])
    net.mid_count = len(inst.edges)
    for i in range(m):
        net.add_arc(1 + k + i, net.sink, counts[i])
    return net


def _require_freqcap(inst: Instance) -> None:
    if inst.users is None or inst.freq_cap is None:
        raise InvalidInstance("frequency capping needs user annotations and a cap")


def build_freqcap_network(inst: Instance, counts: Optional[Sequence[int]] = None) -> FlowNetwork:
    """Three-layer network: s -> a (d_a), a -> <a,u> (cap), <a,u> -> i, i -> t.

    The ``<a,u> -> i`` arcs get capacity ``cap``; the layer arc above already
    limits them.  Passing ``counts`` replaces sink capacities with draw counts
    (the realized network of a scenario).
    """
    _require_freqcap(inst)
    if counts is None and not inst.integral:
        raise InvalidInstance("frequency-capping network needs integral rates")
    k, m = inst.num_ads, inst.num_types
    cap = inst.freq_cap
    pairs = sorted({(a, inst.users[i]) for a, i in inst.edges})
    layer_index = {p: j for j, p in enumerate(pairs)}
    base = 1 + k + m
    net = FlowNetwork(num_nodes=base + len(pairs) + 1, source=0, sink=base + len(pairs),
                      kind="freqcap", num_ads=k, num_right=m, layer=tuple(pairs))
    for a in range(k):
        net.add_arc(0, 1 + a, inst.demand(a))
    for j, (a, u) in enumerate(pairs):
        net.add_arc(1 + a, base + j, cap)
    net.mid_start = net.num_arcs
    for a, i in inst.edges:
        net.add_arc(base + layer_index[(a, inst.users[i])], 1 + k + i, cap)
    net.mid_count = len(inst.edges)
    for i in range(m):
        net.add_arc(1 + k + i, net.sink, int(inst.rates[i]) if counts is None else counts[i])
    return net


# ---------------------------------------------------------------------------
# solver


class _Residual:
    """Paired forward/backward residual arcs; arc 2j is forward arc j."""

    def __init__(self, net: FlowNetwork):
        N = net.num_nodes
        E = net.num_arcs
        tails = np.asarray(net.tails, dtype=np.int64)
        heads = np.asarray(net.heads, dtype=np.int64)
        frm = np.empty(2 * E, dtype=np.int64)
        to = np.empty(2 * E, dtype=np.int64)
        frm[0::2], frm[1::2] = tails, heads
        to[0::2], to[1::2] = heads, tails
        cap = np.zeros(2 * E, dtype=np.int64)
        cap[0::2] = np.asarray(net.caps, dtype=np.int64)
        # adjacency grouped by node, ascending neighbor index, ties by arc id
        order = np.lexsort((np.arange(2 * E), to, frm))
        bounds = np.searchsorted(frm[order], np.arange(N + 1))
        order_l = order.tolist()
        self.adj = [order_l[bounds[v]:bounds[v + 1]] for v in range(N)]
        self.to = to.tolist()
        self.cap = cap.tolist()
        self.net = net

    def bfs_levels(self) -> list[int]:
        level = [-1] * self.net.num_nodes
        s = self.net.source
        level[s] = 0
        q = deque([s])
        to, cap, adj = self.to, self.cap, self.adj
        while q:
            u = q.popleft()
            lu = level[u] + 1
            for e in adj[u]:
                if cap[e] > 0:
                    v = to[e]
                    if level[v] < 0:
                        level[v] = lu
                        q.append(v)
        return level

    def blocking_flow(self, level: list[int]) -> int:
        s, t = self.net.source, self.net.sink
        to, cap, adj = self.to, self.cap, self.adj
        ptr = [0] * self.net.num_nodes
        total = 0
        while True:
            # iterative DFS along the level graph, first admissible arc first
            path: list[int] = []
            u = s
            while u != t:
                lst = adj[u]
                p = ptr[u]
                lu = level[u] + 1
                while p < len(lst):
                    e = lst[p]
                    if cap[e] > 0 and level[to[e]] == lu:
                        break
                    p += 1
                ptr[u] = p
                if p == len(lst):
                    if u == s:
                        return total
                    level[u] = -1
                    e = path.pop()
                    u = to[e ^ 1]
                    ptr[u] += 1
                    continue
                e = lst[p]
                path.append(e)
                u = to[e]
            push = min(cap[e] for e in path)
            for e in path:
                cap[e] -= push
                cap[e ^ 1] += push
            total += push

    def reachable(self) -> list[bool]:
        seen = [False] * self.net.num_nodes
        s = self.net.source
        seen[s] = True
        q = deque([s])
        to, cap, adj = self.to, self.cap, self.adj
        while q:
            u = q.popleft()
            for e in adj[u]:
                if cap[e] > 0 and not seen[to[e]]:
                    seen[to[e]] = True
                    q.append(to[e])
        return seen


def max_flow(net: FlowNetwork) -> IntegralFlow:
    """Maximum integral flow by shortest augmenting paths in BFS phases.

    Within a phase, augmenting paths are searched depth-first over the BFS
    level graph, always taking the lowest-index admissible neighbor, so the
    returned flow is a deterministic function of the network.
    """
    res = _Residual(net)
    value = 0
    while True:
        level = res.bfs_levels()
        if level[net.sink] < 0:
            break
        value += res.blocking_flow(level)
    E = net.num_arcs
    flows = tuple(net.caps[j] - res.cap[2 * j] for j in range(E))
    return IntegralFlow(network=net, flows=flows, value=value)


def residual_reachable(net: FlowNetwork, f: IntegralFlow) -> list[bool]:
    seen = [False] * net.num_nodes
    out: list[list[int]] = [[] for _ in range(net.num_nodes)]
    for j in range(net.num_arcs):
        u, v = net.tails[j], net.heads[j]
        if f.flows[j] < net.caps[j]:
            out[u].append(v)
        if f.flows[j] > 0:
            out[v].append(u)
    s = net.source
    seen[s] = True
    q = deque([s])
    while q:
        u = q.popleft()
        for v in out[u]:
            if not seen[v]:
                seen[v] = True
                q.append(v)
    return seen


def cut_value(net: FlowNetwork, source_side, caps: Optional[Sequence[int]] = None) -> int:
    """Total capacity of arcs leaving ``source_side`` (a set or bool list)."""
    caps = net.caps if caps is None else caps
    if isinstance(source_side, (set, frozenset)):
        inside = [v in source_side for v in range(net.num_nodes)]
    else:
        inside = source_side
    return sum(c for u, v, c in zip(net.tails, net.heads, caps) if inside[u] and not inside[v])


def reachability_cut(net: FlowNetwork, f: IntegralFlow) -> CutPartition:
    """Source side = nodes reachable from s in the residual graph of ``f``."""
    seen = residual_reachable(net, f)
    if seen[net.sink]:
        raise NotMaximumFlow("augmenting path exists; flow is not maximum")
    S = frozenset(v for v in range(net.num_nodes) if seen[v])
    return CutPartition(source_side=S, value=cut_value(net, seen))


def check_flow(net: FlowNetwork, f: IntegralFlow) -> list[str]:
    """Capacity, conservation and value checks; empty list means legal."""
    problems = []
    bal = [0] * net.num_nodes
    for j in range(net.num_arcs):
        x = f.flows[j]
        if not 0 <= x <= net.caps[j]:
            problems.append(f"arc {j} flow {x} outside [0, {net.caps[j]}]")
        bal[net.tails[j]] -= x
        bal[net.heads[j]] += x
    for v in range(net.num_nodes):
        if v not in (net.source, net.sink) and bal[v] != 0:
            problems.append(f"conservation violated at node {v}")
    if -bal[net.source] != f.value or bal[net.sink] != f.value:
        problems.append("flow value does not match source/sink balance")
    return problems


def edge_flow_map(inst: Instance, f: IntegralFlow) -> dict[tuple[int, int], int]:
    """Nonzero flow per instance edge (scaled units for fractional solves)."""
    return {e: x for e, x in zip(inst.edges, f.mid_flows()) if x}


def fractional_edge_flows(inst: Instance, f: IntegralFlow) -> dict[tuple[int, int], Fraction]:
    s = f.network.scale
    return {e: Fraction(x, s) for e, x in edge_flow_map(inst, f).items()}
