"""Blue/red decomposition of the boosted max-flow, the surgically adjusted
min cut, and the exact structural identities and scenario upper bounds built
on them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .flow import (
    CutPartition,
    FlowNetwork,
    IntegralFlow,
    build_boosted_network,
    build_sm_network,
    cut_value,
    max_flow,
    reachability_cut,
)
from .model import Instance, Scenario

BLUE, RED = "B", "R"
AD_CLASSES = ("BR", "BB", "B", "R")


class PlanError(RuntimeError):
    """A structural property that must hold for any legal boosted flow failed."""


@dataclass(frozen=True)
class Component:
    kind: str  # "path" or "cycle"
    # ("a", ad) / ("i", type) in traversal order; cycles do not repeat the start
    nodes: tuple[tuple[str, int], ...]
    colors: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.colors)

    def edges(self) -> list[tuple[int, int]]:
        out = []
        L = len(self.nodes)
        for j in range(self.length):
            p, q = self.nodes[j], self.nodes[(j + 1) % L]
            out.append((p[1], q[1]) if p[0] == "a" else (q[1], p[1]))
        return out


@dataclass(frozen=True)
class ColoredPlan:
    blue: tuple[Optional[int], ...]
    red: tuple[Optional[int], ...]
    ad_class: tuple[str, ...]
    components: tuple[Component, ...]
    flow_edges: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class BoostedCut:
    A_S: frozenset[int]
    A_T: frozenset[int]
    I_S: frozenset[int]
    I_T: frozenset[int]
    delta: tuple[tuple[int, int], ...]
    moved: tuple[int, ...]
    value_before: int
    value_after: int

    @property
    def A_delta(self) -> frozenset[int]:
        return frozenset(a for a, _ in self.delta)

    @property
    def I_delta(self) -> frozenset[int]:
        return frozenset(i for _, i in self.delta)


@dataclass(frozen=True)
class CheckResult:
    name: str
    lhs: int
    rhs: int
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "pass": self.passed}


# ---------------------------------------------------------------------------
# decomposition and coloring


def _color_path(length: int, ends_at_types: bool) -> list[str]:
    if length % 2 == 0 and ends_at_types:
        colors = [BLUE, BLUE][:length]
        while len(colors) < length:
            colors.append(RED if len(colors) % 2 == 0 else BLUE)
        return colors
    return [BLUE if j % 2 == 0 else RED for j in range(length)]


def decompose_and_color(inst: Instance, f: IntegralFlow) -> ColoredPlan:
    """Split the flow-carrying edges into paths and cycles and color them.

    Paths start at their lower-numbered endpoint (ads number below types);
    cycles start at their lowest ad and leave toward its lower-numbered
    neighbor.  Cycles and odd paths alternate blue/red starting blue; even
    paths between ads alternate starting blue; even paths between types are
    blue, blue, then alternate red/blue.
    """
    k, m = inst.num_ads, inst.num_types
    flow_edges = [e for e, x in zip(inst.edges, f.mid_flows()) if x > 0]
    if any(x > 1 for x in f.mid_flows()):
        raise PlanError("boosted flow must be 0/1 on every edge")
    # global order: ads 0..k-1, then types k..k+m-1
    nb: list[list[int]] = [[] for _ in range(k + m)]
    for a, i in flow_edges:
        nb[a].append(k + i)
        nb[k + i].append(a)
    for v, lst in enumerate(nb):
        if len(lst) > 2:
            raise PlanError(f"node {v} has flow degree {len(lst)} > 2")
        lst.sort()

    def label(v: int) -> tuple[str, int]:
        return ("a", v) if v < k else ("i", v - k)

    seen = [False] * (k + m)
    components: list[Component] = []
    for start in range(k + m):
        if seen[start] or len(nb[start]) != 1:
            continue
        seq = [start]
        seen[start] = True
        prev, cur = -1, start
        while True:
            nxt = [w for w in nb[cur] if w != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            seq.append(cur)
            seen[cur] = True
        L = len(seq) - 1
        colors = _color_path(L, ends_at_types=seq[0] >= k)
        components.append(Component("path", tuple(label(v) for v in seq), tuple(colors)))
    for start in range(k):
        if seen[start] or len(nb[start]) != 2:
            continue
        seq = [start]
        seen[start] = True
        prev, cur = start, nb[start][0]
        while cur != start:
            seq.append(cur)
            seen[cur] = True
            nxt = nb[cur][0] if nb[cur][0] != prev else nb[cur][1]
            prev, cur = cur, nxt
        colors = [BLUE if j % 2 == 0 else RED for j in range(len(seq))]
        components.append(Component("cycle", tuple(label(v) for v in seq), tuple(colors)))

    blue: list[Optional[int]] = [None] * m
    red: list[Optional[int]] = [None] * m
    ad_colors: list[list[str]] = [[] for _ in range(k)]
    for comp in components:
        for (a, i), c in zip(comp.edges(), comp.colors):
            ad_colors[a].append(c)
            slot = blue if c == BLUE else red
            if slot[i] is not None:
                raise PlanError(f"type {i} has two {c} edges")
            slot[i] = a
    for i in range(m):
        if red[i] is not None and blue[i] is None:
            raise PlanError(f"type {i} has a red edge but no blue edge")
    ad_class = []
    for cs in ad_colors:
        key = "".join(sorted(cs))  # "", "B", "R", "BB", "BR", "RR"
        if key == "RR":
            raise PlanError("ad with two red edges")
        ad_class.append(key or "none")
    return ColoredPlan(blue=tuple(blue), red=tuple(red), ad_class=tuple(ad_class),
                       components=tuple(components), flow_edges=frozenset(flow_edges))


def classify_counts(p: ColoredPlan) -> tuple[int, int, int, int]:
    """(|A_BR|, |A_BB|, |A_B|, |A_R|); raises if they do not account for every flow edge."""
    counts = tuple(sum(1 for c in p.ad_class if c == cls) for cls in AD_CLASSES)
    br, bb, b, r = counts
    if len(p.flow_edges) != 2 * br + 2 * bb + b + r:
        raise PlanError("class counts do not add up to the flow edge count")
    return counts


# ---------------------------------------------------------------------------
# cuts


def surgery_cut(net: FlowNetwork, f: IntegralFlow, inst: Instance) -> BoostedCut:
    """Reachability cut, then move every T-side type with two or more S-side
    neighbors to the S side (single pass; moving types never changes A_S)."""
    cut = reachability_cut(net, f)
    k, m = inst.num_ads, inst.num_types
    A_S = frozenset(a for a in range(k) if net.ad_node(a) in cut)
    I_S = {i for i in range(m) if net.right_node(i) in cut}
    moved = []
    for i in range(m):
        if i in I_S:
            continue
        if sum(1 for a in inst.type_neighbors[i] if a in A_S) >= 2:
            moved.append(i)
    I_S.update(moved)
    inside = [False] * net.num_nodes
    inside[net.source] = True
    for a in A_S:
        inside[net.ad_node(a)] = True
    for i in I_S:
        inside[net.right_node(i)] = True
    I_T = frozenset(range(m)) - I_S
    delta = tuple(sorted((a, i) for a, i in inst.edges if a in A_S and i in I_T))
    return BoostedCut(A_S=A_S, A_T=frozenset(range(k)) - A_S, I_S=frozenset(I_S), I_T=I_T,
                      delta=delta, moved=tuple(moved), value_before=cut.value,
                      value_after=cut_value(net, inside))


def verify_structure(c: BoostedCut, p: ColoredPlan, f: IntegralFlow) -> list[CheckResult]:
    """Exact integer checks tying the coloring, the cut and the flow together.

    Fractional coefficients are cleared by multiplying through by 3.
    """
    out = []
    nf = len(p.flow_edges)
    br, bb, b, r = (sum(1 for x in p.ad_class if x == cls) for cls in AD_CLASSES)
    delta = set(c.delta)
    nd = len(delta)

    out.append(CheckResult("flow_edges_eq_value", nf, f.value, nf == f.value))
    out.append(CheckResult("flow_edges_by_ad_class", nf, 2 * br + 2 * bb + b + r,
                           nf == 2 * br + 2 * bb + b + r))
    outside = len(delta - p.flow_edges)
    out.append(CheckResult("delta_subset_of_flow", outside, 0, outside == 0))
    deg_a: dict[int, int] = {}
    deg_i: dict[int, int] = {}
    for a, i in delta:
        deg_a[a] = deg_a.get(a, 0) + 1
        deg_i[i] = deg_i.get(i, 0) + 1
    max_deg = max([0, *deg_a.values(), *deg_i.values()])
    out.append(CheckResult("delta_is_matching", max_deg, 1, max_deg <= 1))
    rhs2 = 2 * (len(c.A_T) + len(c.I_S)) + nd
    out.append(CheckResult("flow_edges_by_cut", nf, rhs2, nf == rhs2))
    out.append(CheckResult("surgery_keeps_cut_value", c.value_after, c.value_before,
                           c.value_after <= c.value_before))
    cut_rhs = 2 * br + 4 * bb + 3 * b + r
    out.append(CheckResult("cut_edges_bound_x3", 3 * nd, cut_rhs, 3 * nd <= cut_rhs))

    cyc_lhs = cyc_rhs = 0
    cyc_ok = comp_ok = True
    for comp in p.components:
        ce = set(comp.edges())
        dc = len(ce & delta)
        ads = {v for s, v in comp.nodes if s == "a"}
        cls = [p.ad_class[a] for a in ads]
        rhs = 2 * cls.count("BR") + 4 * cls.count("BB") + 3 * cls.count("B") + cls.count("R")
        comp_ok &= 3 * dc <= rhs
        if comp.kind == "cycle":
            cyc_lhs += dc
            cyc_rhs += comp.length // 3
            cyc_ok &= dc <= comp.length // 3
    out.append(CheckResult("cut_edges_bound_per_component", int(comp_ok), 1, comp_ok))
    out.append(CheckResult("cycle_delta_at_most_third", cyc_lhs, cyc_rhs, cyc_ok))

    bad = sum(1 for i in range(len(p.blue)) if p.red[i] is not None and p.blue[i] is None)
    out.append(CheckResult("coloring_red_needs_blue", bad, 0, bad == 0))
    return out


def scenario_upper_bound(c: BoostedCut, inst: Instance, sc: Scenario) -> int:
    """|draws of I_S types| + |A_T| + |ads of Delta whose partner type was drawn|."""
    counts = sc.counts(inst.num_types)
    drawn_s = sum(counts[i] for i in c.I_S)
    active = sum(1 for a, i in c.delta if counts[i] > 0)
    return drawn_s + len(c.A_T) + active


def sm_scenario_upper_bound(smcut: CutPartition, inst: Instance, sc: Scenario) -> int:
    """Value of the SM cut carried over to the scenario's realization network.

    On SM networks no instance edge crosses from A_S to I_T, so this is
    ``|draws of I_S types| + sum of c_a over A_T``; crossing edges, if any,
    are charged one unit per matching draw so the bound stays a valid cut.
    """
    k = inst.num_ads
    counts = sc.counts(inst.num_types)
    S = smcut.source_side
    in_s_ad = [(1 + a) in S for a in range(k)]
    in_s_type = [(1 + k + i) in S for i in range(inst.num_types)]
    bound = sum(counts[i] for i in range(inst.num_types) if in_s_type[i])
    bound += sum(inst.capacities[a] for a in range(k) if not in_s_ad[a])
    bound += sum(counts[i] for a, i in inst.edges if in_s_ad[a] and not in_s_type[i])
    return bound


def sm_crossing_edges(smcut: CutPartition, inst: Instance) -> list[tuple[int, int]]:
    k = inst.num_ads
    S = smcut.source_side
    return [(a, i) for a, i in inst.edges if (1 + a) in S and (1 + k + i) not in S]


# ---------------------------------------------------------------------------
# pipelines


@dataclass(frozen=True)
class BoostedPipeline:
    network: FlowNetwork
    flow: IntegralFlow
    plan: ColoredPlan
    cut: BoostedCut

    def checks(self) -> list[CheckResult]:
        return verify_structure(self.cut, self.plan, self.flow)


def boosted_pipeline(inst: Instance) -> BoostedPipeline:
    net = build_boosted_network(inst)
    f = max_flow(net)
    plan = decompose_and_color(inst, f)
    classify_counts(plan)
    cut = surgery_cut(net, f, inst)
    return BoostedPipeline(net, f, plan, cut)


@dataclass(frozen=True)
class SMPipeline:
    network: FlowNetwork
    flow: IntegralFlow
    cut: CutPartition


def sm_pipeline(inst: Instance) -> SMPipeline:
    net = build_sm_network(inst, allow_fractional=True)
    f = max_flow(net)
    return SMPipeline(net, f, reachability_cut(net, f))
