"""Trial loop: sample a scenario, run a policy, compare with the offline
optimum and a cut-based upper bound, and aggregate ratio statistics."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .flow import (
    build_freqcap_network,
    cut_value,
    max_flow,
    reachability_cut,
)
from .generators import gen_six_cycle_copies, rename_scenario, unit_rate_reduction
from .model import (
    Instance,
    Scenario,
    assignment_violations,
    check_instance,
    check_scenario,
    make_rng,
    mix_seed,
    sample_scenario_rng,
)
from .plan import boosted_pipeline, scenario_upper_bound, sm_pipeline, sm_scenario_upper_bound
from .policies import (
    PolicyConfig,
    run_freqcap_sm,
    run_greedy,
    run_suggested_matching,
    run_tsm,
    suggestion_table,
)


# ---------------------------------------------------------------------------
# offline optimum


class OfflineOpt:
    """Maximum matching of realization graphs of one instance.

    Rows are draws, columns are ad slots (ad a repeated c_a times); the
    type x slot biadjacency is built once and row-sliced per scenario.
    """

    def __init__(self, inst: Instance):
        caps = np.asarray(inst.capacities, dtype=np.int64)
        first_slot = np.concatenate([[0], np.cumsum(caps)])
        e = np.asarray(inst.edges, dtype=np.int64).reshape(-1, 2)
        reps = caps[e[:, 0]]
        rows = np.repeat(e[:, 1], reps)
        # offset of each repeated entry within its edge's block of slots
        offs = np.arange(len(rows)) - np.repeat(np.cumsum(reps) - reps, reps)
        cols = np.repeat(first_slot[e[:, 0]], reps) + offs
        data = np.ones(len(rows), dtype=np.int8)
        self.by_type = csr_matrix((data, (rows, cols)),
                                  shape=(inst.num_types, int(first_slot[-1])))
        self.inst = inst

    def __call__(self, draws: Sequence[int]) -> int:
        if len(draws) == 0 or self.by_type.shape[1] == 0:
            return 0
        g = self.by_type[np.asarray(draws, dtype=np.int64)]
        if g.nnz == 0:
            return 0
        match = maximum_bipartite_matching(g, perm_type="column")
        return int(np.count_nonzero(match >= 0))


def offline_opt(inst: Instance, sc: Scenario) -> int:
    """Size of a maximum matching between ads and the drawn impressions."""
    check_scenario(inst, sc)
    return OfflineOpt(inst)(sc.draws)


def offline_opt_freqcap(inst: Instance, sc: Scenario) -> int:
    """Offline optimum that also honors per-user caps and ad demands."""
    counts = sc.counts(inst.num_types)
    return max_flow(build_freqcap_network(inst, counts=counts)).value


# ---------------------------------------------------------------------------
# trials


@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    alg: int
    opt: int
    cut_bound: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.alg, self.opt) if self.opt else Fraction(1)


@dataclass(frozen=True)
class AggregateStats:
    trials: int
    mean_ratio: Optional[Fraction] = None
    ratio_of_means: Optional[Fraction] = None
    q01: Optional[Fraction] = None
    q05: Optional[Fraction] = None
    q50: Optional[Fraction] = None
    min_ratio: Optional[Fraction] = None
    max_ratio: Optional[Fraction] = None
    stderr: Optional[float] = None
    mean_alg: Optional[Fraction] = None
    mean_opt: Optional[Fraction] = None
    mean_cut_bound: Optional[Fraction] = None

    def as_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = float(v) if isinstance(v, Fraction) else v
        return out


def _quantile(sorted_vals: list, q: Fraction):
    # nearest rank: smallest value with at least q of the mass at or below it
    idx = max(math.ceil(q * len(sorted_vals)) - 1, 0)
    return sorted_vals[idx]


def aggregate(records: Sequence[TrialResult]) -> AggregateStats:
    T = len(records)
    if T == 0:
        return AggregateStats(trials=0)
    ratios = sorted(r.ratio for r in records)
    mean = sum(ratios, Fraction(0)) / T
    sum_alg = sum(r.alg for r in records)
    sum_opt = sum(r.opt for r in records)
    if T > 1:
        var = sum(((x - mean) ** 2 for x in ratios), Fraction(0)) / (T - 1)
        stderr = math.sqrt(var / T)
    else:
        stderr = 0.0
    return AggregateStats(
        trials=T,
        mean_ratio=mean,
        ratio_of_means=Fraction(sum_alg, sum_opt) if sum_opt else Fraction(1),
        q01=_quantile(ratios, Fraction(1, 100)),
        q05=_quantile(ratios, Fraction(5, 100)),
        q50=_quantile(ratios, Fraction(1, 2)),
        min_ratio=ratios[0],
        max_ratio=ratios[-1],
        stderr=stderr,
        mean_alg=Fraction(sum_alg, T),
        mean_opt=Fraction(sum_opt, T),
        mean_cut_bound=Fraction(sum(r.cut_bound for r in records), T),
    )


@dataclass
class TrialContext:
    """Everything a trial needs that does not depend on the scenario."""

    inst: Instance
    cfg: PolicyConfig
    opt: OfflineOpt = field(repr=False)
    sm: object = None
    boosted: object = None
    reduced: Optional[Instance] = None
    reduction: object = None
    freq_flow: object = None
    freq_cut: object = None
    table: Optional[list] = field(default=None, repr=False)
    check_assignments: bool = True


def prepare(inst: Instance, cfg: PolicyConfig) -> TrialContext:
    check_instance(inst)
    ctx = TrialContext(inst=inst, cfg=cfg, opt=OfflineOpt(inst))
    if cfg.kind in ("greedy", "suggested_matching"):
        ctx.sm = sm_pipeline(inst)
        ctx.table = suggestion_table(inst, ctx.sm.flow)
    elif cfg.kind == "tsm":
        if inst.unit_rates:
            ctx.reduced = inst
        else:
            ctx.reduced, ctx.reduction = unit_rate_reduction(inst)
        ctx.boosted = boosted_pipeline(ctx.reduced)
    elif cfg.kind == "freqcap_sm":
        net = build_freqcap_network(inst)
        ctx.freq_flow = max_flow(net)
        ctx.freq_cut = reachability_cut(net, ctx.freq_flow)
        ctx.table = suggestion_table(inst, ctx.freq_flow)
    return ctx


def run_one(ctx: TrialContext, trial: int, master_seed: int) -> TrialResult:
    inst, cfg = ctx.inst, ctx.cfg
    seed = mix_seed(master_seed, trial)
    rng = make_rng(seed)
    sc = sample_scenario_rng(inst, rng)
    policy_seed = int(rng.integers(0, 2**63 - 1))
    if cfg.kind == "greedy":
        asg = run_greedy(inst, sc)
    elif cfg.kind == "suggested_matching":
        asg = run_suggested_matching(inst, ctx.sm.flow, sc, policy_seed,
                                     greedy_rescue=cfg.sm_greedy_rescue, table=ctx.table)
    elif cfg.kind == "tsm":
        red_sc = sc if ctx.reduction is None else rename_scenario(sc, ctx.reduction, rng)
        asg = run_tsm(ctx.reduced, ctx.boosted.plan, red_sc, cfg)
    else:
        asg = run_freqcap_sm(inst, ctx.freq_flow, sc, policy_seed, table=ctx.table)
    if ctx.check_assignments:
        target = ctx.reduced if cfg.kind == "tsm" else inst
        target_sc = red_sc if cfg.kind == "tsm" else sc
        problems = assignment_violations(target, target_sc, asg)
        if problems:
            raise AssertionError("policy produced an invalid assignment: " + "; ".join(problems))
    alg = len(asg)
    if cfg.kind == "freqcap_sm":
        counts = sc.counts(inst.num_types)
        net = ctx.freq_flow.network
        opt = offline_opt_freqcap(inst, sc)
        realized = list(net.caps)
        for i in range(inst.num_types):
            realized[net.num_arcs - inst.num_types + i] = counts[i]
        bound = cut_value(net, ctx.freq_cut.source_side, caps=realized)
    else:
        opt = ctx.opt(sc.draws)
        if cfg.kind == "tsm":
            bound = scenario_upper_bound(ctx.boosted.cut, ctx.reduced, red_sc)
        else:
            bound = sm_scenario_upper_bound(ctx.sm.cut, inst, sc)
    return TrialResult(trial=trial, seed=seed, alg=alg, opt=opt, cut_bound=bound)


_WORKER_CTX: Optional[TrialContext] = None


def _init_worker(ctx: TrialContext) -> None:
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _run_chunk(args) -> list[TrialResult]:
    trials, master_seed = args
    return [run_one(_WORKER_CTX, t, master_seed) for t in trials]


@dataclass(frozen=True)
class TrialSet:
    records: tuple[TrialResult, ...]
    stats: AggregateStats


def run_trials(inst: Instance, cfg: PolicyConfig, trials: int, master_seed: int,
               threads: int = 1, ctx: Optional[TrialContext] = None) -> TrialSet:
    """Run ``trials`` independent trials; trial t uses seed mix(master_seed, t).

    Output does not depend on ``threads``.
    """
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    if trials == 0:
        return TrialSet((), aggregate(()))
    ctx = prepare(inst, cfg) if ctx is None else ctx
    if threads <= 1 or trials < 2:
        records = [run_one(ctx, t, master_seed) for t in range(trials)]
    else:
        chunks = [list(range(t, trials, threads)) for t in range(threads)]
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                                 initargs=(ctx,)) as pool:
            parts = pool.map(_run_chunk, [(c, master_seed) for c in chunks])
            records = sorted((r for part in parts for r in part), key=lambda r: r.trial)
    return TrialSet(tuple(records), aggregate(records))


# ---------------------------------------------------------------------------
# hardness-family statistics


@dataclass(frozen=True)
class HardnessStats:
    kcopies: int
    trials: int
    gamma1: float
    gamma2: float
    gamma3: float
    gamma_plus: float
    three_draw_cycles: int
    xxx_freq: float
    xyy_freq: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def hardness_family_stats(kcopies: int, trials: int, seed: int) -> HardnessStats:
    """Fractions of 6-cycles receiving 1, 2, 3, >3 draws, and how often a
    3-draw cycle sees (t, t, t) or (t, s, s) with s the type after t in the
    cycle order x -> y -> z -> x.
    """
    if kcopies < 1:
        raise ValueError("kcopies must be >= 1")
    inst = gen_six_cycle_copies(kcopies)
    g = np.zeros(4)
    n3 = xxx = xyy = 0
    for t in range(trials):
        rng = make_rng(mix_seed(seed, t))
        draws = inst.sampler.draw(rng, inst.n)
        cyc = draws // 3
        cnt = np.bincount(cyc, minlength=kcopies)
        g += [np.mean(cnt == 1), np.mean(cnt == 2), np.mean(cnt == 3), np.mean(cnt > 3)]
        order = np.argsort(cyc, kind="stable")
        starts = np.concatenate([[0], np.cumsum(cnt)])
        three = np.nonzero(cnt == 3)[0]
        if len(three):
            pos = order[starts[three][:, None] + np.arange(3)]
            seq = draws[pos] % 3
            succ = (seq[:, 0] + 1) % 3
            n3 += len(three)
            xxx += int(np.sum((seq[:, 1] == seq[:, 0]) & (seq[:, 2] == seq[:, 0])))
            xyy += int(np.sum((seq[:, 1] == succ) & (seq[:, 2] == succ)))
    g = g / max(trials, 1)
    return HardnessStats(kcopies=kcopies, trials=trials, gamma1=float(g[0]), gamma2=float(g[1]),
                         gamma3=float(g[2]), gamma_plus=float(g[3]), three_draw_cycles=n3,
                         xxx_freq=xxx / n3 if n3 else 0.0, xyy_freq=xyy / n3 if n3 else 0.0)
