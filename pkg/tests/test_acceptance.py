"""Acceptance suite: one PASS/FAIL line per criterion.

Run with pytest (lines are echoed in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from oracles import brute_force_matching  # noqa: E402
from stochmatch.concentration import (  # noqa: E402
    blue_red_spec,
    occupancy_sandwich_holds,
    simulate_satisfied,
)
from stochmatch.flow import build_freqcap_network, max_flow  # noqa: E402
from stochmatch.generators import (  # noqa: E402
    gen_complete_bipartite,
    gen_freqcap_family,
    gen_random_bipartite,
    gen_six_cycle_copies,
    gen_tsm_tight_family,
    gen_two_disjoint_matchings,
    rename_scenario,
    unit_rate_reduction,
)
from stochmatch.model import (  # noqa: E402
    assignment_violations,
    make_instance,
    make_rng,
    mix_seed,
    sample_scenario_rng,
)
from stochmatch.plan import (  # noqa: E402
    boosted_pipeline,
    scenario_upper_bound,
    sm_pipeline,
    sm_scenario_upper_bound,
)
from stochmatch.policies import (  # noqa: E402
    PolicyConfig,
    optimal_policy_value,
    run_freqcap_sm,
    sm_pointwise_bound,
    suggestion_table,
)
from stochmatch.sim import OfflineOpt, hardness_family_stats, offline_opt, run_trials  # noqa: E402

E = math.e
RESULTS: list[str] = []


def report(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"CRITERION {num:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def within(x: float, lo: float, hi: float) -> bool:
    return lo <= x <= hi


def _random_instance(seed: int, max_rate: int = 3):
    rng = make_rng(seed)
    k, m = int(rng.integers(1, 9)), int(rng.integers(1, 9))
    return gen_random_bipartite(k, m, float(rng.uniform(0.15, 0.8)), max_rate, seed)


# ---------------------------------------------------------------------------


def test_c01_exact_hardness_value():
    t0 = time.perf_counter()
    v = optimal_policy_value(gen_six_cycle_copies(1))
    dt = time.perf_counter() - t0
    report(1, "opt-policy on the 6-cycle equals 26/27", v == Fraction(26, 27) and dt < 1.0,
           f"got {v}, runtime {dt:.3f}s (target 26/27, < 1s)")


def test_c02_sm_tightness():
    t0 = time.perf_counter()
    res = run_trials(gen_complete_bipartite(2000), PolicyConfig("suggested_matching"), 200, master_seed=2)
    dt = time.perf_counter() - t0
    r = float(res.stats.mean_ratio)
    report(2, "SM on K_2000,2000 mean ALG/OPT in [0.622, 0.642]",
           within(r, 0.622, 0.642) and dt < 60,
           f"mean ratio {r:.4f} (stderr {res.stats.stderr:.4f}), runtime {dt:.1f}s")


def test_c03_tsm_tight_family():
    t0 = time.perf_counter()
    n = 2000
    res = run_trials(gen_tsm_tight_family(n), PolicyConfig("tsm"), 200, master_seed=3)
    dt = time.perf_counter() - t0
    alg = float(res.stats.mean_alg) / n
    opt = float(res.stats.mean_opt) / n
    r = float(res.stats.mean_ratio)
    checks = {
        "ALG/n in [0.638, 0.658]": within(alg, 0.638, 0.658),
        "OPT/n in [0.806, 0.826]": within(opt, 0.806, 0.826),
        "ratio in [0.655, 0.685]": within(r, 0.655, 0.685),
        "runtime < 120s": dt < 120,
    }
    failed = [k for k, ok in checks.items() if not ok]
    report(3, "TSM on the tight family", not failed,
           f"ALG/n {alg:.4f}, OPT/n {opt:.4f}, ratio {r:.4f}, runtime {dt:.1f}s"
           + (f"; failed: {', '.join(failed)}" if failed else ""))


def test_c04_two_disjoint_matchings():
    t0 = time.perf_counter()
    n = 2000
    res = run_trials(gen_two_disjoint_matchings(n), PolicyConfig("tsm"), 200, master_seed=4)
    dt = time.perf_counter() - t0
    alg = float(res.stats.mean_alg) / n
    report(4, "TSM on two disjoint matchings ALG/n in [0.719, 0.739]",
           within(alg, 0.719, 0.739) and dt < 60, f"ALG/n {alg:.4f}, runtime {dt:.1f}s")


def test_c05_structural_identities():
    t0 = time.perf_counter()
    instances = []
    for s in range(1000):
        inst = _random_instance(mix_seed(5, s))
        instances.append(inst if inst.unit_rates else unit_rate_reduction(inst)[0])
    instances += [gen_six_cycle_copies(1), gen_six_cycle_copies(25), gen_tsm_tight_family(400),
                  gen_two_disjoint_matchings(301), gen_complete_bipartite(30), gen_freqcap_family(50)]
    wanted = {"flow_edges_by_ad_class", "flow_edges_by_cut", "delta_is_matching",
              "delta_subset_of_flow", "cut_edges_bound_x3"}
    bad = []
    seen = set()
    for j, inst in enumerate(instances):
        for c in boosted_pipeline(inst).checks():
            seen.add(c.name)
            if not c.passed:
                bad.append((j, c.name, c.lhs, c.rhs))
    dt = time.perf_counter() - t0
    report(5, "flow-edge identities and cut-edge properties hold exactly",
           not bad and wanted <= seen and dt < 120,
           f"{len(instances)} instances, {len(bad)} violations, runtime {dt:.1f}s")


def test_c06_cut_dominance():
    pairs = viol_boost = viol_sm = 0
    for s in range(1000):
        seed = mix_seed(6, s)
        inst = _random_instance(seed)
        reduced, red = unit_rate_reduction(inst)
        boosted = boosted_pipeline(reduced)
        sm = sm_pipeline(inst)
        opt = OfflineOpt(inst)
        for t in range(10):
            rng = make_rng(mix_seed(seed, t))
            sc = sample_scenario_rng(inst, rng)
            rsc = rename_scenario(sc, red, rng)
            v = opt(sc.draws)
            viol_boost += v > scenario_upper_bound(boosted.cut, reduced, rsc)
            viol_sm += v > sm_scenario_upper_bound(sm.cut, inst, sc)
            pairs += 1
    report(6, "offline OPT <= both scenario cut bounds", pairs >= 10_000 and viol_boost == viol_sm == 0,
           f"{pairs} pairs, boosted violations {viol_boost}, SM violations {viol_sm}")


def test_c07_oracle_equivalence():
    count = mismatches = 0
    s = 0
    while count < 500:
        rng = make_rng(mix_seed(7, s))
        s += 1
        k, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        rates = [int(x) for x in rng.integers(0, 3, size=m)]
        if sum(rates) == 0 or sum(rates) > 8:
            continue
        edges = [(a, i) for a in range(k) for i in range(m) if rng.random() < 0.5]
        caps = tuple(int(c) for c in rng.integers(1, 3, size=k))
        inst = make_instance(k, rates, edges, capacities=caps)
        sc = sample_scenario_rng(inst, rng)
        mismatches += offline_opt(inst, sc) != brute_force_matching(k, caps, edges, sc.draws)
        count += 1
    report(7, "offline_opt equals brute force (n <= 8)", mismatches == 0,
           f"{count} instances, {mismatches} mismatches")


def test_c08_hardness_family_statistics():
    h = hardness_family_stats(500, 100, seed=8)
    targets = {"gamma1": 3 / E ** 3, "gamma2": 9 / (2 * E ** 3), "gamma3": 27 / (6 * E ** 3)}
    got = {"gamma1": h.gamma1, "gamma2": h.gamma2, "gamma3": h.gamma3}
    ok = all(abs(got[k] - targets[k]) <= 0.005 for k in targets) and abs(h.xyy_freq - 1 / 9) <= 0.01
    detail = ", ".join(f"{k} {got[k]:.4f} (target {targets[k]:.4f})" for k in targets)
    report(8, "6-cycle family occupancy statistics", ok,
           f"{detail}, xyy {h.xyy_freq:.4f} (target {1 / 9:.4f})")


def test_c09_balls_in_bins_bounds():
    sandwich = bool(occupancy_sandwich_holds(100_000).all())
    n = 2000
    spec = blue_red_spec(n)
    sim = simulate_satisfied(spec, 10_000, seed=9)
    threshold = spec.ell * (1 - 2 / E ** 2) - 0.05 * spec.d * n
    frac_ok = 1 - sim.fraction_below(threshold)
    report(9, "occupancy sandwich for all n <= 1e5; satisfied-sequence bound in >= 99% of trials",
           sandwich and frac_ok >= 0.99,
           f"sandwich {'holds' if sandwich else 'fails'}, satisfied-count bound met in {frac_ok:.4f} "
           f"of 10000 trials (min S {int(sim.values.min())} vs threshold {threshold:.1f})")


def test_c10_reduction_correctness():
    mismatches = 0
    for s in range(200):
        seed = mix_seed(10, s)
        inst = _random_instance(seed, max_rate=4)
        reduced, red = unit_rate_reduction(inst)
        rng = make_rng(seed)
        sc = sample_scenario_rng(inst, rng)
        rsc = rename_scenario(sc, red, rng)
        mismatches += offline_opt(inst, sc) != offline_opt(reduced, rsc)
    report(10, "unit-rate reduction preserves offline OPT", mismatches == 0,
           f"200 paired trials, {mismatches} mismatches")


def test_c11_frequency_capping():
    inst = gen_freqcap_family(500)
    f = max_flow(build_freqcap_network(inst))
    table = suggestion_table(inst, f)
    trials, violations, matched = 50, 0, []
    for t in range(trials):
        rng = make_rng(mix_seed(11, t))
        sc = sample_scenario_rng(inst, rng)
        asg = run_freqcap_sm(inst, f, sc, int(rng.integers(0, 2**63 - 1)), table=table)
        violations += len(assignment_violations(inst, sc, asg))
        matched.append(len(asg))
    mean = float(np.mean(matched))
    target = f.value * (1 - 1 / E)
    ok = violations == 0 and abs(mean - target) <= 0.02 * inst.n
    report(11, "freq-cap SM respects caps and matches F(1-1/e)", ok,
           f"{violations} cap violations over {trials} trials, mean matched {mean:.1f} "
           f"vs F(1-1/e) = {target:.1f} (F = {f.value}, tolerance {0.02 * inst.n:.0f})")


def test_c12_pointwise_inequality():
    rng = make_rng(12)
    xs = np.concatenate([[0.0, 1.0], rng.random(100_000)])
    sides = np.array([sm_pointwise_bound(x) for x in xs])
    gaps = sides[:, 0] - sides[:, 1]
    ends_equal = gaps[0] == 0.0 and gaps[1] == 0.0
    ok = bool(np.all(gaps >= 0)) and ends_equal
    report(12, "1 - e^-x >= (1 - 1/e) x on [0, 1]", ok,
           f"{len(xs)} points, min interior gap {float(np.min(gaps[2:])):.3g}, "
           f"equality at 0 and 1: {ends_equal}")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c") and callable(fn):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
