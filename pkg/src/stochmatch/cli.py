"""Command-line front end.

    stochmatch gen six-cycles --copies 1 --out cyc.json
    stochmatch run cyc.json --policy tsm --trials 200 --seed 7 --out res.csv
    stochmatch verify --random 1000 --seed 1
    stochmatch opt-policy cyc.json
    stochmatch bib --n 2000 --trials 10000 --seed 3

Exit status: 0 success, 1 validation failure, 2 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Optional

from . import concentration as bib
from .formats import (
    dumps_instance,
    dumps_json,
    dumps_results_csv,
    read_instance,
    results_document,
)
from .generators import (
    FAMILIES,
    gen_random_bipartite,
    rename_scenario,
    unit_rate_reduction,
)
from .model import Instance, InvalidInstance, make_rng, mix_seed, sample_scenario_rng, validate_instance
from .plan import PlanError, boosted_pipeline, scenario_upper_bound, sm_pipeline, sm_scenario_upper_bound
from .policies import BudgetExceeded, PolicyConfig, optimal_policy_value
from .sim import OfflineOpt, run_trials

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

POLICY_NAMES = {
    "greedy": "greedy",
    "sm": "suggested_matching",
    "tsm": "tsm",
    "freqcap-sm": "freqcap_sm",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _family_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("family parameters")
    g.add_argument("--copies", type=int, default=1, help="six-cycles: number of copies")
    g.add_argument("--n", type=int, default=None, help="size for complete/tsm-tight/two-matchings")
    g.add_argument("--k", type=int, default=None, help="number of ads (random, freqcap)")
    g.add_argument("--m", type=int, default=None, help="number of impression types (random)")
    g.add_argument("--p", type=float, default=0.3, help="edge probability (random)")
    g.add_argument("--max-rate", type=int, default=1, help="largest integral rate (random)")
    g.add_argument("--demand", type=int, default=2, help="freqcap: per-ad demand")
    g.add_argument("--cap", type=int, default=1, help="freqcap: per-user cap")


def _build_family(name: str, args) -> Instance:
    if name == "random":
        if args.seed is None:
            raise UsageError("--seed is required for random instances")
        if args.k is None or args.m is None:
            raise UsageError("random instances need --k and --m")
        return gen_random_bipartite(args.k, args.m, args.p, args.max_rate, args.seed)
    if name not in FAMILIES:
        raise UsageError(f"unknown family {name!r}")
    if name == "six-cycles":
        return FAMILIES[name](args.copies)
    if name == "freqcap":
        return FAMILIES[name](args.k if args.k is not None else 500, args.demand, args.cap)
    if args.n is None:
        raise UsageError(f"family {name} needs --n")
    return FAMILIES[name](args.n)


def _load(source: str, args) -> Instance:
    """``source`` is a path to an instance file or ``family:<name>``."""
    if source.startswith("family:"):
        return _build_family(source.split(":", 1)[1], args)
    return read_instance(source)


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    inst = _build_family(args.family, args)
    _emit(dumps_instance(inst), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    inst = _load(args.instance, args)
    problems = validate_instance(inst)
    if problems:
        print("invalid instance: " + "; ".join(problems), file=sys.stderr)
        return EXIT_INVALID
    cfg = PolicyConfig(POLICY_NAMES[args.policy], tsm_red_fallback=args.tsm_fallback)
    res = run_trials(inst, cfg, args.trials, args.seed, threads=args.threads)
    meta = {"instance": args.instance, "policy": args.policy, "tsm_fallback": args.tsm_fallback,
            "trials": args.trials, "seed": args.seed, "n": inst.n}
    doc = results_document(res.records, meta)
    if args.format == "json":
        _emit(dumps_json(doc), args.out)
    else:
        _emit(dumps_results_csv(res.records), args.out)
        summary = dumps_json({"meta": meta, "aggregate": doc["aggregate"]})
        if args.out and args.out != "-":
            Path(args.out).with_suffix(".json").write_text(summary, encoding="utf-8")
        else:
            sys.stderr.write(summary)
    return EXIT_OK


def _verify_instance(inst: Instance, scenarios: int, seed: int, label: str,
                     budget: int) -> list[dict]:
    """Structural identities, cut dominance and reduction equivalence."""
    out: list[dict] = []

    def record(name, lhs, rhs, ok):
        out.append({"instance": label, "check": name, "lhs": lhs, "rhs": rhs, "passed": bool(ok)})

    if inst.num_types == 0 or not inst.edges:
        record("vacuous", 0, 0, True)
        return out
    problems = validate_instance(inst)
    if problems:
        record("valid_instance", "; ".join(problems), "", False)
        return out

    boosted = reduced = red = None
    if inst.integral and inst.unit_capacities:
        reduced, red = (inst, None) if inst.unit_rates else unit_rate_reduction(inst)
        try:
            boosted = boosted_pipeline(reduced)
        except PlanError as exc:
            record("plan", str(exc), "", False)
        else:
            for c in boosted.checks():
                record(c.name, c.lhs, c.rhs, c.passed)
    smp = sm_pipeline(inst)
    opt = OfflineOpt(inst)
    red_opt = OfflineOpt(reduced) if red is not None else None
    worst = {"sm": True, "boosted": True, "reduction": True}
    for t in range(scenarios):
        rng = make_rng(mix_seed(seed, t))
        sc = sample_scenario_rng(inst, rng)
        value = opt(sc.draws)
        worst["sm"] &= value <= sm_scenario_upper_bound(smp.cut, inst, sc)
        if boosted is not None:
            rsc = sc if red is None else rename_scenario(sc, red, rng)
            worst["boosted"] &= value <= scenario_upper_bound(boosted.cut, reduced, rsc)
            if red_opt is not None:
                worst["reduction"] &= value == red_opt(rsc.draws)
    record("sm_cut_dominates_opt", scenarios, "", worst["sm"])
    if boosted is not None:
        record("boosted_cut_dominates_opt", scenarios, "", worst["boosted"])
    if red_opt is not None:
        record("reduction_preserves_opt", scenarios, "", worst["reduction"])
    if inst.n <= 6 and inst.num_types <= 6:
        try:
            v = optimal_policy_value(inst, node_budget=budget)
            record("optimal_policy_value", str(v), "", True)
        except BudgetExceeded:
            pass
    return out


def cmd_verify(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required")
    rows: list[dict] = []
    if args.instance:
        inst = _load(args.instance, args)
        rows += _verify_instance(inst, args.scenarios, args.seed, args.instance, args.budget)
    for r in range(args.random):
        s = mix_seed(args.seed, r)
        rng = make_rng(s)
        k, m = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        inst = gen_random_bipartite(k, m, float(rng.uniform(0.15, 0.8)), args.max_rate, s)
        rows += _verify_instance(inst, args.scenarios, s, f"random[{r}]", args.budget)
    failed = [r for r in rows if not r["passed"]]
    if args.format == "json":
        text = dumps_json({"checks": rows, "failed": len(failed)})
    else:
        lines = [f"{'PASS' if r['passed'] else 'FAIL'} {r['instance']} {r['check']} {r['lhs']} {r['rhs']}".rstrip()
                 for r in rows]
        lines.append(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_INVALID if failed else EXIT_OK


def cmd_opt_policy(args) -> int:
    inst = _load(args.instance, args)
    problems = validate_instance(inst)
    if problems:
        print("invalid instance: " + "; ".join(problems), file=sys.stderr)
        return EXIT_INVALID
    try:
        v = optimal_policy_value(inst, node_budget=args.budget)
    except BudgetExceeded as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    if args.format == "json":
        _emit(dumps_json({"value": str(v), "num": v.numerator, "den": v.denominator,
                          "float": float(v)}), args.out)
    else:
        _emit(f"{v}\n", args.out)
    return EXIT_OK


def cmd_bib(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required")
    n, eps = args.n, args.eps
    rows = []
    ok = bib.occupancy_sandwich_holds(args.n_max)
    rows.append({"check": "occupancy_sandwich", "detail": f"n=1..{args.n_max}", "passed": bool(ok.all())})

    f1 = bib.simulate_occupancy(n, n // 2, args.trials, mix_seed(args.seed, 0))
    exact = bib.occupancy_bounds(n, n // 2).expected
    close = abs(f1.mean - exact) <= 4 * max(f1.stderr, 1e-12)
    rows.append({"check": "occupancy_simulated_mean", "detail": f"{f1.mean:.4f} vs {exact:.4f}",
                 "passed": bool(close)})

    spec = bib.blue_red_spec(n)
    f2 = bib.simulate_satisfied(spec, args.trials, mix_seed(args.seed, 1))
    tail = bib.tail_probability_bounds(n, eps).quadratic_exponent
    below_bound = f2.fraction_below(bib.satisfied_lower_bound(spec, eps))
    rows.append({"check": "satisfied_violation_rate", "detail": f"{below_bound:.4f} <= {tail:.4f}",
                 "passed": below_bound <= tail})
    q = 2 ** len(spec.R) / math.e ** spec.c
    simple = spec.ell * (1 - q) - eps * spec.d * n
    below_simple = f2.fraction_below(simple)
    rows.append({"check": "satisfied_simplified_threshold", "detail": f"{1 - below_simple:.4f} >= 0.99",
                 "passed": below_simple <= 0.01})
    failed = [r for r in rows if not r["passed"]]
    if args.format == "json":
        text = dumps_json({"checks": rows, "failed": len(failed)})
    else:
        text = "".join(f"{'PASS' if r['passed'] else 'FAIL'} {r['check']} {r['detail']}\n" for r in rows)
    _emit(text, args.out)
    return EXIT_INVALID if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stochmatch", description="Offline-guided online matching experiments.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="write a named or random instance")
    g.add_argument("family", choices=sorted(FAMILIES) + ["random"])
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=None)
    _family_args(g)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run seeded trials of a policy")
    r.add_argument("instance", help="instance file or family:<name>")
    r.add_argument("--policy", choices=sorted(POLICY_NAMES), default="sm")
    r.add_argument("--tsm-fallback", action="store_true",
                   help="tsm: let a first arrival try red when blue is taken")
    r.add_argument("--trials", type=int, default=100)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--out", default=None)
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    _family_args(r)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check exact identities and cut bounds")
    v.add_argument("instance", nargs="?", default=None)
    v.add_argument("--random", type=int, default=0, help="also check this many random instances")
    v.add_argument("--scenarios", type=int, default=20)
    v.add_argument("--budget", type=int, default=200_000)
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--out", default=None)
    v.add_argument("--format", choices=("csv", "json"), default="csv")
    _family_args(v)
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("opt-policy", help="exact value of the best online policy")
    o.add_argument("instance")
    o.add_argument("--budget", type=int, default=1_000_000)
    o.add_argument("--seed", type=int, default=None)
    o.add_argument("--out", default=None)
    o.add_argument("--format", choices=("csv", "json"), default="csv")
    _family_args(o)
    o.set_defaults(func=cmd_opt_policy)

    b = sub.add_parser("bib", help="balls-in-bins concentration checks")
    b.add_argument("--n", type=int, default=2000)
    b.add_argument("--n-max", type=int, default=100_000)
    b.add_argument("--trials", type=int, default=10_000)
    b.add_argument("--eps", type=float, default=0.05)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--out", default=None)
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.set_defaults(func=cmd_bib)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"stochmatch: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidInstance, ValueError) as exc:
        print(f"stochmatch: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"stochmatch: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
