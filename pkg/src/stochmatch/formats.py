"""Instance and results file formats.

Instances are a single JSON document::

    {"ads": [{"id": ..., "capacity": 1, "demand_d": 2}, ...],
     "impressions": [{"id": ..., "rate_num": 1, "rate_den": 1, "user": 0}, ...],
     "edges": [[ad_id, impression_id], ...],
     "n": 12, "freq_cap": 1}

Trial results are CSV (``trial,seed,alg,opt,cut_bound,ratio``) with the
aggregate in a sibling JSON file.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from .model import Instance, InvalidInstance
from .sim import AggregateStats, TrialResult, aggregate

RESULT_FIELDS = ("trial", "seed", "alg", "opt", "cut_bound", "ratio")


def _id_of(names: Optional[tuple[str, ...]], idx: int):
    return names[idx] if names else idx


def instance_to_dict(inst: Instance) -> dict:
    ads = []
    for a in range(inst.num_ads):
        rec: dict[str, Any] = {"id": _id_of(inst.ad_names, a), "capacity": inst.capacities[a]}
        if inst.demands is not None:
            rec["demand_d"] = inst.demands[a]
        ads.append(rec)
    imps = []
    for i, r in enumerate(inst.rates):
        rec = {"id": _id_of(inst.type_names, i), "rate_num": r.numerator, "rate_den": r.denominator}
        if inst.users is not None:
            rec["user"] = inst.users[i]
        imps.append(rec)
    edges = [[_id_of(inst.ad_names, a), _id_of(inst.type_names, i)] for a, i in inst.edges]
    doc: dict[str, Any] = {"ads": ads, "impressions": imps, "edges": edges, "n": inst.n}
    if inst.freq_cap is not None:
        doc["freq_cap"] = inst.freq_cap
    return doc


def _index(records: list, what: str) -> tuple[dict, Optional[tuple[str, ...]]]:
    ids = [r["id"] for r in records]
    if len(set(map(json.dumps, ids))) != len(ids):
        raise InvalidInstance(f"duplicate {what} id")
    lookup = {json.dumps(x): j for j, x in enumerate(ids)}
    plain = all(isinstance(x, int) and x == j for j, x in enumerate(ids))
    return lookup, None if plain else tuple(str(x) for x in ids)


def instance_from_dict(doc: dict) -> Instance:
    try:
        ads, imps = doc["ads"], doc["impressions"]
        ad_ix, ad_names = _index(ads, "ad")
        imp_ix, type_names = _index(imps, "impression")
        rates = tuple(Fraction(int(r["rate_num"]), int(r.get("rate_den", 1))) for r in imps)
        edges = []
        for a, i in doc["edges"]:
            ka, ki = json.dumps(a), json.dumps(i)
            if ka not in ad_ix or ki not in imp_ix:
                raise InvalidInstance(f"edge ({a}, {i}) refers to an unknown endpoint")
            edges.append((ad_ix[ka], imp_ix[ki]))
        caps = tuple(int(r.get("capacity", 1)) for r in ads)
        has_demand = [("demand_d" in r) for r in ads]
        has_user = [("user" in r) for r in imps]
        if any(has_demand) and not all(has_demand):
            raise InvalidInstance("demand_d must be given for every ad or none")
        if any(has_user) and not all(has_user):
            raise InvalidInstance("user must be given for every impression or none")
        return Instance(
            num_ads=len(ads),
            rates=rates,
            edges=tuple(edges),
            n=int(doc["n"]),
            capacities=caps,
            users=tuple(int(r["user"]) for r in imps) if imps and all(has_user) else None,
            demands=tuple(int(r["demand_d"]) for r in ads) if ads and all(has_demand) else None,
            freq_cap=int(doc["freq_cap"]) if doc.get("freq_cap") is not None else None,
            ad_names=ad_names,
            type_names=type_names,
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, InvalidInstance):
            raise
        raise InvalidInstance(f"malformed instance document: {exc}") from exc


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1) + "\n"


def loads_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInstance(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInstance("instance document must be a JSON object")
    return instance_from_dict(doc)


def read_instance(path) -> Instance:
    return loads_instance(Path(path).read_text(encoding="utf-8"))


def write_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8")


# ---------------------------------------------------------------------------
# results


def dumps_results_csv(records: Iterable[TrialResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    for r in records:
        w.writerow([r.trial, r.seed, r.alg, r.opt, r.cut_bound, f"{float(r.ratio):.12f}"])
    return buf.getvalue()


def loads_results_csv(text: str) -> list[TrialResult]:
    """Parse results; ratios are recomputed exactly from alg and opt."""
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        out.append(TrialResult(trial=int(row["trial"]), seed=int(row["seed"]), alg=int(row["alg"]),
                               opt=int(row["opt"]), cut_bound=int(row["cut_bound"])))
    return out


def stats_to_dict(stats: AggregateStats) -> dict:
    out = {}
    for k, v in stats.__dict__.items():
        if isinstance(v, Fraction):
            out[k] = {"value": float(v), "num": v.numerator, "den": v.denominator}
        else:
            out[k] = v
    return out


def results_document(records: Sequence[TrialResult], meta: dict) -> dict:
    return {
        "meta": meta,
        "aggregate": stats_to_dict(aggregate(records)),
        "trials": [
            {"trial": r.trial, "seed": r.seed, "alg": r.alg, "opt": r.opt,
             "cut_bound": r.cut_bound, "ratio": float(r.ratio)}
            for r in records
        ],
    }


def loads_results_json(text: str) -> list[TrialResult]:
    doc = json.loads(text)
    return [TrialResult(trial=int(t["trial"]), seed=int(t["seed"]), alg=int(t["alg"]),
                        opt=int(t["opt"]), cut_bound=int(t["cut_bound"])) for t in doc["trials"]]


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"
