"""JSON reports: census, verdicts, phase accounting, overheads, speedups and cost model.

Every wall-clock derived value sits under a ``timing`` key (or inside
``cost_model``), so :func:`strip_timings` leaves only deterministic data.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .costmodel import CorpusCostCheck, CostModelCheck, NoReachableMutants, decoupling_factor
from .orchestrator import EmptyDenominator, Outcome, Prepared, Strategy, VerdictStore, mutation_score

SCHEMA_VERSION = 1
TIMING_KEYS = frozenset({"timing", "cost_model"})


class ReportError(AssertionError):
    pass


def compute_overhead(unopt_exec: float, sch_exec: float) -> float:
    """Percent extra execution time per run relative to the unoptimised build."""
    if unopt_exec <= 0:
        raise EmptyDenominator("unoptimised execution time must be positive")
    return (sch_exec - unopt_exec) / unopt_exec * 100


def compute_speedup(baseline_total: float, optimised_total: float) -> float:
    if optimised_total <= 0:
        raise EmptyDenominator("optimised total must be positive")
    return baseline_total / optimised_total


def run_label(store: VerdictStore) -> str:
    if store.strategy is Strategy.SCHEMATA and store.encoding is not None:
        return f"schemata_{store.encoding.value}"
    return store.strategy.value


@dataclass
class ProjectResult:
    prep: Prepared
    stores: list[VerdictStore] = field(default_factory=list)
    cost: Optional[CostModelCheck] = None

    def by_label(self) -> dict[str, VerdictStore]:
        return {run_label(s): s for s in self.stores}


def _ratio(a: float, b: float) -> Optional[float]:
    try:
        return compute_speedup(a, b)
    except EmptyDenominator:
        return None


def _score(store: VerdictStore, timed_out_as_killed: bool) -> Optional[float]:
    try:
        return mutation_score(store, timed_out_as_killed)
    except EmptyDenominator:
        return None


def store_json(store: VerdictStore, prep: Prepared, timed_out_as_killed: bool = False) -> dict:
    by_id = {m.id: m for m in prep.considered}
    mutants = []
    for mid in sorted(store.verdicts):
        m = by_id[mid]
        record = store.verdicts[mid].to_json()
        record.update(kind=m.operator_kind.value, original=m.original, replacement=m.replacement)
        record.update(file=m.anchor.file_id, begin=m.anchor.begin, end=m.anchor.end)
        record["timing"] = {"seconds": store.mutant_seconds.get(mid, 0.0)}
        mutants.append(record)
    return {
        "strategy": store.strategy.value,
        "encoding": store.encoding.value if store.encoding else None,
        "counts": store.counts(),
        "mutation_score": _score(store, timed_out_as_killed),
        "compiles": store.compiles,
        "executions": store.executions,
        "steps": store.steps,
        "phases": {name: phase.to_json() for name, phase in store.phases.items()},
        "timing": {"seconds": store.seconds},
        "diagnostics": list(store.diagnostics),
        "mutants": mutants,
    }


def _equivalence(stores: dict[str, VerdictStore]) -> dict:
    labels = sorted(stores)
    ref = stores[labels[0]].outcome_map()
    mismatches = set()
    for label in labels[1:]:
        other = stores[label].outcome_map()
        mismatches |= {m for m in ref.keys() | other.keys() if ref.get(m) != other.get(m)}
    return {"compared": labels, "identical": not mismatches, "mismatches": sorted(mismatches)}


def _per_execution(store: VerdictStore) -> Optional[float]:
    ex = store.phases["execute"]
    return ex.seconds / ex.executions if ex.executions else None


def project_json(result: ProjectResult, timed_out_as_killed: bool = False, dump_io: bool = False) -> dict:
    prep = result.prep
    stores = result.by_label()
    lopc = prep.project.lopc()
    try:
        df = decoupling_factor(prep.reference, prep.census.valid)
    except NoReachableMutants:
        df = None
    out = {
        "name": prep.project.name,
        "lopc": lopc,
        "tests": len(prep.tests),
        "census": prep.census.to_json(),
        "mutants_per_lopc": prep.census.considered / lopc if lopc else None,
        "decoupling_factor": df,
        "reachability": prep.reference.to_json(),
        "strategies": {label: store_json(s, prep, timed_out_as_killed) for label, s in sorted(stores.items())},
    }
    if dump_io:
        out["io"] = {t.test_id: {"input": list(t.fixture), "output": list(prep.baseline_outputs[t.test_id])}
                     for t in prep.tests}
    if len(stores) > 1:
        out["equivalence"] = _equivalence(stores)
    base = stores.get(Strategy.UNOPTIMISED.value)
    if base is not None:
        speedup, overhead = {}, {}
        base_run = _per_execution(base)
        for label, s in sorted(stores.items()):
            if s is base:
                continue
            speedup[label] = {
                "compiles": _ratio(base.compiles, s.compiles),
                "executions": _ratio(base.executions, s.executions),
                "steps": _ratio(base.steps, s.steps),
                "timing": {"seconds": _ratio(base.seconds, s.seconds)},
            }
            run = _per_execution(s)
            if base_run and run is not None:
                overhead[label] = compute_overhead(base_run, run)
        out["speedup"] = speedup
        out["overhead"] = {"timing": {"percent_per_test_execution": overhead}}
    if result.cost is not None:
        out["cost_model"] = result.cost.to_json()
    return out


def build_report(config_json: dict, results: list[ProjectResult], timed_out_as_killed=False, dump_io=False) -> dict:
    projects = [project_json(r, timed_out_as_killed, dump_io) for r in results]
    census: Counter = Counter()
    for p in projects:
        census.update(p["census"])
    per_label: dict[str, Counter] = {}
    for p in projects:
        for label, s in p["strategies"].items():
            acc = per_label.setdefault(label, Counter())
            acc.update(s["counts"])
            acc.update(compiles=s["compiles"], executions=s["executions"], steps=s["steps"])
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": config_json,
        "projects": projects,
        "totals": {
            "census": dict(sorted(census.items())),
            "strategies": {label: dict(sorted(c.items())) for label, c in sorted(per_label.items())},
        },
    }
    costs = [r.cost for r in results if r.cost is not None]
    if costs:
        report["cost_model"] = CorpusCostCheck(costs).to_json()
    audit_report(report)
    return report


def audit_report(report: dict):
    """Re-derive the accounting identities from the serialized records alone."""
    for p in report["projects"]:
        c = p["census"]
        if c["considered"] != c["valid"] + c["invalid_type"]:
            raise ReportError(f"{p['name']}: considered != valid + invalid")
        if c["generated"] != c["considered"] + c["excluded_const"]:
            raise ReportError(f"{p['name']}: generated != considered + excluded")
        for label, s in p["strategies"].items():
            n = s["counts"]
            if n["killed"] + n["survived"] + n["timed_out"] + n["unreachable"] != c["valid"]:
                raise ReportError(f"{p['name']}/{label}: verdicts do not sum to valid")
            if n["invalid"] != c["invalid_type"]:
                raise ReportError(f"{p['name']}/{label}: invalid verdicts != census")
            recount = Counter(m["outcome"] for m in s["mutants"])
            if any(recount.get(o.value, 0) != n[o.value] for o in Outcome):
                raise ReportError(f"{p['name']}/{label}: counts disagree with per-mutant records")
            phases = s["phases"]
            counted = [ph for ph in phases.values() if not ph["auxiliary"]]
            if s["compiles"] != sum(ph["units"]["compiles"] for ph in counted):
                raise ReportError(f"{p['name']}/{label}: compile total disagrees with phases")
            if s["executions"] != phases["execute"]["units"]["executions"]:
                raise ReportError(f"{p['name']}/{label}: execution total disagrees with phases")


def strip_timings(obj):
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def loads(text: str) -> dict:
    return json.loads(text)


def _fmt(x, spec=".3f") -> str:
    return "-" if x is None else format(x, spec)


def summary(report: dict) -> str:
    lines = []
    for p in report["projects"]:
        c = p["census"]
        lines.append(
            f"{p['name']}: {c['considered']} mutants ({c['valid']} valid, {c['invalid_type']} invalid, "
            f"{c['excluded_const']} const-excluded), {p['tests']} tests, "
            f"mutants/LOPC {_fmt(p['mutants_per_lopc'])}, decoupling {_fmt(p['decoupling_factor'])}"
        )
        for label, s in p["strategies"].items():
            n = s["counts"]
            lines.append(
                f"  {label:20} killed {n['killed']:4} survived {n['survived']:4} timed_out {n['timed_out']:4} "
                f"unreachable {n['unreachable']:4} invalid {n['invalid']:4} | compiles {s['compiles']:4} "
                f"executions {s['executions']:6} steps {s['steps']:9} | {s['timing']['seconds']:.2f}s"
            )
        eq = p.get("equivalence")
        if eq is not None:
            lines.append("  verdicts identical" if eq["identical"] else f"  VERDICT MISMATCH on {eq['mismatches']}")
    cost = report.get("cost_model")
    if cost:
        lines.append("cost model (timed-out mutants excluded):")
        for label, row in cost["aggregate"].items():
            lines.append(
                f"  {label:20} predicted {row['predicted_seconds']:.3f}s measured {row['measured_seconds']:.3f}s "
                f"error {row['relative_error'] * 100:+.1f}%"
            )
    return "\n".join(lines) + "\n"
