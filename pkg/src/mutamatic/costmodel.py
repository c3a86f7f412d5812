"""Expected-cost formulas for the four strategies, plus the decoupling factor.

The estimators are pure arithmetic over :class:`CostModelInputs`. The
``from_measurements`` helpers derive those inputs from strategy runs so the
formulas can be checked against what a run actually cost.

Timed-out mutants are outside the formulas: their cost is set by the step
budget rather than by how much of the suite reaches them. When validating, their
execution time is removed from the measured totals and reported on its own.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional

from .orchestrator import Outcome, Prepared, ReachabilityMatrix, Strategy, VerdictStore


class NoReachableMutants(ValueError):
    pass


@dataclass(frozen=True)
class CostModelInputs:
    t_mutant_generation: float = 0.0
    t_compilation: float = 0.0
    t_test_suite_execution: float = 0.0
    t_schemata_compilation: float = 0.0
    t_schemata_test_suite_execution: float = 0.0
    t_split_stream_compilation: float = 0.0
    t_split_stream_test_suite_execution: float = 0.0
    reachable_mutants: int = 0
    unreachable_mutants: int = 0
    invalid_mutants: int = 0
    decoupling_factor: float = 1.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite non-negative number, got {value}")
        if not 0 < self.decoupling_factor <= 1:
            raise ValueError(f"decoupling_factor must lie in (0, 1], got {self.decoupling_factor}")

    def to_json(self) -> dict:
        return asdict(self)


def estimate_unoptimised(i: CostModelInputs) -> float:
    mutants = i.reachable_mutants + i.unreachable_mutants
    return (
        i.t_mutant_generation
        + i.t_compilation * (mutants + i.invalid_mutants)
        + i.t_test_suite_execution * mutants
    )


def estimate_schemata(i: CostModelInputs) -> float:
    return (
        i.t_mutant_generation
        + i.t_schemata_compilation
        + i.t_schemata_test_suite_execution * (i.unreachable_mutants + i.reachable_mutants)
    )


def estimate_reachable_schemata(i: CostModelInputs) -> float:
    detection = i.t_schemata_compilation + i.t_schemata_test_suite_execution
    return (
        i.t_mutant_generation
        + detection
        + i.t_schemata_compilation
        + i.t_schemata_test_suite_execution * i.reachable_mutants * i.decoupling_factor
    )


def estimate_split_stream(i: CostModelInputs) -> float:
    return (
        i.t_mutant_generation
        + i.t_split_stream_compilation
        + i.t_split_stream_test_suite_execution * i.reachable_mutants * i.decoupling_factor / 2
    )


ESTIMATORS = {
    Strategy.UNOPTIMISED: estimate_unoptimised,
    Strategy.SCHEMATA: estimate_schemata,
    Strategy.REACHABLE_SCHEMATA: estimate_reachable_schemata,
    Strategy.SPLIT_STREAM: estimate_split_stream,
}


def estimate_all(i: CostModelInputs) -> dict[Strategy, float]:
    return {s: f(i) for s, f in ESTIMATORS.items()}


def decoupling_factor(
    matrix: ReachabilityMatrix, valid_count: Optional[int] = None, among: Optional[Iterable[int]] = None
) -> float:
    """Mean fraction of the suite that reaches a reachable mutant.

    ``among`` restricts the mean to a subset of mutant ids; ``valid_count``,
    when given, is checked against the number of reachable mutants.
    """
    reachable = matrix.reachable()
    if among is not None:
        reachable = reachable & frozenset(among)
    if valid_count is not None and len(matrix.reachable()) > valid_count:
        raise ValueError(f"{len(matrix.reachable())} reachable mutants but only {valid_count} valid")
    if not reachable or not matrix.tests:
        raise NoReachableMutants("decoupling factor is undefined without reachable mutants")
    tests_per_mutant = Counter(m for ids in matrix.reached.values() for m in ids)
    return sum(tests_per_mutant[m] for m in reachable) / (len(reachable) * len(matrix.tests))


# -- validation against measured runs -------------------------------------------


@dataclass
class Measured:
    """One strategy's measured cost inside and outside the formulas' scope."""

    total: float
    timed_out: float

    @property
    def modelled(self) -> float:
        return self.total - self.timed_out


@dataclass
class CostModelCheck:
    project: str
    inputs: CostModelInputs
    predicted: dict[Strategy, float]
    measured: dict[Strategy, Measured]
    excluded_timed_out: int = 0

    def ratio(self, strategy: Strategy) -> float:
        m = self.measured[strategy].modelled
        return self.predicted[strategy] / m if m > 0 else math.inf

    def to_json(self) -> dict:
        return {
            "project": self.project,
            "inputs": self.inputs.to_json(),
            "excluded_timed_out": self.excluded_timed_out,
            "strategies": {
                s.value: {
                    "predicted_seconds": self.predicted[s],
                    "measured_seconds": self.measured[s].modelled,
                    "measured_seconds_with_timeouts": self.measured[s].total,
                    "relative_error": self.ratio(s) - 1 if self.measured[s].modelled > 0 else None,
                }
                for s in self.predicted
            },
        }


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def from_measurements(prep: Prepared, stores: Mapping[Strategy, VerdictStore]) -> CostModelCheck:
    """Unit means from one run of each strategy, and predictions for each.

    The representative suite time is the mean per-mutant execution time, so
    early stop is folded into the unit rather than modelled. Split-stream
    forks have no per-mutant suite of their own; they reuse the schemata mean
    since both builds run the same mutant arms.
    """
    missing = set(ESTIMATORS) - set(stores)
    if missing:
        raise KeyError(f"missing strategy runs: {sorted(s.value for s in missing)}")
    unopt, sch = stores[Strategy.UNOPTIMISED], stores[Strategy.SCHEMATA]
    reach_store, split = stores[Strategy.REACHABLE_SCHEMATA], stores[Strategy.SPLIT_STREAM]
    matrix = reach_store.matrix or prep.reference

    timed_out = {m for m, v in reach_store.verdicts.items() if v.outcome is Outcome.TIMED_OUT}
    valid = [m.id for m in prep.valid if m.id not in timed_out]
    reachable = matrix.reachable() - timed_out
    unreachable = [m for m in valid if m not in reachable]

    def exec_mean(store: VerdictStore) -> float:
        return _mean([store.mutant_seconds.get(m, 0.0) for m in valid])

    compile_u = unopt.phases["compile"]
    inputs = CostModelInputs(
        t_mutant_generation=prep.generate.seconds,
        t_compilation=compile_u.seconds / compile_u.compiles if compile_u.compiles else 0.0,
        t_test_suite_execution=exec_mean(unopt),
        t_schemata_compilation=sch.phases["compile"].seconds,
        t_schemata_test_suite_execution=exec_mean(sch),
        t_split_stream_compilation=split.phases["compile"].seconds,
        t_split_stream_test_suite_execution=exec_mean(sch),
        reachable_mutants=len(reachable),
        unreachable_mutants=len(unreachable),
        invalid_mutants=prep.census.invalid_type,
        decoupling_factor=decoupling_factor(matrix, among=reachable) if reachable else 1.0,
    )

    def measured(store: VerdictStore) -> Measured:
        return Measured(store.seconds, sum(store.mutant_seconds.get(m, 0.0) for m in timed_out))

    return CostModelCheck(
        prep.project.name,
        inputs,
        estimate_all(inputs),
        {s: measured(stores[s]) for s in ESTIMATORS},
        len(timed_out),
    )


@dataclass
class CorpusCostCheck:
    """Predictions and measurements summed over several projects."""

    projects: list[CostModelCheck] = field(default_factory=list)

    def predicted(self, strategy: Strategy) -> float:
        return sum(c.predicted[strategy] for c in self.projects)

    def measured(self, strategy: Strategy) -> float:
        return sum(c.measured[strategy].modelled for c in self.projects)

    def relative_error(self, strategy: Strategy) -> float:
        return self.predicted(strategy) / self.measured(strategy) - 1

    def within(self, tolerance: float) -> dict[Strategy, bool]:
        return {s: abs(self.relative_error(s)) <= tolerance for s in ESTIMATORS}

    def to_json(self) -> dict:
        return {
            "aggregate": {
                s.value: {
                    "predicted_seconds": self.predicted(s),
                    "measured_seconds": self.measured(s),
                    "relative_error": self.relative_error(s),
                }
                for s in ESTIMATORS
            },
            "projects": [c.to_json() for c in self.projects],
        }
