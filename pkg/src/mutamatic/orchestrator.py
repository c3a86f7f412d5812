"""End-to-end strategies over one corpus project, with verdict and phase accounting."""

from __future__ import annotations

import multiprocessing
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

from .corpus import Project
from .frontend import LexError, ParseError
from .mutgen import ALL_OPERATORS, Census, Mutant, considered as considered_mutants, generate_mutants, mutant_census
from .runtime import TestCase, TestOutcome, TimeoutPolicy, compile_program, compile_typed, run_suite, run_test
from .runtime.harness import run_split_stream as split_stream_test
from .runtime.vm import Status
from .schemata import Encoding, build_schemata, instrument_reachability
from .semantics import Severity, TypedAst, Validity, check


class Strategy(str, Enum):
    UNOPTIMISED = "unoptimised"
    SCHEMATA = "schemata"
    REACHABLE_SCHEMATA = "reachable_schemata"
    SPLIT_STREAM = "split_stream"


class Outcome(str, Enum):
    KILLED = "killed"
    SURVIVED = "survived"
    TIMED_OUT = "timed_out"
    UNREACHABLE = "unreachable"
    INVALID = "invalid"


class PreGateFailed(Exception):
    """The original program does not build, or its suite does not pass."""


class EmptyDenominator(ZeroDivisionError):
    pass


class AccountingError(AssertionError):
    pass


@dataclass(frozen=True)
class Verdict:
    mutant_id: int
    outcome: Outcome
    killing_test: Optional[str] = None
    executed_tests: int = 0

    def to_json(self) -> dict:
        return {
            "id": self.mutant_id,
            "outcome": self.outcome.value,
            "killing_test": self.killing_test,
            "executed_tests": self.executed_tests,
        }


PHASES = ("generate", "detect_reach", "compile", "execute")


@dataclass
class Phase:
    seconds: float = 0.0
    compiles: int = 0
    executions: int = 0
    suite_runs: int = 0
    steps: int = 0
    # auxiliary work is bookkeeping for labels, not part of the strategy's cost
    auxiliary: bool = False

    def to_json(self) -> dict:
        return {
            "units": {
                "compiles": self.compiles,
                "executions": self.executions,
                "suite_runs": self.suite_runs,
                "steps": self.steps,
            },
            "auxiliary": self.auxiliary,
            "timing": {"seconds": self.seconds},
        }


@dataclass
class ReachabilityMatrix:
    tests: list[str]
    reached: dict[str, frozenset[int]]

    def tests_for(self, mutant_id: int) -> list[str]:
        return [t for t in self.tests if mutant_id in self.reached[t]]

    def reachable(self) -> frozenset[int]:
        return self._reachable

    @cached_property
    def _reachable(self) -> frozenset[int]:
        return frozenset().union(*self.reached.values()) if self.reached else frozenset()

    def to_json(self) -> dict:
        return {t: sorted(self.reached[t]) for t in self.tests}


@dataclass
class VerdictStore:
    strategy: Strategy
    project: str
    census: Census
    encoding: Optional[Encoding] = None
    verdicts: dict[int, Verdict] = field(default_factory=dict)
    phases: dict[str, Phase] = field(default_factory=lambda: {p: Phase() for p in PHASES})
    diagnostics: list[str] = field(default_factory=list)
    matrix: Optional[ReachabilityMatrix] = None
    # wall-clock execution seconds spent on each mutant
    mutant_seconds: dict[int, float] = field(default_factory=dict)

    def add(self, verdict: Verdict):
        old = self.verdicts.get(verdict.mutant_id)
        if old is not None and old != verdict:
            raise AccountingError(f"conflicting verdicts for mutant {verdict.mutant_id}: {old} vs {verdict}")
        self.verdicts[verdict.mutant_id] = verdict

    def counts(self) -> dict[str, int]:
        c = Counter(v.outcome for v in self.verdicts.values())
        return {o.value: c.get(o, 0) for o in Outcome}

    def outcome_map(self) -> dict[int, str]:
        return {k: self.verdicts[k].outcome.value for k in sorted(self.verdicts)}

    def _counted(self) -> list[Phase]:
        return [p for p in self.phases.values() if not p.auxiliary]

    @property
    def compiles(self) -> int:
        return sum(p.compiles for p in self._counted())

    @property
    def executions(self) -> int:
        """Test executions performed for mutants (detection runs excluded)."""
        return self.phases["execute"].executions

    @property
    def steps(self) -> int:
        return sum(p.steps for p in self._counted() if p is not self.phases["generate"])

    @property
    def seconds(self) -> float:
        return sum(p.seconds for p in self._counted())

    def check_identities(self):
        c = self.counts()
        valid = c["killed"] + c["survived"] + c["timed_out"] + c["unreachable"]
        if valid != self.census.valid:
            raise AccountingError(f"valid {self.census.valid} != verdict sum {valid}")
        if self.census.considered != self.census.valid + self.census.invalid_type:
            raise AccountingError("considered != valid + invalid")
        if c["invalid"] != self.census.invalid_type:
            raise AccountingError(f"invalid verdicts {c['invalid']} != census {self.census.invalid_type}")


def mutation_score(store: VerdictStore, timed_out_as_killed: bool = False) -> float:
    c = store.counts()
    valid = c["killed"] + c["survived"] + c["timed_out"] + c["unreachable"]
    if valid == 0:
        raise EmptyDenominator("no valid mutants")
    killed = c["killed"] + (c["timed_out"] if timed_out_as_killed else 0)
    return killed / valid


# -- pre-gate ------------------------------------------------------------------


@dataclass
class Prepared:
    """Everything the strategies share: mutants, tests, budgets and reference reach."""

    project: Project
    typed: TypedAst
    mutants: list[Mutant]
    considered: list[Mutant]
    tests: list[TestCase]
    policy: TimeoutPolicy
    census: Census
    generate: Phase
    reference: ReachabilityMatrix
    reference_phase: Phase
    baseline_outputs: dict[str, tuple[str, ...]]

    @property
    def valid(self) -> list[Mutant]:
        return [m for m in self.considered if m.valid]


def _errors(diags) -> list:
    return [d for d in diags if d.severity is Severity.ERROR]


def prepare(
    project: Project,
    operators: Iterable = ALL_OPERATORS,
    seconds: float = 30.0,
    step_multiplier: int = 10,
    step_floor: int = 10_000,
    gate_steps: int = 50_000_000,
) -> Prepared:
    """Build the original, generate mutants and run the suite once.

    The suite run fixes each test's step budget; the instrumented run that
    follows is a reference reachability matrix used only to label mutants.
    """
    start = time.perf_counter()
    try:
        program = project.parse()
    except (LexError, ParseError) as exc:
        raise PreGateFailed(f"{project.name}: {exc}") from exc
    typed, diags = check(program)
    if _errors(diags):
        raise PreGateFailed(f"{project.name}: original program does not type-check: {_errors(diags)[0].message}")
    mutants = generate_mutants(typed, operators, files=project.programs)
    generate = Phase(seconds=time.perf_counter() - start)

    tests = project.test_cases(program)
    if not tests:
        raise PreGateFailed(f"{project.name}: no tests")
    original = compile_typed(typed)
    gate = TimeoutPolicy(seconds=seconds, default_steps=gate_steps)
    baselines, outputs = {}, {}
    for t in tests:
        o = run_test(original, t, 0, gate)
        if o.status is not Status.PASS:
            raise PreGateFailed(f"{project.name}: test {t.test_id} {o.status.value} on the original program: {o.message}")
        baselines[t.test_id] = o.work
        outputs[t.test_id] = o.output
    policy = TimeoutPolicy(seconds, step_multiplier, step_floor, baselines)

    cons = considered_mutants(mutants)
    ref_start = time.perf_counter()
    matrix, ref_phase = _detect(typed, [m for m in cons if m.valid], tests, policy)
    ref_phase.seconds = time.perf_counter() - ref_start
    ref_phase.auxiliary = True
    return Prepared(
        project, typed, mutants, cons, tests, policy, mutant_census(mutants), generate, matrix, ref_phase, outputs
    )


def _detect(typed: TypedAst, valid: list[Mutant], tests, policy) -> tuple[ReachabilityMatrix, Phase]:
    """Instrumented ternary schemata, every test once with no mutant active.

    Ternary sites are per operator, so reach is exact whatever encoding the
    strategy executes with.
    """
    phase = Phase()
    t0 = time.perf_counter()
    sp = instrument_reachability(build_schemata(typed, valid, Encoding.TERNARY))
    compiled = compile_program(sp.program, sp.sites)
    phase.compiles = 1
    reached = {}
    for t in tests:
        o = run_test(compiled, t, 0, policy)
        if o.status is not Status.PASS:
            raise PreGateFailed(f"instrumented program fails test {t.test_id}: {o.message}")
        reached[t.test_id] = o.reach.reached
        phase.executions += 1
        phase.steps += o.steps
    phase.suite_runs = 1
    phase.seconds = time.perf_counter() - t0
    return ReachabilityMatrix([t.test_id for t in tests], reached), phase


# -- shared helpers ----------------------------------------------------------------


def _decide(mutant_id: int, outcomes: Sequence[TestOutcome], reachable: bool) -> Verdict:
    for o in outcomes:
        if o.failed:
            outcome = Outcome.TIMED_OUT if o.status is Status.TIMED_OUT else Outcome.KILLED
            return Verdict(mutant_id, outcome, o.test_id, len(outcomes))
    return Verdict(mutant_id, Outcome.SURVIVED if reachable else Outcome.UNREACHABLE, None, len(outcomes))


_CTX = None


def _call(arg):
    fn, item = arg
    return fn(_CTX, item)


def _pool_map(fn: Callable, ctx, items: list, workers: int) -> list:
    """Map ``fn(ctx, item)``; with workers > 1, fan out over forked processes."""
    global _CTX
    if workers <= 1 or len(items) < 2:
        return [fn(ctx, item) for item in items]
    _CTX = ctx
    try:
        pool_ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(workers, mp_context=pool_ctx) as ex:
            chunk = max(1, len(items) // (workers * 4))
            return list(ex.map(_call, [(fn, item) for item in items], chunksize=chunk))
    finally:
        _CTX = None


@dataclass
class _RunCtx:
    prep: Prepared
    early_stop: bool
    compiled: object = None
    skip: frozenset = frozenset()


def _record(store: VerdictStore, prep: Prepared, verdict: Verdict):
    if verdict.outcome in (Outcome.KILLED, Outcome.TIMED_OUT) and verdict.mutant_id not in prep.reference.reachable():
        store.diagnostics.append(f"mutant {verdict.mutant_id} was killed but never reached")
    store.add(verdict)


def _new_store(prep: Prepared, strategy: Strategy, encoding=None) -> VerdictStore:
    store = VerdictStore(strategy, prep.project.name, prep.census, encoding)
    store.phases["generate"] = Phase(seconds=prep.generate.seconds)
    return store


# -- strategies ----------------------------------------------------------------------


def _unopt_task(ctx: _RunCtx, m: Mutant):
    t0 = time.perf_counter()
    compiled = None
    try:
        typed, diags = check(ctx.prep.project.parse_mutant(m))
        if not _errors(diags):
            compiled = compile_typed(typed)
    except (LexError, ParseError):
        pass
    t1 = time.perf_counter()
    if compiled is None or m.id in ctx.skip:
        return m.id, compiled is not None, t1 - t0, 0.0, []
    outcomes = run_suite(compiled, ctx.prep.tests, 0, ctx.prep.policy, ctx.early_stop)
    return m.id, True, t1 - t0, time.perf_counter() - t1, outcomes


def run_unoptimised(
    prep: Prepared, exclude_unreachable: bool = False, early_stop: bool = True, workers: int = 1
) -> VerdictStore:
    """One build and one suite run per considered mutant."""
    store = _new_store(prep, Strategy.UNOPTIMISED)
    store.phases["detect_reach"] = replace(prep.reference_phase)
    reachable = prep.reference.reachable()
    skip = frozenset(m.id for m in prep.valid if m.id not in reachable) if exclude_unreachable else frozenset()
    ctx = _RunCtx(prep, early_stop, skip=skip)
    compile_phase, execute = store.phases["compile"], store.phases["execute"]
    for mid, built, c_sec, e_sec, outcomes in _pool_map(_unopt_task, ctx, prep.considered, workers):
        compile_phase.compiles += 1
        compile_phase.seconds += c_sec
        execute.seconds += e_sec
        store.mutant_seconds[mid] = e_sec
        if not built:
            _record(store, prep, Verdict(mid, Outcome.INVALID))
            continue
        if outcomes:
            execute.suite_runs += 1
            execute.executions += len(outcomes)
            execute.steps += sum(o.steps for o in outcomes)
        _record(store, prep, _decide(mid, outcomes, mid in reachable))
    by_id = {m.id: m for m in prep.considered}
    for mid, v in store.verdicts.items():
        if (v.outcome is Outcome.INVALID) != (by_id[mid].validity is Validity.INVALID_TYPE):
            store.diagnostics.append(f"mutant {mid}: build result disagrees with static validity")
    return store


def _schemata_task(ctx: _RunCtx, item):
    mid, tests = item
    t0 = time.perf_counter()
    outcomes = run_suite(ctx.compiled, tests, mid, ctx.prep.policy, ctx.early_stop) if tests else []
    return mid, time.perf_counter() - t0, outcomes


def _build(prep: Prepared, encoding: Encoding, phase: Phase):
    t0 = time.perf_counter()
    sp = build_schemata(prep.typed, prep.valid, encoding)
    compiled = compile_program(sp.program, sp.sites)
    phase.compiles += 1
    phase.seconds += time.perf_counter() - t0
    return compiled


def _execute(store, prep, ctx, items, reachable_ids, workers):
    execute = store.phases["execute"]
    for mid, sec, outcomes in _pool_map(_schemata_task, ctx, items, workers):
        execute.seconds += sec
        store.mutant_seconds[mid] = sec
        if outcomes:
            execute.suite_runs += 1
            execute.executions += len(outcomes)
            execute.steps += sum(o.steps for o in outcomes)
        _record(store, prep, _decide(mid, outcomes, mid in reachable_ids))


def _invalid(store, prep):
    for m in prep.considered:
        if m.validity is Validity.INVALID_TYPE:
            store.add(Verdict(m.id, Outcome.INVALID))


def run_schemata(
    prep: Prepared,
    encoding: Encoding | str = Encoding.TERNARY,
    exclude_unreachable: bool = False,
    early_stop: bool = True,
    workers: int = 1,
) -> VerdictStore:
    """All valid mutants in one build; the whole suite per mutant."""
    encoding = Encoding(encoding)
    store = _new_store(prep, Strategy.SCHEMATA, encoding)
    store.phases["detect_reach"] = replace(prep.reference_phase)
    compiled = _build(prep, encoding, store.phases["compile"])
    _invalid(store, prep)
    reachable = prep.reference.reachable()
    items = [
        (m.id, [] if exclude_unreachable and m.id not in reachable else prep.tests) for m in prep.valid
    ]
    _execute(store, prep, _RunCtx(prep, early_stop, compiled), items, reachable, workers)
    return store


def run_reachable_schemata(
    prep: Prepared, encoding: Encoding | str = Encoding.TERNARY, early_stop: bool = True, workers: int = 1
) -> VerdictStore:
    """Detection pass, then only the tests that reach each mutant."""
    encoding = Encoding(encoding)
    store = _new_store(prep, Strategy.REACHABLE_SCHEMATA, encoding)
    matrix, detect = _detect(prep.typed, prep.valid, prep.tests, prep.policy)
    store.phases["detect_reach"] = detect
    store.matrix = matrix
    compiled = _build(prep, encoding, store.phases["compile"])
    _invalid(store, prep)
    by_id = {t.test_id: t for t in prep.tests}
    items = [(m.id, [by_id[t] for t in matrix.tests_for(m.id)]) for m in prep.valid]
    _execute(store, prep, _RunCtx(prep, early_stop, compiled), items, matrix.reachable(), workers)
    return store


def run_split_stream(
    prep: Prepared, early_stop: bool = True, strict_io: bool = False
) -> VerdictStore:
    """One main run per test, forking at each newly reached mutant."""
    store = _new_store(prep, Strategy.SPLIT_STREAM, Encoding.SPLIT)
    compiled = _build(prep, Encoding.SPLIT, store.phases["compile"])
    _invalid(store, prep)
    execute = store.phases["execute"]
    decided: set[int] = set()
    killers: dict[int, tuple[Outcome, str]] = {}
    runs: Counter = Counter()
    t0 = time.perf_counter()
    for t in prep.tests:
        ledger = split_stream_test(compiled, t, prep.policy, decided if early_stop else (), strict_io)
        if ledger.main.status is not Status.PASS:
            store.diagnostics.append(f"split-stream main run of {t.test_id} ended {ledger.main.status.value}")
        store.diagnostics.extend(ledger.diagnostics)
        execute.suite_runs += 1
        execute.executions += ledger.forks
        execute.steps += ledger.total_steps
        for mid in sorted(ledger.results):
            o = ledger.results[mid]
            runs[mid] += 1
            store.mutant_seconds[mid] = store.mutant_seconds.get(mid, 0.0) + o.duration
            if o.failed and mid not in killers:
                killers[mid] = (Outcome.TIMED_OUT if o.status is Status.TIMED_OUT else Outcome.KILLED, t.test_id)
                decided.add(mid)
    execute.seconds = time.perf_counter() - t0
    for m in prep.valid:
        if m.id in killers:
            outcome, test_id = killers[m.id]
            v = Verdict(m.id, outcome, test_id, runs[m.id])
        else:
            v = Verdict(m.id, Outcome.SURVIVED if runs[m.id] else Outcome.UNREACHABLE, None, runs[m.id])
        _record(store, prep, v)
    return store


def run_strategy(
    prep: Prepared,
    strategy: Strategy | str,
    encoding: Encoding | str = Encoding.TERNARY,
    exclude_unreachable: bool = False,
    early_stop: bool = True,
    workers: int = 1,
    strict_io: bool = False,
) -> VerdictStore:
    strategy = Strategy(strategy)
    if strategy is Strategy.UNOPTIMISED:
        store = run_unoptimised(prep, exclude_unreachable, early_stop, workers)
    elif strategy is Strategy.SCHEMATA:
        store = run_schemata(prep, encoding, exclude_unreachable, early_stop, workers)
    elif strategy is Strategy.REACHABLE_SCHEMATA:
        store = run_reachable_schemata(prep, encoding, early_stop, workers)
    else:
        store = run_split_stream(prep, early_stop, strict_io)
    store.check_identities()
    return store
