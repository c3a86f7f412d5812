"""Test harness: single runs, suites with early stop, and split-stream runs."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .codegen import CompiledProgram, FixtureExhausted
from .vm import InterpreterState, Machine, Status, initial_state


class SelectorUnknown(KeyError):
    pass


class StrictIOError(RuntimeError):
    """A fork ran out of fixture input while ``strict_io`` was set.

    Deliberately not a RuntimeFault, so the paused main run cannot absorb it
    as an ordinary test failure.
    """


@dataclass(frozen=True)
class TestCase:
    test_id: str
    fixture: tuple[str, ...] = ()

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class ReachRecord:
    test_id: str
    reached: frozenset[int]


@dataclass(frozen=True)
class TestOutcome:
    test_id: str
    status: Status
    duration: float
    steps: int
    work: int
    message: str = ""
    output: tuple[str, ...] = ()
    reach: Optional[ReachRecord] = None

    __test__ = False

    @property
    def failed(self) -> bool:
        return self.status is not Status.PASS


@dataclass
class TimeoutPolicy:
    """Per-test budgets: ``max(step_multiplier * baseline, step_floor)`` work steps.

    ``baselines`` holds the original program's work per test, filled in by the
    pre-gate run. Tests without a baseline get ``default_steps``.
    """

    seconds: float = 30.0
    step_multiplier: int = 10
    step_floor: int = 10_000
    baselines: dict[str, int] = field(default_factory=dict)
    default_steps: int = 1_000_000

    def step_budget(self, test_id: str) -> int:
        base = self.baselines.get(test_id)
        if base is None:
            return self.default_steps
        return max(self.step_multiplier * base, self.step_floor)


def _check_selector(program: CompiledProgram, selector: int):
    if selector and selector not in program.guard_ids:
        raise SelectorUnknown(selector)


def _reach(program: CompiledProgram, test_id: str, st: InterpreterState) -> ReachRecord:
    ids = frozenset(m for site in st.reached for m in program.sites.get(site, ()))
    return ReachRecord(test_id, ids)


def run_test(
    program: CompiledProgram,
    test: TestCase,
    selector: int = 0,
    policy: Optional[TimeoutPolicy] = None,
    probe_counts: Optional[Counter] = None,
) -> TestOutcome:
    policy = policy or TimeoutPolicy()
    _check_selector(program, selector)
    st = initial_state(program, test.test_id, selector, test.fixture)
    machine = Machine(program, policy.step_budget(test.test_id), policy.seconds, probe_counts)
    start = time.perf_counter()
    status, message = machine.execute(st)
    duration = time.perf_counter() - start
    reach = _reach(program, test.test_id, st) if program.instrumented else None
    return TestOutcome(test.test_id, status, duration, st.steps, st.work, message, tuple(st.output), reach)


def run_suite(
    program: CompiledProgram,
    tests: Iterable[TestCase],
    selector: int = 0,
    policy: Optional[TimeoutPolicy] = None,
    early_stop: bool = True,
) -> list[TestOutcome]:
    outcomes = []
    for test in tests:
        outcome = run_test(program, test, selector, policy)
        outcomes.append(outcome)
        if early_stop and outcome.failed:
            break
    return outcomes


@dataclass
class ForkLedger:
    executed: set[int]
    results: dict[int, TestOutcome]
    main: Optional[TestOutcome] = None
    diagnostics: list[str] = field(default_factory=list)
    forks: int = 0
    # main-run step count at which each mutant was forked
    fork_points: dict[int, int] = field(default_factory=dict)

    @property
    def fork_steps(self) -> int:
        return sum(o.steps for o in self.results.values())

    @property
    def total_steps(self) -> int:
        return (self.main.steps if self.main else 0) + self.fork_steps


def run_split_stream(
    program: CompiledProgram,
    test: TestCase,
    policy: Optional[TimeoutPolicy] = None,
    executed: Optional[Iterable[int]] = None,
    strict_io: bool = False,
) -> ForkLedger:
    """Run the original once, forking a continuation at each new split guard.

    ``executed`` pre-seeds the set of mutants that must not be forked (already
    decided by earlier tests). Each fork runs to completion before the main run
    resumes. A fork's ``steps`` count from the fork point; its budget covers
    the shared prefix too, so verdicts match a from-scratch run.
    """
    policy = policy or TimeoutPolicy()
    budget = policy.step_budget(test.test_id)
    ledger = ForkLedger(set(executed or ()), {})

    def on_split(st: InterpreterState, mutant_id: int) -> bool:
        if mutant_id in ledger.executed:
            return False
        ledger.executed.add(mutant_id)
        ledger.forks += 1
        fork = st.copy()
        fork.selector = mutant_id
        fork.forked = True
        fork_steps, fork_work = fork.steps, fork.work
        ledger.fork_points[mutant_id] = fork_steps
        start = time.perf_counter()
        # the fork resumes just after the SPLIT instruction, i.e. inside the mutant arm
        machine = Machine(program, budget, policy.seconds)
        status, message = machine.execute(fork)
        duration = time.perf_counter() - start
        if isinstance(machine.fault, FixtureExhausted):
            ledger.diagnostics.append(f"FixtureExhausted: mutant {mutant_id} on test {test.test_id}")
            if strict_io:
                raise StrictIOError(message)
        ledger.results[mutant_id] = TestOutcome(
            test.test_id,
            status,
            duration,
            fork.steps - fork_steps,
            fork.work - fork_work,
            message,
            tuple(fork.output),
        )
        return False

    st = initial_state(program, test.test_id, 0, test.fixture)
    start = time.perf_counter()
    status, message = Machine(program, budget, policy.seconds, on_split=on_split).execute(st)
    duration = time.perf_counter() - start - sum(o.duration for o in ledger.results.values())
    ledger.main = TestOutcome(test.test_id, status, max(duration, 0.0), st.steps, st.work, message, tuple(st.output))
    return ledger

