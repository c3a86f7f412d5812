from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from mutamatic.corpus import load_corpus
from mutamatic.orchestrator import Strategy, prepare, run_strategy
from mutamatic.schemata import Encoding

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# (strategy, encoding) pairs that must agree on every verdict
RUNS = (
    (Strategy.UNOPTIMISED, Encoding.TERNARY),
    (Strategy.SCHEMATA, Encoding.TERNARY),
    (Strategy.SCHEMATA, Encoding.SWITCH),
    (Strategy.REACHABLE_SCHEMATA, Encoding.TERNARY),
    (Strategy.SPLIT_STREAM, Encoding.SPLIT),
)


@pytest.fixture(scope="session")
def projects():
    return {p.name: p for p in load_corpus(CORPUS)}


@pytest.fixture(scope="session")
def prepared(projects):
    return {name: prepare(p) for name, p in projects.items()}


@pytest.fixture(scope="session")
def corpus_runs(prepared):
    """Every strategy on every project, computed once per session."""
    return {
        name: {(s, e): run_strategy(prep, s, e) for s, e in RUNS}
        for name, prep in prepared.items()
    }


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
