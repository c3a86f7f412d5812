import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mutamatic.costmodel import (
    CostModelInputs, NoReachableMutants, decoupling_factor, estimate_all, estimate_reachable_schemata,
    estimate_schemata, estimate_split_stream, estimate_unoptimised, from_measurements,
)
from mutamatic.orchestrator import Outcome, ReachabilityMatrix, Strategy
from mutamatic.schemata import Encoding

from oracles import scan_decoupling


def test_unoptimised_example():
    i = CostModelInputs(t_mutant_generation=1, t_compilation=10, t_test_suite_execution=2,
                        reachable_mutants=3, unreachable_mutants=1, invalid_mutants=1)
    assert estimate_unoptimised(i) == 59


def test_schemata_example():
    i = CostModelInputs(t_mutant_generation=1, t_schemata_compilation=12, t_schemata_test_suite_execution=2.5,
                        reachable_mutants=3, unreachable_mutants=1)
    assert estimate_schemata(i) == 23


def test_reachable_schemata_example():
    i = CostModelInputs(t_mutant_generation=1, t_schemata_compilation=12, t_schemata_test_suite_execution=2.5,
                        reachable_mutants=4, decoupling_factor=0.25)
    assert estimate_reachable_schemata(i) == 30


def test_split_stream_example():
    i = CostModelInputs(t_mutant_generation=1, t_split_stream_compilation=13, t_split_stream_test_suite_execution=2.5,
                        reachable_mutants=4, decoupling_factor=0.25)
    assert estimate_split_stream(i) == 15.25


def test_degenerate_inputs():
    i = CostModelInputs(t_mutant_generation=3, t_compilation=10, t_test_suite_execution=2,
                        t_schemata_compilation=5, t_schemata_test_suite_execution=1,
                        t_split_stream_compilation=6, t_split_stream_test_suite_execution=1)
    assert estimate_unoptimised(i) == 3
    assert estimate_schemata(i) == 3 + 5
    assert estimate_split_stream(i) == 3 + 6
    full = dataclasses.replace(i, reachable_mutants=7, decoupling_factor=1.0)
    assert estimate_reachable_schemata(full) == 3 + (5 + 1) + 5 + 1 * 7


@pytest.mark.parametrize("field,value", [
    ("t_compilation", -1.0), ("reachable_mutants", -2), ("decoupling_factor", 0.0),
    ("decoupling_factor", 1.5), ("t_mutant_generation", float("nan")),
])
def test_inputs_are_validated(field, value):
    with pytest.raises(ValueError):
        CostModelInputs(**{field: value})


times = st.floats(0, 1e4, allow_nan=False)
counts = st.integers(0, 10_000)


@st.composite
def inputs(draw):
    return CostModelInputs(
        *(draw(times) for _ in range(7)), *(draw(counts) for _ in range(3)),
        decoupling_factor=draw(st.floats(1e-3, 1.0)),
    )


@given(inputs(), st.integers(1, 1000))
def test_linear_in_reachable_count(i, delta):
    j = dataclasses.replace(i, reachable_mutants=i.reachable_mutants + delta)
    assert estimate_unoptimised(j) - estimate_unoptimised(i) == pytest.approx(
        (i.t_compilation + i.t_test_suite_execution) * delta, rel=1e-9, abs=1e-6)
    assert estimate_schemata(j) - estimate_schemata(i) == pytest.approx(
        i.t_schemata_test_suite_execution * delta, rel=1e-9, abs=1e-6)
    assert estimate_reachable_schemata(j) - estimate_reachable_schemata(i) == pytest.approx(
        i.t_schemata_test_suite_execution * i.decoupling_factor * delta, rel=1e-9, abs=1e-6)
    assert estimate_split_stream(j) - estimate_split_stream(i) == pytest.approx(
        i.t_split_stream_test_suite_execution * i.decoupling_factor * delta / 2, rel=1e-9, abs=1e-6)


@given(inputs())
def test_estimators_are_pure(i):
    assert estimate_all(i) == estimate_all(dataclasses.replace(i))


def test_reachable_beats_schemata_when_decoupled():
    i = CostModelInputs(t_mutant_generation=1, t_schemata_compilation=12, t_schemata_test_suite_execution=2.5,
                        reachable_mutants=40, unreachable_mutants=5, decoupling_factor=0.2)
    # df * reach = 8 suite runs, below 45 minus the 1 + 12/2.5 suite runs the detection pass costs
    assert estimate_reachable_schemata(i) <= estimate_schemata(i)


def test_decoupling_of_published_project_shape():
    # 88 tests; 50 reachable mutants averaging 8.46 tests each
    tests = [f"t{i}" for i in range(88)]
    hits = {t: set() for t in tests}
    per_mutant = [9] * 23 + [8] * 27  # 423 hits in total
    for m, k in enumerate(per_mutant, start=1):
        for t in tests[:k]:
            hits[t].add(m)
    matrix = ReachabilityMatrix(tests, {t: frozenset(v) for t, v in hits.items()})
    df = decoupling_factor(matrix, 50)
    assert round(df * 100, 2) == 9.61


def test_full_coupling_is_one():
    matrix = ReachabilityMatrix(["a", "b"], {"a": frozenset({1, 2}), "b": frozenset({1, 2})})
    assert decoupling_factor(matrix) == 1.0


def test_no_reachable_mutants():
    with pytest.raises(NoReachableMutants):
        decoupling_factor(ReachabilityMatrix(["a"], {"a": frozenset()}))


@given(st.dictionaries(st.sampled_from("abcdef"), st.frozensets(st.integers(1, 20), max_size=8), min_size=1))
def test_decoupling_matches_matrix_scan(reached):
    tests = sorted(reached)
    matrix = ReachabilityMatrix(tests, reached)
    if not matrix.reachable():
        return
    assert decoupling_factor(matrix) == pytest.approx(scan_decoupling(tests, reached))


def test_corpus_decoupling_against_scan(prepared):
    for prep in prepared.values():
        m = prep.reference
        if m.reachable():
            assert decoupling_factor(m, prep.census.valid) == pytest.approx(scan_decoupling(m.tests, m.reached))
    assert decoupling_factor(prepared["decoupled"].reference) == pytest.approx(0.2, abs=0.05)


def test_inputs_from_measurements(corpus_runs, prepared):
    for name, runs in corpus_runs.items():
        stores = {s: store for (s, e), store in runs.items() if e is not Encoding.SWITCH}
        check = from_measurements(prepared[name], stores)
        i = check.inputs
        timed_out = sum(v.outcome is Outcome.TIMED_OUT for v in stores[Strategy.SCHEMATA].verdicts.values())
        assert i.reachable_mutants + i.unreachable_mutants == prepared[name].census.valid - timed_out
        assert i.invalid_mutants == prepared[name].census.invalid_type
        assert check.excluded_timed_out == timed_out
        assert set(check.predicted) == set(Strategy)



