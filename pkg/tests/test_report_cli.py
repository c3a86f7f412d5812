import json
import shutil

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mutamatic import cli
from mutamatic.config import ConfigError, RunConfig, workers_from_env
from mutamatic.costmodel import CostModelInputs, estimate_all
from mutamatic.orchestrator import EmptyDenominator, Strategy
from mutamatic.report import (
    SCHEMA_VERSION, ProjectResult, ReportError, audit_report, build_report, compute_overhead,
    compute_speedup, dumps, loads, strip_timings,
)

from conftest import CORPUS, RUNS


def test_overhead_shape():
    # a schemata build whose runs cost 117.44 per 100 of the unoptimised ones
    assert compute_overhead(100.0, 117.44) == pytest.approx(17.44)
    assert compute_overhead(3.5, 3.5) == 0.0
    with pytest.raises(EmptyDenominator):
        compute_overhead(0.0, 1.0)


def test_speedup_examples():
    assert compute_speedup(59, 23) == pytest.approx(2.565, abs=5e-4)
    assert compute_speedup(7.0, 7.0) == 1.0
    with pytest.raises(EmptyDenominator):
        compute_speedup(1.0, 0.0)


@pytest.fixture(scope="module")
def corpus_report(prepared, corpus_runs):
    results = [ProjectResult(prepared[n], [corpus_runs[n][r] for r in RUNS]) for n in sorted(prepared)]
    return build_report({"corpus": "corpus"}, results)


def test_report_round_trip(corpus_report):
    assert corpus_report["schema_version"] == SCHEMA_VERSION
    assert loads(dumps(corpus_report)) == json.loads(json.dumps(corpus_report))
    assert dumps(loads(dumps(corpus_report))) == dumps(corpus_report)


def test_strip_timings_leaves_no_seconds(corpus_report):
    text = dumps(strip_timings(corpus_report))
    assert "seconds" not in text and "timing" not in text
    assert strip_timings(corpus_report)["totals"] == corpus_report["totals"]


def test_equivalence_recorded(corpus_report):
    for p in corpus_report["projects"]:
        assert p["equivalence"]["identical"], p["name"]
        assert len(p["equivalence"]["compared"]) == len(RUNS)


def test_totals_rebuild_from_projects(corpus_report):
    projects = corpus_report["projects"]
    for label, totals in corpus_report["totals"]["strategies"].items():
        runs = [p["strategies"][label] for p in projects]
        for key in ("compiles", "executions", "steps"):
            assert totals[key] == sum(r[key] for r in runs)
        for key in ("killed", "survived", "timed_out", "unreachable", "invalid"):
            assert totals[key] == sum(r["counts"][key] for r in runs)


def test_audit_catches_tampering(corpus_report):
    bad = loads(dumps(corpus_report))
    bad["projects"][0]["strategies"]["unoptimised"]["counts"]["killed"] += 1
    with pytest.raises(ReportError):
        audit_report(bad)
    bad = loads(dumps(corpus_report))
    bad["projects"][0]["strategies"]["schemata_ternary"]["mutants"].pop()
    with pytest.raises(ReportError):
        audit_report(bad)


@given(st.dictionaries(st.text(max_size=4), st.recursive(
    st.none() | st.integers() | st.text(max_size=4),
    lambda c: st.lists(c, max_size=3) | st.dictionaries(st.sampled_from(["a", "timing", "cost_model"]), c, max_size=3),
    max_leaves=10)))
def test_strip_timings_is_idempotent(obj):
    once = strip_timings(obj)
    assert strip_timings(once) == once
    assert not _has_timing_key(once)


def _has_timing_key(obj):
    if isinstance(obj, dict):
        return bool({"timing", "cost_model"} & obj.keys()) or any(_has_timing_key(v) for v in obj.values())
    if isinstance(obj, list):
        return any(_has_timing_key(v) for v in obj)
    return False


# -- config -----------------------------------------------------------------


def test_config_rejections():
    with pytest.raises(ConfigError):
        RunConfig(CORPUS, strategies=(Strategy.UNOPTIMISED,), encoding="switch")
    with pytest.raises(ConfigError):
        RunConfig(CORPUS, strategies=(Strategy.SCHEMATA,), encoding="split")
    with pytest.raises(ConfigError):
        RunConfig(CORPUS, strategies=(Strategy.SPLIT_STREAM,), exclude_unreachable=True)
    with pytest.raises(ConfigError):
        RunConfig(CORPUS, seconds=0)
    assert RunConfig(CORPUS, strategies=(Strategy.SPLIT_STREAM,)).encoding_for(Strategy.SPLIT_STREAM).value == "split"


def test_workers_env(monkeypatch):
    monkeypatch.delenv("MUTAMATIC_WORKERS", raising=False)
    assert workers_from_env(2) == 2
    monkeypatch.setenv("MUTAMATIC_WORKERS", "4")
    assert workers_from_env(1) == 4
    monkeypatch.setenv("MUTAMATIC_WORKERS", "zero")
    with pytest.raises(ConfigError):
        workers_from_env(1)


# -- CLI --------------------------------------------------------------------


def _run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_run_tiny(tmp_path, capsys):
    path = tmp_path / "r.json"
    code, out, _ = _run(["run", "--corpus", CORPUS / "tiny", "--strategy", "schemata", "--report", path], capsys)
    assert code == 0 and "tiny:" in out
    report = loads(path.read_text())
    s = report["projects"][0]["strategies"]["schemata_ternary"]
    assert s["compiles"] == 1
    assert report["schema_version"] == SCHEMA_VERSION


def test_cli_exclude_unreachable(tmp_path, capsys):
    runs = {}
    for flag in ([], ["--exclude-unreachable"]):
        path = tmp_path / f"r{len(flag)}.json"
        code, _, _ = _run(["run", "--corpus", CORPUS / "library", "--strategy", "unoptimised", *flag,
                           "--report", path], capsys)
        assert code == 0
        runs[bool(flag)] = loads(path.read_text())["projects"][0]["strategies"]["unoptimised"]
    unreachable = [m for m in runs[True]["mutants"] if m["outcome"] == "unreachable"]
    assert unreachable and all(m["executed_tests"] == 0 for m in unreachable)
    assert runs[True]["compiles"] == runs[False]["compiles"]
    assert runs[True]["executions"] < runs[False]["executions"]
    assert runs[True]["counts"] == runs[False]["counts"]


def test_cli_compare_all_agrees(tmp_path, capsys):
    path = tmp_path / "r.json"
    code, out, _ = _run(["compare", "--corpus", CORPUS / "tiny", "--report", path], capsys)
    assert code == 0 and "verdicts identical" in out
    report = loads(path.read_text())
    assert set(report["projects"][0]["strategies"]) == {
        "unoptimised", "schemata_ternary", "schemata_switch", "reachable_schemata", "split_stream"}
    assert "cost_model" in report


def test_cli_pregate_failure(tmp_path, capsys):
    proj = tmp_path / "broken"
    shutil.copytree(CORPUS / "tiny", proj)
    (proj / "tiny.mc").write_text("int add(int a, int b) { return a + true; }\n")
    code, _, err = _run(["run", "--corpus", proj], capsys)
    assert code == 2 and "pre-gate" in err

    (proj / "tiny.mc").write_text("int add(int a, int b) { return a - b; }\nfloat scale(float a, float b) { return a; }\n")
    code, _, err = _run(["run", "--corpus", proj], capsys)
    assert code == 2 and "pre-gate" in err


def test_cli_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["run", "--corpus", str(CORPUS / "tiny"), "--strategy", "unoptimised", "--encoding", "switch"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["frobnicate"])
    assert e.value.code == 2


def test_cli_estimate(capsys):
    code, out, _ = _run(["estimate", "--t-mutant-generation", 1, "--t-compilation", 10, "--t-test-suite-execution", 2,
                         "--reachable-mutants", 3, "--unreachable-mutants", 1, "--invalid-mutants", 1], capsys)
    assert code == 0
    predicted = json.loads(out)["predicted_seconds"]
    assert predicted["unoptimised"] == 59
    inputs = CostModelInputs(t_mutant_generation=1, t_compilation=10, t_test_suite_execution=2,
                             reachable_mutants=3, unreachable_mutants=1, invalid_mutants=1)
    assert predicted == {s.value: v for s, v in estimate_all(inputs).items()}
    with pytest.raises(SystemExit):
        cli.main(["estimate", "--decoupling-factor", "2"])


def test_cli_census(capsys):
    code, out, _ = _run(["census", "--corpus", CORPUS / "tiny"], capsys)
    assert code == 0
    (row,) = json.loads(out)
    assert row["project"] == "tiny" and row["considered"] == row["valid"] + row["invalid_type"]
    code, out, _ = _run(["census", "--corpus", CORPUS / "tiny", "--mutants"], capsys)
    assert len(out.strip().splitlines()) == row["generated"]


def test_cli_workers_env(tmp_path, capsys, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    _run(["run", "--corpus", CORPUS / "arith", "--report", a], capsys)
    monkeypatch.setenv("MUTAMATIC_WORKERS", "3")
    _run(["run", "--corpus", CORPUS / "arith", "--report", b], capsys)
    assert dumps(strip_timings(loads(a.read_text()))) == dumps(strip_timings(loads(b.read_text())))
    monkeypatch.setenv("MUTAMATIC_WORKERS", "-1")
    with pytest.raises(SystemExit):
        cli.main(["run", "--corpus", str(CORPUS / "arith")])
