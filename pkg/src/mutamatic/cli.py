"""``mutamatic`` command line: run, compare, census and estimate."""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path
from typing import Optional, Sequence

from . import costmodel as cm
from .config import ConfigError, RunConfig, workers_from_env
from .corpus import ManifestError, load_corpus
from .frontend import LexError, ParseError
from .mutgen import ALL_OPERATORS, dump_jsonl, generate_mutants, mutant_census
from .orchestrator import PreGateFailed, Strategy, prepare, run_strategy
from .report import ProjectResult, build_report, dumps, summary
from .schemata import Encoding
from .semantics import Severity, check

EXIT_OK, EXIT_INTERNAL, EXIT_PREGATE = 0, 1, 2


def _operators(text: str) -> frozenset:
    if text.lower() == "all":
        return ALL_OPERATORS
    return frozenset(k.strip().upper() for k in text.split(",") if k.strip())


def _strategies(text: str) -> tuple[Strategy, ...]:
    if text.lower() == "all":
        return tuple(Strategy)
    return tuple(Strategy(s.strip()) for s in text.split(",") if s.strip())


def _common(p: argparse.ArgumentParser):
    p.add_argument("--corpus", type=Path, required=True, help="project directory or directory of projects")
    p.add_argument("--operators", default="all", help="comma list of ROR,AOR,LCR (default: all)")
    p.add_argument("--seconds", type=float, default=30.0, help="wall-clock budget per test run")
    p.add_argument("--step-multiplier", type=int, default=10, help="step budget as a multiple of the original run")
    p.add_argument("--step-floor", type=int, default=10_000, help="minimum step budget per test")
    p.add_argument("--timed-out-as-killed", action="store_true", help="count timeouts as kills in the score")
    p.add_argument("--no-early-stop", dest="early_stop", action="store_false", help="run every test per mutant")
    p.add_argument("--dump-io", action="store_true", help="include fixture input and original output per test")
    p.add_argument("--workers", type=int, default=1, help="worker processes (env MUTAMATIC_WORKERS overrides)")
    p.add_argument("--report", type=Path, help="write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mutamatic", description="Mutation testing for MiniC with optimised strategies")
    verbs = parser.add_subparsers(dest="verb", required=True)

    run = verbs.add_parser("run", help="run one strategy")
    _common(run)
    run.add_argument("--strategy", type=Strategy, choices=list(Strategy), default=Strategy.SCHEMATA,
                     metavar="{" + ",".join(s.value for s in Strategy) + "}")
    run.add_argument("--encoding", choices=["ternary", "switch"], help="guard encoding for schemata strategies")
    run.add_argument("--exclude-unreachable", action="store_true", help="skip executing never-reached mutants")

    compare = verbs.add_parser("compare", help="run several strategies and check verdict equality")
    _common(compare)
    compare.add_argument("--strategies", default="all", help="comma list of strategies, or 'all'")

    census = verbs.add_parser("census", help="generate mutants and print the census")
    census.add_argument("--corpus", type=Path, required=True)
    census.add_argument("--operators", default="all")
    census.add_argument("--mutants", action="store_true", help="also print every mutant as JSON lines")

    est = verbs.add_parser("estimate", help="cost-model predictions from unit times")
    for name in cm.CostModelInputs.__dataclass_fields__:
        kind = int if name.endswith("_mutants") else float
        default = 1.0 if name == "decoupling_factor" else 0
        est.add_argument("--" + name.replace("_", "-"), type=kind, default=default)
    return parser


def _config(args, strategies, encoding=None, exclude=False) -> RunConfig:
    return RunConfig(
        corpus=args.corpus,
        strategies=strategies,
        operators=_operators(args.operators),
        encoding=encoding,
        seconds=args.seconds,
        step_multiplier=args.step_multiplier,
        step_floor=args.step_floor,
        exclude_unreachable=exclude,
        timed_out_as_killed=args.timed_out_as_killed,
        early_stop=args.early_stop,
        dump_io=args.dump_io,
        workers=workers_from_env(args.workers),
        report=args.report,
    )


def _prepare(project, config: RunConfig):
    return prepare(project, config.operators, config.seconds, config.step_multiplier, config.step_floor)


def execute(config: RunConfig, compare: bool = False) -> dict:
    """Run the configured strategies over every project and build the report."""
    results = []
    for project in load_corpus(config.corpus):
        prep = _prepare(project, config)
        result = ProjectResult(prep)
        for strategy in config.strategies:
            encodings = [config.encoding_for(strategy)]
            if compare and strategy is Strategy.SCHEMATA and config.encoding is None:
                encodings = [Encoding.TERNARY, Encoding.SWITCH]
            for enc in encodings:
                result.stores.append(
                    run_strategy(prep, strategy, enc, config.exclude_unreachable, config.early_stop, config.workers)
                )
        primary = {}
        for s in result.stores:
            primary.setdefault(s.strategy, s)
        if set(primary) == set(Strategy) and config.early_stop:
            result.cost = cm.from_measurements(prep, primary)
        results.append(result)
    return build_report(config.to_json(), results, config.timed_out_as_killed, config.dump_io)


def _emit(report: dict, path: Optional[Path]):
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps(report))
    sys.stdout.write(summary(report))


def _census(args) -> int:
    out = []
    for project in load_corpus(args.corpus):
        try:
            program = project.parse()
        except (LexError, ParseError) as exc:
            raise PreGateFailed(f"{project.name}: {exc}") from exc
        typed, diags = check(program)
        errors = [d for d in diags if d.severity is Severity.ERROR]
        if errors:
            raise PreGateFailed(f"{project.name}: {errors[0].message}")
        mutants = generate_mutants(typed, _operators(args.operators), files=project.programs)
        if args.mutants:
            sys.stdout.write(dump_jsonl(mutants))
        c = mutant_census(mutants).to_json()
        c["lopc"] = project.lopc()
        out.append({"project": project.name, **c})
    if not args.mutants:
        sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def _estimate(args) -> int:
    fields = {name: getattr(args, name) for name in cm.CostModelInputs.__dataclass_fields__}
    inputs = cm.CostModelInputs(**fields)
    result = {s.value: v for s, v in cm.estimate_all(inputs).items()}
    sys.stdout.write(json.dumps({"inputs": inputs.to_json(), "predicted_seconds": result}, indent=2) + "\n")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "census":
            return _census(args)
        if args.verb == "estimate":
            return _estimate(args)
        if args.verb == "run":
            config = _config(args, (args.strategy,), args.encoding, args.exclude_unreachable)
            _emit(execute(config), config.report)
            return EXIT_OK
        config = _config(args, _strategies(args.strategies))
        report = execute(config, compare=True)
        _emit(report, config.report)
        if any(not p.get("equivalence", {"identical": True})["identical"] for p in report["projects"]):
            sys.stderr.write("error: strategies disagree on some verdicts\n")
            return EXIT_INTERNAL
        return EXIT_OK
    except (ConfigError, ManifestError) as exc:
        parser.error(str(exc))
    except PreGateFailed as exc:
        sys.stderr.write(f"pre-gate failed: {exc}\n")
        return EXIT_PREGATE
    except ValueError as exc:
        if args.verb == "estimate":
            parser.error(str(exc))
        traceback.print_exc()
        return EXIT_INTERNAL
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
