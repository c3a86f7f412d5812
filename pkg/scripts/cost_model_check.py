"""Feed measured unit means into the cost formulas and compare with measured totals."""

import argparse
import json
from pathlib import Path

from mutamatic.corpus import load_corpus
from mutamatic.costmodel import CorpusCostCheck, from_measurements
from mutamatic.orchestrator import Strategy, prepare, run_strategy
from mutamatic.schemata import Encoding

ROOT = Path(__file__).resolve().parent.parent


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--corpus", default=str(ROOT / "corpus"))
    p.add_argument("--tolerance", type=float, default=0.30)
    p.add_argument("--json", action="store_true", help="dump the full per-project check")
    args = p.parse_args()
    checks = []
    for project in load_corpus(args.corpus):
        prep = prepare(project)
        stores = {
            s: run_strategy(prep, s, Encoding.SPLIT if s is Strategy.SPLIT_STREAM else Encoding.TERNARY)
            for s in Strategy
        }
        checks.append(from_measurements(prep, stores))
    corpus = CorpusCostCheck(checks)
    if args.json:
        print(json.dumps(corpus.to_json(), indent=2))
        return
    for s in Strategy:
        ok = "ok" if abs(corpus.relative_error(s)) <= args.tolerance else "OUTSIDE"
        print(f"{s.value:20} predicted {corpus.predicted(s):8.3f}s measured {corpus.measured(s):8.3f}s "
              f"error {corpus.relative_error(s) * 100:+6.1f}%  {ok}")


if __name__ == "__main__":
    main()
