"""Run every strategy over the bundled corpus and write a JSON report.

    python scripts/compare_corpus.py [--corpus corpus] [--report out/report.json]
"""

import argparse
import sys
from pathlib import Path

from mutamatic import cli

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--corpus", default=str(ROOT / "corpus"))
    p.add_argument("--report", default=str(ROOT / "out" / "report.json"))
    p.add_argument("--workers", default="1")
    args = p.parse_args()
    return cli.main(["compare", "--corpus", args.corpus, "--report", args.report, "--workers", args.workers])


if __name__ == "__main__":
    sys.exit(main())
