"""Selector-0 step counts as mutants are enabled one by one at each guarded site.

Prints one row per (project, site, k) for the ternary and switch encodings on
the dense and sparse hot-loop variants.
"""

import argparse
from collections import Counter
from pathlib import Path

from mutamatic.corpus import load_project
from mutamatic.orchestrator import prepare
from mutamatic.runtime import compile_program, run_test
from mutamatic.schemata import Encoding, build_schemata, instrument_reachability

ROOT = Path(__file__).resolve().parent.parent


def steps(prep, mutants, encoding, test):
    sp = build_schemata(prep.typed, mutants, encoding)
    o = run_test(compile_program(sp.program, sp.sites), test, 0, prep.policy)
    return o.steps, o.work


def main():
    p = argparse.ArgumentParser(description="guard overhead per mutants-per-site")
    p.add_argument("--projects", nargs="+", default=["overhead_dense", "overhead_sparse"])
    p.add_argument("--test", default="churn_50")
    args = p.parse_args()
    print(f"{'project':16} {'site':>4} {'evals':>5} {'k':>2} {'ternary':>8} {'switch':>8}")
    for name in args.projects:
        prep = prepare(load_project(ROOT / "corpus" / name))
        (test,) = [t for t in prep.tests if t.test_id == args.test]
        full = build_schemata(prep.typed, prep.valid, Encoding.TERNARY)
        probed = instrument_reachability(full)
        evals = Counter()
        run_test(compile_program(probed.program, probed.sites), test, 0, prep.policy, probe_counts=evals)
        for site, ids in full.sites.items():
            members = [m for m in prep.valid if m.id in ids]
            for k in range(len(members) + 1):
                t, _ = steps(prep, members[:k], Encoding.TERNARY, test)
                s, _ = steps(prep, members[:k], Encoding.SWITCH, test)
                print(f"{name:16} {site:>4} {evals[site]:>5} {k:>2} {t:>8} {s:>8}")
        t, work = steps(prep, prep.valid, Encoding.TERNARY, test)
        s, _ = steps(prep, prep.valid, Encoding.SWITCH, test)
        print(f"{name}: work {work}, all mutants: ternary overhead {t - work}, switch overhead {s - work}\n")


if __name__ == "__main__":
    main()
