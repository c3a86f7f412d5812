"""Independent reference computations used to cross-check the package.

Each oracle takes a different route from the code under test: textual
splicing plus a fresh type check instead of tree-level validity reasoning,
fault traps instead of probes, and plain loops instead of the matrix helpers.
"""

from __future__ import annotations

import copy

from mutamatic.corpus import Project
from mutamatic.frontend import LexError, ParseError
from mutamatic.frontend import ast as A
from mutamatic.frontend import parse_source
from mutamatic.runtime import TimeoutPolicy, compile_typed, run_test
from mutamatic.runtime.vm import Status
from mutamatic.semantics import Severity, check


def splice(source: str, begin: int, end: int, text: str) -> str:
    data = source.encode("utf-8")
    return (data[:begin] + text.encode("utf-8") + data[end:]).decode("utf-8")


def insertion_fails_type_check(project: Project, mutant) -> bool:
    """Insert one mutant into its file, rebuild the whole project, type-check."""
    a = mutant.anchor
    decls = []
    try:
        for f in project.files:
            src = project.sources[f]
            if f == a.file_id:
                src = splice(src, a.begin, a.end, mutant.replacement)
            decls.extend(parse_source(src, f).decls)
    except (LexError, ParseError):
        return True
    _, diags = check(A.Program(decls))
    return any(d.severity is Severity.ERROR for d in diags)


def _fault_if_evaluated(node: A.Expr) -> A.Expr:
    # (0 / 0 == 0) ? node : node faults on the division exactly when node's
    # position is evaluated
    zero = A.Literal(0, "int", ty="int")
    trap = A.BinaryOp("==", A.BinaryOp("/", zero, copy.copy(zero), ty="int"), copy.copy(zero), ty="bool")
    return A.Conditional(trap, node, copy.deepcopy(node), ty=node.ty)


def _replace(parent: A.Node, target: A.Node, new: A.Node) -> bool:
    for name, value in vars(parent).items():
        if value is target:
            setattr(parent, name, new)
            return True
        if isinstance(value, list):
            for i, item in enumerate(value):
                if item is target:
                    value[i] = new
                    return True
                if isinstance(item, tuple) and target in item:
                    value[i] = tuple(new if x is target else x for x in item)
                    return True
    return False


def trap_reaches(project: Project, anchor, tests, policy: TimeoutPolicy) -> set[str]:
    """Tests that evaluate the operator node at ``anchor``, found by planting a fault there."""
    program = project.parse()
    target = parent = None
    for node in program.walk():
        for child in node.children():
            if isinstance(child, A.BinaryOp) and child.op_span == anchor:
                target, parent = child, node
    assert target is not None, anchor
    assert _replace(parent, target, _fault_if_evaluated(target))
    typed, diags = check(program)
    assert not [d for d in diags if d.severity is Severity.ERROR]
    compiled = compile_typed(typed)
    hit = set()
    for t in tests:
        o = run_test(compiled, t, 0, policy)
        if o.status is Status.FAIL and "division by zero" in o.message:
            hit.add(t.test_id)
    return hit


def tests_per_mutant(reached: dict[str, frozenset[int]]) -> dict[int, int]:
    counts: dict[int, int] = {}
    for test_id in reached:
        for m in reached[test_id]:
            counts[m] = counts.get(m, 0) + 1
    return counts


def scan_decoupling(tests: list[str], reached: dict[str, frozenset[int]]) -> float:
    """Brute-force mean of |T(m)|/|T| over mutants reached by at least one test."""
    mutants = sorted({m for t in tests for m in reached[t]})
    total = 0.0
    for m in mutants:
        hits = 0
        for t in tests:
            if m in reached[t]:
                hits += 1
        total += hits / len(tests)
    return total / len(mutants)
