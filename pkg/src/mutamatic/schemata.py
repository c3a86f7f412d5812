"""Mutant schemata: embed every valid mutant behind a runtime selector."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

from .frontend import ast as A
from .frontend.ast import EXPR_SLOTS
from .frontend.printer import pretty_print
from .mutgen import Mutant
from .semantics import MutantExpr, TypedAst, mutant_expression


class Encoding(str, Enum):
    TERNARY = "ternary"
    SWITCH = "switch"
    # ternary chain whose guards fork the run instead of testing the selector
    SPLIT = "split"


class EncodingError(Exception):
    pass


@dataclass
class SchemataProgram:
    program: A.Program
    mutant_index: dict[int, int]
    sites: dict[int, tuple[int, ...]]
    selector_name: str = "MNR"
    encoding: Encoding = Encoding.TERNARY
    instrumented: bool = False
    mutants: dict[int, Mutant] = field(default_factory=dict, repr=False)

    def source(self) -> str:
        return pretty_print(self.program)


# -- generic expression rewriting -------------------------------------------


def _map_expr(node: A.Expr, fn: Callable[[A.Expr], A.Expr], memo: dict) -> A.Expr:
    key = id(node)
    if key in memo:
        return memo[key]
    if isinstance(node, A.BinaryOp):
        node.left = _map_expr(node.left, fn, memo)
        node.right = _map_expr(node.right, fn, memo)
    elif isinstance(node, A.UnaryOp):
        node.operand = _map_expr(node.operand, fn, memo)
    elif isinstance(node, A.Call):
        node.args = [_map_expr(a, fn, memo) for a in node.args]
    elif isinstance(node, A.Conditional):
        node.cond = _map_expr(node.cond, fn, memo)
        node.then = _map_expr(node.then, fn, memo)
        node.other = _map_expr(node.other, fn, memo)
    elif isinstance(node, A.Switch):
        node.scrutinee = _map_expr(node.scrutinee, fn, memo)
        node.cases = [(label, _map_expr(e, fn, memo)) for label, e in node.cases]
        node.default = _map_expr(node.default, fn, memo)
    elif isinstance(node, A.Probe):
        node.expr = _map_expr(node.expr, fn, memo)
    out = fn(node)
    memo[key] = out
    return out


def _statement_roots(node: A.Node) -> Iterable[tuple[A.Node, str]]:
    """Every (statement, attribute) pair holding a top-level expression."""
    if isinstance(node, A.Program):
        for decl in node.decls:
            yield from _statement_roots(decl)
    elif isinstance(node, (A.FunctionDecl, A.TestDecl)):
        yield from _statement_roots(node.body)
    elif isinstance(node, A.Block):
        for stmt in node.stmts:
            yield from _statement_roots(stmt)
    else:
        attr = EXPR_SLOTS.get(node.kind)
        if attr is not None and getattr(node, attr) is not None:
            yield node, attr
        if isinstance(node, A.If):
            yield from _statement_roots(node.then)
            if node.other is not None:
                yield from _statement_roots(node.other)
        elif isinstance(node, A.While):
            yield from _statement_roots(node.body)


def map_program(program: A.Program, fn: Callable[[A.Expr], A.Expr]) -> A.Program:
    memo: dict = {}
    for stmt, attr in _statement_roots(program):
        setattr(stmt, attr, _map_expr(getattr(stmt, attr), fn, memo))
    return program


# -- builders ----------------------------------------------------------------


def _guard(encoding: Encoding, selector: str, mutant_id: int) -> A.Expr:
    if encoding is Encoding.SPLIT:
        return A.Call("__split", [A.Literal(mutant_id, "int", ty="int")], ty="bool")
    return A.BinaryOp("==", A.VarRef(selector, ty="int"), A.Literal(mutant_id, "int", ty="int"), ty="bool")


def _site_key(node: A.Expr):
    return node.span.key() if isinstance(node, A.BinaryOp) and node.span is not None else None


def _strip_anchors(expr: A.Expr) -> A.Expr:
    for n in expr.walk():
        if isinstance(n, A.BinaryOp):
            n.op_span = None
    return expr


@dataclass
class _Planned:
    mutant: Mutant
    expr: MutantExpr

    def arm(self, node: A.BinaryOp) -> A.Expr:
        """Replacement for ``node`` (the site, possibly already rewritten)."""
        if not self.expr.reassociated:
            return A.BinaryOp(self.mutant.replacement, node.left, node.right, ty=self.expr.expr.ty, span=node.span)
        return _strip_anchors(copy.deepcopy(self.expr.expr))


def build_schemata(
    typed: TypedAst,
    mutants: Iterable[Mutant],
    encoding: Encoding | str = Encoding.TERNARY,
    selector: str = "MNR",
) -> SchemataProgram:
    """Rewrite a typed program so each valid mutant sits behind a selector guard.

    A mutant's guard site is the expression its textual insertion changes.
    Guards within a site are ordered by ascending mutant id and the original
    expression is always the final arm. Non-valid mutants are skipped.
    """
    encoding = Encoding(encoding)
    if selector in typed.globals or selector in typed.externs:
        raise EncodingError(f"selector name {selector!r} is already declared")

    by_site: dict[tuple, list[_Planned]] = {}
    for m in sorted((m for m in mutants if m.valid), key=lambda m: m.id):
        me = mutant_expression(typed, m.anchor, m.replacement)
        if me.expr.ty != me.site.ty:
            raise EncodingError(
                f"mutant {m.id} ({m.original} -> {m.replacement}) changes type {me.site.ty} -> {me.expr.ty}"
            )
        by_site.setdefault(_site_key(me.site), []).append(_Planned(m, me))

    program = copy.deepcopy(typed.program)
    mutant_index: dict[int, int] = {}
    sites: dict[int, tuple[int, ...]] = {}

    if encoding is Encoding.SWITCH:
        _build_switch(program, by_site, selector, mutant_index, sites)
    else:
        site_of = {key: i + 1 for i, key in enumerate(sorted(by_site))}

        def rewrite(node: A.Expr) -> A.Expr:
            key = _site_key(node)
            group = by_site.get(key) if key is not None else None
            if not group:
                return node
            site = site_of[key]
            chain: A.Expr = node
            for plan in reversed(group):
                chain = A.Conditional(
                    _guard(encoding, selector, plan.mutant.id), plan.arm(node), chain, ty=node.ty, span=node.span
                )
                mutant_index[plan.mutant.id] = site
            chain.site = site
            sites[site] = tuple(p.mutant.id for p in group)
            return chain

        map_program(program, rewrite)

    program.decls.insert(0, A.ExternDecl("int", selector))
    return SchemataProgram(
        program,
        mutant_index,
        dict(sorted(sites.items())),
        selector,
        encoding,
        mutants={p.mutant.id: p.mutant for group in by_site.values() for p in group},
    )


def _build_switch(program, by_site, selector, mutant_index, sites):
    roots = []
    for stmt, attr in _statement_roots(program):
        keys = [k for k in (_site_key(n) for n in getattr(stmt, attr).walk()) if k in by_site]
        if keys:
            roots.append((min(keys), stmt, attr, keys))
    roots.sort(key=lambda r: r[0])

    for site, (_, stmt, attr, keys) in enumerate(roots, start=1):
        root = getattr(stmt, attr)
        group = sorted((p for k in keys for p in by_site[k]), key=lambda p: p.mutant.id)
        cases = []
        for plan in group:
            target = _site_key(plan.expr.site)
            case = copy.deepcopy(root)
            case = _map_expr(case, lambda n, t=target, p=plan: p.arm(n) if _site_key(n) == t else n, {})
            cases.append((plan.mutant.id, _strip_anchors(case)))
            mutant_index[plan.mutant.id] = site
        switch = A.Switch(A.VarRef(selector, ty="int"), cases, root, ty=root.ty, span=root.span, site=site)
        setattr(stmt, attr, switch)
        sites[site] = tuple(p.mutant.id for p in group)


def instrument_reachability(sp: SchemataProgram) -> SchemataProgram:
    """Wrap every guard site in a probe that reports the site when evaluated."""
    program = copy.deepcopy(sp.program)

    def wrap(node: A.Expr) -> A.Expr:
        site = getattr(node, "site", None)
        if isinstance(node, (A.Conditional, A.Switch)) and site is not None:
            return A.Probe(site, node, ty=node.ty, span=node.span)
        return node

    map_program(program, wrap)
    return SchemataProgram(
        program, dict(sp.mutant_index), dict(sp.sites), sp.selector_name, sp.encoding, True, dict(sp.mutants)
    )
