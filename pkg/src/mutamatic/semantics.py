"""Static typing for MiniC and local mutant validity checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .frontend import ast as A
from .frontend.ast import SourceSpan
from .frontend.parser import PRECEDENCE

NUMERIC = ("int", "float")
ARITHMETIC = ("+", "-", "*", "/", "%")
RELATIONAL = ("<", "<=", ">", ">=", "==", "!=")
LOGICAL = ("&&", "||", "&", "|")

# name -> (return type, parameter types)
BUILTINS: dict[str, tuple[str, tuple[str, ...]]] = {
    "print": ("void", ("string",)),
    "readInput": ("string", ()),
    "itos": ("string", ("int",)),
    "parseInt": ("int", ("string",)),
    "len": ("int", ("string",)),
    "__split": ("bool", ("int",)),
}


def binary_result_type(op: str, left: str, right: str) -> Optional[str]:
    """Result type of ``left op right``, or None when the operands are invalid."""
    numeric = left in NUMERIC and right in NUMERIC
    if op == "%":
        return "int" if left == right == "int" else None
    if op in ("+", "-", "*", "/"):
        if numeric:
            return "float" if "float" in (left, right) else "int"
        if op == "+" and left == right == "string":
            return "string"
        return None
    if op in ("<", "<=", ">", ">="):
        return "bool" if numeric else None
    if op in ("==", "!="):
        return "bool" if numeric or (left == right and left in ("bool", "string")) else None
    if op in ("&", "|"):
        return left if left == right and left in ("int", "bool") else None
    if op in ("&&", "||"):
        return "bool" if left == right == "bool" else None
    raise ValueError(f"unknown operator {op!r}")


def assignable(target: str, value: str) -> bool:
    return target == value or (target == "float" and value == "int")


def unify(a: str, b: str) -> Optional[str]:
    if a == b:
        return a
    if a in NUMERIC and b in NUMERIC:
        return "float"
    return None


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    span: Optional[SourceSpan]
    severity: Severity
    message: str

    def __str__(self):
        where = f"{self.span.file_id}:{self.span.begin}" if self.span else "<program>"
        return f"{where}: {self.severity.value}: {self.message}"


class TypeCheckError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics[:5]))
        self.diagnostics = diagnostics


@dataclass
class Signature:
    ret: str
    params: tuple[str, ...]


@dataclass
class TypedAst:
    """A type-annotated program plus an index of its operator anchors."""

    program: A.Program
    anchors: dict[tuple[str, int, int], A.BinaryOp] = field(default_factory=dict)
    functions: dict[str, Signature] = field(default_factory=dict)
    globals: dict[str, str] = field(default_factory=dict)
    externs: dict[str, str] = field(default_factory=dict)
    # id(child) -> parent, for expression nodes
    parents: dict[int, A.Node] = field(default_factory=dict, repr=False)


@dataclass
class _Var:
    type: str
    const: bool = False
    extern: bool = False


class _Checker:
    def __init__(self, program: A.Program):
        self.program = program
        self.diags: list[Diagnostic] = []
        self.functions: dict[str, Signature] = {}
        self.scopes: list[dict[str, _Var]] = [{}]
        self.anchors: dict[tuple[str, int, int], A.BinaryOp] = {}
        self.ret_type: Optional[str] = None

    def error(self, node: Optional[A.Node], message: str):
        self.diags.append(Diagnostic(node.span if node is not None else None, Severity.ERROR, message))

    # -- scopes --

    def lookup(self, name: str) -> Optional[_Var]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def declare(self, node: A.Node, name: str, var: _Var):
        if name in self.scopes[-1]:
            self.error(node, f"redeclaration of {name!r}")
        self.scopes[-1][name] = var

    # -- driver --

    def run(self):
        for decl in self.program.decls:
            if isinstance(decl, A.FunctionDecl):
                if decl.name in self.functions or decl.name in BUILTINS:
                    self.error(decl, f"redefinition of function {decl.name!r}")
                self.functions[decl.name] = Signature(decl.ret_type, tuple(p.type for p in decl.params))
        test_names = set()
        for decl in self.program.decls:
            if isinstance(decl, A.ExternDecl):
                if decl.type != "int":
                    self.error(decl, "extern variables must be int")
                self.declare(decl, decl.name, _Var(decl.type, const=True, extern=True))
            elif isinstance(decl, A.VarDecl):
                self.var_decl(decl)
            elif isinstance(decl, A.FunctionDecl):
                self.function(decl)
            elif isinstance(decl, A.TestDecl):
                if decl.name in test_names:
                    self.error(decl, f"duplicate test {decl.name!r}")
                test_names.add(decl.name)
                self.ret_type = "void"
                self.scopes.append({})
                self.block(decl.body, new_scope=False)
                self.scopes.pop()

    def function(self, decl: A.FunctionDecl):
        self.ret_type = decl.ret_type
        self.scopes.append({})
        for p in decl.params:
            self.declare(p, p.name, _Var(p.type))
        self.block(decl.body, new_scope=False)
        self.scopes.pop()

    # -- statements --

    def block(self, block: A.Block, new_scope: bool = True):
        if new_scope:
            self.scopes.append({})
        for stmt in block.stmts:
            self.stmt(stmt)
        if new_scope:
            self.scopes.pop()

    def var_decl(self, node: A.VarDecl):
        ty = self.expr(node.init, const_ctx=node.const)
        if ty is not None and not assignable(node.type, ty):
            self.error(node, f"cannot initialise {node.type} {node.name!r} with {ty}")
        self.declare(node, node.name, _Var(node.type, const=node.const))

    def cond(self, node: A.Expr, what: str, const_ctx: bool = False):
        ty = self.expr(node, const_ctx)
        if ty is not None and ty != "bool":
            self.error(node, f"{what} condition must be bool, not {ty}")

    def stmt(self, node: A.Stmt):
        if isinstance(node, A.VarDecl):
            self.var_decl(node)
        elif isinstance(node, A.Assign):
            var = self.lookup(node.name)
            ty = self.expr(node.value)
            if var is None:
                self.error(node, f"assignment to undeclared variable {node.name!r}")
            elif var.const:
                self.error(node, f"assignment to read-only variable {node.name!r}")
            elif ty is not None and not assignable(var.type, ty):
                self.error(node, f"cannot assign {ty} to {var.type} {node.name!r}")
        elif isinstance(node, A.If):
            self.cond(node.cond, "if")
            self.block(node.then)
            if isinstance(node.other, A.Block):
                self.block(node.other)
            elif node.other is not None:
                self.stmt(node.other)
        elif isinstance(node, A.While):
            self.cond(node.cond, "while")
            self.block(node.body)
        elif isinstance(node, A.Return):
            if node.value is None:
                if self.ret_type != "void":
                    self.error(node, "non-void function must return a value")
            else:
                ty = self.expr(node.value)
                if self.ret_type == "void":
                    self.error(node, "void function cannot return a value")
                elif ty is not None and not assignable(self.ret_type, ty):
                    self.error(node, f"cannot return {ty} from {self.ret_type} function")
        elif isinstance(node, A.ExprStmt):
            self.expr(node.expr)
        elif isinstance(node, A.AssertStmt):
            self.cond(node.cond, "assert")
        elif isinstance(node, A.Block):
            self.block(node)
        else:
            self.error(node, f"unexpected statement {node.kind}")

    # -- expressions --

    def expr(self, node: A.Expr, const_ctx: bool = False) -> Optional[str]:
        node.const_ctx = const_ctx
        ty = self._expr(node, const_ctx)
        node.ty = ty
        return ty

    def _expr(self, node: A.Expr, const_ctx: bool) -> Optional[str]:
        if isinstance(node, A.Literal):
            return node.lit_type
        if isinstance(node, A.VarRef):
            var = self.lookup(node.name)
            if var is None:
                self.error(node, f"use of undeclared identifier {node.name!r}")
                return None
            return var.type
        if isinstance(node, A.BinaryOp):
            if node.op_span is not None:
                self.anchors[node.op_span.key()] = node
            lt = self.expr(node.left, const_ctx)
            rt = self.expr(node.right, const_ctx)
            if lt is None or rt is None:
                return None
            ty = binary_result_type(node.op, lt, rt)
            if ty is None:
                self.error(node, f"invalid operands to binary expression ({lt} {node.op} {rt})")
            return ty
        if isinstance(node, A.UnaryOp):
            ty = self.expr(node.operand, const_ctx)
            if ty is None:
                return None
            if node.op == "-" and ty in NUMERIC:
                return ty
            if node.op == "!" and ty == "bool":
                return ty
            self.error(node, f"invalid argument type {ty} to unary '{node.op}'")
            return None
        if isinstance(node, A.Call):
            arg_types = [self.expr(a, const_ctx) for a in node.args]
            sig = self.functions.get(node.name)
            if sig is None and node.name in BUILTINS:
                sig = Signature(*BUILTINS[node.name])
            if sig is None:
                self.error(node, f"call to undeclared function {node.name!r}")
                return None
            if len(arg_types) != len(sig.params):
                self.error(node, f"{node.name!r} expects {len(sig.params)} arguments, got {len(arg_types)}")
                return sig.ret
            for arg, got, want in zip(node.args, arg_types, sig.params):
                if got is not None and not assignable(want, got):
                    self.error(arg, f"cannot pass {got} as {want} to {node.name!r}")
            return sig.ret
        if isinstance(node, A.Conditional):
            self.cond(node.cond, "conditional", const_ctx)
            a = self.expr(node.then, const_ctx)
            b = self.expr(node.other, const_ctx)
            if a is None or b is None:
                return None
            ty = unify(a, b)
            if ty is None:
                self.error(node, f"incompatible operand types ({a} and {b})")
            return ty
        if isinstance(node, A.Switch):
            st = self.expr(node.scrutinee, const_ctx)
            if st is not None and st != "int":
                self.error(node.scrutinee, "switch selector must be int")
            labels = [label for label, _ in node.cases]
            if len(set(labels)) != len(labels):
                self.error(node, "duplicate case label")
            ty = self.expr(node.default, const_ctx)
            for _, arm in node.cases:
                at = self.expr(arm, const_ctx)
                if ty is None or at is None:
                    ty = None
                    continue
                merged = unify(ty, at)
                if merged is None:
                    self.error(arm, f"incompatible case type {at} (expected {ty})")
                ty = merged
            return ty
        if isinstance(node, A.Probe):
            return self.expr(node.expr, const_ctx)
        self.error(node, f"unexpected expression {node.kind}")
        return None


def check(program: A.Program) -> tuple[TypedAst, list[Diagnostic]]:
    """Annotate ``program`` in place; returns the typed view and all diagnostics."""
    checker = _Checker(program)
    checker.run()
    globals_ = {}
    externs = {}
    for decl in program.decls:
        if isinstance(decl, A.ExternDecl):
            externs[decl.name] = decl.type
        elif isinstance(decl, A.VarDecl):
            globals_[decl.name] = decl.type
    parents = {id(c): n for n in program.walk() for c in n.children()}
    typed = TypedAst(program, checker.anchors, checker.functions, globals_, externs, parents)
    return typed, checker.diags


def type_check(program: A.Program) -> TypedAst:
    """Type-check the whole program, collecting every diagnostic before failing."""
    typed, diags = check(program)
    errors = [d for d in diags if d.severity is Severity.ERROR]
    if errors:
        raise TypeCheckError(errors)
    return typed


# -- mutant validity ----------------------------------------------------------


class Validity(str, Enum):
    VALID = "valid"
    INVALID_TYPE = "invalid_type"
    INVALID_CONST = "invalid_const"


@dataclass(frozen=True)
class ValidityVerdict:
    status: Validity
    reason: str = ""

    @property
    def valid(self) -> bool:
        return self.status is Validity.VALID


class AnchorNotFound(KeyError):
    pass


@dataclass(frozen=True)
class MutantExpr:
    """What the textual mutant turns into, expressed on the typed tree.

    ``site`` is the smallest original node whose subtree changes. It is the
    anchored node itself unless the new operator binds differently and the
    surrounding operator chain re-associates, e.g. ``a || b || c`` with the
    second ``||`` swapped for ``&&`` parses as ``a || (b && c)``.
    """

    site: A.BinaryOp
    expr: A.Expr
    reassociated: bool
    error: str = ""


def _operator_region(typed: TypedAst, node: A.BinaryOp) -> A.BinaryOp:
    """Root of the unparenthesised binary-operator chain holding ``node``."""
    cur = node
    while not cur.parens:
        parent = typed.parents.get(id(cur))
        if not isinstance(parent, A.BinaryOp):
            break
        cur = parent
    return cur


def _flatten(root: A.BinaryOp) -> tuple[list[A.Expr], list[A.BinaryOp], object]:
    """In-order leaves and operators of a region, plus its shape.

    A shape is a leaf index or ``(op index, left shape, right shape)``.
    """
    leaves: list[A.Expr] = []
    ops: list[A.BinaryOp] = []

    def walk(n: A.Expr, top: bool):
        if isinstance(n, A.BinaryOp) and (top or not n.parens):
            left = walk(n.left, False)
            ops.append(n)
            k = len(ops) - 1
            return (k, left, walk(n.right, False))
        leaves.append(n)
        return len(leaves) - 1

    return leaves, ops, walk(root, True)


def _reparse(texts: list[str]):
    """Precedence climbing over ``leaf op leaf op ... leaf`` (all left-assoc)."""
    pos = 0

    def climb(min_level: int):
        nonlocal pos
        left = pos
        while pos < len(texts) and PRECEDENCE[texts[pos]] >= min_level:
            k = pos
            pos += 1
            right = climb(PRECEDENCE[texts[k]] + 1)
            left = (k, left, right)
        return left

    # after consuming leaf i the next operator is operator i, so one cursor serves both
    return climb(0)


def mutant_expression(typed: TypedAst, anchor: SourceSpan, replacement: str) -> MutantExpr:
    node = typed.anchors.get(anchor.key())
    if node is None:
        raise AnchorNotFound(anchor)
    root = _operator_region(typed, node)
    leaves, ops, old_shape = _flatten(root)
    texts = [replacement if o is node else o.op for o in ops]
    new_shape = _reparse(texts)

    anchor_k = next(k for k, o in enumerate(ops) if o is node)
    site_shape, shape = old_shape, new_shape
    while site_shape[0] == shape[0] != anchor_k:
        # same operator on top: operators left of it stay left, so follow the anchor's side
        side = 1 if anchor_k < shape[0] else 2
        site_shape, shape = site_shape[side], shape[side]
    site = ops[site_shape[0]]
    errors: list[str] = []

    def build(sh) -> A.Expr:
        if not isinstance(sh, tuple):
            return leaves[sh]
        k, l, r = sh
        left, right = build(l), build(r)
        ty = None
        if left.ty is not None and right.ty is not None:
            ty = binary_result_type(texts[k], left.ty, right.ty)
            if ty is None and not errors:
                errors.append(f"invalid operands to binary expression ({left.ty} {texts[k]} {right.ty})")
        return A.BinaryOp(texts[k], left, right, ty=ty, span=site.span)

    expr = build(shape)
    reassociated = shape != site_shape or site is not node
    return MutantExpr(site, expr, reassociated, errors[0] if errors else "")


def check_mutant_validity(typed: TypedAst, mutant) -> ValidityVerdict:
    """Decide whether the textual mutant still type-checks.

    Only the annotated types inside the mutated operator chain are consulted.
    A type error takes precedence over the const-context exclusion.
    """
    me = mutant_expression(typed, mutant.anchor, mutant.replacement)
    if me.expr.ty is None:
        return ValidityVerdict(Validity.INVALID_TYPE, me.error or "invalid operands to binary expression")
    if me.expr.ty != me.site.ty:
        return ValidityVerdict(Validity.INVALID_TYPE, f"result type changes from {me.site.ty} to {me.expr.ty}")
    if me.site.const_ctx:
        return ValidityVerdict(Validity.INVALID_CONST, "operator lies in a const initializer")
    return ValidityVerdict(Validity.VALID)
