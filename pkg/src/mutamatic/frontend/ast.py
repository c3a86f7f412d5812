"""AST node definitions for MiniC.

Nodes are plain dataclasses. Equality is structural: spans, resolved types and
const-context flags are excluded from comparison, so a reparsed pretty-print
compares equal to the tree it was printed from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Iterator, Optional, Union


@dataclass(frozen=True, order=True)
class SourceSpan:
    file_id: str
    begin: int
    end: int

    def __post_init__(self):
        if not self.begin < self.end:
            raise ValueError(f"empty or inverted span {self.begin}..{self.end}")

    def contains(self, other: "SourceSpan") -> bool:
        return (
            self.file_id == other.file_id
            and self.begin <= other.begin
            and other.end <= self.end
        )

    def cover(self, other: "SourceSpan") -> "SourceSpan":
        return SourceSpan(self.file_id, min(self.begin, other.begin), max(self.end, other.end))

    def key(self) -> tuple[str, int, int]:
        return (self.file_id, self.begin, self.end)


def _meta(default=None):
    return field(default=default, compare=False, kw_only=True, repr=False)


@dataclass
class Node:
    kind: ClassVar[str] = "Node"
    span: Optional[SourceSpan] = _meta()

    def children(self) -> list["Node"]:
        return []

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children()))


# -- expressions -------------------------------------------------------------


@dataclass
class Expr(Node):
    ty: Optional[str] = _meta()
    const_ctx: bool = _meta(False)
    # how many parenthesis pairs surround this expression in the source
    parens: int = _meta(0)


@dataclass
class Literal(Expr):
    kind: ClassVar[str] = "Literal"
    value: Union[int, float, bool, str] = 0
    lit_type: str = "int"


@dataclass
class VarRef(Expr):
    kind: ClassVar[str] = "VarRef"
    name: str = ""


@dataclass
class BinaryOp(Expr):
    kind: ClassVar[str] = "BinaryOp"
    op: str = "+"
    left: Expr = None
    right: Expr = None
    # the mutation anchor; kept apart from the node span
    op_span: Optional[SourceSpan] = _meta()

    def children(self):
        return [self.left, self.right]


@dataclass
class UnaryOp(Expr):
    kind: ClassVar[str] = "UnaryOp"
    op: str = "-"
    operand: Expr = None

    def children(self):
        return [self.operand]


@dataclass
class Call(Expr):
    kind: ClassVar[str] = "Call"
    name: str = ""
    args: list[Expr] = field(default_factory=list)

    def children(self):
        return list(self.args)


@dataclass
class Conditional(Expr):
    kind: ClassVar[str] = "Conditional"
    cond: Expr = None
    then: Expr = None
    other: Expr = None
    # set on the outermost node of a schemata guard chain
    site: Optional[int] = _meta()

    def children(self):
        return [self.cond, self.then, self.other]


@dataclass
class Switch(Expr):
    """Expression-level indexed dispatch: ``switch (s) { case 1: e1; default: e0; }``."""

    kind: ClassVar[str] = "Switch"
    scrutinee: Expr = None
    cases: list[tuple[int, Expr]] = field(default_factory=list)
    default: Expr = None
    site: Optional[int] = _meta()

    def children(self):
        return [self.scrutinee, *(e for _, e in self.cases), self.default]


@dataclass
class Probe(Expr):
    """Reachability probe wrapped around a guard site: ``__probe(site, expr)``."""

    kind: ClassVar[str] = "Probe"
    site: int = 0
    expr: Expr = None

    def children(self):
        return [self.expr]


# -- statements --------------------------------------------------------------


@dataclass
class Stmt(Node):
    pass


@dataclass
class Block(Stmt):
    kind: ClassVar[str] = "Block"
    stmts: list[Stmt] = field(default_factory=list)

    def children(self):
        return list(self.stmts)


@dataclass
class VarDecl(Stmt):
    kind: ClassVar[str] = "VarDecl"
    type: str = "int"
    name: str = ""
    init: Expr = None
    const: bool = False

    def children(self):
        return [self.init]


@dataclass
class Assign(Stmt):
    kind: ClassVar[str] = "Assign"
    name: str = ""
    value: Expr = None

    def children(self):
        return [self.value]


@dataclass
class If(Stmt):
    kind: ClassVar[str] = "If"
    cond: Expr = None
    then: Block = None
    other: Optional[Union[Block, "If"]] = None

    def children(self):
        out = [self.cond, self.then]
        if self.other is not None:
            out.append(self.other)
        return out


@dataclass
class While(Stmt):
    kind: ClassVar[str] = "While"
    cond: Expr = None
    body: Block = None

    def children(self):
        return [self.cond, self.body]


@dataclass
class Return(Stmt):
    kind: ClassVar[str] = "Return"
    value: Optional[Expr] = None

    def children(self):
        return [] if self.value is None else [self.value]


@dataclass
class ExprStmt(Stmt):
    kind: ClassVar[str] = "ExprStmt"
    expr: Expr = None

    def children(self):
        return [self.expr]


@dataclass
class AssertStmt(Stmt):
    kind: ClassVar[str] = "AssertStmt"
    cond: Expr = None

    def children(self):
        return [self.cond]


# -- declarations ------------------------------------------------------------


@dataclass
class ParamDecl(Node):
    kind: ClassVar[str] = "ParamDecl"
    type: str = "int"
    name: str = ""


@dataclass
class FunctionDecl(Node):
    kind: ClassVar[str] = "FunctionDecl"
    ret_type: str = "void"
    name: str = ""
    params: list[ParamDecl] = field(default_factory=list)
    body: Block = None

    def children(self):
        return [*self.params, self.body]


@dataclass
class TestDecl(Node):
    kind: ClassVar[str] = "TestDecl"
    name: str = ""
    body: Block = None

    def children(self):
        return [self.body]


@dataclass
class ExternDecl(Node):
    kind: ClassVar[str] = "ExternDecl"
    type: str = "int"
    name: str = ""


@dataclass
class Program(Node):
    kind: ClassVar[str] = "Program"
    decls: list[Node] = field(default_factory=list)

    def children(self):
        return list(self.decls)

    def functions(self) -> list[FunctionDecl]:
        return [d for d in self.decls if isinstance(d, FunctionDecl)]

    def tests(self) -> list[TestDecl]:
        return [d for d in self.decls if isinstance(d, TestDecl)]


EXPR_SLOTS = {
    "VarDecl": "init",
    "Assign": "value",
    "If": "cond",
    "While": "cond",
    "Return": "value",
    "ExprStmt": "expr",
    "AssertStmt": "cond",
}
