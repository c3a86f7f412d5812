from __future__ import annotations

from . import ast as A
from .parser import PRECEDENCE

_UNARY = len(PRECEDENCE)
_PRIMARY = _UNARY + 1
_ESCAPE = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def _float_text(value: float) -> str:
    text = repr(float(value))
    mantissa, _, exponent = text.partition("e")
    if "." not in mantissa:
        mantissa += ".0"
    return mantissa + ("e" + exponent if exponent else "")


def _literal(node: A.Literal) -> str:
    if node.lit_type == "bool":
        return "true" if node.value else "false"
    if node.lit_type == "float":
        return _float_text(node.value)
    if node.lit_type == "string":
        return '"' + "".join(_ESCAPE.get(c, c) for c in node.value) + '"'
    return str(node.value)


def _prec(node: A.Expr) -> int:
    if isinstance(node, A.BinaryOp):
        return PRECEDENCE[node.op]
    if isinstance(node, A.UnaryOp):
        return _UNARY
    # conditionals are always printed inside their own parentheses
    return _PRIMARY


def print_expr(node: A.Expr, need: int = -1) -> str:
    if isinstance(node, A.BinaryOp):
        p = PRECEDENCE[node.op]
        text = f"{print_expr(node.left, p)} {node.op} {print_expr(node.right, p + 1)}"
    elif isinstance(node, A.UnaryOp):
        text = node.op + print_expr(node.operand, _UNARY)
    elif isinstance(node, A.Literal):
        text = _literal(node)
    elif isinstance(node, A.VarRef):
        text = node.name
    elif isinstance(node, A.Call):
        text = f"{node.name}({', '.join(print_expr(a) for a in node.args)})"
    elif isinstance(node, A.Conditional):
        text = f"({print_expr(node.cond, 0)} ? {print_expr(node.then)} : {print_expr(node.other)})"
    elif isinstance(node, A.Switch):
        cases = " ".join(f"case {label}: {print_expr(e)};" for label, e in node.cases)
        text = f"switch ({print_expr(node.scrutinee)}) {{ {cases} default: {print_expr(node.default)}; }}"
    elif isinstance(node, A.Probe):
        text = f"__probe({node.site}, {print_expr(node.expr)})"
    else:
        raise TypeError(f"not an expression: {node!r}")
    if _prec(node) < need:
        return f"({text})"
    return text


class _Printer:
    def __init__(self, indent: str = "    "):
        self.indent = indent
        self.lines: list[str] = []

    def emit(self, depth: int, text: str):
        self.lines.append(self.indent * depth + text)

    def block(self, block: A.Block, depth: int, head: str, close: bool = True):
        self.emit(depth, f"{head} {{" if head else "{")
        for stmt in block.stmts:
            self.stmt(stmt, depth + 1)
        if close:
            self.emit(depth, "}")

    def stmt(self, node: A.Stmt, depth: int):
        if isinstance(node, A.VarDecl):
            prefix = "const " if node.const else ""
            self.emit(depth, f"{prefix}{node.type} {node.name} = {print_expr(node.init)};")
        elif isinstance(node, A.Assign):
            self.emit(depth, f"{node.name} = {print_expr(node.value)};")
        elif isinstance(node, A.ExprStmt):
            self.emit(depth, f"{print_expr(node.expr)};")
        elif isinstance(node, A.Return):
            self.emit(depth, "return;" if node.value is None else f"return {print_expr(node.value)};")
        elif isinstance(node, A.AssertStmt):
            self.emit(depth, f"assert({print_expr(node.cond)});")
        elif isinstance(node, A.While):
            self.block(node.body, depth, f"while ({print_expr(node.cond)})")
        elif isinstance(node, A.If):
            self._if(node, depth, "")
        elif isinstance(node, A.Block):
            self.block(node, depth, "")
        else:
            raise TypeError(f"not a statement: {node!r}")

    def _if(self, node: A.If, depth: int, lead: str):
        self.block(node.then, depth, f"{lead}if ({print_expr(node.cond)})", close=False)
        if node.other is None:
            self.emit(depth, "}")
        elif isinstance(node.other, A.If):
            self._if(node.other, depth, "} else ")
        else:
            self.block(node.other, depth, "} else")

    def decl(self, node: A.Node):
        if isinstance(node, A.ExternDecl):
            self.emit(0, f"extern {node.type} {node.name};")
        elif isinstance(node, A.VarDecl):
            self.stmt(node, 0)
        elif isinstance(node, A.FunctionDecl):
            params = ", ".join(f"{p.type} {p.name}" for p in node.params)
            self.block(node.body, 0, f"{node.ret_type} {node.name}({params})")
        elif isinstance(node, A.TestDecl):
            self.block(node.body, 0, f"test {node.name}")
        else:
            raise TypeError(f"not a declaration: {node!r}")


def pretty_print(node: A.Node) -> str:
    p = _Printer()
    if isinstance(node, A.Program):
        for i, decl in enumerate(node.decls):
            if i and not (isinstance(decl, (A.ExternDecl, A.VarDecl)) and isinstance(node.decls[i - 1], (A.ExternDecl, A.VarDecl))):
                p.lines.append("")
            p.decl(decl)
    elif isinstance(node, A.Expr):
        return print_expr(node)
    elif isinstance(node, A.Stmt):
        p.stmt(node, 0)
    else:
        p.decl(node)
    return "\n".join(p.lines) + "\n"
