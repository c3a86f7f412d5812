"""Lower a type-checked MiniC program to flat instruction lists."""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Optional

from ..frontend import ast as A
from ..semantics import TypedAst, type_check

# opcodes; ordered roughly by how often the interpreter sees them
LOAD, CONST, BIN, STORE, JF, JMP, GLOAD, GSTORE, CALL, RET = range(10)
JF_KEEP, JT_KEEP, UN, POP, ASSERT, BUILTIN, HALT, SEL, FAULT, SWITCHV = range(10, 20)
# mutation machinery; these count as overhead steps, never as program work
# GJMP leaves a guarded arm, so the chosen arm costs exactly what the textual mutant costs
GUARD, SPLIT, SWITCH, PROBE, GJMP = range(20, 25)

OVERHEAD_OPS = frozenset({GUARD, SPLIT, SWITCH, PROBE, GJMP})

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1


class RuntimeFault(Exception):
    """A runtime error inside the MiniC program (the test fails)."""


class AssertionFailed(RuntimeFault):
    pass


class FixtureExhausted(RuntimeFault):
    """``readInput`` was called after the replay buffer ran out."""


def _wrap(v: int) -> int:
    return ((v - INT_MIN) & 0xFFFFFFFF) + INT_MIN


def add_i(a, b):
    r = a + b
    return r if INT_MIN <= r <= INT_MAX else _wrap(r)


def sub_i(a, b):
    r = a - b
    return r if INT_MIN <= r <= INT_MAX else _wrap(r)


def mul_i(a, b):
    r = a * b
    return r if INT_MIN <= r <= INT_MAX else _wrap(r)


def div_i(a, b):
    if b == 0:
        raise RuntimeFault("integer division by zero")
    q = abs(a) // abs(b)
    return _wrap(q if (a < 0) == (b < 0) else -q)


def mod_i(a, b):
    if b == 0:
        raise RuntimeFault("integer modulo by zero")
    return a - b * div_i(a, b)


def div_f(a, b):
    if b == 0:
        raise RuntimeFault("floating point division by zero")
    return a / b


def neg_i(a):
    return _wrap(-a)


_INT_OPS = {"+": add_i, "-": sub_i, "*": mul_i, "/": div_i, "%": mod_i}
_FLOAT_OPS = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": div_f}
_CMP_OPS = {
    "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
    "==": operator.eq, "!=": operator.ne, "&": operator.and_, "|": operator.or_,
}


def binary_fn(op: str, left: str, right: str, result: str):
    if op in _CMP_OPS:
        return _CMP_OPS[op]
    if result == "string":
        return operator.add
    if result == "float":
        return _FLOAT_OPS[op]
    return _INT_OPS[op]


# -- builtins (receive the interpreter state) --


def _print(state, s):
    state.output.append(s)


def _read_input(state):
    if state.input_pos >= len(state.inputs):
        raise FixtureExhausted("readInput() past the end of the input fixture")
    line = state.inputs[state.input_pos]
    state.input_pos += 1
    return line


def _parse_int(state, s):
    try:
        return _wrap(int(s.strip()))
    except ValueError:
        raise RuntimeFault(f"parseInt: not an integer: {s!r}") from None


BUILTIN_FNS = {
    "print": _print,
    "readInput": _read_input,
    "itos": lambda state, v: str(v),
    "parseInt": _parse_int,
    "len": lambda state, s: len(s),
}


@dataclass
class Function:
    name: str
    nparams: int
    nlocals: int = 0
    code: list = field(default_factory=list)


@dataclass
class CompiledProgram:
    functions: list[Function]
    function_index: dict[str, int]
    tests: dict[str, Function]
    test_order: list[str]
    init: Function
    nglobals: int
    # site id -> mutant ids (empty for programs without guards)
    sites: dict[int, tuple[int, ...]] = field(default_factory=dict)
    guard_ids: frozenset[int] = frozenset()
    instrumented: bool = False

    def has_probes(self) -> bool:
        return any(ins[0] == PROBE for fn in self.functions + list(self.tests.values()) + [self.init] for ins in fn.code)


class _FunctionCompiler:
    def __init__(self, gen: "_Codegen", fn: Function, params: list[A.ParamDecl], ret_type: str, is_test: bool):
        self.gen = gen
        self.fn = fn
        self.code = fn.code
        # name -> (slot, declared type)
        self.scopes: list[dict[str, tuple[int, str]]] = [{p.name: (i, p.type) for i, p in enumerate(params)}]
        self.next_slot = len(params)
        self.ret_type = ret_type
        self.is_test = is_test

    def emit(self, op, a=None, b=None) -> int:
        self.code.append((op, a, b))
        return len(self.code) - 1

    def patch(self, index: int, a=None, b=None):
        op, old_a, old_b = self.code[index]
        self.code[index] = (op, old_a if a is None else a, old_b if b is None else b)

    def here(self) -> int:
        return len(self.code)

    # -- variables --

    def resolve(self, name: str) -> tuple[str, int, str]:
        for scope in reversed(self.scopes):
            if name in scope:
                return ("local", *scope[name])
        if name in self.gen.externs:
            return "extern", 0, "int"
        return "global", self.gen.global_slots[name], self.gen.global_types[name]

    def declare(self, name: str, ty: str) -> int:
        slot = self.next_slot
        self.next_slot += 1
        self.fn.nlocals = max(self.fn.nlocals, self.next_slot)
        self.scopes[-1][name] = (slot, ty)
        return slot

    # -- statements --

    def block(self, block: A.Block):
        self.scopes.append({})
        for stmt in block.stmts:
            self.stmt(stmt)
        self.scopes.pop()

    def coerce(self, expr: A.Expr, target: str):
        self.expr(expr)
        if target == "float" and expr.ty == "int":
            self.emit(UN, float)

    def stmt(self, node: A.Stmt):
        if isinstance(node, A.VarDecl):
            self.coerce(node.init, node.type)
            self.emit(STORE, self.declare(node.name, node.type))
        elif isinstance(node, A.Assign):
            where, slot, target = self.resolve(node.name)
            self.coerce(node.value, target)
            self.emit(STORE if where == "local" else GSTORE, slot)
        elif isinstance(node, A.ExprStmt):
            self.expr(node.expr)
            if node.expr.ty != "void":
                self.emit(POP)
        elif isinstance(node, A.Return):
            if self.is_test:
                self.emit(HALT)
            elif node.value is None:
                self.emit(RET, False)
            else:
                self.coerce(node.value, self.ret_type)
                self.emit(RET, True)
        elif isinstance(node, A.AssertStmt):
            self.expr(node.cond)
            self.emit(ASSERT)
        elif isinstance(node, A.If):
            self.expr(node.cond)
            jf = self.emit(JF)
            self.block(node.then)
            if node.other is None:
                self.patch(jf, self.here())
            else:
                jmp = self.emit(JMP)
                self.patch(jf, self.here())
                if isinstance(node.other, A.If):
                    self.scopes.append({})
                    self.stmt(node.other)
                    self.scopes.pop()
                else:
                    self.block(node.other)
                self.patch(jmp, self.here())
        elif isinstance(node, A.While):
            top = self.here()
            self.expr(node.cond)
            jf = self.emit(JF)
            self.block(node.body)
            self.emit(JMP, top)
            self.patch(jf, self.here())
        elif isinstance(node, A.Block):
            self.block(node)
        else:
            raise TypeError(f"cannot compile {node.kind}")

    # -- expressions --

    def _selector_guard(self, cond: A.Expr) -> Optional[int]:
        if (
            isinstance(cond, A.BinaryOp)
            and cond.op == "=="
            and isinstance(cond.left, A.VarRef)
            and cond.left.name in self.gen.externs
            and isinstance(cond.right, A.Literal)
            and cond.right.lit_type == "int"
        ):
            return cond.right.value
        return None

    def _split_guard(self, cond: A.Expr) -> Optional[int]:
        if (
            isinstance(cond, A.Call)
            and cond.name == "__split"
            and len(cond.args) == 1
            and isinstance(cond.args[0], A.Literal)
        ):
            return cond.args[0].value
        return None

    def expr(self, node: A.Expr):
        if isinstance(node, A.Literal):
            self.emit(CONST, node.value)
        elif isinstance(node, A.VarRef):
            where, slot, _ = self.resolve(node.name)
            if where == "local":
                self.emit(LOAD, slot)
            elif where == "extern":
                self.emit(SEL)
            else:
                self.emit(GLOAD, slot)
        elif isinstance(node, A.BinaryOp):
            if node.op in ("&&", "||"):
                self.expr(node.left)
                jump = self.emit(JF_KEEP if node.op == "&&" else JT_KEEP)
                self.emit(POP)
                self.expr(node.right)
                self.patch(jump, self.here())
            else:
                self.expr(node.left)
                self.expr(node.right)
                self.emit(BIN, binary_fn(node.op, node.left.ty, node.right.ty, node.ty))
        elif isinstance(node, A.UnaryOp):
            self.expr(node.operand)
            if node.op == "!":
                self.emit(UN, operator.not_)
            else:
                self.emit(UN, neg_i if node.ty == "int" else operator.neg)
        elif isinstance(node, A.Call):
            if node.name in self.gen.function_index:
                callee = self.gen.signatures[node.name]
                for arg, want in zip(node.args, callee):
                    self.coerce(arg, want)
                self.emit(CALL, self.gen.function_index[node.name], len(node.args))
            elif node.name == "__split":
                raise TypeError("__split() may only appear as a guard condition")
            else:
                for arg in node.args:
                    self.expr(arg)
                self.emit(BUILTIN, BUILTIN_FNS[node.name], len(node.args))
        elif isinstance(node, A.Conditional):
            guard = self._selector_guard(node.cond)
            split = self._split_guard(node.cond)
            if guard is not None or split is not None:
                # fused compare-and-branch; jump target goes in the second operand
                mutant_id = guard if guard is not None else split
                jf = self.emit(GUARD if guard is not None else SPLIT, mutant_id, 0)
                self.gen.guard_ids.add(mutant_id)
                fused = True
            else:
                self.expr(node.cond)
                jf = self.emit(JF)
                fused = False
            self.coerce(node.then, node.ty)
            jmp = self.emit(GJMP if fused else JMP)
            if fused:
                self.patch(jf, b=self.here())
            else:
                self.patch(jf, self.here())
            self.coerce(node.other, node.ty)
            self.patch(jmp, self.here())
        elif isinstance(node, A.Switch):
            direct = isinstance(node.scrutinee, A.VarRef) and node.scrutinee.name in self.gen.externs
            if not direct:
                self.expr(node.scrutinee)
            dispatch = self.emit(SWITCH if direct else SWITCHV)
            table = {}
            exits = []
            for label, arm in node.cases:
                table[label] = self.here()
                if direct:
                    self.gen.guard_ids.add(label)
                self.coerce(arm, node.ty)
                exits.append(self.emit(GJMP if direct else JMP))
            default = self.here()
            self.coerce(node.default, node.ty)
            for e in exits:
                self.patch(e, self.here())
            self.patch(dispatch, table, default)
        elif isinstance(node, A.Probe):
            self.emit(PROBE, node.site)
            self.expr(node.expr)
        else:
            raise TypeError(f"cannot compile {node.kind}")


class _Codegen:
    def __init__(self, typed: TypedAst):
        self.typed = typed
        program = typed.program
        self.externs = set(typed.externs)
        self.global_slots: dict[str, int] = {}
        self.global_types: dict[str, str] = {}
        self.function_index: dict[str, int] = {}
        self.signatures: dict[str, list[str]] = {}
        self.guard_ids: set[int] = set()
        for decl in program.functions():
            self.function_index[decl.name] = len(self.function_index)
            self.signatures[decl.name] = [p.type for p in decl.params]

    def compile(self) -> CompiledProgram:
        program = self.typed.program
        init = Function("__init__", 0)
        init_fc = _FunctionCompiler(self, init, [], "void", False)
        for decl in program.decls:
            if isinstance(decl, A.VarDecl):
                init_fc.coerce(decl.init, decl.type)
                slot = len(self.global_slots)
                self.global_slots[decl.name] = slot
                self.global_types[decl.name] = decl.type
                init_fc.emit(GSTORE, slot)
        init_fc.emit(RET, False)

        functions = []
        for decl in program.functions():
            fn = Function(decl.name, len(decl.params), len(decl.params))
            fc = _FunctionCompiler(self, fn, decl.params, decl.ret_type, False)
            fc.block(decl.body)
            if decl.ret_type == "void":
                fc.emit(RET, False)
            else:
                fc.emit(FAULT, f"function {decl.name!r} ended without returning a value")
            functions.append(fn)

        tests = {}
        init_index = len(functions)
        for decl in program.tests():
            fn = Function(decl.name, 0)
            fc = _FunctionCompiler(self, fn, [], "void", True)
            fc.emit(CALL, init_index, 0)
            fc.block(decl.body)
            fc.emit(HALT)
            tests[decl.name] = fn

        return CompiledProgram(
            functions + [init],
            self.function_index,
            tests,
            [t.name for t in program.tests()],
            init,
            len(self.global_slots),
            guard_ids=frozenset(self.guard_ids),
        )


def compile_typed(typed: TypedAst, sites: Optional[dict[int, tuple[int, ...]]] = None) -> CompiledProgram:
    compiled = _Codegen(typed).compile()
    compiled.instrumented = compiled.has_probes()
    if sites:
        compiled.sites = dict(sites)
    return compiled


def compile_program(program: A.Program, sites: Optional[dict[int, tuple[int, ...]]] = None) -> CompiledProgram:
    """Type-check and lower ``program``; raises TypeCheckError on invalid input."""
    return compile_typed(type_check(program), sites)
