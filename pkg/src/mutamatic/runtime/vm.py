"""Explicit-stack interpreter for compiled MiniC.

All interpreter state lives in plain lists so a run can be snapshotted at any
instruction boundary and resumed later, which split-stream execution relies on.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .codegen import (
    ASSERT, BIN, BUILTIN, CALL, CONST, FAULT, GJMP, GLOAD, GSTORE, GUARD, HALT, JF, JF_KEEP, JMP, JT_KEEP, LOAD,
    POP, PROBE, RET, SEL, SPLIT, STORE, SWITCH, SWITCHV, UN,
    AssertionFailed, CompiledProgram, Function, RuntimeFault,
)

MAX_CALL_DEPTH = 2000


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    TIMED_OUT = "timed_out"


@dataclass(slots=True)
class Frame:
    fn: Function
    pc: int
    locals: list
    stack: list

    def copy(self) -> "Frame":
        return Frame(self.fn, self.pc, list(self.locals), list(self.stack))


@dataclass
class InterpreterState:
    frames: list[Frame]
    globals: list
    output: list[str] = field(default_factory=list)
    inputs: tuple[str, ...] = ()
    input_pos: int = 0
    reached: set[int] = field(default_factory=set)
    steps: int = 0
    overhead: int = 0
    selector: int = 0
    forked: bool = False

    @property
    def work(self) -> int:
        """Steps spent on program semantics, excluding mutation machinery."""
        return self.steps - self.overhead

    def copy(self) -> "InterpreterState":
        return InterpreterState(
            [f.copy() for f in self.frames],
            list(self.globals),
            list(self.output),
            self.inputs,
            self.input_pos,
            set(self.reached),
            self.steps,
            self.overhead,
            self.selector,
            self.forked,
        )


def snapshot(state: InterpreterState) -> InterpreterState:
    return state.copy()


def restore(token: InterpreterState) -> InterpreterState:
    # the token stays reusable: every restore hands out a fresh copy
    return token.copy()


def initial_state(program: CompiledProgram, test_id: str, selector: int = 0, inputs=()) -> InterpreterState:
    fn = program.tests[test_id]
    return InterpreterState(
        [Frame(fn, 0, [None] * fn.nlocals, [])],
        [None] * program.nglobals,
        inputs=tuple(inputs),
        selector=selector,
    )


class Machine:
    """Runs one state to completion under a step budget and a wall-clock budget.

    ``budget`` bounds program work (overhead steps are not charged).
    ``on_split(state, mutant_id) -> bool`` decides split guards in the main run.
    """

    def __init__(
        self,
        program: CompiledProgram,
        budget: int,
        seconds: float = 30.0,
        probe_counts: Optional[Counter] = None,
        on_split: Optional[Callable[[InterpreterState, int], bool]] = None,
        stop_after: Optional[int] = None,
    ):
        self.program = program
        self.budget = budget
        self.seconds = seconds
        self.probe_counts = probe_counts
        self.on_split = on_split
        self.stop_after = stop_after
        self.fault: Optional[RuntimeFault] = None

    def execute(self, st: InterpreterState) -> tuple[Optional[Status], str]:
        """Advance ``st`` until the test halts, fails or times out.

        Returns ``(None, "")`` only when ``stop_after`` total steps were reached
        first; the state is then left resumable.
        """
        clock = time.perf_counter
        deadline = clock() + self.seconds
        funcs = self.program.functions
        g = st.globals
        sel = st.selector
        forked = st.forked
        reached = st.reached
        counts = self.probe_counts
        on_split = self.on_split
        frames = st.frames
        frame = frames[-1]
        code = frame.fn.code
        pc = frame.pc
        stack = frame.stack
        loc = frame.locals
        steps = st.steps
        overhead = st.overhead
        budget = self.budget
        limit = budget + overhead
        stop = self.stop_after
        status: Optional[Status] = None
        message = ""
        try:
            while True:
                if stop is not None and steps >= stop:
                    break
                op, a, b = code[pc]
                pc += 1
                steps += 1
                if steps > limit:
                    status = Status.TIMED_OUT
                    message = f"step budget of {budget} exhausted"
                    break
                if not steps & 0x3FFF and clock() > deadline:
                    status = Status.TIMED_OUT
                    message = f"wall-clock budget of {self.seconds}s exhausted"
                    break
                if op == LOAD:
                    stack.append(loc[a])
                elif op == CONST:
                    stack.append(a)
                elif op == BIN:
                    r = stack.pop()
                    stack[-1] = a(stack[-1], r)
                elif op == STORE:
                    loc[a] = stack.pop()
                elif op == JF:
                    if not stack.pop():
                        pc = a
                elif op == JMP:
                    pc = a
                elif op == GLOAD:
                    stack.append(g[a])
                elif op == GSTORE:
                    g[a] = stack.pop()
                elif op == CALL:
                    fn = funcs[a]
                    if b:
                        args = stack[-b:]
                        del stack[-b:]
                    else:
                        args = []
                    if fn.nlocals > b:
                        args.extend([None] * (fn.nlocals - b))
                    if len(frames) >= MAX_CALL_DEPTH:
                        raise RuntimeFault("call stack overflow")
                    frame.pc = pc
                    frame = Frame(fn, 0, args, [])
                    frames.append(frame)
                    code = fn.code
                    pc = 0
                    stack = frame.stack
                    loc = args
                elif op == RET:
                    value = stack.pop() if a else None
                    frames.pop()
                    frame = frames[-1]
                    code = frame.fn.code
                    pc = frame.pc
                    stack = frame.stack
                    loc = frame.locals
                    if a:
                        stack.append(value)
                elif op == JF_KEEP:
                    if not stack[-1]:
                        pc = a
                elif op == JT_KEEP:
                    if stack[-1]:
                        pc = a
                elif op == UN:
                    stack[-1] = a(stack[-1])
                elif op == POP:
                    stack.pop()
                elif op == ASSERT:
                    if not stack.pop():
                        raise AssertionFailed("assertion failed")
                elif op == BUILTIN:
                    if b:
                        args = stack[-b:]
                        del stack[-b:]
                        r = a(st, *args)
                    else:
                        r = a(st)
                    if r is not None:
                        stack.append(r)
                elif op == HALT:
                    status = Status.PASS
                    break
                elif op == SEL:
                    stack.append(sel)
                elif op == GUARD:
                    overhead += 1
                    limit += 1
                    if sel != a:
                        pc = b
                elif op == SWITCH:
                    overhead += 1
                    limit += 1
                    pc = a.get(sel, b)
                elif op == PROBE:
                    overhead += 1
                    limit += 1
                    reached.add(a)
                    if counts is not None:
                        counts[a] += 1
                elif op == SPLIT:
                    overhead += 1
                    limit += 1
                    if forked or on_split is None:
                        take = a == sel
                    else:
                        frame.pc = pc
                        st.steps = steps
                        st.overhead = overhead
                        take = on_split(st, a)
                    if not take:
                        pc = b
                elif op == GJMP:
                    overhead += 1
                    limit += 1
                    pc = a
                elif op == SWITCHV:
                    pc = a.get(stack.pop(), b)
                elif op == FAULT:
                    raise RuntimeFault(a)
                else:
                    raise RuntimeError(f"bad opcode {op}")
        except RuntimeFault as exc:
            self.fault = exc
            status = Status.FAIL
            message = str(exc) or type(exc).__name__
        finally:
            frame.pc = pc
            st.steps = steps
            st.overhead = overhead
        return status, message
