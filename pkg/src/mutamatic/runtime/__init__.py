from .codegen import AssertionFailed, CompiledProgram, FixtureExhausted, RuntimeFault, compile_program, compile_typed
from .harness import (
    ForkLedger, ReachRecord, SelectorUnknown, TestCase, TestOutcome, TimeoutPolicy,
    run_split_stream, run_suite, run_test,
)
from .vm import InterpreterState, Machine, Status, restore, snapshot
