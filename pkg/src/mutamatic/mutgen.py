"""ROR / AOR / LCR mutant generation with canonical, deterministic ids."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .frontend import ast as A
from .frontend.ast import SourceSpan
from .semantics import TypedAst, Validity, check_mutant_validity


class MutationOperatorKind(str, Enum):
    ROR = "ROR"
    AOR = "AOR"
    LCR = "LCR"


_AOR = ("+", "-", "*", "/", "%")
_ROR = ("<", "<=", ">", ">=", "==", "!=")
_LCR = {"&&": "||", "||": "&&", "&": "|", "|": "&"}


def replacements(op: str) -> tuple[MutationOperatorKind, tuple[str, ...]] | None:
    """Operator kind and ordered replacement list for ``op``."""
    if op in _AOR:
        return MutationOperatorKind.AOR, tuple(r for r in _AOR if r != op)
    if op in _ROR:
        return MutationOperatorKind.ROR, tuple(r for r in _ROR if r != op)
    if op in _LCR:
        return MutationOperatorKind.LCR, (_LCR[op],)
    return None


ALL_OPERATORS = frozenset(MutationOperatorKind)


@dataclass(frozen=True)
class Mutant:
    id: int
    anchor: SourceSpan
    operator_kind: MutationOperatorKind
    original: str
    replacement: str
    validity: Validity
    reason: str = ""

    @property
    def valid(self) -> bool:
        return self.validity is Validity.VALID

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "file": self.anchor.file_id,
            "begin": self.anchor.begin,
            "end": self.anchor.end,
            "kind": self.operator_kind.value,
            "original": self.original,
            "replacement": self.replacement,
            "validity": self.validity.value,
        }


@dataclass(frozen=True)
class _Candidate:
    anchor: SourceSpan
    replacement: str


def generate_mutants(
    typed: TypedAst,
    enabled: Iterable[MutationOperatorKind] = ALL_OPERATORS,
    files: Optional[Iterable[str]] = None,
) -> list[Mutant]:
    """Mutants for every binary operator of an enabled kind, in canonical order.

    ``files`` restricts generation to the given file ids (test files are
    normally left out).
    """
    enabled = frozenset(MutationOperatorKind(k) for k in enabled)
    allowed = None if files is None else frozenset(files)
    sites = []
    for node in typed.program.walk():
        if not isinstance(node, A.BinaryOp) or node.op_span is None:
            continue
        if allowed is not None and node.op_span.file_id not in allowed:
            continue
        table = replacements(node.op)
        if table is None or table[0] not in enabled:
            continue
        sites.append(node)
    sites.sort(key=lambda n: (n.op_span.file_id, n.op_span.begin))

    mutants = []
    for node in sites:
        kind, repls = replacements(node.op)
        for repl in repls:
            verdict = check_mutant_validity(typed, _Candidate(node.op_span, repl))
            mutants.append(
                Mutant(len(mutants) + 1, node.op_span, kind, node.op, repl, verdict.status, verdict.reason)
            )
    return mutants


@dataclass(frozen=True)
class Census:
    generated: int
    excluded_const: int
    considered: int
    valid: int
    invalid_type: int

    def to_json(self) -> dict:
        return {
            "generated": self.generated,
            "excluded_const": self.excluded_const,
            "considered": self.considered,
            "valid": self.valid,
            "invalid_type": self.invalid_type,
        }


def mutant_census(mutants: Iterable[Mutant]) -> Census:
    mutants = list(mutants)
    valid = sum(m.validity is Validity.VALID for m in mutants)
    invalid = sum(m.validity is Validity.INVALID_TYPE for m in mutants)
    const = sum(m.validity is Validity.INVALID_CONST for m in mutants)
    return Census(len(mutants), const, valid + invalid, valid, invalid)


def considered(mutants: Iterable[Mutant]) -> list[Mutant]:
    return [m for m in mutants if m.validity is not Validity.INVALID_CONST]


def dump_jsonl(mutants: Iterable[Mutant]) -> str:
    return "".join(json.dumps(m.to_json(), sort_keys=True) + "\n" for m in mutants)


def apply_mutant(source: bytes | str, mutant: Mutant) -> str:
    """Textually splice the replacement operator into the anchored file's source."""
    data = source.encode("utf-8") if isinstance(source, str) else source
    a = mutant.anchor
    if data[a.begin : a.end].decode("utf-8") != mutant.original:
        raise ValueError(f"anchor {a} does not hold {mutant.original!r}")
    return (data[: a.begin] + mutant.replacement.encode() + data[a.end :]).decode("utf-8")
