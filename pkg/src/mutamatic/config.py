from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .mutgen import ALL_OPERATORS, MutationOperatorKind
from .orchestrator import Strategy
from .schemata import Encoding

SCHEMATA_FAMILY = frozenset({Strategy.SCHEMATA, Strategy.REACHABLE_SCHEMATA})
WORKERS_ENV = "MUTAMATIC_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus: Path
    strategies: tuple[Strategy, ...] = (Strategy.SCHEMATA,)
    operators: frozenset[MutationOperatorKind] = ALL_OPERATORS
    # None means "the default for each strategy" (ternary for the schemata family)
    encoding: Optional[Encoding] = None
    seconds: float = 30.0
    step_multiplier: int = 10
    step_floor: int = 10_000
    exclude_unreachable: bool = False
    timed_out_as_killed: bool = False
    early_stop: bool = True
    dump_io: bool = False
    workers: int = 1
    report: Optional[Path] = None

    def __post_init__(self):
        self.corpus = Path(self.corpus)
        self.strategies = tuple(Strategy(s) for s in self.strategies)
        self.operators = frozenset(MutationOperatorKind(k) for k in self.operators)
        if self.encoding is not None:
            self.encoding = Encoding(self.encoding)
        self.validate()

    def validate(self):
        if not self.strategies:
            raise ConfigError("no strategy selected")
        if not self.operators:
            raise ConfigError("no mutation operator enabled")
        if self.encoding is not None:
            if self.encoding is Encoding.SPLIT:
                raise ConfigError("the split encoding is internal to the split_stream strategy")
            outside = [s.value for s in self.strategies if s not in SCHEMATA_FAMILY]
            if outside:
                raise ConfigError(f"--encoding only applies to schemata strategies, not {', '.join(outside)}")
        if self.exclude_unreachable and not set(self.strategies) & {Strategy.UNOPTIMISED, Strategy.SCHEMATA}:
            raise ConfigError("--exclude-unreachable only applies to unoptimised and schemata")
        if self.seconds <= 0:
            raise ConfigError("--seconds must be positive")
        if self.step_multiplier < 1 or self.step_floor < 1:
            raise ConfigError("step budgets must be positive")
        if self.workers < 1:
            raise ConfigError("--workers must be at least 1")

    def encoding_for(self, strategy: Strategy) -> Encoding:
        if strategy is Strategy.SPLIT_STREAM:
            return Encoding.SPLIT
        return self.encoding or Encoding.TERNARY

    def to_json(self) -> dict:
        return {
            "corpus": str(self.corpus),
            "strategies": [s.value for s in self.strategies],
            "operators": sorted(k.value for k in self.operators),
            "encoding": self.encoding.value if self.encoding else None,
            "timeout": {"seconds": self.seconds, "step_multiplier": self.step_multiplier, "step_floor": self.step_floor},
            "exclude_unreachable": self.exclude_unreachable,
            "timed_out_as_killed": self.timed_out_as_killed,
            "early_stop": self.early_stop,
            "dump_io": self.dump_io,
        }


def workers_from_env(default: int) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1")
    return value
