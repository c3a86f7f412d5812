"""Corpus projects: a directory holding MiniC files plus a ``manifest.json``.

Manifest fields::

    {"name": "arith",
     "programs": ["arith.mc"],
     "tests": ["arith_test.mc"],
     "fixtures": {"test_name": "inputs/test_name.txt"}}

Program files are mutated; test files never are. Each file parses on its own
(spans stay per file) and the declarations are joined into one translation unit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .frontend import ast as A
from .frontend import parse_source
from .mutgen import Mutant, apply_mutant
from .runtime.harness import TestCase


class ManifestError(ValueError):
    pass


@dataclass
class Project:
    name: str
    programs: list[str]
    tests: list[str]
    sources: dict[str, str]
    fixtures: dict[str, tuple[str, ...]] = field(default_factory=dict)
    root: Optional[Path] = None

    @property
    def files(self) -> list[str]:
        return self.programs + self.tests

    def parse(self, overrides: Optional[Mapping[str, str]] = None) -> A.Program:
        """Parse every file (with optional replaced sources) into one Program."""
        overrides = overrides or {}
        decls: list[A.Node] = []
        for file_id in self.files:
            unit = parse_source(overrides.get(file_id, self.sources[file_id]), file_id)
            decls.extend(unit.decls)
        return A.Program(decls)

    def parse_mutant(self, mutant: Mutant) -> A.Program:
        file_id = mutant.anchor.file_id
        return self.parse({file_id: apply_mutant(self.sources[file_id], mutant)})

    def test_cases(self, program: A.Program) -> list[TestCase]:
        return [TestCase(t.name, self.fixtures.get(t.name, ())) for t in program.tests()]

    def lopc(self) -> int:
        """Lines of program code: non-blank, non-comment lines in program files."""
        total = 0
        for file_id in self.programs:
            for line in self.sources[file_id].splitlines():
                stripped = line.strip()
                if stripped and not stripped.startswith("//"):
                    total += 1
        return total


def load_project(path: str | Path) -> Project:
    root = Path(path)
    try:
        manifest = json.loads((root / "manifest.json").read_text())
    except FileNotFoundError:
        raise ManifestError(f"{root} has no manifest.json") from None
    programs = list(manifest.get("programs", []))
    tests = list(manifest.get("tests", []))
    if not programs:
        raise ManifestError(f"{root}: manifest lists no program files")
    if set(programs) & set(tests):
        raise ManifestError(f"{root}: a file cannot be both program and test")
    sources = {f: (root / f).read_text(encoding="utf-8") for f in programs + tests}
    fixtures = {}
    for test_id, rel in manifest.get("fixtures", {}).items():
        fixtures[test_id] = tuple((root / rel).read_text(encoding="utf-8").splitlines())
    return Project(manifest.get("name", root.name), programs, tests, sources, fixtures, root)


def load_corpus(path: str | Path) -> list[Project]:
    """A single project directory, or a directory of project directories."""
    root = Path(path)
    if (root / "manifest.json").exists():
        return [load_project(root)]
    projects = [load_project(p) for p in sorted(root.iterdir()) if (p / "manifest.json").exists()]
    if not projects:
        raise ManifestError(f"no projects found under {root}")
    return projects
