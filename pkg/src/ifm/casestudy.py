"""The shipped recruitment example model and its golden assessment contract.

The fixture encodes an outsourced recruitment pipeline with an embedded AI
matching tool; the golden file freezes the expected verdicts, risk paths
and blocking mitigations per alternative configuration, and integration
tests hold the engine to it exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .dsl import ParseResult, SourceModel, format_diagnostic, parse_files

__all__ = [
    "GoldenExpectation",
    "fixture_path",
    "load_recruitment_model",
    "golden_expectations",
]

_FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    """Absolute path of a shipped fixture file."""
    return _FIXTURES / name


def load_recruitment_model() -> SourceModel:
    """Parse and validate the recruitment model together with its outcomes."""
    result: ParseResult = parse_files(
        fixture_path("recruitment.ifm"),
        fixture_path("recruitment.outcomes.ifm"))
    if not result.ok:
        report = "\n".join(format_diagnostic(d) for d in result.errors)
        raise RuntimeError(f"shipped fixture does not parse:\n{report}")
    return result.model


@dataclass(frozen=True)
class GoldenExpectation:
    """Frozen expected assessment of one outcome, per configuration."""

    outcome_id: str
    label: str
    verdict: str
    blockers: tuple[str, ...]
    open_paths: dict[str, tuple[tuple[str, ...], ...]]
    unconditionally_open_paths: dict[str, tuple[tuple[str, ...], ...]]


def golden_expectations() -> list[GoldenExpectation]:
    raw = json.loads(fixture_path("recruitment.golden.json")
                     .read_text(encoding="utf-8"))
    out = []
    for row in raw["expectations"]:
        out.append(GoldenExpectation(
            outcome_id=row["outcome"],
            label=row["label"],
            verdict=row["verdict"],
            blockers=tuple(row["blockers"]),
            open_paths={
                config: tuple(tuple(p) for p in paths)
                for config, paths in row["openPaths"].items()},
            unconditionally_open_paths={
                config: tuple(tuple(p) for p in paths)
                for config, paths in row["unconditionallyOpenPaths"].items()},
        ))
    return out
