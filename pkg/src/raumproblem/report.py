"""Run reports: a timestamped header, a deterministic payload and a summary."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources

from . import __version__


def schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("data", "report_schema.json").read_text())


@dataclass
class Check:
    name: str
    value: float | None
    threshold: float | None
    comparison: str = "<"

    @property
    def passed(self) -> bool:
        if self.value is None:
            return False
        if self.comparison == "<":
            return self.value < self.threshold
        if self.comparison == ">=":
            return self.value >= self.threshold
        return self.value == self.threshold

    def to_json(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold,
                "comparison": self.comparison, "passed": self.passed}


@dataclass
class RunReport:
    command: list[str]
    payload: dict
    failed: list[str] = field(default_factory=list)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    @property
    def passed(self) -> bool:
        return not self.failed

    def to_json(self) -> dict:
        return {"header": {"command": list(self.command), "timestamp": self.timestamp,
                           "version": __version__},
                "payload": self.payload,
                "summary": {"passed": self.passed, "failed_checks": list(self.failed)}}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def payload_bytes(report: dict) -> bytes:
    """Canonical bytes of a report's payload (what determinism is judged on)."""
    return json.dumps(report["payload"], indent=2).encode()
