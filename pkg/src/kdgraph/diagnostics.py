"""Structured diagnostics emitted by the pipeline stages.

Curated knowledge bases are noisy; most anomalies (unknown slots, dropped
edges, broken subevent chains) must not abort a run.  Stages report them as
:class:`Diagnostic` records which the CLI prints to stderr as
``LEVEL code message`` lines.
"""

from __future__ import annotations

from dataclasses import dataclass

WARNING = "warning"
ERROR = "error"


@dataclass(frozen=True)
class Diagnostic:
    level: str
    code: str
    message: str

    def render(self) -> str:
        return f"{self.level.upper()} {self.code} {self.message}"


def warn(code: str, message: str) -> Diagnostic:
    return Diagnostic(WARNING, code, message)


def error(code: str, message: str) -> Diagnostic:
    return Diagnostic(ERROR, code, message)
