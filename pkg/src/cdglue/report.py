"""Uniform result object for every inequality check in the package."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field


@dataclass
class CheckReport:
    """Outcome of a single check.

    ``passed`` is always equivalent to ``worst_margin >= -tolerance`` (with
    -inf margins failing every tolerance).  ``witness`` locates the worst
    violation, ``notes`` carry advisories that do not affect the verdict.
    """

    name: str
    passed: bool
    worst_margin: float
    tolerance: float
    witness: dict | None = None
    runtime_ms: float = 0.0
    notes: list[str] = field(default_factory=list)

    @classmethod
    def from_margin(
        cls,
        name: str,
        worst_margin: float,
        tolerance: float,
        witness: dict | None = None,
        notes: list[str] | None = None,
        started: float | None = None,
    ) -> "CheckReport":
        passed = worst_margin >= -tolerance
        runtime = 0.0 if started is None else (time.perf_counter() - started) * 1e3
        return cls(
            name=name,
            passed=bool(passed),
            worst_margin=float(worst_margin),
            tolerance=float(tolerance),
            witness=witness,
            runtime_ms=runtime,
            notes=list(notes or []),
        )

    def to_dict(self, include_runtime: bool = False) -> dict:
        # runtime is dropped by default so that identical inputs serialize to
        # byte-identical reports
        out = {
            "check": self.name,
            "pass": self.passed,
            "worst_margin": self.worst_margin,
            "tolerance": self.tolerance,
            "witness": self.witness,
            "notes": self.notes,
        }
        if include_runtime:
            out["runtime_ms"] = self.runtime_ms
        return out

    def to_json(self, include_runtime: bool = False) -> str:
        return json.dumps(
            self.to_dict(include_runtime), sort_keys=True, separators=(",", ":")
        )

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        margin = self.worst_margin
        mtxt = "-inf" if math.isinf(margin) and margin < 0 else f"{margin:.6g}"
        return f"[{verdict}] {self.name} worst_margin={mtxt} tol={self.tolerance:.3g}"
