"""Per-run metrics container with lossless JSON round-trip."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def _encode(v):
    if isinstance(v, float) and not math.isfinite(v):
        return {"__float__": repr(v)}
    if isinstance(v, (list, tuple)):
        return [_encode(u) for u in v]
    if isinstance(v, dict):
        return {k: _encode(u) for k, u in v.items()}
    if hasattr(v, "tolist"):
        return _encode(v.tolist())
    return v


def _decode(v):
    if isinstance(v, dict):
        if set(v) == {"__float__"}:
            return float(v["__float__"])
        return {k: _decode(u) for k, u in v.items()}
    if isinstance(v, list):
        return [_decode(u) for u in v]
    return v


@dataclass
class SyncReport:
    """Metrics of one synchronisation run.

    ``scalars`` holds single numbers (hitting time, bounds, tail error, ...),
    ``series`` holds per-period or per-component lists, ``checks`` maps a
    threshold name to ``{"value", "limit", "op", "passed"}``.
    """

    kind: str
    scalars: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def check(self, name: str, value: float, limit: float, op: str = "<=") -> bool:
        ops = {"<=": value <= limit, "<": value < limit,
               ">=": value >= limit, ">": value > limit, "==": value == limit}
        passed = bool(ops[op])
        self.checks[name] = {"value": value, "limit": limit, "op": op, "passed": passed}
        return passed

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return _encode({"kind": self.kind, "scalars": self.scalars,
                        "series": self.series, "checks": self.checks,
                        "passed": self.passed})

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SyncReport":
        d = _decode(d)
        return cls(d["kind"], dict(d.get("scalars", {})), dict(d.get("series", {})),
                   dict(d.get("checks", {})))

    @classmethod
    def from_json(cls, text: str) -> "SyncReport":
        return cls.from_dict(json.loads(text))
