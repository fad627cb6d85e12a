"""Structured JSON reports.

A report is a plain JSON tree.  Everything except the ``timing`` block is a
deterministic function of the configuration, so two sequential runs with the
same seed produce identical files once ``timing`` is dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

FORMAT = "omniperm-report/1"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


@dataclass
class ReportDocument:
    command: str
    status: str
    exit_code: int
    config: dict = field(default_factory=dict)
    result: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def to_dict(self, with_timing: bool = True) -> dict:
        out = {"format": FORMAT, "command": self.command, "status": self.status,
               "exit_code": self.exit_code, "config": _plain(self.config), "result": _plain(self.result)}
        if with_timing:
            out["timing"] = _plain(self.timing)
        return out

    def to_json(self, with_timing: bool = True) -> str:
        return json.dumps(self.to_dict(with_timing), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> ReportDocument:
        if d.get("format") != FORMAT:
            raise ValueError(f"not a report document (format {d.get('format')!r})")
        return cls(d["command"], d["status"], d["exit_code"], d.get("config", {}), d.get("result", {}),
                   d.get("timing", {}))

    @classmethod
    def from_json(cls, text: str) -> ReportDocument:
        return cls.from_dict(json.loads(text))

    def render(self) -> str:
        """Short human-readable summary (derived from the tree, never parsed back)."""
        lines = [f"{self.command}: {self.status} (exit {self.exit_code})"]
        res = self.result
        if "error" in res:
            lines.append(f"  error: {res['error']}")
        if "K" in res:
            lines.append(f"  K = {res['K']}")
        orders = res.get("orders", [])
        if isinstance(orders, dict):
            orders = [{"element": k, "order": v} for k, v in orders.items()]
        for row in orders:
            target = f" target {row['target']}" if "target" in row else ""
            lines.append(f"  {row['element']}:{target} order {row['order']}")
        for m in res.get("mismatches", []):
            lines.append(f"  mismatch: {m}")
        return "\n".join(lines)
