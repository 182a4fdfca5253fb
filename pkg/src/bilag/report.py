"""Verification reports: named residual checks with tolerances, nested by section."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = 1


def _clean(x):
    """Convert numpy scalars/arrays into JSON-friendly values with stable rounding."""
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return repr(x)
        return float(f"{x:.12e}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    return x


@dataclass
class Check:
    """One residual compared against a tolerance.

    ``comparator`` is ``"<="`` (residual must stay below) or ``">="``
    (residual must stay above, e.g. determinants and singular values).
    """

    name: str
    residual: float
    tolerance: float
    comparator: str = "<="
    samples: int = 0
    operation: str = ""
    worst_point: Any = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        r = self.residual
        if r is None or (isinstance(r, float) and math.isnan(r)):
            return False
        if self.comparator == "<=":
            return r <= self.tolerance
        return r >= self.tolerance

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "operation": self.operation,
            "residual": _clean(self.residual),
            "tolerance": _clean(self.tolerance),
            "comparator": self.comparator,
            "samples": int(self.samples),
            "passed": self.passed,
        }
        if self.worst_point is not None:
            d["worst_point"] = _clean(np.asarray(self.worst_point, dtype=float))
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass
class VerificationReport:
    title: str
    checks: list = field(default_factory=list)
    sections: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, name, residual, tolerance, *, comparator="<=", samples=0, operation="",
            worst_point=None, detail="") -> Check:
        c = Check(name, float(residual), float(tolerance), comparator, samples, operation or self.title,
                  worst_point, detail)
        self.checks.append(c)
        return c

    def add_max(self, name, values, tolerance, points=None, *, operation="") -> Check:
        """Record ``max |values|`` (per sample) against ``tolerance`` with the worst point."""
        v = np.abs(np.asarray(values, dtype=float))
        per = v.reshape(len(v), -1).max(axis=1) if v.ndim > 1 else v
        if per.size == 0:
            return self.add(name, 0.0, tolerance, samples=0, operation=operation)
        k = int(np.argmax(np.where(np.isnan(per), np.inf, per)))
        wp = None if points is None else np.asarray(points)[k]
        return self.add(name, per[k], tolerance, samples=len(per), operation=operation, worst_point=wp)

    def add_min(self, name, values, tolerance, points=None, *, operation="") -> Check:
        """Record ``min values`` against a lower bound ``tolerance``."""
        per = np.asarray(values, dtype=float).ravel()
        k = int(np.argmin(np.where(np.isnan(per), -np.inf, per)))
        wp = None if points is None else np.asarray(points)[k]
        return self.add(name, per[k], tolerance, comparator=">=", samples=len(per), operation=operation,
                        worst_point=wp)

    def section(self, report: "VerificationReport") -> "VerificationReport":
        self.sections.append(report)
        return report

    def note(self, text: str) -> None:
        self.notes.append(text)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and all(s.passed for s in self.sections)

    def failures(self) -> list:
        out = [dict(c.to_dict(), section=self.title) for c in self.checks if not c.passed]
        for s in self.sections:
            out.extend(s.failures())
        return out

    def find(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        for s in self.sections:
            try:
                return s.find(name)
            except KeyError:
                pass
        raise KeyError(name)

    def to_dict(self, top: bool = True) -> dict:
        d = {
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }
        if self.sections:
            d["sections"] = [s.to_dict(top=False) for s in self.sections]
        if self.notes:
            d["notes"] = list(self.notes)
        if self.data:
            d["data"] = _clean(self.data)
        if top:
            d["schema"] = SCHEMA_VERSION
            d["failures"] = self.failures()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def summary(self, indent: int = 0) -> str:
        pad = " " * indent
        lines = [f"{pad}[{'PASS' if self.passed else 'FAIL'}] {self.title}"]
        for c in self.checks:
            mark = "ok " if c.passed else "BAD"
            lines.append(f"{pad}  {mark} {c.name}: {c.residual:.3e} {c.comparator} {c.tolerance:g}")
        for s in self.sections:
            lines.append(s.summary(indent + 2))
        return "\n".join(lines)

    def __str__(self):
        return self.summary()
