"""Residual reports shared by all verification stages."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any


@dataclass
class Check:
    check: str
    indices: tuple
    residual: float
    passed: bool

    def to_json(self) -> dict:
        return {"check": self.check, "indices": list(self.indices),
                "residual": self.residual, "pass": self.passed}


@dataclass
class Report:
    name: str
    tol: float
    checks: list[Check] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    def add(self, check: str, indices, residual, tol: float | None = None) -> Check:
        residual = float(residual)
        limit = self.tol if tol is None else tol
        item = Check(check, tuple(indices) if isinstance(indices, (tuple, list)) else (indices,),
                     residual, residual < limit)
        self.checks.append(item)
        return item

    def flag(self, check: str, indices, passed: bool, residual: float = 0.0) -> Check:
        item = Check(check, tuple(indices) if isinstance(indices, (tuple, list)) else (indices,),
                     float(residual), bool(passed))
        self.checks.append(item)
        return item

    def extend(self, other: "Report") -> None:
        self.checks.extend(other.checks)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        state = "pass" if self.ok else f"FAIL ({len(self.failures())} of {len(self.checks)})"
        return f"{self.name}: {state}, max residual {self.max_residual:.3e}"

    def to_json(self, full: bool = True) -> dict:
        out = {"name": self.name, "pass": self.ok, "tol": self.tol,
               "max_residual": self.max_residual, "n_checks": len(self.checks)}
        if self.meta:
            out["meta"] = self.meta
        checks = self.checks if full else self.failures()
        out["checks"] = [c.to_json() for c in checks]
        return out

    def dumps(self, full: bool = True) -> str:
        return json.dumps(self.to_json(full), indent=2, default=str)
