"""Verification reports: the one record type every checker returns."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class VerifyReport:
    """Outcome of one inequality or identity check.

    `margin` is nonnegative exactly when the check passes: for inequality
    checks it is the slack beyond the bound (after tolerance), for identity
    checks it is tolerance minus the observed relative error. `rows` holds
    optional per-direction records for CSV output.
    """

    name: str
    lhs: float
    rhs: float
    ratio: float
    bound: float
    margin: float
    passed: bool
    samples: int
    seed: int
    tolerance: float
    notes: str = ""
    rows: tuple = field(default=(), repr=False)

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "bound": self.bound,
            "margin": self.margin,
            "pass": bool(self.passed),
            "samples": self.samples,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "notes": self.notes,
        }

    def to_csv_rows(self) -> list[list]:
        if self.rows:
            header = list(self.rows[0].keys())
            return [header] + [[row[k] for k in header] for row in self.rows]
        summary = self.to_json()
        header = list(summary.keys())
        return [header, [summary[k] for k in header]]
