"""Residual tables and their JSON/CSV serializations."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable


@dataclass(frozen=True)
class CheckResult:
    """One row of an axiom report.

    ``anchor`` is the identity being checked, written out as a formula.
    ``status`` is ``"pass"``, ``"fail"`` or ``"skipped"`` (empty interior).
    For negative controls ``expect_violation`` is set and the row passes when
    the residual is *above* the tolerance.
    """

    check: str
    anchor: str
    residual: float
    tolerance: float
    status: str
    expect_violation: bool = False

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    @classmethod
    def evaluate(cls, check, anchor, residual, tolerance, *, skipped=False, expect_violation=False):
        if skipped:
            status = "skipped"
        elif expect_violation:
            status = "pass" if residual > tolerance else "fail"
        else:
            status = "pass" if residual < tolerance else "fail"
        return cls(check, anchor, float(residual), float(tolerance), status, expect_violation)

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


@dataclass
class AxiomReport:
    title: str
    rows: list[CheckResult] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, row: CheckResult) -> CheckResult:
        self.rows.append(row)
        return row

    def extend(self, rows: Iterable[CheckResult]) -> None:
        self.rows.extend(rows)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list[CheckResult]:
        return [r for r in self.rows if not r.passed]

    def row(self, check: str) -> CheckResult:
        for r in self.rows:
            if r.check == check:
                return r
        raise KeyError(check)

    def to_json(self) -> dict:
        return {
            "schema": "nctorus.axiom-report/1",
            "title": self.title,
            "metadata": self.metadata,
            "all_passed": self.all_passed,
            "checks": [r.to_json() for r in self.rows],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def rows_to_csv(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x
