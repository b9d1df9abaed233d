from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from app.frac_calc.series import TimeSeries, format_float
from app.problem.models import CompatibilityReport
from app.problem.solver import ResidualReport
from app.regularity.verify import NecessityReport, RegularityReport

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ["section", "item", "value", "threshold", "passed"]


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


@dataclass(frozen=True)
class SummaryRow:
    section: str
    item: str
    value: float
    threshold: float = math.nan
    passed: bool = True

    def cells(self) -> list[str]:
        return [self.section, self.item, _fmt(float(self.value)), _fmt(float(self.threshold)), _fmt(self.passed)]


@dataclass
class RunReport:
    """Accumulates ``key: value`` report lines and summary rows for one command."""

    lines: list[str] = field(default_factory=list)
    rows: list[SummaryRow] = field(default_factory=list)

    def heading(self, title: str) -> None:
        if self.lines:
            self.lines.append("")
        self.lines.append(f"[{title}]")

    def add(self, key: str, value: object) -> None:
        self.lines.append(f"{key}: {_fmt(value)}")

    def row(self, row: SummaryRow) -> None:
        self.rows.append(row)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def add_compatibility(report: RunReport, compat: CompatibilityReport) -> None:
    report.heading(f"compatibility {compat.theorem}")
    report.add("passed", compat.passed)
    for e in compat.entries:
        report.add(f"{e.name} {e.quantity}", f"{_fmt(e.measured)} (threshold {_fmt(e.threshold)}, {e.kind})")
        report.row(SummaryRow(f"compat-{compat.theorem}", e.name, e.measured, e.threshold, e.passed))


def add_regularity(report: RunReport, reg: RegularityReport) -> None:
    report.heading(f"regularity {reg.theorem}")
    report.add("passed", reg.passed)
    for e in reg.entries:
        detail = f"{_fmt(e.value)} -> {_fmt(e.refined)} (ratio {_fmt(e.ratio)})"
        if not math.isnan(e.target):
            detail += f" exponent {_fmt(e.exponent)} target {_fmt(e.target)}"
        report.add(f"{e.clause} {e.quantity}", detail)
        report.row(SummaryRow(f"regularity-{reg.theorem}", f"{e.clause} {e.quantity}", e.ratio, math.nan, e.passed))


def add_necessity(report: RunReport, probe: NecessityReport, expected: str) -> None:
    report.heading("necessity probe")
    report.add("flagged", ",".join(probe.flagged) or "-")
    report.add("exponent compatible", probe.exponent_compatible)
    report.add("exponent violating", probe.exponent_violating)
    report.add("gap", probe.gap)
    report.row(SummaryRow("necessity", "flagged", float(len(probe.flagged)), 1.0, probe.flagged == (expected,)))
    report.row(SummaryRow("necessity", "gap", probe.gap, 0.0, probe.gap > 0.0))


def add_residual(report: RunReport, res: ResidualReport) -> None:
    report.heading("residual")
    report.add("sup", res.sup)
    report.add("relative", res.relative)
    report.add("worst time", res.worst_time)
    report.row(SummaryRow("solve", "residual", res.sup))


def write_solution_csv(path: Union[str, Path], u: TimeSeries, x: np.ndarray) -> None:
    """Long format ``t,x,re,im``, time-major."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "re", "im"])
        for i, t in enumerate(u.t):
            ts = format_float(t)
            for xj, v in zip(x, u.values[i]):
                writer.writerow([ts, format_float(xj), format_float(v.real), format_float(v.imag)])


def write_summary_csv(path: Union[str, Path], rows: Iterable[SummaryRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for row in rows:
            writer.writerow(row.cells())


@dataclass(frozen=True)
class OutputWriter:
    directory: Path
    formats: tuple[str, ...]
    stem: str

    def solution(self, u: TimeSeries, x: np.ndarray) -> None:
        if "csv" in self.formats:
            path = self.directory / f"{self.stem}_solution.csv"
            write_solution_csv(path, u, x)
            logger.info("wrote path=%s rows=%s", path, u.values.size)

    def finish(self, command: str, report: RunReport) -> None:
        if "report" in self.formats:
            path = self.directory / f"{self.stem}_{command}.txt"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(report.text, encoding="utf-8")
            logger.info("wrote path=%s", path)
        if "summary" in self.formats:
            path = self.directory / f"{self.stem}_{command}_summary.csv"
            write_summary_csv(path, report.rows)
            logger.info("wrote path=%s rows=%s", path, len(report.rows))
