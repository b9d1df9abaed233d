from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.errors import DomainError
from app.frac_calc.series import TimeSeries
from app.problem.compat import CHECKS
from app.problem.models import CompatibilityReport, ProblemSpec
from app.problem.solver import Solution, discrete_caputo, solve_parts
from app.regularity.holder import fit_time_exponent, holder_seminorm_time, spatial_holder_norm
from app.settings import Settings, load_settings

logger = logging.getLogger(__name__)

THEOREMS = ("bounded", "holder")


@dataclass(frozen=True)
class RegularityEntry:
    clause: str
    quantity: str
    value: float
    refined: float
    ratio: float
    exponent: float
    target: float
    passed: bool


@dataclass(frozen=True)
class RegularityReport:
    theorem: str
    entries: tuple[RegularityEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failed(self) -> tuple[str, ...]:
        return tuple(f"{e.clause} {e.quantity}" for e in self.entries if not e.passed)


def _sup_spatial(series: TimeSeries, order: float, x: np.ndarray) -> float:
    return max(spatial_holder_norm(row, order, x) for row in series.values)


def _second_differences(u: TimeSeries, x: np.ndarray) -> TimeSeries:
    rows = np.diff(u.values, axis=1) / np.diff(x)[None, :]
    second = np.diff(rows, axis=1) / np.diff(0.5 * (x[1:] + x[:-1]))[None, :]
    return u.with_values(second)


@dataclass(frozen=True)
class _Quantities:
    u_norm: float
    caputo_norm: float
    operator_norm: float
    caputo: TimeSeries
    operator: TimeSeries
    u_c2: TimeSeries


def _measure(solution: Solution) -> _Quantities:
    spec = solution.spec
    u = solution.u
    x_full = spec.space_grid.x_full
    x = spec.space_grid.x
    caputo = discrete_caputo(spec, u)
    operator = u.with_values(spec.op.apply_with_boundary(u.values))
    return _Quantities(
        u_norm=_sup_spatial(u, 2.0 + spec.theta, x_full),
        caputo_norm=_sup_spatial(caputo, spec.theta, x),
        operator_norm=_sup_spatial(operator, spec.theta, x),
        caputo=caputo,
        operator=operator,
        u_c2=_second_differences(u, x_full),
    )


def _ratio(coarse: float, fine: float) -> float:
    if coarse <= 1e-300:
        return 1.0 if fine <= 1e-300 else math.inf
    return fine / coarse


def _stability_entry(clause: str, quantity: str, coarse: float, fine: float, s: Settings) -> RegularityEntry:
    ratio = _ratio(coarse, fine)
    return RegularityEntry(
        clause=clause,
        quantity=quantity,
        value=coarse,
        refined=fine,
        ratio=ratio,
        exponent=math.nan,
        target=math.nan,
        passed=ratio <= s.divergence_ratio,
    )


def _exponent_entry(
    clause: str, quantity: str, coarse: TimeSeries, fine: TimeSeries, target: float, s: Settings
) -> RegularityEntry:
    estimate = fit_time_exponent(fine, target=target)
    semi_c = holder_seminorm_time(coarse, target)
    semi_f = holder_seminorm_time(fine, target)
    ratio = _ratio(semi_c, semi_f)
    passed = estimate.exponent >= target - s.exponent_margin or ratio <= s.divergence_ratio
    return RegularityEntry(
        clause=clause,
        quantity=quantity,
        value=semi_c,
        refined=semi_f,
        ratio=ratio,
        exponent=estimate.exponent,
        target=target,
        passed=passed,
    )


def verify_theorem(
    spec: ProblemSpec,
    which: str,
    *,
    settings: Optional[Settings] = None,
    solutions: Optional[tuple[Solution, Solution]] = None,
) -> RegularityReport:
    """Refinement study of the solution's regularity: ``bounded`` or ``holder`` conclusions."""
    if which not in THEOREMS:
        raise DomainError(f"unknown theorem {which!r}; choose from {THEOREMS}")
    s = settings or load_settings()
    if solutions is None:
        solutions = (solve_parts(spec, settings=s), solve_parts(spec.refined(), settings=s))
    coarse, fine = (_measure(sol) for sol in solutions)
    first = "(B1)" if which == "bounded" else "(D1)"
    second = "(B2)" if which == "bounded" else "(D2)"
    entries = [
        _stability_entry(first, "sup_t ||u||_C^(2+theta)", coarse.u_norm, fine.u_norm, s),
        _stability_entry(second, "sup_t ||D^alpha u||_C^theta", coarse.caputo_norm, fine.caputo_norm, s),
        _stability_entry(second, "sup_t ||A_h u||_C^theta", coarse.operator_norm, fine.operator_norm, s),
    ]
    if which == "holder":
        target = spec.target_time_exponent
        entries += [
            _exponent_entry(second, "time exponent of D^alpha u", coarse.caputo, fine.caputo, target, s),
            _exponent_entry(second, "time exponent of A_h u", coarse.operator, fine.operator, target, s),
            _exponent_entry(first, "time exponent of u in C^2", coarse.u_c2, fine.u_c2, target, s),
        ]
    report = RegularityReport(theorem=which, entries=tuple(entries))
    logger.info("verify theorem=%s label=%s passed=%s failed=%s", which, spec.label, report.passed, report.failed())
    return report


@dataclass(frozen=True)
class NecessityReport:
    compatible: CompatibilityReport
    violating: CompatibilityReport
    exponent_compatible: float
    exponent_violating: float

    @property
    def gap(self) -> float:
        return self.exponent_compatible - self.exponent_violating

    @property
    def flagged(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.violating.failed()) - set(self.compatible.failed())))


def boundary_caputo_exponent(solution: Solution, *, node: int = 0) -> float:
    """Fitted time exponent of D^alpha u at interior node ``node`` (0 is next to x = 0)."""
    caputo = discrete_caputo(solution.spec, solution.u)
    return fit_time_exponent(caputo.column(node)).exponent


def necessity_probe(
    compatible: ProblemSpec,
    violating: ProblemSpec,
    *,
    which: str = "bounded",
    settings: Optional[Settings] = None,
) -> NecessityReport:
    """Paired runs that differ in one compatibility condition; compares D^alpha u next to the boundary."""
    if which not in CHECKS:
        raise DomainError(f"unknown theorem {which!r}; choose from {sorted(CHECKS)}")
    s = settings or load_settings()
    check = CHECKS[which]
    report = NecessityReport(
        compatible=check(compatible, s),
        violating=check(violating, s),
        exponent_compatible=boundary_caputo_exponent(solve_parts(compatible, settings=s)),
        exponent_violating=boundary_caputo_exponent(solve_parts(violating, settings=s)),
    )
    logger.info(
        "necessity flagged=%s exponent_compatible=%.4f exponent_violating=%.4f gap=%.4f",
        report.flagged,
        report.exponent_compatible,
        report.exponent_violating,
        report.gap,
    )
    return report
