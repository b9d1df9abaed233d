from __future__ import annotations

import logging
import math
from typing import Callable, Optional

import numpy as np

from app.elliptic.operator import sample_coefficient
from app.errors import FracError
from app.frac_calc.series import TimeGrid, TimeSeries
from app.problem.lift import boundary_caputo
from app.problem.models import (
    CompatibilityReport,
    ConditionEntry,
    ProblemSpec,
    sample_line,
    sample_space_time,
)
from app.regularity.holder import (
    fit_exponent,
    fit_space_exponent,
    holder_seminorm_time,
    spatial_holder_norm,
    spatial_target,
)
from app.settings import Settings, load_settings

logger = logging.getLogger(__name__)

BOUNDARY_STEP = 1e-4
EDGES = np.array([0.0, 1.0])


def _ratio(coarse: float, fine: float) -> float:
    if coarse <= 1e-300:
        return 1.0 if fine <= 1e-300 else math.inf
    return fine / coarse


def _guarded(name: str, quantity: str, kind: str, fn: Callable[[], ConditionEntry]) -> ConditionEntry:
    try:
        return fn()
    except FracError as exc:
        logger.warning("compat condition=%s failed to evaluate: %s", name, exc)
        return ConditionEntry(name=name, quantity=f"{quantity} ({exc})", measured=math.inf, threshold=0.0, passed=False, kind=kind)


def _space_samples(s: Settings) -> tuple[np.ndarray, np.ndarray]:
    n = s.probe_space_intervals
    return np.linspace(0.0, 1.0, n + 1), np.linspace(0.0, 1.0, 2 * n + 1)


def _probe_grids(spec: ProblemSpec, s: Settings) -> tuple[TimeGrid, TimeGrid]:
    m = s.probe_time_intervals
    return TimeGrid.uniform(spec.T, m), TimeGrid.uniform(spec.T, 2 * m)


def _space_membership(rows: Callable[[np.ndarray], np.ndarray], order: float, s: Settings) -> tuple[float, float]:
    """(refinement ratio of sup_rows ||.||_{C^order}, smallest fitted exponent of the top derivative)."""
    coarse_x, fine_x = _space_samples(s)
    coarse = np.atleast_2d(rows(coarse_x))
    fine = np.atleast_2d(rows(fine_x))
    norm_c = max(spatial_holder_norm(r, order, coarse_x) for r in coarse)
    norm_f = max(spatial_holder_norm(r, order, fine_x) for r in fine)
    exponent = min(fit_space_exponent(r, order, fine_x).exponent for r in fine)
    return _ratio(norm_c, norm_f), exponent


def _time_membership(series: Callable[[TimeGrid], TimeSeries], beta: Optional[float], spec: ProblemSpec, s: Settings) -> tuple[float, float]:
    """(refinement ratio of the beta-seminorm, or of the sup norm when beta is None; fitted exponent)."""
    coarse_grid, fine_grid = _probe_grids(spec, s)
    coarse = series(coarse_grid)
    fine = series(fine_grid)
    if beta is None:
        ratio = _ratio(coarse.sup_norm(), fine.sup_norm())
    else:
        ratio = _ratio(holder_seminorm_time(coarse, beta), holder_seminorm_time(fine, beta))
    exponent = fit_exponent(fine.values, fine.t, target=beta).exponent
    return ratio, exponent


def _membership_entry(
    name: str, quantity: str, ratio: float, exponent: float, target: float, s: Settings
) -> ConditionEntry:
    passed = ratio <= s.divergence_ratio and exponent >= target - s.exponent_margin
    return ConditionEntry(
        name=name,
        quantity=f"{quantity} exponent={exponent:.4f} target={target:.4f}",
        measured=ratio,
        threshold=s.divergence_ratio,
        passed=passed,
        kind="membership",
        exponent=exponent,
    )


def _f_rows(spec: ProblemSpec, s: Settings) -> Callable[[np.ndarray], np.ndarray]:
    times = np.linspace(0.0, spec.T, s.probe_cross_samples)
    return lambda x: sample_space_time(spec.f, times, x)


def _f_columns(spec: ProblemSpec, s: Settings) -> Callable[[TimeGrid], TimeSeries]:
    x = np.linspace(0.0, 1.0, s.probe_cross_samples)
    return lambda grid: TimeSeries(grid=grid, values=sample_space_time(spec.f, grid.nodes, x))


def _boundary_caputo_series(spec: ProblemSpec) -> Callable[[TimeGrid], TimeSeries]:
    def build(grid: TimeGrid) -> TimeSeries:
        cols = []
        for g in (spec.gL, spec.gR):
            series = TimeSeries(grid=grid, values=sample_line(g, grid.nodes))
            cols.append(boundary_caputo(spec.alpha, series).values[:, 0])
        return TimeSeries(grid=grid, values=np.column_stack(cols))

    return build


def _check_f_bounded(spec: ProblemSpec, s: Settings) -> ConditionEntry:
    ratio, exponent = _space_membership(_f_rows(spec, s), spec.theta, s)
    t_ratio, t_exponent = _time_membership(_f_columns(spec, s), None, spec, s)
    entry = _membership_entry("I", "f in C(C) and B(C^theta)", ratio, exponent, spatial_target(spec.theta), s)
    continuous = t_ratio <= s.divergence_ratio and t_exponent > 0.0
    return ConditionEntry(
        name=entry.name,
        quantity=f"{entry.quantity} time_exponent={t_exponent:.4f}",
        measured=max(entry.measured, t_ratio),
        threshold=entry.threshold,
        passed=entry.passed and continuous,
        kind=entry.kind,
        exponent=min(exponent, t_exponent),
    )


def _check_f_holder(spec: ProblemSpec, s: Settings) -> ConditionEntry:
    beta = spec.target_time_exponent
    ratio, exponent = _space_membership(_f_rows(spec, s), spec.theta, s)
    t_ratio, t_exponent = _time_membership(_f_columns(spec, s), beta, spec, s)
    space_ok = ratio <= s.divergence_ratio and exponent >= spatial_target(spec.theta) - s.exponent_margin
    time_ok = t_ratio <= s.divergence_ratio and t_exponent >= beta - s.exponent_margin
    return ConditionEntry(
        name="I",
        quantity=(
            f"f in C^(alpha theta/2, theta) space_exponent={exponent:.4f} "
            f"time_exponent={t_exponent:.4f} target={beta:.4f}"
        ),
        measured=max(ratio, t_ratio),
        threshold=s.divergence_ratio,
        passed=space_ok and time_ok,
        kind="membership",
        exponent=min(exponent, t_exponent),
    )


def _check_initial_regularity(spec: ProblemSpec, s: Settings) -> ConditionEntry:
    order0 = 2.0 + spec.theta
    ratio, exponent = _space_membership(lambda x: sample_line(spec.u0, x), order0, s)
    entry = _membership_entry("II", "u0 in C^(2+theta)", ratio, exponent, spatial_target(order0), s)
    if spec.u1 is None:
        return entry
    order1 = spec.theta + 2.0 * (1.0 - 1.0 / spec.alpha)
    ratio1, exponent1 = _space_membership(lambda x: sample_line(spec.u1, x), order1, s)
    other = _membership_entry("II", "u1", ratio1, exponent1, spatial_target(order1), s)
    return ConditionEntry(
        name="II",
        quantity=f"{entry.quantity}; u1 in C^{order1:.4f} {other.quantity}",
        measured=max(entry.measured, other.measured),
        threshold=entry.threshold,
        passed=entry.passed and other.passed,
        kind="membership",
        exponent=min(entry.exponent, other.exponent),
    )


def _check_boundary_regularity(spec: ProblemSpec, s: Settings, beta: Optional[float]) -> ConditionEntry:
    ratio, exponent = _time_membership(_boundary_caputo_series(spec), beta, spec, s)
    if beta is None:
        passed = ratio <= s.divergence_ratio and exponent > 0.0
        return ConditionEntry(
            name="III",
            quantity=f"D^alpha g in C(C) exponent={exponent:.4f}",
            measured=ratio,
            threshold=s.divergence_ratio,
            passed=passed,
            kind="membership",
            exponent=exponent,
        )
    return _membership_entry("III", "D^alpha g in C^(alpha theta/2)", ratio, exponent, beta, s)


def _slope_at_zero(g: Callable[[np.ndarray], np.ndarray]) -> complex:
    d = BOUNDARY_STEP
    vals = sample_line(g, np.array([0.0, d, 2.0 * d]))
    return complex((-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * d))


def _check_initial_traces(spec: ProblemSpec, s: Settings) -> ConditionEntry:
    traces = sample_line(spec.u0, EDGES)
    g0 = np.array([sample_line(spec.gL, np.zeros(1))[0], sample_line(spec.gR, np.zeros(1))[0]])
    gap = float(np.max(np.abs(traces - g0)))
    quantity = "|gamma u0 - g(0)|"
    if spec.u1 is not None:
        slopes = np.array([_slope_at_zero(spec.gL), _slope_at_zero(spec.gR)])
        gap = max(gap, float(np.max(np.abs(sample_line(spec.u1, EDGES) - slopes))))
        quantity += " and |gamma u1 - D_t g(0)|"
    # one-sided differences limit how well D_t g(0) is known
    tol = s.equality_tol if spec.u1 is None else max(s.equality_tol, 10.0 * BOUNDARY_STEP**2)
    return ConditionEntry(name="IV", quantity=quantity, measured=gap, threshold=tol, passed=gap <= tol)


def boundary_operator_values(spec: ProblemSpec) -> np.ndarray:
    """A(x, D_x) u0 at x = 0 and x = 1 by one-sided second-order differences."""
    d = BOUNDARY_STEP
    left = sample_line(spec.u0, np.array([0.0, d, 2.0 * d, 3.0 * d]))
    right = sample_line(spec.u0, np.array([1.0, 1.0 - d, 1.0 - 2.0 * d, 1.0 - 3.0 * d]))
    first = np.array(
        [(-3.0 * left[0] + 4.0 * left[1] - left[2]) / (2.0 * d), (3.0 * right[0] - 4.0 * right[1] + right[2]) / (2.0 * d)]
    )
    second = np.array(
        [
            (2.0 * left[0] - 5.0 * left[1] + 4.0 * left[2] - left[3]) / d**2,
            (2.0 * right[0] - 5.0 * right[1] + 4.0 * right[2] - right[3]) / d**2,
        ]
    )
    values = np.array([left[0], right[0]])
    a, b, c = (sample_coefficient(coef, EDGES) for coef in spec.coefficients)
    return a * second + b * first + c * values


def _caputo_at_zero(spec: ProblemSpec, s: Settings) -> tuple[np.ndarray, float]:
    _, fine = _probe_grids(spec, s)
    series = _boundary_caputo_series(spec)(fine)
    if spec.alpha == 1.0:
        return series.values[0], 0.0
    first, second = series.values[1], series.values[2]
    return first, float(np.max(np.abs(second - first)))


def _check_initial_balance(spec: ProblemSpec, s: Settings, name: str) -> ConditionEntry:
    lhs = boundary_operator_values(spec) + sample_space_time(spec.f, np.zeros(1), EDGES)[0]
    rhs, uncertainty = _caputo_at_zero(spec, s)
    gap = float(np.max(np.abs(lhs - rhs)))
    threshold = s.equality_tol + uncertainty
    return ConditionEntry(
        name=name,
        quantity="|gamma[A u0 + f(0)] - D^alpha g(0)|",
        measured=gap,
        threshold=threshold,
        passed=gap <= threshold,
    )


def _check_boundary_source(spec: ProblemSpec, s: Settings) -> ConditionEntry:
    beta = spec.target_time_exponent
    caputo = _boundary_caputo_series(spec)

    def series(grid: TimeGrid) -> TimeSeries:
        trace = sample_space_time(spec.f, grid.nodes, EDGES)
        return TimeSeries(grid=grid, values=trace - caputo(grid).values)

    ratio, exponent = _time_membership(series, beta, spec, s)
    return _membership_entry("V", "gamma f - D^alpha g in C^(alpha theta/2)", ratio, exponent, beta, s)


def _report(theorem: str, entries: list[ConditionEntry], spec: ProblemSpec) -> CompatibilityReport:
    report = CompatibilityReport(theorem=theorem, entries=tuple(entries))
    logger.info("compat theorem=%s label=%s passed=%s failed=%s", theorem, spec.label, report.passed, report.failed())
    return report


def check_compat_bounded(spec: ProblemSpec, settings: Optional[Settings] = None) -> CompatibilityReport:
    """Conditions (I)-(VI) for solutions with D^alpha u, A u bounded in C^theta."""
    s = settings or load_settings()
    entries = [
        _guarded("I", "f", "membership", lambda: _check_f_bounded(spec, s)),
        _guarded("II", "u0, u1", "membership", lambda: _check_initial_regularity(spec, s)),
        _guarded("III", "D^alpha g", "membership", lambda: _check_boundary_regularity(spec, s, None)),
        _guarded("IV", "initial traces", "equality", lambda: _check_initial_traces(spec, s)),
        _guarded("V", "gamma f - D^alpha g", "membership", lambda: _check_boundary_source(spec, s)),
        _guarded("VI", "initial balance", "equality", lambda: _check_initial_balance(spec, s, "VI")),
    ]
    return _report("bounded", entries, spec)


def check_compat_holder(spec: ProblemSpec, settings: Optional[Settings] = None) -> CompatibilityReport:
    """Conditions (I)-(V) for solutions with D^alpha u, A u in C^(alpha theta/2, theta)."""
    s = settings or load_settings()
    beta = spec.target_time_exponent
    entries = [
        _guarded("I", "f", "membership", lambda: _check_f_holder(spec, s)),
        _guarded("II", "u0, u1", "membership", lambda: _check_initial_regularity(spec, s)),
        _guarded("III", "D^alpha g", "membership", lambda: _check_boundary_regularity(spec, s, beta)),
        _guarded("IV", "initial traces", "equality", lambda: _check_initial_traces(spec, s)),
        _guarded("V", "initial balance", "equality", lambda: _check_initial_balance(spec, s, "V")),
    ]
    return _report("holder", entries, spec)


CHECKS = {"bounded": check_compat_bounded, "holder": check_compat_holder}
