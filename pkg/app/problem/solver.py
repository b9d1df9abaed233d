from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.errors import FracError
from app.frac_calc.operators import caputo_l1_corrected
from app.frac_calc.series import InitialData, TimeSeries
from app.problem.lift import ReducedData, reduce_to_homogeneous
from app.problem.models import ProblemSpec, sample_space_time
from app.propagators.context import PropagatorContext
from app.propagators.service import initial_term_u0, initial_term_u1
from app.settings import Settings, load_settings

logger = logging.getLogger(__name__)


class SolveError(FracError):
    def __init__(self, stage: str, exc: Exception) -> None:
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.cause = exc


@dataclass(frozen=True, eq=False)
class Solution:
    spec: ProblemSpec
    u: TimeSeries
    w: TimeSeries
    reduced: ReducedData
    ctx: PropagatorContext

    @property
    def interior(self) -> TimeSeries:
        return self.u.with_values(self.u.values[:, 1:-1])

    @property
    def x(self) -> np.ndarray:
        return self.spec.space_grid.x_full


def build_context(spec: ProblemSpec, settings: Optional[Settings] = None) -> PropagatorContext:
    return PropagatorContext.build(spec.op, spec=spec.contour, settings=settings)


def _stage(name: str, fn):
    try:
        return fn()
    except SolveError:
        raise
    except FracError as exc:
        raise SolveError(name, exc) from exc


def solve_parts(
    spec: ProblemSpec,
    *,
    ctx: Optional[PropagatorContext] = None,
    settings: Optional[Settings] = None,
    method: Optional[str] = None,
) -> Solution:
    """u = v + w with its parts; ``method`` overrides the Duhamel route of the settings."""
    s = settings or load_settings()
    started = time.perf_counter()
    ctx = ctx or _stage("context", lambda: build_context(spec, s))
    reduced = _stage("reduce", lambda: reduce_to_homogeneous(spec, settings=s))
    grid = spec.time_grid
    route = _stage("duhamel", lambda: ctx.route(method))

    w = _stage("u0-term", lambda: initial_term_u0(ctx, reduced.u_k[0], reduced.f, method=route))
    if spec.alpha > 1.0:
        w = w + _stage("u1-term", lambda: initial_term_u1(ctx, reduced.u_k[1], grid))

    v = reduced.lift.values
    gL, gR = reduced.boundary
    full = v.copy()
    full[:, 1:-1] += w.values
    full[:, 0] = gL.values[:, 0]
    full[:, -1] = gR.values[:, 0]
    u = TimeSeries(grid=grid, values=full)
    logger.info(
        "solve label=%s alpha=%s n=%s M=%s method=%s elapsed=%.3fs",
        spec.label,
        spec.alpha,
        spec.n,
        spec.M,
        route,
        time.perf_counter() - started,
    )
    return Solution(spec=spec, u=u, w=w, reduced=reduced, ctx=ctx)


def solve(spec: ProblemSpec, *, ctx: Optional[PropagatorContext] = None, settings: Optional[Settings] = None) -> TimeSeries:
    """u = v + w on the full grid, boundary columns included."""
    return solve_parts(spec, ctx=ctx, settings=settings).u


def discrete_caputo(spec: ProblemSpec, u: TimeSeries) -> TimeSeries:
    """D^alpha u on interior nodes, differentiated from the time series of u itself."""
    interior = u.with_values(u.values[:, 1:-1])
    u1 = spec.initial_vectors(spec.space_grid.x)[1] if spec.alpha > 1.0 else None
    init = InitialData.of(spec.alpha, interior.values[0], u1)
    return caputo_l1_corrected(spec.alpha, interior, init, check=False)


@dataclass(frozen=True)
class ResidualReport:
    sup: float
    worst_time: float
    relative: float


def residual(spec: ProblemSpec, u: TimeSeries) -> ResidualReport:
    """sup over t_i > 0 and interior x of |D^alpha u - A_h u - f|, D^alpha by the L1 route."""
    caputo = discrete_caputo(spec, u)
    f = sample_space_time(spec.f, u.t, spec.space_grid.x)
    gap = np.abs(caputo.values - spec.op.apply_with_boundary(u.values) - f)[1:]
    by_time = np.max(gap, axis=1)
    k = int(np.argmax(by_time))
    scale = max(float(np.max(np.abs(f))), u.sup_norm(), 1.0)
    return ResidualReport(sup=float(by_time[k]), worst_time=float(u.t[k + 1]), relative=float(by_time[k]) / scale)
