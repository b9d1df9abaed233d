from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.elliptic.operator import SpaceGrid
from app.errors import DomainError
from app.frac_calc.operators import caputo_derivative, initial_slope
from app.frac_calc.series import InitialData, TimeSeries
from app.problem.models import CutoffProfile, ProblemSpec, sample_line, sample_space_time
from app.settings import Settings, load_settings

logger = logging.getLogger(__name__)


def boundary_profiles(cut: CutoffProfile, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return cut(x), cut(1.0 - x)


def extension_lift(
    gL: TimeSeries, gR: TimeSeries, cut: CutoffProfile, grid: SpaceGrid, *, full: bool = False
) -> TimeSeries:
    """v(t, x) = gL(t) chi(x) + gR(t) chi(1 - x); ``full`` keeps the two boundary columns."""
    if gL.dim != 1 or gR.dim != 1:
        raise DomainError("boundary series must be scalar")
    x = grid.x_full if full else grid.x
    left, right = boundary_profiles(cut, x)
    values = gL.values[:, :1] * left[None, :] + gR.values[:, :1] * right[None, :]
    return TimeSeries(grid=gL.grid, values=values)


def boundary_series(spec: ProblemSpec) -> tuple[TimeSeries, TimeSeries]:
    grid = spec.time_grid
    return (
        TimeSeries(grid=grid, values=sample_line(spec.gL, grid.nodes)),
        TimeSeries(grid=grid, values=sample_line(spec.gR, grid.nodes)),
    )


def boundary_caputo(alpha: float, g: TimeSeries, *, tol: float = 1e-8) -> TimeSeries:
    """D^alpha of a scalar boundary series, initial slope read from the series itself."""
    u1 = initial_slope(g) if alpha > 1.0 else None
    init = InitialData.of(alpha, g.values[0], u1)
    return caputo_derivative(alpha, g, init, tol=tol)


@dataclass(frozen=True)
class ReducedData:
    f: TimeSeries
    u_k: tuple[np.ndarray, ...]
    lift: TimeSeries
    boundary: tuple[TimeSeries, TimeSeries]
    boundary_caputo: tuple[TimeSeries, TimeSeries]


def reduce_to_homogeneous(
    spec: ProblemSpec, v: TimeSeries | None = None, *, settings: Optional[Settings] = None
) -> ReducedData:
    """f~ = f - D^alpha v + A_h v and u~_k = u_k - R(gamma u_k), so w = u - v has zero traces."""
    s = settings or load_settings()
    grid = spec.space_grid
    op = spec.op
    tgrid = spec.time_grid
    gL, gR = boundary_series(spec)
    if v is None:
        v = extension_lift(gL, gR, spec.cutoff, grid, full=True)
    if v.dim != grid.n + 2:
        raise DomainError(f"lift must carry boundary columns: dim {v.dim}, expected {grid.n + 2}")

    left, right = boundary_profiles(spec.cutoff, grid.x)
    dL = boundary_caputo(spec.alpha, gL, tol=s.consistency_tol)
    dR = boundary_caputo(spec.alpha, gR, tol=s.consistency_tol)
    caputo_v = dL.values[:, :1] * left[None, :] + dR.values[:, :1] * right[None, :]

    f = sample_space_time(spec.f, tgrid.nodes, grid.x)
    reduced_f = f - caputo_v + op.apply_with_boundary(v.values)

    initial = spec.initial_vectors(grid.x_full)
    u_k = tuple(vec[1:-1] - (vec[0] * left + vec[-1] * right) for vec in initial)
    gap = max(abs(initial[0][0] - gL.values[0, 0]), abs(initial[0][-1] - gR.values[0, 0]))
    if gap > s.consistency_tol:
        logger.warning("reduce label=%s initial trace mismatch gamma u0 - g(0) = %.3e", spec.label, gap)

    return ReducedData(
        f=TimeSeries(grid=tgrid, values=reduced_f),
        u_k=u_k,
        lift=v,
        boundary=(gL, gR),
        boundary_caputo=(dL, dR),
    )
