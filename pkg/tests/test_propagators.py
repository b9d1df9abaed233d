import logging
import math

import numpy as np
import pytest

from app.contour.mittag_leffler import mittag_leffler
from app.contour.nodes import ContourSpec
from app.elliptic.operator import EllipticOp, SpaceGrid
from app.errors import ContourError, DomainError, PreconditionError
from app.frac_calc.series import TimeGrid, TimeSeries
from app.problem.presets import discrete_eigenvalue
from app.propagators.context import PropagatorContext
from app.propagators.service import apply_T, apply_T1, duhamel, initial_term_u0, initial_term_u1
from app.settings import Settings


def _context(alpha: float, n: int = 31, a: float = 1.0) -> PropagatorContext:
    return PropagatorContext.build(EllipticOp.build(SpaceGrid(n), alpha=alpha, a=a))


def _mode(n: int, k: int = 1) -> np.ndarray:
    return np.sin(k * math.pi * SpaceGrid(n).x)


def _ml(alpha: float, beta: float, z: float) -> float:
    return mittag_leffler(alpha, beta, z).real


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("t", [0.1, 1.0])
def test_apply_T_on_eigenvector(alpha: float, t: float):
    ctx = _context(alpha)
    f = _mode(31)
    mu = discrete_eigenvalue(1, 31)
    expected = t ** (alpha - 1.0) * _ml(alpha, alpha, -mu * t**alpha) * f
    assert np.allclose(apply_T(ctx, t, f), expected, rtol=0, atol=1e-9 * np.max(np.abs(expected)))


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_apply_T1_on_eigenvector(alpha: float):
    ctx = _context(alpha)
    f = _mode(31, 2)
    mu = discrete_eigenvalue(2, 31)
    t = 0.3
    expected = t**alpha * _ml(alpha, alpha + 1.0, -mu * t**alpha) * f
    assert np.allclose(apply_T1(ctx, t, f), expected, rtol=0, atol=1e-10)


def test_propagators_reject_bad_input():
    ctx = _context(0.5, 15)
    with pytest.raises(DomainError):
        apply_T(ctx, 0.0, _mode(15))
    with pytest.raises(DomainError):
        apply_T(ctx, 1.0, np.ones(7))
    assert not np.any(apply_T(ctx, 1.0, np.zeros(15)))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_initial_term_u0_is_mittag_leffler_mode(alpha: float):
    n = 127
    ctx = _context(alpha, n)
    grid = TimeGrid.uniform(1.0, 10)
    u0 = _mode(n)
    u = initial_term_u0(ctx, u0, TimeSeries.zeros(grid, n))
    mu = discrete_eigenvalue(1, n)
    for t_out in (0.1, 0.5, 1.0):
        i = int(np.argmin(np.abs(grid.nodes - t_out)))
        expected = _ml(alpha, 1.0, -mu * t_out**alpha) * u0
        assert np.max(np.abs(u.values[i] - expected)) <= 1e-6 * np.max(np.abs(expected))


def test_initial_term_u1():
    alpha = 1.5
    ctx = _context(alpha)
    grid = TimeGrid.uniform(1.0, 4)
    u1 = _mode(31)
    mu = discrete_eigenvalue(1, 31)
    out = initial_term_u1(ctx, u1, grid)
    assert not np.any(out.values[0])
    for i, t in enumerate(grid.nodes[1:], start=1):
        expected = t * _ml(alpha, 2.0, -mu * t**alpha) * u1
        assert np.allclose(out.values[i], expected, rtol=0, atol=1e-9)
    with pytest.raises(DomainError):
        initial_term_u1(_context(0.5), u1, grid)


def test_duhamel_of_constant_source_is_T1():
    ctx = _context(0.7)
    grid = TimeGrid.uniform(1.0, 5)
    f = _mode(31, 3)
    out = duhamel(ctx, TimeSeries.constant(grid, f))
    assert np.allclose(out.values[-1], apply_T1(ctx, 1.0, f), rtol=0, atol=1e-10)
    assert not np.any(out.values[0])


def test_duhamel_routes_agree():
    ctx = _context(0.6, 15)
    grid = TimeGrid.graded(1.0, 6, 1.5)
    f = TimeSeries(grid=grid, values=np.outer(1.0 + grid.nodes**2, _mode(15)))
    modal = duhamel(ctx, f, method="modal")
    split = duhamel(ctx, f, method="split", gauss=16)
    assert np.max(np.abs(modal.values - split.values)) <= 1e-4 * max(modal.sup_norm(), 1.0)
    with pytest.raises(DomainError):
        duhamel(ctx, f, method="euler")


def test_duhamel_is_linear():
    ctx = _context(1.3, 15)
    grid = TimeGrid.uniform(1.0, 6)
    rng = np.random.default_rng(5)
    f = TimeSeries(grid=grid, values=rng.standard_normal((7, 15)))
    g = TimeSeries(grid=grid, values=rng.standard_normal((7, 15)))
    lhs = duhamel(ctx, f + g.scale(2.0))
    rhs = duhamel(ctx, f) + duhamel(ctx, g).scale(2.0)
    assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-12 * max(lhs.sup_norm(), 1.0)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_propagator_scaling_laws(alpha: float):
    ctx = _context(alpha, a=0.01)
    f = _mode(31)
    ts = np.logspace(-3, -1, 9)
    norm_T = [np.max(np.abs(apply_T(ctx, t, f))) for t in ts]
    norm_T1 = [np.max(np.abs(apply_T1(ctx, t, f))) for t in ts]
    slope_T = np.polyfit(np.log(ts), np.log(norm_T), 1)[0]
    slope_T1 = np.polyfit(np.log(ts), np.log(norm_T1), 1)[0]
    assert abs(slope_T - (alpha - 1.0)) <= 0.05
    assert abs(slope_T1 - alpha) <= 0.05


def test_context_rejects_non_elliptic_operator():
    op = EllipticOp.build(SpaceGrid(15), alpha=1.5, a=np.exp(0.5j * math.pi))
    with pytest.raises(PreconditionError):
        PropagatorContext.build(op)


def test_context_rejects_wide_contour():
    op = EllipticOp.build(SpaceGrid(15), alpha=1.5)
    with pytest.raises(ContourError):
        PropagatorContext.build(op, spec=ContourSpec(phi=2.5))


def test_modal_basis_round_trip():
    ctx = _context(0.5, 15)
    v = np.arange(15.0)
    assert np.allclose(ctx.modes.from_modes(ctx.modes.to_modes(v)), v)


def _advective_context(b: float, n: int = 63) -> PropagatorContext:
    return PropagatorContext.build(EllipticOp.build(SpaceGrid(n), alpha=0.5, a=1.0, b=b))


def _advective_source(n: int = 63) -> TimeSeries:
    grid = TimeGrid.uniform(1.0, 16)
    return TimeSeries(grid=grid, values=np.outer(1.0 + grid.nodes, _mode(n)))


def test_strong_advection_falls_back_to_split_route():
    ctx = _advective_context(100.0)
    f = _advective_source()
    assert ctx.route() == "split"
    default = duhamel(ctx, f)
    split = duhamel(ctx, f, method="split")
    assert np.max(np.abs(default.values - split.values)) <= 1e-12
    assert split.sup_norm() < 1.0


def test_mild_advection_keeps_modal_route():
    ctx = _advective_context(10.0)
    f = _advective_source()
    assert ctx.route() == "modal"
    modal = duhamel(ctx, f, method="modal")
    split = duhamel(ctx, f, method="split")
    assert np.max(np.abs(modal.values - split.values)) <= 1e-4 * max(split.sup_norm(), 1.0)


def test_route_follows_settings():
    op = EllipticOp.build(SpaceGrid(15), alpha=0.5)
    assert PropagatorContext.build(op, settings=Settings(duhamel_method="split")).route() == "split"
    assert PropagatorContext.build(op, settings=Settings(modal_condition_limit=0.5)).route() == "split"
    assert PropagatorContext.build(op).route("modal") == "modal"
    with pytest.raises(DomainError):
        PropagatorContext.build(op, settings=Settings(duhamel_method="euler"))


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_duhamel_of_leading_power_source(alpha: float):
    ctx = _context(alpha)
    grid = TimeGrid.uniform(1.0, 8)
    q = _mode(31)
    mu = discrete_eigenvalue(1, 31)
    f = TimeSeries(grid=grid, values=np.outer(grid.nodes**alpha, q))
    out = duhamel(ctx, f)
    for i, t in enumerate(grid.nodes[1:], start=1):
        expected = math.gamma(alpha + 1.0) * t ** (2.0 * alpha) * _ml(alpha, 2.0 * alpha + 1.0, -mu * t**alpha) * q
        assert np.max(np.abs(out.values[i] - expected)) <= 1e-8


def test_propagators_do_not_mix_modes():
    ctx = _context(0.5)
    q = _mode(31, 2)
    for out in (apply_T(ctx, 0.4, q), apply_T1(ctx, 0.4, q)):
        coef = out @ q / (q @ q)
        assert np.max(np.abs(out - coef * q)) <= 1e-10 * abs(coef)
    grid = TimeGrid.uniform(1.0, 6)
    series = duhamel(ctx, TimeSeries(grid=grid, values=np.outer(np.exp(-grid.nodes), q)))
    for row in series.values[1:]:
        coef = row @ q / (q @ q)
        assert np.max(np.abs(row - coef * q)) <= 1e-10 * abs(coef)


def test_boundary_trace_of_source_is_reported(caplog):
    ctx = _context(0.5, 15)
    grid = TimeGrid.uniform(1.0, 4)
    with caplog.at_level(logging.WARNING, logger="app.propagators.service"):
        duhamel(ctx, TimeSeries.constant(grid, _mode(15)))
    assert not caplog.records
    with caplog.at_level(logging.WARNING, logger="app.propagators.service"):
        duhamel(ctx, TimeSeries.constant(grid, _mode(15) + 1.0))
    assert "trace f(0)" in caplog.text


def test_initial_balance_trace_is_reported(caplog):
    ctx = _context(0.5, 15)
    grid = TimeGrid.uniform(1.0, 4)
    u0 = _mode(15)
    with caplog.at_level(logging.WARNING, logger="app.propagators.service"):
        initial_term_u0(ctx, u0, TimeSeries.zeros(grid, 15))
    assert not caplog.records
    with caplog.at_level(logging.WARNING, logger="app.propagators.service"):
        out = initial_term_u0(ctx, u0, TimeSeries.constant(grid, np.ones(15)))
    assert "trace A u0 + f(0)" in caplog.text
    assert out.dim == 15
