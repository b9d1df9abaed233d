import numpy as np
import pytest
from scipy.special import gamma

from app.errors import DomainError, PreconditionError
from app.frac_calc.operators import (
    caputo_derivative,
    caputo_l1,
    caputo_l1_corrected,
    leading_power,
    rl_integral,
    taylor_part,
)
from app.frac_calc.series import InitialData, TimeGrid, TimeSeries


def _rl_linear_exact(order: float, t: np.ndarray) -> np.ndarray:
    # I^order (1 + t)
    return t**order / gamma(order + 1.0) + t ** (order + 1.0) / gamma(order + 2.0)


def test_graded_grid_shape():
    grid = TimeGrid.graded(2.0, 8, 2.0)
    assert grid.nodes[0] == 0.0
    assert grid.nodes[-1] == 2.0
    assert grid.nodes[1] == pytest.approx(2.0 / 64)
    assert np.all(np.diff(grid.nodes) > 0)
    assert not grid.is_uniform
    assert TimeGrid.uniform(1.0, 4).is_uniform
    assert len(grid.refine()) == 17


def test_from_nodes_rejects_bad_grids():
    with pytest.raises(DomainError):
        TimeGrid.from_nodes([0.1, 0.5])
    with pytest.raises(DomainError):
        TimeGrid.from_nodes([0.0, 0.5, 0.5])


@pytest.mark.parametrize("order", [0.3, 1.0, 1.7])
def test_rl_integral_exact_on_linear_data(order: float):
    grid = TimeGrid.graded(1.0, 40, 1.5)
    f = TimeSeries.sample(grid, lambda t: 1.0 + t)
    out = rl_integral(order, f)
    assert np.max(np.abs(out.values[:, 0] - _rl_linear_exact(order, grid.nodes))) < 1e-12


def test_rl_integral_rejects_bad_order():
    grid = TimeGrid.uniform(1.0, 4)
    with pytest.raises(DomainError):
        rl_integral(0.0, TimeSeries.zeros(grid, 1))


def test_rl_semigroup():
    grid = TimeGrid.uniform(1.0, 512)
    f = TimeSeries.sample(grid, lambda t: 1.0 + t)
    twice = rl_integral(0.7, rl_integral(0.4, f))
    once = rl_integral(1.1, f)
    assert np.max(np.abs(twice.values - once.values)) <= 1e-4


def test_caputo_of_power():
    grid = TimeGrid.uniform(1.0, 512)
    u = TimeSeries.sample(grid, lambda t: t**2)
    out = caputo_derivative(0.5, u, InitialData.of(0.5, [0.0]))
    exact = gamma(3.0) / gamma(2.5) * grid.nodes**1.5
    assert np.max(np.abs(out.values[:, 0] - exact)) <= 1e-3


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_caputo_left_inverse_of_rl(alpha: float):
    grid = TimeGrid.uniform(1.0, 512)
    f = TimeSeries.sample(grid, lambda t: t**2)
    init = InitialData.of(alpha, [0.25], [0.5] if alpha > 1.0 else None)
    u = rl_integral(alpha, f) + taylor_part(init, grid)
    out = caputo_derivative(alpha, u, init)
    assert np.max(np.abs(out.values - f.values)) <= 1e-4


@pytest.mark.parametrize("alpha", [0.4, 1.0, 1.6])
def test_caputo_annihilates_taylor_part(alpha: float):
    grid = TimeGrid.uniform(1.0, 64)
    init = InitialData.of(alpha, [1.0 + 2.0j, -3.0], [0.5, 4.0] if alpha > 1.0 else None)
    u = taylor_part(init, grid)
    out = caputo_derivative(alpha, u, init)
    assert np.max(np.abs(out.values)) <= 1e-12 * max(u.sup_norm(), 1.0)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_l1_route_agrees(alpha: float):
    grid = TimeGrid.uniform(1.0, 512)
    u = TimeSeries.sample(grid, lambda t: t**2)
    init = InitialData.of(alpha, [0.0], [0.0] if alpha > 1.0 else None)
    a = caputo_derivative(alpha, u, init)
    b = caputo_l1(alpha, u, init)
    assert np.max(np.abs(a.values - b.values)) <= 1e-3


def test_classical_order_is_time_derivative():
    grid = TimeGrid.uniform(1.0, 64)
    u = TimeSeries.sample(grid, lambda t: t**2)
    out = caputo_derivative(1.0, u, InitialData.of(1.0, [0.0]))
    assert np.allclose(out.values[:, 0], 2.0 * grid.nodes, atol=1e-12)


def test_caputo_checks_initial_value():
    grid = TimeGrid.uniform(1.0, 16)
    u = TimeSeries.sample(grid, lambda t: 1.0 + t)
    with pytest.raises(PreconditionError) as err:
        caputo_derivative(0.5, u, InitialData.of(0.5, [0.0]))
    assert err.value.mismatch == pytest.approx(1.0)


def test_caputo_checks_initial_slope():
    grid = TimeGrid.uniform(1.0, 256)
    u = TimeSeries.sample(grid, lambda t: 3.0 * t)
    with pytest.raises(PreconditionError):
        caputo_derivative(1.5, u, InitialData.of(1.5, [0.0], [0.0]))


def test_caputo_rejects_mismatched_initial_data():
    grid = TimeGrid.uniform(1.0, 16)
    u = TimeSeries.zeros(grid, 1)
    with pytest.raises(DomainError):
        caputo_derivative(1.5, u, InitialData.of(0.5, [0.0]))


def test_initial_data_counts():
    with pytest.raises(DomainError):
        InitialData(alpha=1.5, u_k=(np.zeros(3),))
    with pytest.raises(DomainError):
        InitialData(alpha=0.5, u_k=(np.zeros(3), np.zeros(3)))
    assert InitialData.of(1.2, np.ones(4)).u_k[1].shape == (4,)


def test_series_csv_round_trip(tmp_path):
    grid = TimeGrid.graded(1.0, 5, 2.0)
    u = TimeSeries(grid=grid, values=np.outer(grid.nodes, [1.0, 1j]) + 0.1)
    path = tmp_path / "series.csv"
    u.to_csv(path)
    back = TimeSeries.from_csv(path)
    assert np.array_equal(back.values, u.values)
    assert np.array_equal(back.t, u.t)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_corrected_l1_differentiates_leading_power_exactly(alpha: float):
    grid = TimeGrid.uniform(1.0, 32)
    u = TimeSeries.sample(grid, lambda t: 2.0 + t + 3.0 * t**alpha)
    init = InitialData.of(alpha, [2.0], [1.0] if alpha > 1.0 else None)
    out = caputo_l1_corrected(alpha, u, init)
    expected = 3.0 * gamma(alpha + 1.0) + (grid.nodes ** (1.0 - alpha) / gamma(2.0 - alpha) if alpha < 1.0 else 0.0)
    assert np.allclose(out.values[:, 0], expected, atol=1e-9)


def test_leading_power_is_skipped_near_classical_order():
    nodes = np.array([0.0, 0.1, 0.2, 0.3])
    values = 1.0 + nodes**0.5
    assert leading_power(values, nodes, 0.5)[0] == pytest.approx(1.0)
    assert not np.any(leading_power(nodes, nodes, 1.001))
