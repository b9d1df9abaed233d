from __future__ import annotations

import logging
import math

import numpy as np
from scipy.special import gamma

from app.errors import DomainError, PreconditionError
from app.frac_calc.series import InitialData, TimeGrid, TimeSeries

logger = logging.getLogger(__name__)

# below this distance from 1 the columns s and s^alpha are too close to separate
POWER_GAP = 1e-2


def _interval_geometry(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # distances from output node t_i to both ends of interval [t_j, t_{j+1}], zeroed for j >= i
    t_out = nodes[:, None]
    far = t_out - nodes[None, :-1]
    near = t_out - nodes[None, 1:]
    active = near >= 0.0
    far = np.where(active, far, 0.0)
    near = np.where(active, near, 0.0)
    return far, near, active


def product_weights(nodes: np.ndarray, alpha: float) -> np.ndarray:
    """Weights W with (W @ f)_i = int_0^{t_i} (t_i - s)^(alpha-1) f~(s) ds, f~ piecewise linear."""
    b, a, active = _interval_geometry(nodes)
    h = np.diff(nodes)[None, :]
    i0 = (b**alpha - a**alpha) / alpha
    i1 = (b ** (alpha + 1.0) - a ** (alpha + 1.0)) / (alpha + 1.0)
    w_left = np.where(active, (i1 - a * i0) / h, 0.0)
    w_right = np.where(active, (b * i0 - i1) / h, 0.0)
    size = nodes.size
    weights = np.zeros((size, size), dtype=float)
    weights[:, :-1] += w_left
    weights[:, 1:] += w_right
    return weights


def rl_integral(alpha: float, f: TimeSeries) -> TimeSeries:
    a = float(alpha)
    if not math.isfinite(a) or a <= 0.0:
        raise DomainError(f"fractional integral order must be positive, got {alpha!r}")
    if len(f.grid) < 2:
        raise DomainError("fractional integral needs a grid with at least two nodes")
    weights = product_weights(f.grid.nodes, a)
    return f.with_values(weights @ f.values / gamma(a))


def taylor_part(init: InitialData, grid: TimeGrid) -> TimeSeries:
    t = grid.nodes[:, None]
    values = np.tile(init.u_k[0], (len(grid), 1)).astype(complex)
    if len(init.u_k) > 1:
        values = values + t * init.u_k[1][None, :]
    return TimeSeries(grid=grid, values=values)


def initial_slope(u: TimeSeries) -> np.ndarray:
    return np.gradient(u.values, u.t, axis=0, edge_order=2)[0]


def slope_tolerance(grid: TimeGrid, tol: float, scale: float) -> float:
    # one-sided stencils resolve the slope of t^alpha-type data only to about sqrt(t_1)
    return max(tol, math.sqrt(float(grid.nodes[1]))) * (1.0 + scale)


def check_initial_data(u: TimeSeries, init: InitialData, *, tol: float) -> None:
    if init.dim != u.dim:
        raise DomainError(f"initial data has dim {init.dim}, series has dim {u.dim}")
    mismatch = float(np.max(np.abs(u.values[0] - init.u_k[0]), initial=0.0))
    if mismatch > tol:
        raise PreconditionError("u(0) does not match u_0", mismatch=mismatch)
    if init.alpha > 1.0:
        slope = initial_slope(u)
        mismatch = float(np.max(np.abs(slope - init.u_k[1]), initial=0.0))
        limit = slope_tolerance(u.grid, tol, float(np.max(np.abs(init.u_k[1]), initial=0.0)))
        if mismatch > limit:
            raise PreconditionError("D_t u(0) does not match u_1", mismatch=mismatch)


def _validated(alpha: float, u: TimeSeries, init: InitialData, tol: float, check: bool) -> tuple[float, TimeSeries]:
    a = float(alpha)
    if not math.isfinite(a) or a <= 0.0 or a >= 2.0:
        raise DomainError(f"Caputo order must lie in (0, 2), got {alpha!r}")
    if len(u.grid) < 3:
        raise DomainError("Caputo derivative needs at least three time nodes")
    if (a > 1.0) != (init.alpha > 1.0):
        raise DomainError(f"initial data built for alpha={init.alpha}, derivative asked for alpha={a}")
    if check:
        check_initial_data(u, init, tol=tol)
    return a, u - taylor_part(init, u.grid)


def caputo_derivative(
    alpha: float, u: TimeSeries, init: InitialData, *, tol: float = 1e-8, check: bool = True
) -> TimeSeries:
    a, remainder = _validated(alpha, u, init, tol, check)
    order = math.ceil(a)
    derivative = remainder.values
    for _ in range(order):
        derivative = np.gradient(derivative, u.t, axis=0, edge_order=2)
    if order == a:
        return u.with_values(derivative)
    return rl_integral(order - a, u.with_values(derivative))


def _l1(beta: float, values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    b, a, active = _interval_geometry(nodes)
    p = 1.0 - beta
    weights = np.where(active, (b**p - a**p) / gamma(2.0 - beta), 0.0)
    slopes = np.diff(values, axis=0) / np.diff(nodes)[:, None]
    return weights @ slopes


def caputo_l1(
    alpha: float, u: TimeSeries, init: InitialData, *, tol: float = 1e-8, check: bool = True
) -> TimeSeries:
    """L1 scheme for alpha < 1; for alpha > 1 the L1 scheme of order alpha-1 on D_t u."""
    a, remainder = _validated(alpha, u, init, tol, check)
    if a == 1.0:
        return u.with_values(np.gradient(remainder.values, u.t, axis=0, edge_order=2))
    if a < 1.0:
        return u.with_values(_l1(a, remainder.values, u.t))
    slope = np.gradient(remainder.values, u.t, axis=0, edge_order=2)
    return u.with_values(_l1(a - 1.0, slope, u.t))


def leading_power(values: np.ndarray, nodes: np.ndarray, alpha: float, *, constant: bool = True) -> np.ndarray:
    """g in values ~ a + b t + g t^alpha through the first three nodes; without ``constant``, a = 0 and t_0 is skipped."""
    vals = np.asarray(values, dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None]
    if nodes.size < 3 or abs(float(alpha) - 1.0) < POWER_GAP:
        return np.zeros(vals.shape[1], dtype=complex)
    if constant:
        head, rhs = nodes[:3], vals[:3]
        design = np.column_stack([np.ones(3), head, head**alpha])
    else:
        head, rhs = nodes[1:3], vals[1:3]
        design = np.column_stack([head, head**alpha])
    return np.linalg.solve(design, rhs)[-1]


def caputo_l1_corrected(
    alpha: float, u: TimeSeries, init: InitialData, *, tol: float = 1e-8, check: bool = True
) -> TimeSeries:
    """caputo_l1 with the t^alpha start of u - Taylor part differentiated exactly; also defined at t=0."""
    a, remainder = _validated(alpha, u, init, tol, check)
    g = leading_power(remainder.values, u.t, a, constant=False)
    if not np.any(g):
        return caputo_l1(a, u, init, check=False)
    smooth = u.with_values(u.values - np.power(u.t, a)[:, None] * g[None, :])
    return caputo_l1(a, smooth, init, check=False) + TimeSeries.constant(u.grid, gamma(a + 1.0) * g)
