from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma

from app.contour.kernels import ramp_kernels
from app.elliptic.operator import resolvent_solve_many
from app.errors import ContourError, DomainError, NearSingularError
from app.frac_calc.operators import leading_power
from app.frac_calc.series import TimeGrid, TimeSeries
from app.propagators.context import PropagatorContext
from app.util.parallel import ordered_map

logger = logging.getLogger(__name__)

Factor = Callable[[np.ndarray], np.ndarray]


def _grid_vector(ctx: PropagatorContext, f: np.ndarray) -> np.ndarray:
    vec = np.asarray(f, dtype=complex)
    if vec.shape != (ctx.grid.n,):
        raise DomainError(f"grid function has shape {vec.shape}, expected ({ctx.grid.n},)")
    return vec


def _contour_apply(ctx: PropagatorContext, t: float, f: np.ndarray, factor: Factor) -> np.ndarray:
    """(1/2 pi i) int e^{lambda t} factor(lambda) (lambda^alpha - A_h)^{-1} f d lambda."""
    if not t > 0.0:
        raise DomainError(f"propagators need t > 0, got {t!r}")
    if not np.any(f):
        return np.zeros(ctx.grid.n, dtype=complex)
    nodes = ctx.nodes(t)
    lam = nodes.points
    try:
        sols = resolvent_solve_many(ctx.op, np.power(lam, ctx.alpha), f)
    except NearSingularError as exc:
        raise ContourError(f"contour meets the spectrum at t={t}: {exc}; increase the radius") from exc
    return nodes.integrate((np.exp(lam * t) * factor(lam))[:, None] * sols)


def _one(lam: np.ndarray) -> np.ndarray:
    return np.ones_like(lam)


def _inverse(lam: np.ndarray) -> np.ndarray:
    return 1.0 / lam


def apply_T(ctx: PropagatorContext, t: float, f: np.ndarray) -> np.ndarray:
    return _contour_apply(ctx, t, _grid_vector(ctx, f), _one)


def apply_T1(ctx: PropagatorContext, t: float, f: np.ndarray) -> np.ndarray:
    return _contour_apply(ctx, t, _grid_vector(ctx, f), _inverse)


def _series_from(ctx: PropagatorContext, grid: TimeGrid, at: Callable[[float], np.ndarray]) -> TimeSeries:
    def one(t: float) -> np.ndarray:
        if t == 0.0:
            return np.zeros(ctx.grid.n, dtype=complex)
        return at(float(t))

    rows = ordered_map(one, list(grid.nodes), workers=ctx.workers)
    return TimeSeries(grid=grid, values=np.vstack(rows))


def initial_term_u1(ctx: PropagatorContext, u1: np.ndarray, grid: TimeGrid) -> TimeSeries:
    if ctx.alpha <= 1.0:
        raise DomainError(f"the u1 term exists only for alpha in (1, 2), got {ctx.alpha}")
    vec = _grid_vector(ctx, u1)
    power = ctx.alpha - 2.0
    return _series_from(ctx, grid, lambda t: _contour_apply(ctx, t, vec, lambda lam: np.power(lam, power)))


def _check_series(ctx: PropagatorContext, f: TimeSeries) -> None:
    if f.dim != ctx.grid.n:
        raise DomainError(f"source has dim {f.dim}, grid has n={ctx.grid.n}")


def _duhamel_modal(ctx: PropagatorContext, f: TimeSeries) -> TimeSeries:
    # f~ = f_0 + sum_k (d_k - d_{k-1}) (s - t_k)_+, d_k the slope on [t_k, t_{k+1}];
    # T * 1 = T1 and T * (s - t_k)_+ = T2(t - t_k) with T2 carrying lambda^{-2}
    basis = ctx.modes
    t = f.t
    coeffs = basis.to_modes(f.values)
    slopes = np.diff(coeffs, axis=0) / np.diff(t)[:, None]
    kinks = slopes - np.vstack([np.zeros((1, coeffs.shape[1]), dtype=complex), slopes[:-1]])

    lags = t[:, None] - t[None, :-1]
    unique, index = np.unique(np.where(lags > 0.0, lags, 0.0), return_inverse=True)
    index = index.reshape(lags.shape)
    first, second = ramp_kernels(unique, basis.eigenvalues, ctx.alpha, ctx.spec_at(float(t[-1])))

    out = np.zeros_like(coeffs)
    for i in range(1, t.size):
        out[i] = first[index[i, 0]] * coeffs[0]
        out[i] += np.sum(second[index[i, :i]] * kinks[:i], axis=0)
    return f.with_values(basis.from_modes(out))


def _duhamel_split(ctx: PropagatorContext, f: TimeSeries, gauss: int) -> TimeSeries:
    # int T(t-s)[f(s) - f(t)] ds by Gauss points per subinterval, plus T1(t) f(t)
    xg, wg = np.polynomial.legendre.leggauss(gauss)
    t = f.t

    def at(i: int) -> np.ndarray:
        if i == 0:
            return np.zeros(ctx.grid.n, dtype=complex)
        ti = t[i]
        fi = f.values[i]
        total = apply_T1(ctx, ti, fi)
        for j in range(i):
            h = t[j + 1] - t[j]
            for x, w in zip(xg, wg):
                theta = 0.5 * (x + 1.0)
                s = t[j] + theta * h
                interp = (1.0 - theta) * f.values[j] + theta * f.values[j + 1]
                total = total + 0.5 * h * w * apply_T(ctx, ti - s, interp - fi)
        return total

    rows = ordered_map(at, list(range(t.size)), workers=ctx.workers)
    return f.with_values(np.vstack(rows))


def _power_term(ctx: PropagatorContext, grid: TimeGrid, g: np.ndarray) -> TimeSeries:
    # int_0^t T(t - s) s^alpha g ds carries Gamma(alpha + 1) lambda^{-alpha-1}
    scale = gamma(ctx.alpha + 1.0)
    power = -ctx.alpha - 1.0
    return _series_from(ctx, grid, lambda t: _contour_apply(ctx, t, g, lambda lam: scale * np.power(lam, power)))


def _boundary_trace(values: np.ndarray) -> np.ndarray:
    """Linear extrapolation of an interior grid function to x = 0 and x = 1."""
    if values.size < 2:
        return np.array([values[0], values[-1]])
    return np.array([2.0 * values[0] - values[1], 2.0 * values[-1] - values[-2]])


def _warn_trace(ctx: PropagatorContext, what: str, values: np.ndarray) -> None:
    # zero-trace data extrapolates to O(h^2) of its sup; h * sup is the reporting threshold
    scale = float(np.max(np.abs(values), initial=0.0))
    trace = float(np.max(np.abs(_boundary_trace(values))))
    if scale > 0.0 and trace > ctx.grid.h * scale:
        logger.warning("trace %s nonzero: |gamma| = %.3e (sup %.3e, n=%s)", what, trace, scale, ctx.grid.n)


def _duhamel(ctx: PropagatorContext, f: TimeSeries, method: Optional[str], gauss: int) -> TimeSeries:
    if not np.any(f.values):
        return f.with_values(np.zeros_like(f.values))
    route = ctx.route(method)
    logger.debug("duhamel method=%s M=%s n=%s", route, f.grid.M, ctx.grid.n)
    g = leading_power(f.values, f.t, ctx.alpha)
    if np.max(np.abs(g), initial=0.0) <= 1e-14 * f.sup_norm():
        g = np.zeros_like(g)
    rest = f.with_values(f.values - np.power(f.t, ctx.alpha)[:, None] * g[None, :])
    if route == "modal":
        out = _duhamel_modal(ctx, rest)
    else:
        out = _duhamel_split(ctx, rest, gauss)
    if np.any(g):
        out = out + _power_term(ctx, f.grid, g)
    return out


def duhamel(ctx: PropagatorContext, f: TimeSeries, *, method: Optional[str] = None, gauss: int = 4) -> TimeSeries:
    """u(t) = int_0^t T(t - s) f(s) ds.

    The s^alpha part of f fitted on the first nodes is convolved exactly; the rest is
    taken piecewise linear. ``method`` is ``modal``, ``split`` or ``auto`` (context default).
    """
    _check_series(ctx, f)
    _warn_trace(ctx, "f(0)", f.values[0])
    return _duhamel(ctx, f, method, gauss)


def initial_term_u0(
    ctx: PropagatorContext, u0: np.ndarray, f: TimeSeries, *, method: Optional[str] = None, gauss: int = 4
) -> TimeSeries:
    """u0 + duhamel(f + A_h u0); warns when A_h u0 + f(0) has a boundary trace."""
    vec = _grid_vector(ctx, u0)
    _check_series(ctx, f)
    shifted = f.with_values(f.values + ctx.op.apply(vec)[None, :])
    _warn_trace(ctx, "A u0 + f(0)", shifted.values[0])
    return TimeSeries.constant(f.grid, vec) + _duhamel(ctx, shifted, method, gauss)
