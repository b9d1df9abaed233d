from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.errors import DomainError
from app.frac_calc.series import TimeSeries

logger = logging.getLogger(__name__)

FIT_EXCLUDE = 2
MIN_FIT_LEVELS = 5


@dataclass(frozen=True)
class HolderEstimate:
    exponent: float
    seminorm: float
    fit_residual: float
    h_range: tuple[float, float]

    @property
    def degenerate(self) -> bool:
        return math.isinf(self.exponent)


def _pairwise_max(values: np.ndarray, nodes: np.ndarray, beta: float) -> float:
    # values: (N, dim); max over i < j of ||v_j - v_i||_inf / |x_j - x_i|^beta
    best = 0.0
    for i in range(nodes.size - 1):
        diff = np.max(np.abs(values[i + 1 :] - values[i]), axis=1)
        lag = (nodes[i + 1 :] - nodes[i]) ** beta
        best = max(best, float(np.max(diff / lag)))
    return best


def holder_seminorm_time(v: TimeSeries, beta: float) -> float:
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"time Holder exponent must lie in (0, 1], got {beta!r}")
    if len(v.grid) < 2:
        raise DomainError("time seminorm needs at least two nodes")
    return _pairwise_max(v.values, v.t, beta)


def _uniform_nodes(size: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, size)


def divided_difference(f: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First divided difference, placed at interval midpoints."""
    return np.diff(f) / np.diff(x), 0.5 * (x[1:] + x[:-1])


def _split_order(order: float) -> tuple[int, float]:
    # integer orders are read as Lipschitz bounds on the derivative one below
    k = math.floor(order)
    frac = order - k
    if frac == 0.0:
        return k - 1, 1.0
    return k, frac


def spatial_holder_norm(f: np.ndarray, order: float, x: Optional[np.ndarray] = None) -> float:
    """sum_{m <= k} sup |D^m f| + [D^k f]_frac with k = floor(order), by divided differences."""
    values = np.asarray(f, dtype=complex).ravel()
    nodes = _uniform_nodes(values.size) if x is None else np.asarray(x, dtype=float)
    if values.size < 4 or nodes.size != values.size:
        raise DomainError("spatial Holder norm needs at least four matching samples")
    if not order > 0.0:
        raise DomainError(f"Holder order must be positive, got {order!r}")
    k, frac = _split_order(order)
    total = 0.0
    for m in range(k + 1):
        if values.size < 2:
            raise DomainError(f"too few samples for derivatives of order {k}")
        total += float(np.max(np.abs(values)))
        if m < k:
            values, nodes = divided_difference(values, nodes)
    if values.size >= 2:
        total += _pairwise_max(values[:, None], nodes, frac)
    return total


def _modulus(values: np.ndarray, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted lags and the running max of ||v_j - v_i|| over pairs with lag <= that value."""
    lags = []
    diffs = []
    for i in range(nodes.size - 1):
        lags.append(nodes[i + 1 :] - nodes[i])
        diffs.append(np.max(np.abs(values[i + 1 :] - values[i]), axis=1))
    lag = np.concatenate(lags)
    diff = np.concatenate(diffs)
    order = np.argsort(lag, kind="stable")
    return lag[order], np.maximum.accumulate(diff[order])


def fit_exponent(values: np.ndarray, nodes: np.ndarray, *, target: Optional[float] = None) -> HolderEstimate:
    vals = np.asarray(values, dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None]
    span = float(nodes[-1] - nodes[0])
    step = float(np.min(np.diff(nodes)))
    levels = int(math.floor(math.log2(span / step) + 1e-9)) + 1
    if levels < MIN_FIT_LEVELS:
        raise DomainError(f"exponent fit needs {MIN_FIT_LEVELS} dyadic lag levels, grid offers {levels}")
    # short grids give up the excluded end levels before the fit drops below MIN_FIT_LEVELS
    exclude = min(FIT_EXCLUDE, (levels - MIN_FIT_LEVELS) // 2)
    h = span / 2.0 ** np.arange(levels)
    lag, modulus = _modulus(vals, nodes)
    idx = np.searchsorted(lag, h * (1.0 + 1e-12), side="right") - 1
    omega = np.where(idx >= 0, modulus[np.clip(idx, 0, None)], 0.0)

    window = slice(exclude, levels - exclude)
    hw, ow = h[window], omega[window]
    beta = target if target is not None else 1.0
    if not np.all(ow > 0.0):
        return HolderEstimate(exponent=math.inf, seminorm=0.0, fit_residual=0.0, h_range=(float(hw[-1]), float(hw[0])))
    coeffs, resid, *_ = np.polyfit(np.log(hw), np.log(ow), 1, full=True)
    exponent = float(coeffs[0])
    if target is None:
        beta = min(max(exponent, 1e-3), 1.0)
    seminorm = _pairwise_max(vals, nodes, beta)
    residual = float(math.sqrt(resid[0] / hw.size)) if resid.size else 0.0
    return HolderEstimate(exponent=exponent, seminorm=seminorm, fit_residual=residual, h_range=(float(hw[-1]), float(hw[0])))


def fit_time_exponent(v: TimeSeries, *, target: Optional[float] = None) -> HolderEstimate:
    estimate = fit_exponent(v.values, v.t, target=target)
    logger.debug("time exponent=%.4f seminorm=%.4g M=%s", estimate.exponent, estimate.seminorm, v.grid.M)
    return estimate


def fit_space_exponent(f: np.ndarray, order: float, x: Optional[np.ndarray] = None) -> HolderEstimate:
    """Exponent of the top derivative used by spatial_holder_norm; compare with its fractional part."""
    values = np.asarray(f, dtype=complex).ravel()
    nodes = _uniform_nodes(values.size) if x is None else np.asarray(x, dtype=float)
    k, frac = _split_order(order)
    for _ in range(k):
        values, nodes = divided_difference(values, nodes)
    return fit_exponent(values, nodes, target=frac)


def spatial_target(order: float) -> float:
    return _split_order(order)[1]


@dataclass(frozen=True)
class LeadingPowerSplit:
    v0: np.ndarray
    remainder: TimeSeries
    remainder_fit: HolderEstimate


def split_leading_power(u: TimeSeries, alpha: float, *, head: Optional[int] = None) -> LeadingPowerSplit:
    """Least-squares u(t) ~ c0 + c1 t + t^alpha v0 on the first nodes; remainder u - t^alpha v0."""
    t = u.t
    count = head if head is not None else max(8, t.size // 4)
    count = min(count, t.size)
    columns = [np.ones(count), t[:count]]
    if alpha != 1.0:
        columns.append(t[:count] ** alpha)
    design = np.column_stack(columns)
    coeffs, *_ = np.linalg.lstsq(design, u.values[:count], rcond=None)
    v0 = coeffs[-1] if alpha != 1.0 else coeffs[1]
    remainder = u.with_values(u.values - (t**alpha)[:, None] * v0[None, :])
    return LeadingPowerSplit(v0=v0, remainder=remainder, remainder_fit=fit_time_exponent(remainder))
