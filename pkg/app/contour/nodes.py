from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from app.errors import ContourError, DomainError
from app.frac_calc.series import format_float
from app.settings import Settings
from app.util.cache import LRUCacheBox

logger = logging.getLogger(__name__)

# e^x < 1e-16 for x below this
DECAY_CUTOFF = 36.84


@dataclass(frozen=True)
class ContourSpec:
    """Path from inf*e^{-i phi} through the arc |w| = radius to inf*e^{i phi}.

    Lengths are in scaled units w = lambda * t_scale. ``nodes_per_ray`` is the
    Gauss-Legendre order used on every ray panel.
    """

    phi: float
    radius: float = 1.0
    nodes_per_ray: int = 16
    arc_nodes: int = 16
    truncation: float = 1e3

    def __post_init__(self) -> None:
        if not (math.pi / 2 < self.phi < math.pi):
            raise ContourError(f"phi must lie in (pi/2, pi), got {self.phi!r}")
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise ContourError(f"radius must be positive, got {self.radius!r}")
        if self.nodes_per_ray < 4 or self.arc_nodes < 4:
            raise ContourError("nodes_per_ray and arc_nodes must be >= 4")
        if not self.truncation > self.radius:
            raise ContourError(f"truncation {self.truncation!r} must exceed radius {self.radius!r}")

    @classmethod
    def from_settings(cls, settings: Settings, *, phi: float) -> "ContourSpec":
        return cls(
            phi=phi,
            radius=settings.contour_radius,
            nodes_per_ray=settings.nodes_per_ray,
            arc_nodes=settings.arc_nodes,
            truncation=max(settings.contour_truncation, 2.0 * settings.contour_radius),
        )

    def with_radius(self, radius: float) -> "ContourSpec":
        return replace(self, radius=radius, truncation=max(self.truncation, 2.0 * radius))

    def ray_end(self) -> float:
        return max(min(self.truncation, DECAY_CUTOFF / abs(math.cos(self.phi))), 2.0 * self.radius)


def default_phi(alpha: float, omega: float = 0.0) -> float:
    """Midpoint of (pi/2, min((pi - omega)/alpha, pi))."""
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha!r}")
    if not 0.0 <= omega < math.pi:
        raise DomainError(f"sector angle must lie in [0, pi), got {omega!r}")
    upper = min((math.pi - omega) / alpha, math.pi)
    if upper <= math.pi / 2:
        raise ContourError(f"no admissible phi: (pi - omega)/alpha = {upper:.6f} <= pi/2")
    return 0.5 * (math.pi / 2 + upper)


def check_phi(phi: float, alpha: float, omega: float = 0.0) -> None:
    upper = (math.pi - omega) / alpha
    if not phi < upper:
        raise ContourError(f"phi={phi:.6f} must stay below (pi - omega)/alpha = {upper:.6f}")


@dataclass(frozen=True, eq=False)
class ContourNodes:
    points: np.ndarray
    weights: np.ndarray
    upper: int

    def __len__(self) -> int:
        return int(self.points.size)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """(1/2 pi i) sum_j w_j values_j; ``values`` has the node axis first."""
        vals = np.asarray(values)
        w = self.weights.reshape((-1,) + (1,) * (vals.ndim - 1))
        return np.sum(w * vals, axis=0) / (2j * math.pi)

    def integrate_real(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integral of a conjugate-symmetric scalar integrand from the upper half only."""
        top = self.points[: self.upper]
        total = np.sum(self.weights[: self.upper] * fn(top))
        return float(total.imag / math.pi)

    def to_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["re", "im", "w_re", "w_im"])
            for z, w in zip(self.points, self.weights):
                writer.writerow(
                    [format_float(z.real), format_float(z.imag), format_float(w.real), format_float(w.imag)]
                )


def _gauss(order: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _ray_panels(spec: ContourSpec) -> np.ndarray:
    # geometric panels near the arc, then panels one oscillation period of e^{w} long
    period = 2.0 * math.pi / math.sin(spec.phi)
    end = spec.ray_end()
    edges = [spec.radius]
    while edges[-1] < end:
        step = min(edges[-1], period)
        edges.append(min(edges[-1] + step, end))
    return np.asarray(edges)


def _upper_half(spec: ContourSpec, close: bool) -> tuple[np.ndarray, np.ndarray]:
    theta, wt = _gauss(spec.arc_nodes, 0.0, spec.phi)
    arc = spec.radius * np.exp(1j * theta)
    points = [arc]
    weights = [1j * arc * wt]

    direction = np.exp(1j * spec.phi)
    edges = _ray_panels(spec)
    for lo, hi in zip(edges[:-1], edges[1:]):
        rho, wr = _gauss(spec.nodes_per_ray, lo, hi)
        points.append(rho * direction)
        weights.append(direction * wr)

    if close:
        big = edges[-1]
        theta, wt = _gauss(spec.arc_nodes, spec.phi, math.pi)
        outer = big * np.exp(1j * theta)
        points.append(outer)
        weights.append(1j * outer * wt)

    return np.concatenate(points), np.concatenate(weights)


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


def _build(spec: ContourSpec, t_scale: float, close: bool) -> ContourNodes:
    top, w_top = _upper_half(spec, close)
    # lower half mirrors the upper one; reversed orientation flips the weight sign
    points = np.concatenate([top, np.conj(top)]) / t_scale
    weights = np.concatenate([w_top, -np.conj(w_top)]) / t_scale
    logger.debug("contour phi=%.6f radius=%s t_scale=%s nodes=%s", spec.phi, spec.radius, t_scale, points.size)
    return ContourNodes(points=_frozen(points), weights=_frozen(weights), upper=top.size)


_cache: Optional[LRUCacheBox[tuple, ContourNodes]] = None


def _node_cache() -> LRUCacheBox[tuple, ContourNodes]:
    global _cache
    if _cache is None:
        _cache = LRUCacheBox.create(256)
    return _cache


def configure_cache(maxsize: int) -> None:
    global _cache
    _cache = LRUCacheBox.create(maxsize)


def build_contour(spec: ContourSpec, t_scale: float = 1.0, *, close: bool = False) -> ContourNodes:
    """Nodes for Gamma(phi, radius/t_scale); ``close`` adds the outer arc through pi."""
    scale = float(t_scale)
    if not (math.isfinite(scale) and scale > 0.0):
        raise DomainError(f"t_scale must be positive, got {t_scale!r}")
    return _node_cache().get_or_set((spec, scale, close), lambda: _build(spec, scale, close))
