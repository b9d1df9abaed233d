from __future__ import annotations

import logging
import math
import warnings
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gamma

from app.contour.nodes import ContourSpec, build_contour, check_phi
from app.errors import ConvergenceError, DomainError, PreconditionError
from app.settings import Settings, load_settings
from app.util.retry import with_growing_budget

logger = logging.getLogger(__name__)


def _check_order(alpha: float) -> float:
    a = float(alpha)
    if not (math.isfinite(a) and 0.0 < a < 2.0):
        raise DomainError(f"alpha must lie in (0, 2), got {alpha!r}")
    return a


def _check_positive(value: float, name: str) -> float:
    v = float(value)
    if not (math.isfinite(v) and v > 0.0):
        raise DomainError(f"{name} must be positive, got {value!r}")
    return v


def adaptive_quad(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    settings: Optional[Settings] = None,
    **kwargs,
) -> float:
    """scipy quad that raises ConvergenceError instead of warning; retried with a doubled limit."""
    s = settings or load_settings()

    def attempt(limit: int) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                value, err = quad(fn, lo, hi, epsabs=s.quad_tol, epsrel=0.0, limit=limit, **kwargs)
            except IntegrationWarning as exc:
                raise ConvergenceError(f"quad on [{lo}, {hi}] limit={limit}: {exc}") from exc
        if not math.isfinite(value) or err > 10.0 * s.quad_tol:
            raise ConvergenceError(f"quad on [{lo}, {hi}] limit={limit}: abserr={err:.3e}")
        return float(value)

    return with_growing_budget(attempt, budget=s.quad_limit, attempts=s.convergence_attempts)


def kernel_h_contour(t: float, xi: float, alpha: float, spec: ContourSpec) -> float:
    """(1/2 pi i) int_{Gamma(phi, r)} e^{lambda t} / (lambda^alpha - xi) d lambda."""
    t = _check_positive(t, "t")
    xi = _check_positive(xi, "xi")
    a = _check_order(alpha)
    if not spec.radius**a < xi:
        raise PreconditionError(
            f"r^alpha={spec.radius**a:.6g} must be below xi={xi:.6g}", mismatch=spec.radius**a - xi
        )
    # same homotopy class for any smaller radius; keep |w| = |lambda| t <= radius on the arc
    nodes = build_contour(spec.with_radius(min(spec.radius * t, spec.radius)), t_scale=t)
    return nodes.integrate_real(lambda lam: np.exp(lam * t) / (np.power(lam, a) - xi))


def kernel_h_real(t: float, xi: float, alpha: float, *, settings: Optional[Settings] = None) -> float:
    """(1/pi) int_0^inf e^{-t tau} tau^alpha sin(alpha pi) / (tau^2alpha - 2 xi cos(alpha pi) tau^alpha + xi^2)."""
    t = _check_positive(t, "t")
    xi = _check_positive(xi, "xi")
    a = _check_order(alpha)
    if a == 1.0:
        return 0.0
    s = math.sin(a * math.pi)
    c = math.cos(a * math.pi)

    def integrand(tau: float) -> float:
        p = tau**a
        return math.exp(-t * tau) * p * s / (p * p - 2.0 * xi * c * p + xi * xi)

    split = 1.0 / t
    head = adaptive_quad(integrand, 0.0, split, settings=settings)
    tail = adaptive_quad(integrand, split, math.inf, settings=settings)
    return (head + tail) / math.pi


def kernel_h_scaling(t: float, xi: float, alpha: float) -> tuple[float, float]:
    """Arguments (t', factor) with h(t, xi) = factor * h(t', 1), from tau -> xi^{1/alpha} tau."""
    a = _check_order(alpha)
    root = xi ** (1.0 / a)
    return t * root, root / xi


def scaling_integral(
    a: float, b: float, c: float, d: float, xi: float, *, settings: Optional[Settings] = None
) -> float:
    """int_0^inf int_0^inf e^{-a t tau} t^b tau^c / (tau^d + xi) dt dtau, inner integral in closed form."""
    a = _check_positive(a, "a")
    xi = _check_positive(xi, "xi")
    if not (-1.0 < b < c < b + d):
        raise DomainError(f"need -1 < b < c < b + d, got b={b!r} c={c!r} d={d!r}")
    s = c - b
    prefactor = gamma(b + 1.0) / a ** (b + 1.0)

    head = adaptive_quad(
        lambda tau: 1.0 / (tau**d + xi), 0.0, 1.0, settings=settings, weight="alg", wvar=(s - 1.0, 0.0)
    )
    tail = adaptive_quad(lambda tau: tau ** (s - 1.0) / (tau**d + xi), 1.0, math.inf, settings=settings)
    return float(prefactor * (head + tail))


def scaling_integral_closed_form(a: float, b: float, c: float, d: float, xi: float) -> float:
    s = c - b
    return float(gamma(b + 1.0) / a ** (b + 1.0) * xi ** (s / d - 1.0) * math.pi / (d * math.sin(math.pi * s / d)))


def fit_xi_exponent(
    a: float, b: float, c: float, d: float, xis: Sequence[float], *, settings: Optional[Settings] = None
) -> float:
    values = [scaling_integral(a, b, c, d, xi, settings=settings) for xi in xis]
    slope, _ = np.polyfit(np.log(np.asarray(xis, dtype=float)), np.log(values), 1)
    return float(slope)


def scalar_propagator(t: float, xi: float, alpha: float, spec: ContourSpec) -> float:
    """(1/2 pi i) int e^{lambda t} / (lambda^alpha + xi) d lambda = t^{alpha-1} E_{alpha,alpha}(-xi t^alpha)."""
    t = _check_positive(t, "t")
    xi = _check_positive(xi, "xi")
    a = _check_order(alpha)
    check_phi(spec.phi, a)
    nodes = build_contour(spec, t_scale=t)
    return nodes.integrate_real(lambda lam: np.exp(lam * t) / (np.power(lam, a) + xi))


def ramp_kernels(
    taus: np.ndarray, eigenvalues: np.ndarray, alpha: float, spec: ContourSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Per lag and mode: (1/2 pi i) int e^{lambda tau} lambda^{-k} (lambda^alpha - mu)^{-1}, k = 1, 2.

    These are tau^alpha E_{alpha,alpha+1}(mu tau^alpha) and tau^{alpha+1} E_{alpha,alpha+2}(mu tau^alpha).
    """
    a = _check_order(alpha)
    mus = np.asarray(eigenvalues, dtype=complex)
    lags = np.asarray(taus, dtype=float)
    first = np.zeros((lags.size, mus.size), dtype=complex)
    second = np.zeros((lags.size, mus.size), dtype=complex)
    for i, tau in enumerate(lags):
        if tau <= 0.0:
            continue
        nodes = build_contour(spec, t_scale=float(tau))
        lam = nodes.points[:, None]
        base = np.exp(lam * tau) / (np.power(lam, a) - mus[None, :])
        first[i] = nodes.integrate(base / lam)
        second[i] = nodes.integrate(base / (lam * lam))
    return first, second
