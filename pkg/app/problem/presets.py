from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma

from app.contour.mittag_leffler import mittag_leffler_array
from app.errors import DomainError
from app.problem.models import ProblemSpec

ExactFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Preset:
    spec: ProblemSpec
    exact: Optional[ExactFn] = None

    def error(self, u_values: np.ndarray) -> float:
        """Max error on the full grid, boundary columns included."""
        if self.exact is None:
            raise DomainError(f"preset {self.spec.label!r} has no closed form")
        t = self.spec.time_grid.nodes
        x = self.spec.space_grid.x_full
        tt, xx = np.meshgrid(t, x, indexing="ij")
        return float(np.max(np.abs(u_values - self.exact(tt, xx))))


def discrete_eigenvalue(k: int, n: int) -> float:
    """mu_k with A_h sin(k pi x) = -mu_k sin(k pi x) for the three-point Laplacian."""
    h = 1.0 / (n + 1)
    return 4.0 / h**2 * math.sin(k * math.pi * h / 2.0) ** 2


def _bump(x: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * x) * x * (1.0 - x)


def discrete_second_difference(fn: Callable[[np.ndarray], np.ndarray], n: int) -> Callable[[np.ndarray], np.ndarray]:
    """x -> (fn(x + h) - 2 fn(x) + fn(x - h)) / h^2 with h = 1/(n+1); equals A_h fn on grid nodes."""
    h = 1.0 / (n + 1)

    def dd(x: np.ndarray) -> np.ndarray:
        return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / h**2

    return dd


def _zeros_like_x(x: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(x))


def _u1_for(alpha: float) -> Optional[Callable[[np.ndarray], np.ndarray]]:
    return _zeros_like_x if alpha > 1.0 else None


def final_remark(alpha: float, theta: float, n: int, M: int, T: float = 1.0) -> Preset:
    """u = t^alpha / Gamma(alpha+1) f0(x) for f = f0 - t^alpha / Gamma(alpha+1) A_h f0.

    The source carries the three-point second difference of f0 on this n, so the
    closed form solves the semi-discrete problem exactly; a refined run needs a new preset.
    """
    scale = 1.0 / gamma(alpha + 1.0)
    bump_dd = discrete_second_difference(_bump, n)

    def f(t, x):
        return _bump(x) - scale * t**alpha * bump_dd(x)

    def exact(t, x):
        return scale * t**alpha * _bump(x)

    spec = ProblemSpec(alpha=alpha, theta=theta, T=T, n=n, M=M, f=f, u1=_u1_for(alpha), label="final_remark")
    return Preset(spec=spec, exact=exact)


def eigenmode(alpha: float, theta: float, n: int, M: int, T: float = 1.0, k: int = 1) -> Preset:
    """u0 = sin(k pi x): u = E_{alpha,1}(-mu_k t^alpha) sin(k pi x) with the discrete mu_k."""
    mu = discrete_eigenvalue(k, n)

    def u0(x):
        return np.sin(k * np.pi * x)

    def exact(t, x):
        times, index = np.unique(np.asarray(t, dtype=float), return_inverse=True)
        decay = mittag_leffler_array(alpha, 1.0, -mu * times**alpha).real
        return decay[index].reshape(np.shape(t)) * np.sin(k * np.pi * x)

    spec = ProblemSpec(alpha=alpha, theta=theta, T=T, n=n, M=M, u0=u0, u1=_u1_for(alpha), label="eigenmode")
    return Preset(spec=spec, exact=exact)


def separable(alpha: float, theta: float, n: int, M: int, *, beta: float = 2.0, k: int = 1, T: float = 1.0) -> Preset:
    """u = t^beta sin(k pi x); f = D^alpha(t^beta) sin + (k pi)^2 t^beta sin."""
    if beta < 0.0:
        raise DomainError(f"separable preset needs beta >= 0, got {beta!r}")
    if alpha > 1.0 and 0.0 < beta < 1.0:
        raise DomainError(f"t^beta with beta={beta} has no initial slope for alpha={alpha}")
    order = math.ceil(alpha)
    taylor = float(beta).is_integer() and beta < order
    wave = (k * np.pi) ** 2

    def q(x):
        return np.sin(k * np.pi * x)

    def caputo_p(t):
        if taylor:
            return np.zeros(np.shape(t))
        return gamma(beta + 1.0) / gamma(beta + 1.0 - alpha) * t ** (beta - alpha)

    def f(t, x):
        return (caputo_p(t) + wave * t**beta) * q(x)

    def exact(t, x):
        return t**beta * q(x)

    u0 = q if beta == 0.0 else _zeros_like_x
    u1 = None
    if alpha > 1.0:
        u1 = q if beta == 1.0 else _zeros_like_x
    spec = ProblemSpec(alpha=alpha, theta=theta, T=T, n=n, M=M, f=f, u0=u0, u1=u1, label="separable")
    return Preset(spec=spec, exact=exact)


def zero(alpha: float, theta: float, n: int, M: int, T: float = 1.0) -> Preset:
    spec = ProblemSpec(alpha=alpha, theta=theta, T=T, n=n, M=M, u1=_u1_for(alpha), label="zero")
    return Preset(spec=spec, exact=lambda t, x: np.zeros(np.broadcast(t, x).shape))


PRESETS = {
    "final_remark": final_remark,
    "eigenmode": eigenmode,
    "separable": separable,
    "zero": zero,
}


def from_name(name: str, *, alpha: float, theta: float, n: int, M: int, T: float = 1.0) -> Preset:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(alpha, theta, n, M, T=T)
