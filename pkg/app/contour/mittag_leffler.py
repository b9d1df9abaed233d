from __future__ import annotations

import logging
import math

import mpmath
import numpy as np
from scipy.special import gammaln

from app.errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

MAX_ABS_Z = 50.0
MAX_TERMS = 10_000


def _working_digits(alpha: float, beta: float, radius: float, max_terms: int) -> tuple[int, int]:
    # the largest series term sets the cancellation the sum has to survive
    k = np.arange(max_terms, dtype=float)
    log_terms = k * math.log(radius) - gammaln(alpha * k + beta)
    peak = int(np.argmax(log_terms))
    digits = max(0.0, float(log_terms[peak]) / math.log(10.0))
    return int(digits) + 20, peak


def mittag_leffler(alpha: float, beta: float, z: complex, *, max_terms: int = MAX_TERMS) -> complex:
    """E_{alpha,beta}(z) by its power series in extended precision, |z| <= 50."""
    a = float(alpha)
    b = float(beta)
    if not (math.isfinite(a) and a > 0.0) or not (math.isfinite(b) and b > 0.0):
        raise DomainError(f"Mittag-Leffler parameters must be positive, got alpha={alpha!r} beta={beta!r}")
    zc = complex(z)
    if abs(zc) > MAX_ABS_Z:
        raise DomainError(f"|z|={abs(zc):.3g} outside the series envelope |z| <= {MAX_ABS_Z:g}")
    if zc == 0:
        return complex(mpmath.rgamma(b))

    dps, peak = _working_digits(a, b, abs(zc), max_terms)
    with mpmath.workdps(dps):
        zz = mpmath.mpc(zc.real, zc.imag)
        power = mpmath.mpf(1)
        total = mpmath.mpc(0)
        threshold = mpmath.mpf(10) ** -18
        for k in range(max_terms):
            term = power * mpmath.rgamma(a * k + b)
            total += term
            if k > peak and abs(term) < threshold * max(abs(total), mpmath.mpf(10) ** (-dps)):
                logger.debug("mittag_leffler alpha=%s beta=%s z=%s terms=%s dps=%s", a, b, zc, k + 1, dps)
                return complex(total)
            power *= zz
    raise ConvergenceError(f"Mittag-Leffler series did not converge in {max_terms} terms (z={zc!r})")


def mittag_leffler_array(alpha: float, beta: float, z: np.ndarray) -> np.ndarray:
    flat = np.asarray(z, dtype=complex).ravel()
    out = np.array([mittag_leffler(alpha, beta, v) for v in flat], dtype=complex)
    return out.reshape(np.shape(z))
