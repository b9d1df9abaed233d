from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from app.elliptic.operator import EllipticOp, SectorEstimate, resolvent_solve_many
from app.errors import DomainError, NearSingularError

logger = logging.getLogger(__name__)

SECTOR_MARGIN = 1.1


@dataclass(frozen=True)
class EllipticityReport:
    max_arg: float
    limit: float
    margin: float
    passed: bool


def ellipticity_check(op: EllipticOp) -> EllipticityReport:
    """max |Arg a_i| against (1 - alpha/2) pi."""
    max_arg = float(np.max(np.abs(np.angle(op.a))))
    limit = (1.0 - op.alpha_ctx / 2.0) * math.pi
    margin = limit - max_arg
    return EllipticityReport(max_arg=max_arg, limit=limit, margin=margin, passed=margin > 0.0)


def gershgorin_bounds(op: EllipticOp) -> tuple[np.ndarray, np.ndarray]:
    m = op.matrix
    radii = np.zeros(m.n)
    radii[:-1] += np.abs(m.sup)
    radii[1:] += np.abs(m.sub)
    return m.diag.copy(), radii


def estimate_sector(op: EllipticOp) -> SectorEstimate:
    """Half-angle around the negative axis holding the spectrum of A_h, plus the radius of the rest."""
    eig = np.linalg.eigvals(op.dense)
    left = eig[eig.real < 0.0]
    rest = eig[eig.real >= 0.0]
    if left.size:
        # angle of -mu measured from the positive axis
        raw = float(np.max(np.abs(np.angle(-left))))
    else:
        raw = 0.0
    omega = min(SECTOR_MARGIN * raw, 0.99 * math.pi / 2) if raw < math.pi / 2 else raw
    R = SECTOR_MARGIN * float(np.max(np.abs(rest))) if rest.size else 0.0
    centers, radii = gershgorin_bounds(op)
    logger.info(
        "sector omega=%.6f R=%.6g eig_max=%.6g gershgorin_max=%.6g",
        omega,
        R,
        float(np.max(np.abs(eig))),
        float(np.max(np.abs(centers) + radii)),
    )
    return SectorEstimate(omega=omega, R=R)


@dataclass(frozen=True)
class ProbeSample:
    z: complex
    scaled_norm: float


@dataclass(frozen=True)
class SectorProbeReport:
    samples: tuple[ProbeSample, ...]
    sup: float
    singular: tuple[complex, ...]


def _norm(values: np.ndarray, kind: str) -> np.ndarray:
    if kind == "inf":
        return np.max(np.abs(values), axis=-1)
    if kind == "2":
        return np.linalg.norm(values, axis=-1)
    raise DomainError(f"unknown norm {kind!r}; use 'inf' or '2'")


def sector_probe(
    op: EllipticOp,
    rays: Sequence[float],
    radii: Sequence[float],
    *,
    samples: int = 8,
    seed: int = 0,
    norm: str = "inf",
) -> SectorProbeReport:
    """Lower-bound estimate of |z| ||(z - A_h)^{-1}|| at z = rho e^{i theta}."""
    if not rays or not radii:
        raise DomainError("sector probe needs at least one ray and one radius")
    rng = np.random.default_rng(seed)
    n = op.grid.n
    probes = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
    probes = np.vstack([probes, np.ones((1, n), dtype=complex)])
    probe_norms = _norm(probes, norm)

    out: list[ProbeSample] = []
    singular: list[complex] = []
    for theta in rays:
        for rho in radii:
            z = complex(rho * np.exp(1j * theta))
            try:
                sols = resolvent_solve_many(op, np.full(probes.shape[0], z), probes)
            except NearSingularError:
                logger.info("sector probe z=%s singular", z)
                singular.append(z)
                out.append(ProbeSample(z=z, scaled_norm=math.inf))
                continue
            ratio = float(np.max(_norm(sols, norm) / probe_norms))
            scaled = abs(z) * ratio if z != 0 else ratio
            out.append(ProbeSample(z=z, scaled_norm=scaled))
    sup = max(s.scaled_norm for s in out)
    logger.info("sector probe rays=%s radii=%s sup=%.6g", len(rays), len(radii), sup)
    return SectorProbeReport(samples=tuple(out), sup=sup, singular=tuple(singular))
