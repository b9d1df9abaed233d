from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from app.contour.nodes import ContourNodes, ContourSpec, build_contour, check_phi, default_phi
from app.elliptic.operator import EllipticOp, SectorEstimate, SpaceGrid
from app.elliptic.sector import ellipticity_check, estimate_sector
from app.errors import DomainError, PreconditionError
from app.settings import Settings, load_settings

logger = logging.getLogger(__name__)

CONDITION_WARN = 1e8
METHODS = ("auto", "modal", "split")


@dataclass(frozen=True)
class ModalBasis:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    condition: float

    def to_modes(self, values: np.ndarray) -> np.ndarray:
        return values @ self.inverse.T

    def from_modes(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs @ self.vectors.T


@dataclass(frozen=True, eq=False)
class PropagatorContext:
    op: EllipticOp
    alpha: float
    spec: ContourSpec
    sector: SectorEstimate
    workers: int = 1
    method: str = "auto"
    modal_limit: float = 1e6

    @property
    def grid(self) -> SpaceGrid:
        return self.op.grid

    @classmethod
    def build(
        cls,
        op: EllipticOp,
        *,
        spec: Optional[ContourSpec] = None,
        phi: Optional[float] = None,
        settings: Optional[Settings] = None,
    ) -> "PropagatorContext":
        s = settings or load_settings()
        alpha = op.alpha_ctx
        report = ellipticity_check(op)
        if not report.passed:
            raise PreconditionError(
                f"ellipticity fails: max |Arg a| = {report.max_arg:.6f} >= {report.limit:.6f}",
                mismatch=-report.margin,
            )
        sector = op.sector or estimate_sector(op)
        if spec is None:
            spec = ContourSpec.from_settings(s, phi=phi if phi is not None else default_phi(alpha, sector.omega))
        check_phi(spec.phi, alpha, sector.omega)
        logger.info(
            "propagator alpha=%s n=%s phi=%.6f radius=%s omega=%.6f R=%.6g",
            alpha,
            op.grid.n,
            spec.phi,
            spec.radius,
            sector.omega,
            sector.R,
        )
        if s.duhamel_method not in METHODS:
            raise DomainError(f"unknown duhamel method {s.duhamel_method!r}; use one of {METHODS}")
        return cls(
            op=op,
            alpha=alpha,
            spec=spec,
            sector=sector,
            workers=s.worker_count(),
            method=s.duhamel_method,
            modal_limit=s.modal_condition_limit,
        )

    def spec_at(self, t: float) -> ContourSpec:
        """Path spec for lags up to t; the arc is pushed out when spectrum sits off the sector."""
        if self.sector.R > 0.0:
            needed = 1.1 * t * self.sector.R ** (1.0 / self.alpha)
            if needed > self.spec.radius:
                return self.spec.with_radius(needed)
        return self.spec

    def nodes(self, t: float) -> ContourNodes:
        """Gamma(phi, r/t) for the propagators at time t."""
        return build_contour(self.spec_at(t), t_scale=t)

    @cached_property
    def modes(self) -> ModalBasis:
        eigenvalues, vectors = np.linalg.eig(self.op.dense)
        try:
            inverse = np.linalg.inv(vectors)
        except np.linalg.LinAlgError as exc:
            raise PreconditionError(f"eigenvector basis is singular: {exc}") from exc
        condition = float(np.linalg.norm(vectors, 2) * np.linalg.norm(inverse, 2))
        if condition > CONDITION_WARN:
            logger.warning("modal basis ill-conditioned cond=%.3e n=%s", condition, self.grid.n)
        if not math.isfinite(condition):
            raise PreconditionError("operator is not diagonalizable on this grid")
        return ModalBasis(eigenvalues=eigenvalues, vectors=vectors, inverse=inverse, condition=condition)

    def route(self, method: Optional[str] = None) -> str:
        """Resolve ``auto`` to ``modal`` or ``split`` from the conditioning of the eigenbasis."""
        method = method or self.method
        if method not in METHODS:
            raise DomainError(f"unknown duhamel method {method!r}; use one of {METHODS}")
        if method != "auto":
            return method
        try:
            condition = self.modes.condition
        except PreconditionError as exc:
            logger.info("duhamel route=split reason=%s", exc)
            return "split"
        if condition > self.modal_limit:
            logger.info("duhamel route=split cond=%.3e limit=%.3e", condition, self.modal_limit)
            return "split"
        return "modal"
