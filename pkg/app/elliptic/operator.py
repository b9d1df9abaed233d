from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from app.errors import DomainError, NearSingularError
from app.validation import validate_count, validate_order

logger = logging.getLogger(__name__)

Coefficient = Union[complex, float, Callable[[np.ndarray], np.ndarray]]

PIVOT_FLOOR = 1e-300
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SpaceGrid:
    n: int

    def __post_init__(self) -> None:
        validate_count(self.n, field="n", minimum=3)

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(1, self.n + 1, dtype=float) * self.h

    @property
    def x_full(self) -> np.ndarray:
        return np.arange(0, self.n + 2, dtype=float) * self.h

    def refine(self) -> "SpaceGrid":
        # halves h and keeps every old node
        return SpaceGrid(2 * self.n + 1)


@dataclass(frozen=True, eq=False)
class TriDiagMatrix:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self) -> None:
        n = self.diag.size
        if self.sub.size != n - 1 or self.sup.size != n - 1:
            raise DomainError(f"tridiagonal bands must have lengths n-1, n, n-1 (n={n})")

    @property
    def n(self) -> int:
        return int(self.diag.size)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        """Product along the last axis, so stacked vectors work too."""
        out = self.diag * u
        out[..., :-1] += self.sup * u[..., 1:]
        out[..., 1:] += self.sub * u[..., :-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sup, 1) + np.diag(self.sub, -1)

    def to_banded(self) -> np.ndarray:
        """(3, n) layout accepted by scipy.linalg.solve_banded((1, 1), ...)."""
        ab = np.zeros((3, self.n), dtype=complex)
        ab[0, 1:] = self.sup
        ab[1] = self.diag
        ab[2, :-1] = self.sub
        return ab


def sample_coefficient(value: Coefficient, x: np.ndarray) -> np.ndarray:
    if callable(value):
        raw = np.asarray(value(x), dtype=complex)
    else:
        raw = np.asarray(value, dtype=complex)
    return np.broadcast_to(raw, x.shape).astype(complex)


@dataclass(frozen=True)
class SectorEstimate:
    omega: float
    R: float = 0.0


@dataclass(frozen=True, eq=False)
class EllipticOp:
    """A(x, D_x) u = a u'' + b u' + c u on (0, 1) with Dirichlet traces."""

    grid: SpaceGrid
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    alpha_ctx: float
    sector: Optional[SectorEstimate] = None
    coefficients: tuple[Coefficient, Coefficient, Coefficient] = field(default=(1.0, 0.0, 0.0))

    def __post_init__(self) -> None:
        validate_order(self.alpha_ctx, field="alpha_ctx")
        for name in ("a", "b", "c"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != (self.grid.n,):
                raise DomainError(f"coefficient {name} has shape {arr.shape}, expected ({self.grid.n},)")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.a == 0):
            raise DomainError("second-order coefficient a vanishes at a grid node")

    @classmethod
    def build(
        cls,
        grid: SpaceGrid,
        *,
        alpha: float,
        a: Coefficient = 1.0,
        b: Coefficient = 0.0,
        c: Coefficient = 0.0,
        sector: Optional[SectorEstimate] = None,
    ) -> "EllipticOp":
        x = grid.x
        return cls(
            grid=grid,
            a=sample_coefficient(a, x),
            b=sample_coefficient(b, x),
            c=sample_coefficient(c, x),
            alpha_ctx=alpha,
            sector=sector,
            coefficients=(a, b, c),
        )

    @classmethod
    def laplacian(cls, grid: SpaceGrid, *, alpha: float) -> "EllipticOp":
        return cls.build(grid, alpha=alpha)

    def on(self, grid: SpaceGrid) -> "EllipticOp":
        a, b, c = self.coefficients
        return EllipticOp.build(grid, alpha=self.alpha_ctx, a=a, b=b, c=c)

    def with_sector(self, sector: SectorEstimate) -> "EllipticOp":
        a, b, c = self.coefficients
        return EllipticOp.build(self.grid, alpha=self.alpha_ctx, a=a, b=b, c=c, sector=sector)

    @cached_property
    def stencil(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        h = self.grid.h
        lower = self.a / h**2 - self.b / (2.0 * h)
        center = -2.0 * self.a / h**2 + self.c
        upper = self.a / h**2 + self.b / (2.0 * h)
        return lower, center, upper

    @cached_property
    def matrix(self) -> TriDiagMatrix:
        return assemble(self, self.grid)

    @cached_property
    def dense(self) -> np.ndarray:
        return self.matrix.to_dense()

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.matrix.matvec(np.asarray(u, dtype=complex))

    def apply_with_boundary(self, u_full: np.ndarray) -> np.ndarray:
        """A_h on interior nodes of a vector that carries its two boundary values."""
        u = np.asarray(u_full, dtype=complex)
        if u.shape[-1] != self.grid.n + 2:
            raise DomainError(f"expected {self.grid.n + 2} values including the boundary, got {u.shape[-1]}")
        lower, _, upper = self.stencil
        out = self.matrix.matvec(u[..., 1:-1].copy())
        out[..., 0] += lower[0] * u[..., 0]
        out[..., -1] += upper[-1] * u[..., -1]
        return out


def assemble(op: EllipticOp, grid: SpaceGrid) -> TriDiagMatrix:
    if grid.n != op.grid.n:
        raise DomainError(f"operator sampled on n={op.grid.n}, asked to assemble on n={grid.n}")
    lower, center, upper = op.stencil
    return TriDiagMatrix(sub=lower[1:].copy(), diag=center.copy(), sup=upper[:-1].copy())


def _thomas(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, rhs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    # rows of diag/rhs are independent systems; no pivoting
    k, n = diag.shape
    cp = np.empty((k, n - 1), dtype=complex)
    dp = np.empty((k, n), dtype=complex)
    pivot = diag[:, 0]
    for i in range(n):
        if i > 0:
            pivot = diag[:, i] - sub[i - 1] * cp[:, i - 1]
        bad = np.abs(pivot) < PIVOT_FLOOR
        if np.any(bad):
            raise NearSingularError("resolvent pivot breakdown", z=complex(zs[int(np.argmax(bad))]))
        if i < n - 1:
            cp[:, i] = sup[i] / pivot
        carry = sub[i - 1] * dp[:, i - 1] if i > 0 else 0.0
        dp[:, i] = (rhs[:, i] - carry) / pivot
    out = np.empty((k, n), dtype=complex)
    out[:, -1] = dp[:, -1]
    for i in range(n - 2, -1, -1):
        out[:, i] = dp[:, i] - cp[:, i] * out[:, i + 1]
    return out


def resolvent_solve_many(
    op: EllipticOp, zs: np.ndarray, rhs: np.ndarray, *, check: Optional[bool] = None
) -> np.ndarray:
    """Rows w_k solving (z_k I - A_h) w_k = rhs_k; ``rhs`` of shape (n,) is shared by all z."""
    z = np.atleast_1d(np.asarray(zs, dtype=complex))
    n = op.grid.n
    r = np.asarray(rhs, dtype=complex)
    r = np.broadcast_to(r, (z.size, n)) if r.ndim == 1 else r
    if r.shape != (z.size, n):
        raise DomainError(f"rhs shape {r.shape} does not match {z.size} shifts on n={n}")
    m = op.matrix
    diag = z[:, None] - m.diag[None, :]
    out = _thomas(-m.sub, diag, -m.sup, r, z)
    if check if check is not None else logger.isEnabledFor(logging.DEBUG):
        resid = z[:, None] * out - m.matvec(out) - r
        scale = np.max(np.abs(r), axis=1)
        worst = np.max(np.abs(resid), axis=1) - RESIDUAL_TOL * np.maximum(scale, 1.0)
        if np.any(worst > 0):
            k = int(np.argmax(worst))
            raise NearSingularError(f"resolvent residual {worst[k]:.3e} above tolerance", z=complex(z[k]))
    return out


def resolvent_solve(op: EllipticOp, z: complex, rhs: np.ndarray, *, check: Optional[bool] = None) -> np.ndarray:
    return resolvent_solve_many(op, np.asarray([z]), np.asarray(rhs, dtype=complex)[None, :], check=check)[0]
