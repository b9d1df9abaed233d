from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from app.contour.nodes import ContourSpec
from app.elliptic.operator import Coefficient, EllipticOp, SpaceGrid
from app.errors import DomainError
from app.frac_calc.series import InitialData, TimeGrid
from app.settings import Settings, load_settings
from app.validation import validate_count, validate_order, validate_positive, validate_theta

SpaceTimeFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
TimeFn = Callable[[np.ndarray], np.ndarray]
SpaceFn = Callable[[np.ndarray], np.ndarray]


def _zero_st(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.zeros(np.broadcast(t, x).shape)


def _zero(s: np.ndarray) -> np.ndarray:
    return np.zeros(np.shape(s))


def sample_space_time(fn: SpaceTimeFn, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    tt, xx = np.meshgrid(t, x, indexing="ij")
    return np.broadcast_to(np.asarray(fn(tt, xx), dtype=complex), tt.shape).copy()


def sample_line(fn: Callable[[np.ndarray], np.ndarray], s: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(fn(s), dtype=complex), s.shape).copy()


@dataclass(frozen=True)
class CutoffProfile:
    """chi = 1 on [0, delta1], 0 on [delta2, inf), quintic smoothstep between."""

    delta1: float = 0.1
    delta2: float = 0.4

    def __post_init__(self) -> None:
        if not (0.0 < self.delta1 < self.delta2 <= 0.5):
            raise DomainError(f"cutoff needs 0 < delta1 < delta2 <= 1/2, got {self.delta1}, {self.delta2}")

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None) -> "CutoffProfile":
        s = settings or load_settings()
        return cls(delta1=s.cutoff_delta1, delta2=s.cutoff_delta2)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        s = np.clip((np.asarray(x, dtype=float) - self.delta1) / (self.delta2 - self.delta1), 0.0, 1.0)
        return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    alpha: float
    theta: float
    T: float
    n: int
    M: int
    f: SpaceTimeFn = _zero_st
    gL: TimeFn = _zero
    gR: TimeFn = _zero
    u0: SpaceFn = _zero
    u1: Optional[SpaceFn] = None
    coefficients: tuple[Coefficient, Coefficient, Coefficient] = (1.0, 0.0, 0.0)
    grading: float = 1.0
    contour: Optional[ContourSpec] = None
    cutoff: CutoffProfile = field(default_factory=CutoffProfile.from_settings)
    label: str = "problem"

    def __post_init__(self) -> None:
        alpha = validate_order(self.alpha)
        theta = validate_theta(self.theta)
        if not alpha * theta < 2.0:
            raise DomainError(f"alpha * theta must stay below 2, got {alpha * theta}")
        validate_positive(self.T, field="T")
        validate_count(self.n, field="n", minimum=3)
        validate_count(self.M, field="M", minimum=2)
        if alpha > 1.0 and self.u1 is None:
            raise DomainError("alpha in (1, 2) needs u1")
        if alpha <= 1.0 and self.u1 is not None:
            raise DomainError("u1 is only meaningful for alpha in (1, 2)")

    @property
    def space_grid(self) -> SpaceGrid:
        return SpaceGrid(self.n)

    @property
    def time_grid(self) -> TimeGrid:
        return TimeGrid.graded(self.T, self.M, self.grading)

    @cached_property
    def op(self) -> EllipticOp:
        a, b, c = self.coefficients
        return EllipticOp.build(self.space_grid, alpha=self.alpha, a=a, b=b, c=c)

    @property
    def target_time_exponent(self) -> float:
        return self.alpha * self.theta / 2.0

    def initial_vectors(self, x: np.ndarray) -> tuple[np.ndarray, ...]:
        vecs = [sample_line(self.u0, x)]
        if self.u1 is not None:
            vecs.append(sample_line(self.u1, x))
        return tuple(vecs)

    def initial_data(self, x: np.ndarray) -> InitialData:
        return InitialData(alpha=self.alpha, u_k=self.initial_vectors(x))

    def refined(self, *, space: bool = True, time: bool = True) -> "ProblemSpec":
        return replace(
            self,
            n=SpaceGrid(self.n).refine().n if space else self.n,
            M=2 * self.M if time else self.M,
        )

    def with_data(self, **changes) -> "ProblemSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class ConditionEntry:
    name: str
    quantity: str
    measured: float
    threshold: float
    passed: bool
    kind: str = "equality"
    exponent: float = math.nan


@dataclass(frozen=True)
class CompatibilityReport:
    theorem: str
    entries: tuple[ConditionEntry, ...]

    def __post_init__(self) -> None:
        names = [e.name for e in self.entries]
        if len(names) != len(set(names)):
            raise DomainError(f"duplicate condition in report: {names}")

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failed(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries if not e.passed)

    def entry(self, name: str) -> ConditionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)
