from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from app.errors import DomainError
from app.validation import validate_count, validate_grading, validate_order, validate_positive

ArrayLike = Union[np.ndarray, Sequence[complex], complex, float]


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class TimeGrid:
    T: float
    M: int
    nodes: np.ndarray
    grading: float = 1.0

    @classmethod
    def uniform(cls, T: float, M: int) -> "TimeGrid":
        return cls.graded(T, M, 1.0)

    @classmethod
    def graded(cls, T: float, M: int, grading: float) -> "TimeGrid":
        T = validate_positive(T, field="T")
        M = validate_count(M, field="M", minimum=1)
        gamma = validate_grading(grading)
        nodes = T * (np.arange(M + 1, dtype=float) / M) ** gamma
        nodes[0] = 0.0
        nodes[-1] = T
        return cls(T=T, M=M, nodes=_frozen(nodes), grading=gamma)

    @classmethod
    def from_nodes(cls, nodes: Sequence[float]) -> "TimeGrid":
        arr = np.asarray(nodes, dtype=float).copy()
        if arr.ndim != 1 or arr.size < 2:
            raise DomainError("time grid needs at least two nodes")
        if arr[0] != 0.0:
            raise DomainError("time grid must start at t=0")
        if np.any(np.diff(arr) <= 0.0):
            raise DomainError("time grid nodes must be strictly increasing")
        return cls(T=float(arr[-1]), M=arr.size - 1, nodes=_frozen(arr), grading=1.0)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def is_uniform(self) -> bool:
        return self.grading == 1.0 and np.allclose(self.steps, self.T / self.M, rtol=1e-12, atol=0.0)

    def refine(self) -> "TimeGrid":
        return TimeGrid.graded(self.T, 2 * self.M, self.grading)

    def __len__(self) -> int:
        return self.M + 1


@dataclass(frozen=True, eq=False)
class TimeSeries:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[0] != len(self.grid):
            raise DomainError(
                f"series has {vals.shape[0] if vals.ndim else 0} rows, grid has {len(self.grid)} nodes"
            )
        object.__setattr__(self, "values", _frozen(vals.copy()))

    @classmethod
    def sample(cls, grid: TimeGrid, fn, *, dim: int = 1) -> "TimeSeries":
        t = grid.nodes
        raw = np.asarray(fn(t), dtype=complex)
        if raw.ndim == 0:
            raw = np.full((t.size, dim), raw)
        return cls(grid=grid, values=raw)

    @classmethod
    def zeros(cls, grid: TimeGrid, dim: int) -> "TimeSeries":
        return cls(grid=grid, values=np.zeros((len(grid), dim), dtype=complex))

    @classmethod
    def constant(cls, grid: TimeGrid, vector: ArrayLike) -> "TimeSeries":
        vec = np.atleast_1d(np.asarray(vector, dtype=complex))
        return cls(grid=grid, values=np.tile(vec, (len(grid), 1)))

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def at(self, i: int) -> np.ndarray:
        return self.values[i]

    def column(self, j: int) -> "TimeSeries":
        return TimeSeries(grid=self.grid, values=self.values[:, j])

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(grid=self.grid, values=values)

    def _check_same_grid(self, other: "TimeSeries") -> None:
        if other.grid is not self.grid and not np.array_equal(other.grid.nodes, self.grid.nodes):
            raise DomainError("series live on different time grids")

    def __add__(self, other: "TimeSeries") -> "TimeSeries":
        self._check_same_grid(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "TimeSeries") -> "TimeSeries":
        self._check_same_grid(other)
        return self.with_values(self.values - other.values)

    def __neg__(self) -> "TimeSeries":
        return self.with_values(-self.values)

    def scale(self, factor: complex) -> "TimeSeries":
        return self.with_values(factor * self.values)

    def sup_norm(self) -> float:
        if self.values.size == 0:
            return 0.0
        return float(np.max(np.abs(self.values)))

    def to_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        if path.parent and str(path.parent) not in (".", ""):
            path.parent.mkdir(parents=True, exist_ok=True)
        header = ["t"]
        for j in range(self.dim):
            header += [f"re_{j}", f"im_{j}"]
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, t in enumerate(self.t):
                row = [format_float(t)]
                for v in self.values[i]:
                    row += [format_float(v.real), format_float(v.imag)]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "TimeSeries":
        with Path(path).open("r", newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 3:
            raise DomainError(f"{path}: expected a header and at least two rows")
        body = np.array([[float(x) for x in row] for row in rows[1:]], dtype=float)
        values = body[:, 1::2] + 1j * body[:, 2::2]
        return cls(grid=TimeGrid.from_nodes(body[:, 0]), values=values)


def format_float(value: float) -> str:
    return f"{float(value):.17g}"


@dataclass(frozen=True, eq=False)
class InitialData:
    alpha: float
    u_k: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        alpha = validate_order(self.alpha)
        vectors = tuple(np.atleast_1d(np.asarray(v, dtype=complex)).copy() for v in self.u_k)
        expected = 1 if alpha <= 1.0 else 2
        if len(vectors) != expected:
            raise DomainError(f"alpha={alpha} needs {expected} initial vectors, got {len(vectors)}")
        if len({v.shape for v in vectors}) != 1:
            raise DomainError("initial vectors must share one shape")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "u_k", tuple(_frozen(v) for v in vectors))

    @classmethod
    def of(cls, alpha: float, u0: ArrayLike, u1: ArrayLike | None = None) -> "InitialData":
        if float(alpha) <= 1.0:
            return cls(alpha=alpha, u_k=(np.atleast_1d(u0),))
        if u1 is None:
            u1 = np.zeros_like(np.atleast_1d(np.asarray(u0, dtype=complex)))
        return cls(alpha=alpha, u_k=(np.atleast_1d(u0), np.atleast_1d(u1)))

    @property
    def dim(self) -> int:
        return int(self.u_k[0].size)
