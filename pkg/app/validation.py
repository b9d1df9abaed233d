from __future__ import annotations

import math

from app.errors import DomainError


def validate_positive(value: float, *, field: str) -> float:
    v = float(value)
    if not math.isfinite(v) or v <= 0.0:
        raise DomainError(f"{field} must be positive and finite, got {value!r}")
    return v


def validate_order(value: float, *, field: str = "alpha") -> float:
    v = float(value)
    if not math.isfinite(v) or v <= 0.0 or v >= 2.0:
        raise DomainError(f"{field} must lie in (0, 2), got {value!r}")
    return v


def validate_theta(value: float) -> float:
    v = float(value)
    if not math.isfinite(v) or v <= 0.0 or v >= 2.0 or v == 1.0:
        raise DomainError(f"theta must lie in (0, 2) \\ {{1}}, got {value!r}")
    return v


def validate_count(value: int, *, field: str, minimum: int) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise DomainError(f"{field} must be an integer, got {value!r}")
    n = int(value)
    if n < minimum or n > 1_000_000:
        raise DomainError(f"{field} must be in [{minimum}, 1000000], got {n}")
    return n


def validate_grading(value: float) -> float:
    v = float(value)
    if not math.isfinite(v) or v < 1.0 or v > 3.0:
        raise DomainError(f"grading must lie in [1, 3], got {value!r}")
    return v
