from __future__ import annotations

from typing import Optional


class FracError(RuntimeError):
    pass


class DomainError(FracError, ValueError):
    pass


class PreconditionError(FracError):
    def __init__(self, message: str, *, mismatch: Optional[float] = None) -> None:
        super().__init__(message if mismatch is None else f"{message} (mismatch={mismatch:.3e})")
        self.mismatch = mismatch


class ConvergenceError(FracError):
    pass


class NearSingularError(FracError):
    def __init__(self, message: str, *, z: complex) -> None:
        super().__init__(f"{message} at z={z!r}")
        self.z = z


class ContourError(FracError):
    pass


class SourceError(FracError):
    def __init__(self, message: str, *, line: int = 1, col: int = 1) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class ExprError(SourceError):
    pass


class ConfigError(SourceError):
    pass
