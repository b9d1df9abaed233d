from __future__ import annotations

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="FRACDIR_", extra="ignore"
    )

    log_level: str = "INFO"
    workers: int = 1

    consistency_tol: float = 1e-8
    equality_tol: float = 1e-6
    divergence_ratio: float = 1.5
    exponent_margin: float = 0.1

    nodes_per_ray: int = 16
    arc_nodes: int = 16
    contour_radius: float = 1.0
    contour_truncation: float = 1e3
    contour_cache_size: int = 256

    quad_tol: float = 1e-10
    quad_limit: int = 200
    convergence_attempts: int = 3

    # "auto": modal route while the eigenbasis condition stays below modal_condition_limit, split otherwise
    duhamel_method: str = "auto"
    modal_condition_limit: float = 1e6

    cutoff_delta1: float = 0.1
    cutoff_delta2: float = 0.4

    # sampling used to test data memberships, independent of the solve grid
    probe_time_intervals: int = 256
    probe_space_intervals: int = 512
    probe_cross_samples: int = 17

    def worker_count(self) -> int:
        if self.workers <= 1:
            return 1
        return min(self.workers, 64)


def load_settings() -> Settings:
    return Settings()
