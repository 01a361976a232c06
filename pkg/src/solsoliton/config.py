"""Run-wide tolerances, seed and output settings."""
from __future__ import annotations

from dataclasses import asdict, dataclass

DEFAULT_SEED = 20240601
FORMATS = ("json", "md", "csv")


@dataclass(frozen=True)
class RunConfig:
    tol_rank: float = 1e-9
    tol_residual: float = 1e-9
    tol_flow: float = 1e-8
    seed: int = DEFAULT_SEED
    exact: bool = False
    format: str = "json"

    def __post_init__(self):
        for name in ("tol_rank", "tol_residual", "tol_flow"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")

    def as_dict(self) -> dict:
        return asdict(self)
