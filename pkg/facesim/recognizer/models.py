from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Tuple


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of one analytic embedding model."""

    model_id: str
    scales: Tuple[float, ...]
    orientations: int
    pool_grid: Tuple[int, int]
    seed: int
    dim: int
    input_size: Tuple[int, int] = (112, 112)
    gain: float = 8.0
    surround_ratio: float = 2.0
    elongation: float = 2.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        object.__setattr__(self, "pool_grid", (int(self.pool_grid[0]), int(self.pool_grid[1])))
        object.__setattr__(self, "input_size", (int(self.input_size[0]), int(self.input_size[1])))
        if not self.scales or min(self.scales) <= 0:
            raise ValueError(f"scales must be positive, got {self.scales}")
        if self.orientations < 1:
            raise ValueError(f"orientations must be >= 1, got {self.orientations}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        gh, gw = self.pool_grid
        height, width = self.input_size
        if gh < 1 or gw < 1 or gh > height or gw > width:
            raise ValueError(f"pool grid {self.pool_grid} does not fit input size {self.input_size}")
        if self.surround_ratio <= 1.0:
            raise ValueError("surround_ratio must exceed 1")

    @property
    def filter_count(self) -> int:
        return len(self.scales) * self.orientations

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model_id": self.model_id,
            "scales": list(self.scales),
            "orientations": self.orientations,
            "pool_grid": list(self.pool_grid),
            "seed": self.seed,
            "dim": self.dim,
            "input_size": list(self.input_size),
            "gain": self.gain,
            "surround_ratio": self.surround_ratio,
            "elongation": self.elongation,
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "ModelConfig":
        return ModelConfig(
            model_id=str(data["model_id"]),
            scales=tuple(data["scales"]),
            orientations=int(data["orientations"]),
            pool_grid=tuple(data["pool_grid"]),
            seed=int(data["seed"]),
            dim=int(data["dim"]),
            input_size=tuple(data.get("input_size", (112, 112))),
            gain=float(data.get("gain", 8.0)),
            surround_ratio=float(data.get("surround_ratio", 2.0)),
            elongation=float(data.get("elongation", 2.0)),
        )


MODEL_CONFIGS: Dict[str, ModelConfig] = {
    "modelA": ModelConfig("modelA", scales=(1.5, 3.0), orientations=4, pool_grid=(4, 4), seed=11, dim=128),
    "modelB": ModelConfig("modelB", scales=(2.0, 4.0), orientations=3, pool_grid=(3, 3), seed=23, dim=64),
    "modelC": ModelConfig("modelC", scales=(1.0, 2.5, 5.0), orientations=2, pool_grid=(5, 5), seed=37, dim=128),
}


def get_model_config(model_id: str) -> ModelConfig:
    if model_id not in MODEL_CONFIGS:
        raise ValueError(f"unknown model '{model_id}'; expected one of {', '.join(sorted(MODEL_CONFIGS))}")
    return MODEL_CONFIGS[model_id]
