"""Small-resolution fixtures shared by the unit tests."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict

import numpy as np

from facesim.geometry import build_face, synth_identity
from facesim.recognizer import EmbeddingModel, ModelConfig
from facesim.renderer import render
from facesim.utils.types import Face3D, Lighting, Viewpoint

SHAPE_RES = (16, 16)
TEXTURE_RES = (32, 32)
IMAGE_SIZE = (32, 32)

TINY_MODEL = ModelConfig(
    "tiny",
    scales=(1.0,),
    orientations=2,
    pool_grid=(2, 2),
    seed=5,
    dim=16,
    input_size=IMAGE_SIZE,
)


def tiny_model() -> EmbeddingModel:
    return EmbeddingModel(TINY_MODEL)


def small_face(seed: int) -> Face3D:
    return build_face(synth_identity(seed), SHAPE_RES, TEXTURE_RES)


def neutral(face: Face3D) -> np.ndarray:
    return render(face.shape, face.texture, Viewpoint(), Lighting(), IMAGE_SIZE).image


def random_texture(seed: int, low: float = 0.1, high: float = 0.9) -> np.ndarray:
    return np.random.default_rng(seed).uniform(low, high, (*TEXTURE_RES, 3))


def small_config_data(**sections: Any) -> Dict[str, Any]:
    """Config dict tuned for fast runs; ``sections`` are merged one level deep."""
    data: Dict[str, Any] = {
        "seed": 0,
        "threads": 1,
        "resolutions": {"shape": [16, 16], "texture": [32, 32], "image": [32, 32]},
        "identities": {"attackers": [1], "victims": [2]},
        "models": ["modelA"],
        "white_box_models": ["modelA"],
        "region": "eyeglass",
        "attack": {
            "mode": "impersonation",
            "methods": ["MIM"],
            "iters": 2,
            "sample_count": 3,
            "candidate_count": 6,
        },
        "protocol": {"kinds": ["lighting"]},
        "fit": {"enabled": False, "max_iters": 2},
        "calibration": {"identities": 3, "strict": False},
        "benchmark": {"include_clean": False},
    }
    for name, values in sections.items():
        if isinstance(values, dict) and isinstance(data.get(name), dict):
            data[name].update(values)
        else:
            data[name] = values
    return data


def write_config(path: Path, **sections: Any) -> Path:
    path.write_text(json.dumps(small_config_data(**sections), indent=2), encoding="utf-8")
    return path
