from __future__ import annotations

from typing import Any, Dict

import numpy as np

from facesim.utils.seeding import seed_sequence
from facesim.utils.types import IdentityParams

from .basis import SHAPE_MODES, TEXTURE_MODES

SHAPE_COEFF_COUNT = len(SHAPE_MODES)
TEXTURE_COEFF_COUNT = len(TEXTURE_MODES) * 3


def synth_identity(seed: int) -> IdentityParams:
    """Deterministic synthetic identity; coefficients are uniform in [-1, 1]."""
    rng = np.random.default_rng(seed_sequence(seed, "identity"))
    shape_coeffs = rng.uniform(-1.0, 1.0, SHAPE_COEFF_COUNT)
    texture_coeffs = rng.uniform(-1.0, 1.0, TEXTURE_COEFF_COUNT)
    return IdentityParams(seed=int(seed), shape_coeffs=shape_coeffs, texture_coeffs=texture_coeffs)


def zero_identity(seed: int = 0) -> IdentityParams:
    return IdentityParams(
        seed=int(seed),
        shape_coeffs=np.zeros(SHAPE_COEFF_COUNT),
        texture_coeffs=np.zeros(TEXTURE_COEFF_COUNT),
    )


def identity_to_dict(params: IdentityParams) -> Dict[str, Any]:
    return {
        "seed": params.seed,
        "shape_coeffs": [float(value) for value in params.shape_coeffs],
        "texture_coeffs": [float(value) for value in params.texture_coeffs],
    }


def identity_from_dict(data: Dict[str, Any]) -> IdentityParams:
    try:
        return IdentityParams(
            seed=int(data["seed"]),
            shape_coeffs=np.asarray(data["shape_coeffs"], dtype=np.float64),
            texture_coeffs=np.asarray(data["texture_coeffs"], dtype=np.float64),
        )
    except KeyError as exc:
        raise RuntimeError(f"identity record is missing field {exc.args[0]!r}") from exc
