from __future__ import annotations

from typing import Tuple

import numpy as np

from facesim.utils.types import IdentityParams, TextureMap

from .basis import TEXTURE_MODES, cosine_stack

MIN_TEXTURE_RES = 32
BASE_TONE = np.array([0.80, 0.62, 0.52])
TEXTURE_GAIN = 0.2


def mode_weights() -> np.ndarray:
    """Per-mode amplitude, decaying with frequency."""
    return np.array([TEXTURE_GAIN / (1.0 + 0.5 * (p + q)) for p, q in TEXTURE_MODES])


def texture_design(resolution: Tuple[int, int]) -> np.ndarray:
    """(modes, H, W) weighted basis; coefficient ``mode * 3 + channel`` scales field ``mode``."""
    height, width = resolution
    return mode_weights()[:, None, None] * cosine_stack(TEXTURE_MODES, height, width)


def unclipped_texture(coeffs: np.ndarray, resolution: Tuple[int, int]) -> np.ndarray:
    design = texture_design(resolution)
    weights = np.asarray(coeffs, dtype=np.float64).reshape(len(TEXTURE_MODES), 3)
    return BASE_TONE[None, None, :] + np.tensordot(design, weights, axes=([0], [0]))


def build_texture(params: IdentityParams, resolution: Tuple[int, int] = (256, 256)) -> TextureMap:
    height, width = int(resolution[0]), int(resolution[1])
    if height < MIN_TEXTURE_RES or width < MIN_TEXTURE_RES:
        raise ValueError(
            f"texture resolution must be at least {MIN_TEXTURE_RES}x{MIN_TEXTURE_RES}, got {height}x{width}"
        )
    if params.texture_coeffs.shape != (len(TEXTURE_MODES) * 3,):
        raise ValueError(
            f"expected {len(TEXTURE_MODES) * 3} texture coefficients, got {params.texture_coeffs.shape[0]}"
        )
    if not np.any(params.texture_coeffs != 0.0):
        return TextureMap(values=np.broadcast_to(BASE_TONE, (height, width, 3)))
    values = unclipped_texture(params.texture_coeffs, (height, width))
    return TextureMap(values=np.clip(values, 0.0, 1.0))


def texture_coeff_grad(upstream: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Gradient of a texture-space loss with respect to the texture coefficients.

    ``upstream`` is dL/dtexture; texels where the clamp is active contribute nothing.
    """
    height, width = upstream.shape[:2]
    design = texture_design((height, width))
    raw = unclipped_texture(coeffs, (height, width))
    passed = np.where((raw > 0.0) & (raw < 1.0), upstream, 0.0)
    per_mode = np.tensordot(design, passed, axes=([1, 2], [0, 1]))
    return per_mode.reshape(-1)
