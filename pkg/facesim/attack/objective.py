from __future__ import annotations

from typing import Union

import numpy as np

from facesim.utils.types import PatchMask, TextureMap

TextureLike = Union[TextureMap, np.ndarray]


def _values(texture: TextureLike) -> np.ndarray:
    return texture.values if isinstance(texture, TextureMap) else np.asarray(texture, dtype=np.float64)


def attack_loss(mode: str, distance: float) -> float:
    """Loss to minimize: dodging pushes features apart, impersonation pulls them together."""
    if mode == "dodging":
        return -distance
    if mode == "impersonation":
        return distance
    raise ValueError(f"unknown attack mode '{mode}'")


def attack_loss_sign(mode: str) -> float:
    return attack_loss(mode, 1.0)


def project_patch_values(
    values: np.ndarray, clean_values: np.ndarray, mask_values: np.ndarray, epsilon: float
) -> np.ndarray:
    low = np.maximum(clean_values - epsilon, 0.0)
    high = np.minimum(clean_values + epsilon, 1.0)
    projected = np.clip(values, low, high)
    return np.where(mask_values[:, :, None] > 0.0, projected, clean_values)


def project_patch(t: TextureLike, t_a: TextureLike, mask: PatchMask, epsilon: float) -> TextureMap:
    """Clamp to the epsilon box around ``t_a`` inside the mask; copy ``t_a`` outside."""
    values, clean = _values(t), _values(t_a)
    if values.shape != clean.shape or values.shape[:2] != mask.resolution:
        raise ValueError(
            f"texture {values.shape}, clean texture {clean.shape} and mask {mask.resolution} must match"
        )
    return TextureMap(values=project_patch_values(values, clean, mask.values, epsilon))


def compose_texture(t_star: TextureLike, t_a: TextureLike, mask: PatchMask) -> np.ndarray:
    """``t_a`` outside the mask, ``t_star`` inside."""
    inside = mask.values[:, :, None]
    return _values(t_a) * (1.0 - inside) + _values(t_star) * inside


def masked_linf(t: TextureLike, t_a: TextureLike, mask: PatchMask) -> float:
    diff = np.abs(_values(t) - _values(t_a)) * mask.values[:, :, None]
    return float(diff.max())


def outside_mask_equal(t: TextureLike, t_a: TextureLike, mask: PatchMask) -> bool:
    outside = mask.values == 0.0
    return bool(np.array_equal(_values(t)[outside], _values(t_a)[outside]))


def total_variation(values: np.ndarray) -> float:
    """Anisotropic total variation summed over channels."""
    array = np.asarray(values, dtype=np.float64)
    return float(np.abs(np.diff(array, axis=0)).sum() + np.abs(np.diff(array, axis=1)).sum())
