"""Patch regions in UV space.

All regions are analytic shapes over ``u = col / (W - 1)``, ``v = row / (H - 1)``
with inclusive boundaries (see docs/PROTOCOL.md for the committed table):

* ``hat``: forehead band ``0.04 <= v <= 0.20``, ``0.15 <= u <= 0.85``.
* ``eyeglass``: two lens ellipses centred at ``(0.33, 0.40)`` and ``(0.67, 0.40)``
  with radii ``(0.12, 0.08)``, a bridge ``0.44 <= u <= 0.56, 0.38 <= v <= 0.42``
  and temples ``0.08 <= u <= 0.21`` or ``0.79 <= u <= 0.92`` at ``0.37 <= v <= 0.41``.
* ``respirator``: ellipse centred at ``(0.50, 0.78)`` with radii ``(0.26, 0.17)``.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from facesim.utils.types import REGION_NAMES, PatchMask

from .basis import uv_grid


def _ellipse(u: np.ndarray, v: np.ndarray, center: Tuple[float, float], radii: Tuple[float, float]) -> np.ndarray:
    return ((u - center[0]) / radii[0]) ** 2 + ((v - center[1]) / radii[1]) ** 2 <= 1.0


def _box(u: np.ndarray, v: np.ndarray, u_range: Tuple[float, float], v_range: Tuple[float, float]) -> np.ndarray:
    return (u >= u_range[0]) & (u <= u_range[1]) & (v >= v_range[0]) & (v <= v_range[1])


def _eyeglass(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    lenses = _ellipse(u, v, (0.33, 0.40), (0.12, 0.08)) | _ellipse(u, v, (0.67, 0.40), (0.12, 0.08))
    bridge = _box(u, v, (0.44, 0.56), (0.38, 0.42))
    temples = _box(u, v, (0.08, 0.21), (0.37, 0.41)) | _box(u, v, (0.79, 0.92), (0.37, 0.41))
    return lenses | bridge | temples


def _respirator(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return _ellipse(u, v, (0.50, 0.78), (0.26, 0.17))


def _hat(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return _box(u, v, (0.15, 0.85), (0.04, 0.20))


_REGIONS = {
    "eyeglass": _eyeglass,
    "respirator": _respirator,
    "hat": _hat,
}


def region_mask(region_name: str, resolution: Tuple[int, int] = (256, 256)) -> PatchMask:
    if region_name not in _REGIONS:
        raise ValueError(f"unknown region '{region_name}'; expected one of {', '.join(REGION_NAMES)}")
    height, width = int(resolution[0]), int(resolution[1])
    if height < 2 or width < 2:
        raise ValueError(f"mask resolution must be at least 2x2, got {height}x{width}")
    u, v = uv_grid(height, width)
    values = _REGIONS[region_name](u, v).astype(np.float64)
    return PatchMask(values=values, region_name=region_name)


def mask_from_array(values: np.ndarray, region_name: str) -> PatchMask:
    """Wrap a user-supplied mask; binarity and the area bound are enforced by PatchMask."""
    if region_name not in _REGIONS:
        raise ValueError(f"unknown region '{region_name}'; expected one of {', '.join(REGION_NAMES)}")
    return PatchMask(values=np.asarray(values, dtype=np.float64), region_name=region_name)
