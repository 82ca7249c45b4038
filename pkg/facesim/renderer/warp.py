"""Planar image transformations and their adjoints.

Coordinates are normalized about the image centre: column ``j`` maps to
``x = (j - cx) / cx`` with ``cx = (W - 1) / 2`` (rows likewise). Each output
pixel ``p`` reads the input at ``T(p)`` by bilinear interpolation over an
image padded with one ring of background gray, so samples outside the image
fade to 0.5.
"""

from __future__ import annotations

import math
from typing import Sequence, Tuple

import numpy as np

from facesim.utils.types import Transform2D

from .shading import BACKGROUND

MIN_DENOMINATOR = 0.1
SNAP_TOLERANCE = 1e-9
_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]])


def identity_transform() -> Transform2D:
    return Transform2D(kind="projective")


def projective_denominators(params: Sequence[float]) -> np.ndarray:
    """k = c0*x + c1*y + 1 at the four corners; k is affine so its minimum is at a corner."""
    c0, c1 = params[6], params[7]
    return c0 * _CORNERS[:, 0] + c1 * _CORNERS[:, 1] + 1.0


def is_valid_projective(params: Sequence[float]) -> bool:
    return bool(np.all(projective_denominators(params) > MIN_DENOMINATOR))


def _sample_positions(transform: Transform2D, height: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """Source (row, col) for every output pixel, in padded-image coordinates."""
    cx = (width - 1) / 2.0
    cy = (height - 1) / 2.0
    cols, rows = np.meshgrid(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
    x = (cols - cx) / cx if cx > 0 else np.zeros_like(cols)
    y = (rows - cy) / cy if cy > 0 else np.zeros_like(rows)
    if transform.kind == "rotation":
        theta = transform.rotation_rad
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        xs = cos_t * x + sin_t * y
        ys = -sin_t * x + cos_t * y
    else:
        params = transform.projective_params
        if not is_valid_projective(params):
            raise ValueError(
                f"projective denominator must exceed {MIN_DENOMINATOR} over the image, "
                f"got corner values {projective_denominators(params).tolist()}"
            )
        a0, a1, a2, b0, b1, b2, c0, c1 = params
        k = c0 * x + c1 * y + 1.0
        xs = (a0 * x + a1 * y + a2) / k
        ys = (b0 * x + b1 * y + b2) / k
    src_cols = xs * cx + cx
    src_rows = ys * cy + cy
    src_cols = _snap(src_cols)
    src_rows = _snap(src_rows)
    src_cols = np.clip(src_cols, -1.0, float(width)) + 1.0
    src_rows = np.clip(src_rows, -1.0, float(height)) + 1.0
    return src_rows, src_cols


def _snap(values: np.ndarray) -> np.ndarray:
    nearest = np.round(values)
    return np.where(np.abs(values - nearest) < SNAP_TOLERANCE, nearest, values)


def _taps(transform: Transform2D, height: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """Flat padded-grid indices (P, 4) and bilinear weights (P, 4)."""
    rows, cols = _sample_positions(transform, height, width)
    padded_w = width + 2
    r0 = np.clip(np.floor(rows), 0, height).astype(np.int64)
    c0 = np.clip(np.floor(cols), 0, width).astype(np.int64)
    fr = (rows - r0).ravel()
    fc = (cols - c0).ravel()
    base = (r0 * padded_w + c0).ravel()
    indices = np.stack([base, base + 1, base + padded_w, base + padded_w + 1], axis=1)
    weights = np.stack(
        [(1.0 - fr) * (1.0 - fc), (1.0 - fr) * fc, fr * (1.0 - fc), fr * fc],
        axis=1,
    )
    return indices, weights


def _as_channels(image: np.ndarray) -> np.ndarray:
    array = np.asarray(image, dtype=np.float64)
    return array[:, :, None] if array.ndim == 2 else array


def apply_transform2d(image: np.ndarray, transform: Transform2D) -> np.ndarray:
    source = _as_channels(image)
    height, width, channels = source.shape
    indices, weights = _taps(transform, height, width)
    padded = np.pad(source, ((1, 1), (1, 1), (0, 0)), constant_values=BACKGROUND)
    flat = padded.reshape(-1, channels)
    warped = np.einsum("pk,pkc->pc", weights, flat[indices]).reshape(height, width, channels)
    return warped if np.ndim(image) == 3 else warped[:, :, 0]


def transform2d_grad(image: np.ndarray, transform: Transform2D, upstream: np.ndarray) -> np.ndarray:
    """Exact adjoint of :func:`apply_transform2d` with respect to the input image."""
    grad_out = _as_channels(upstream)
    height, width, channels = _as_channels(image).shape
    indices, weights = _taps(transform, height, width)
    padded_size = (height + 2) * (width + 2)
    flat_upstream = grad_out.reshape(-1, channels)
    flat_indices = indices.ravel()
    grad = np.empty((padded_size, channels))
    for channel in range(channels):
        contributions = (weights * flat_upstream[:, channel : channel + 1]).ravel()
        grad[:, channel] = np.bincount(flat_indices, weights=contributions, minlength=padded_size)
    cropped = grad.reshape(height + 2, width + 2, channels)[1:-1, 1:-1]
    return cropped if np.ndim(image) == 3 else cropped[:, :, 0]


def compose_transforms(image: np.ndarray, transforms: Sequence[Transform2D]) -> np.ndarray:
    """Apply ``transforms`` left to right (mixture2d is rotation then projective)."""
    result = np.asarray(image, dtype=np.float64)
    for transform in transforms:
        result = apply_transform2d(result, transform)
    return result


def warp_chain_grad(image: np.ndarray, transforms: Sequence[Transform2D], upstream: np.ndarray) -> np.ndarray:
    grad = np.asarray(upstream, dtype=np.float64)
    for transform in reversed(tuple(transforms)):
        grad = transform2d_grad(image, transform, grad)
    return grad


def sample_transform2d(sigma: float, rng: np.random.Generator, kind: str = "rotation") -> Transform2D:
    """Draw a random transform.

    Rotation angles are N(0, sigma) in radians, stored as degrees on the
    record (`rotation_rad` reads them back). Projective a0 and b0 are
    N(1, sigma), the other six parameters N(0, sigma); draws whose denominator
    would reach 0.1 inside the image are redrawn.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if kind == "rotation":
        angle = float(rng.normal(0.0, sigma))
        return Transform2D(kind="rotation", rotation_deg=math.degrees(angle))
    if kind != "projective":
        raise ValueError(f"unknown transform kind '{kind}'")
    while True:
        params = rng.normal(0.0, sigma, 8)
        params[0] += 1.0
        params[3] += 1.0
        if is_valid_projective(params):
            return Transform2D(kind="projective", projective_params=tuple(float(v) for v in params))
