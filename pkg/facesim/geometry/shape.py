"""Face-like height-field mesh.

The base surface is the front cap of an ellipsoid with a Gaussian nose bump;
identity shape coefficients add cosine displacement fields along depth.
"""

from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from facesim.utils.types import IdentityParams, ShapeMap

from .basis import SHAPE_MODES, cosine_stack

logger = logging.getLogger(__name__)

MIN_SHAPE_RES = 16
SEMI_AXES = (0.72, 0.95, 0.62)
FACE_WIDTH = 2.0 * SEMI_AXES[0]
YAW_SPAN_DEG = 75.0
PITCH_SPAN_DEG = 65.0
NOSE_HEIGHT = 0.12
NOSE_SIGMA = (0.07, 0.16)
NOSE_CENTER_Y = -0.05
# Two identities differ by at most 2 * len(SHAPE_MODES) * SHAPE_AMPLITUDE = 10% of face width.
SHAPE_AMPLITUDE = 0.05 * FACE_WIDTH / len(SHAPE_MODES)


def _symmetric_span(count: int) -> np.ndarray:
    t = np.linspace(-1.0, 1.0, count)
    # exact antisymmetry: t[j] == -t[count - 1 - j]
    return 0.5 * (t - t[::-1])


def base_positions(rows: int, cols: int) -> np.ndarray:
    theta = np.deg2rad(YAW_SPAN_DEG) * _symmetric_span(cols)
    phi = -np.deg2rad(PITCH_SPAN_DEG) * _symmetric_span(rows)
    theta_grid, phi_grid = np.meshgrid(theta, phi)
    a, b, c = SEMI_AXES
    x = a * np.cos(phi_grid) * np.sin(theta_grid)
    y = b * np.sin(phi_grid)
    z = c * np.cos(phi_grid) * np.cos(theta_grid)
    sx, sy = NOSE_SIGMA
    z = z + NOSE_HEIGHT * np.exp(
        -(x**2 / (2.0 * sx**2) + (y - NOSE_CENTER_Y) ** 2 / (2.0 * sy**2))
    )
    return np.stack([x, y, z], axis=-1)


def build_shape(params: IdentityParams, resolution: Tuple[int, int] = (64, 64)) -> ShapeMap:
    rows, cols = int(resolution[0]), int(resolution[1])
    if rows < MIN_SHAPE_RES or cols < MIN_SHAPE_RES:
        raise ValueError(f"shape resolution must be at least {MIN_SHAPE_RES}x{MIN_SHAPE_RES}, got {rows}x{cols}")
    if params.shape_coeffs.shape != (len(SHAPE_MODES),):
        raise ValueError(
            f"expected {len(SHAPE_MODES)} shape coefficients, got {params.shape_coeffs.shape[0]}"
        )
    positions = base_positions(rows, cols)
    if np.any(params.shape_coeffs != 0.0):
        fields = cosine_stack(SHAPE_MODES, rows, cols)
        displacement = np.tensordot(params.shape_coeffs, fields, axes=1)
        positions[:, :, 2] += SHAPE_AMPLITUDE * displacement
    return ShapeMap(positions=positions)


def triangle_indices(rows: int, cols: int) -> np.ndarray:
    """(2 * (rows-1) * (cols-1), 3) vertex indices, quad by quad in row-major order.

    Quad (r, c) yields [(r,c), (r+1,c), (r,c+1)] then [(r,c+1), (r+1,c), (r+1,c+1)];
    both wind so that the normal of the undeformed mesh points toward +z.
    """
    r, c = np.meshgrid(np.arange(rows - 1), np.arange(cols - 1), indexing="ij")
    v00 = (r * cols + c).ravel()
    v10 = v00 + cols
    v01 = v00 + 1
    v11 = v10 + 1
    first = np.stack([v00, v10, v01], axis=1)
    second = np.stack([v01, v10, v11], axis=1)
    return np.stack([first, second], axis=1).reshape(-1, 3).astype(np.int64)


def triangle_areas(shape: ShapeMap) -> np.ndarray:
    rows, cols = shape.resolution
    vertices = shape.positions.reshape(-1, 3)
    faces = triangle_indices(rows, cols)
    e1 = vertices[faces[:, 1]] - vertices[faces[:, 0]]
    e2 = vertices[faces[:, 2]] - vertices[faces[:, 0]]
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
