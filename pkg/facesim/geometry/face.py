from __future__ import annotations

from typing import Tuple

import numpy as np

from facesim.renderer.camera import project, rotate
from facesim.utils.types import Face3D, IdentityParams, ShapeMap, Viewpoint

from .shape import build_shape
from .texture import build_texture


def build_face(
    params: IdentityParams,
    shape_res: Tuple[int, int] = (64, 64),
    texture_res: Tuple[int, int] = (256, 256),
) -> Face3D:
    return Face3D(
        params=params,
        shape=build_shape(params, shape_res),
        texture=build_texture(params, texture_res),
    )


def surface_points(shape: ShapeMap, texture_res: Tuple[int, int]) -> np.ndarray:
    """3D surface point under every texel centre, (H, W, 3), by bilinear grid interpolation."""
    rows, cols = shape.resolution
    height, width = texture_res
    gy = np.arange(height, dtype=np.float64) / (height - 1) * (rows - 1)
    gx = np.arange(width, dtype=np.float64) / (width - 1) * (cols - 1)
    r0 = np.clip(np.floor(gy), 0, rows - 2).astype(np.int64)
    c0 = np.clip(np.floor(gx), 0, cols - 2).astype(np.int64)
    fy = (gy - r0)[:, None, None]
    fx = (gx - c0)[None, :, None]
    grid = shape.positions
    top = grid[r0][:, c0] * (1.0 - fx) + grid[r0][:, c0 + 1] * fx
    bottom = grid[r0 + 1][:, c0] * (1.0 - fx) + grid[r0 + 1][:, c0 + 1] * fx
    return top * (1.0 - fy) + bottom * fy


def uv_to_image(
    shape: ShapeMap,
    texture_res: Tuple[int, int],
    image_size: Tuple[int, int] = (112, 112),
) -> np.ndarray:
    """Continuous (x, y) pixel position of every texel at the neutral view, (H, W, 2)."""
    points = surface_points(shape, texture_res).reshape(-1, 3)
    screen, _ = project(rotate(points, Viewpoint()), image_size)
    return screen.reshape(texture_res[0], texture_res[1], 2)
