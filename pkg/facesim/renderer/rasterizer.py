"""Hard z-buffered triangle rasterization of a ShapeMap.

The output is texture independent, so one set of fragments serves every
texture rendered under the same shape and viewpoint.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numba import njit

from facesim.geometry.shape import triangle_indices
from facesim.utils.types import ShapeMap, Viewpoint

from .camera import project, rotate

logger = logging.getLogger(__name__)

MIN_TRIANGLE_AREA = 1e-12


@njit(cache=True)
def _rasterize(screen, depth, faces, height, width, face_ids, bary, zbuf):  # pragma: no cover - jitted
    for f in range(faces.shape[0]):
        i0 = faces[f, 0]
        i1 = faces[f, 1]
        i2 = faces[f, 2]
        x0 = screen[i0, 0]
        y0 = screen[i0, 1]
        x1 = screen[i1, 0]
        y1 = screen[i1, 1]
        x2 = screen[i2, 0]
        y2 = screen[i2, 1]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(area) < MIN_TRIANGLE_AREA:
            continue
        col_lo = max(0, int(math.ceil(min(min(x0, x1), x2) - 0.5)))
        col_hi = min(width - 1, int(math.floor(max(max(x0, x1), x2) - 0.5)))
        row_lo = max(0, int(math.ceil(min(min(y0, y1), y2) - 0.5)))
        row_hi = min(height - 1, int(math.floor(max(max(y0, y1), y2) - 0.5)))
        for row in range(row_lo, row_hi + 1):
            py = row + 0.5
            for col in range(col_lo, col_hi + 1):
                px = col + 0.5
                w0 = ((x1 - px) * (y2 - py) - (x2 - px) * (y1 - py)) / area
                w1 = ((x2 - px) * (y0 - py) - (x0 - px) * (y2 - py)) / area
                w2 = ((x0 - px) * (y1 - py) - (x1 - px) * (y0 - py)) / area
                if w0 < 0.0 or w1 < 0.0 or w2 < 0.0:
                    continue
                z = w0 * depth[i0] + w1 * depth[i1] + w2 * depth[i2]
                if z < zbuf[row, col]:
                    zbuf[row, col] = z
                    face_ids[row, col] = f
                    bary[row, col, 0] = w0
                    bary[row, col, 1] = w1
                    bary[row, col, 2] = w2


@dataclass(frozen=True, eq=False)
class Fragments:
    """Per-pixel rasterization result; arrays are (H, W, ...) in image space."""

    face_ids: np.ndarray
    bary: np.ndarray
    uv: np.ndarray
    normals: np.ndarray
    depth: np.ndarray
    coverage: np.ndarray

    @property
    def image_size(self) -> Tuple[int, int]:
        return int(self.depth.shape[0]), int(self.depth.shape[1])


def vertex_normals(shape: ShapeMap) -> np.ndarray:
    """Area-weighted vertex normals, unit length, (rows * cols, 3)."""
    rows, cols = shape.resolution
    vertices = shape.positions.reshape(-1, 3)
    faces = triangle_indices(rows, cols)
    face_normals = np.cross(
        vertices[faces[:, 1]] - vertices[faces[:, 0]],
        vertices[faces[:, 2]] - vertices[faces[:, 0]],
    )
    accum = np.zeros_like(vertices)
    for corner in range(3):
        np.add.at(accum, faces[:, corner], face_normals)
    norms = np.linalg.norm(accum, axis=1, keepdims=True)
    return accum / np.where(norms > 0.0, norms, 1.0)


def vertex_uv(shape: ShapeMap) -> np.ndarray:
    rows, cols = shape.resolution
    u = np.arange(cols, dtype=np.float64) / (cols - 1)
    v = np.arange(rows, dtype=np.float64) / (rows - 1)
    uu, vv = np.meshgrid(u, v)
    return np.stack([uu.ravel(), vv.ravel()], axis=1)


def rasterize(shape: ShapeMap, viewpoint: Viewpoint, image_size: Tuple[int, int] = (112, 112)) -> Fragments:
    height, width = int(image_size[0]), int(image_size[1])
    if height < 1 or width < 1:
        raise ValueError(f"image size must be positive, got {height}x{width}")
    rows, cols = shape.resolution
    faces = triangle_indices(rows, cols)
    camera_points = rotate(shape.positions.reshape(-1, 3), viewpoint)
    screen, depth_values = project(camera_points, (height, width))

    face_ids = np.full((height, width), -1, dtype=np.int64)
    bary = np.zeros((height, width, 3), dtype=np.float64)
    zbuf = np.full((height, width), np.inf, dtype=np.float64)
    _rasterize(
        np.ascontiguousarray(screen),
        np.ascontiguousarray(depth_values),
        faces,
        height,
        width,
        face_ids,
        bary,
        zbuf,
    )
    coverage = face_ids >= 0

    uv = np.zeros((height, width, 2))
    normals = np.zeros((height, width, 3))
    if coverage.any():
        corners = faces[face_ids[coverage]]
        weights = bary[coverage]
        uv_vertices = vertex_uv(shape)
        uv[coverage] = np.einsum("pk,pkc->pc", weights, uv_vertices[corners])
        camera_normals = rotate(vertex_normals(shape), viewpoint)
        blended = np.einsum("pk,pkc->pc", weights, camera_normals[corners])
        lengths = np.linalg.norm(blended, axis=1, keepdims=True)
        normals[coverage] = blended / np.where(lengths > 0.0, lengths, 1.0)
    logger.debug(
        "rasterized %dx%d at yaw=%.1f pitch=%.1f: %d covered pixels",
        height,
        width,
        viewpoint.yaw_deg,
        viewpoint.pitch_deg,
        int(coverage.sum()),
    )
    return Fragments(
        face_ids=face_ids,
        bary=bary,
        uv=uv,
        normals=normals,
        depth=zbuf,
        coverage=coverage,
    )
