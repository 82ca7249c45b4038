"""Rigid pose and orthographic projection.

Yaw turns the face about the vertical axis first, then pitch tilts it about
the horizontal axis. Image coordinates put pixel (row, col) at centre
``(col + 0.5, row + 0.5)``; camera depth grows away from the viewer.
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from facesim.utils.types import Viewpoint

# Half-width of the orthographic view volume in model units.
VIEW_EXTENT = 1.15
CAMERA_DISTANCE = 5.0


def rotation_matrix(viewpoint: Viewpoint) -> np.ndarray:
    yaw = math.radians(viewpoint.yaw_deg)
    pitch = math.radians(viewpoint.pitch_deg)
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    yaw_matrix = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    pitch_matrix = np.array([[1.0, 0.0, 0.0], [0.0, cp, sp], [0.0, -sp, cp]])
    return pitch_matrix @ yaw_matrix


def rotate(points: np.ndarray, viewpoint: Viewpoint) -> np.ndarray:
    return points @ rotation_matrix(viewpoint).T


def project(points: np.ndarray, image_size: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Screen positions (N, 2) as (x, y) pixels and camera depths (N,)."""
    height, width = image_size
    px = (points[:, 0] / VIEW_EXTENT + 1.0) * (width / 2.0)
    py = (1.0 - points[:, 1] / VIEW_EXTENT) * (height / 2.0)
    depth = CAMERA_DISTANCE - points[:, 2]
    return np.stack([px, py], axis=1), depth
