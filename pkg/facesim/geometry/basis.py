"""Low-frequency cosine fields over the unit UV square.

Every field is ``cos(pi * p * u) * cos(pi * q * v)`` sampled on a grid where
``u = col / (cols - 1)`` and ``v = row / (rows - 1)``.
"""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

# (p, q) frequency pairs; the constant mode is excluded from the shape basis.
SHAPE_MODES: List[Tuple[int, int]] = [(p, q) for p in range(3) for q in range(3)][1:]
TEXTURE_MODES: List[Tuple[int, int]] = [(p, q) for p in range(4) for q in range(4)]


def uv_grid(rows: int, cols: int) -> Tuple[np.ndarray, np.ndarray]:
    u = np.arange(cols, dtype=np.float64) / (cols - 1)
    v = np.arange(rows, dtype=np.float64) / (rows - 1)
    return np.meshgrid(u, v)


def cosine_field(p: int, q: int, rows: int, cols: int) -> np.ndarray:
    u, v = uv_grid(rows, cols)
    return np.cos(np.pi * p * u) * np.cos(np.pi * q * v)


def cosine_stack(modes: List[Tuple[int, int]], rows: int, cols: int) -> np.ndarray:
    """(len(modes), rows, cols) array of basis fields."""
    u, v = uv_grid(rows, cols)
    return np.stack([np.cos(np.pi * p * u) * np.cos(np.pi * q * v) for p, q in modes])
