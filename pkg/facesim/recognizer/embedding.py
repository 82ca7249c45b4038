"""Analytic face-embedding models with exact adjoints.

Pipeline: grayscale -> oriented difference-of-Gaussian filter bank ("same"
linear convolution by FFT) -> tanh -> average pooling over a grid of cells
-> seeded dense projection -> L2 normalization.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from facesim.utils.seeding import make_rng
from facesim.utils.types import RenderOutput

from .models import ModelConfig, get_model_config

logger = logging.getLogger(__name__)

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])
RANGE_TOLERANCE = 1e-9


def dog_kernel(sigma: float, theta: float, surround_ratio: float, elongation: float, radius: int) -> np.ndarray:
    """Oriented DoG: unit-mass centre Gaussian minus unit-mass surround Gaussian."""
    y, x = np.mgrid[-radius : radius + 1, -radius : radius + 1].astype(np.float64)
    xr = x * math.cos(theta) + y * math.sin(theta)
    yr = -x * math.sin(theta) + y * math.cos(theta)

    def gaussian(sx: float, sy: float) -> np.ndarray:
        g = np.exp(-(xr**2 / (2.0 * sx**2) + yr**2 / (2.0 * sy**2)))
        return g / g.sum()

    center = gaussian(sigma * elongation, sigma)
    surround = gaussian(surround_ratio * sigma * elongation, surround_ratio * sigma)
    return center - surround


def filter_bank(config: ModelConfig) -> np.ndarray:
    """(scales * orientations, K, K) kernels sharing one support radius."""
    radius = int(math.ceil(3.0 * config.surround_ratio * max(config.scales) * config.elongation))
    kernels = [
        dog_kernel(sigma, math.pi * index / config.orientations, config.surround_ratio, config.elongation, radius)
        for sigma in config.scales
        for index in range(config.orientations)
    ]
    return np.stack(kernels)


def _cell_edges(length: int, cells: int) -> np.ndarray:
    return np.array([(index * length) // cells for index in range(cells + 1)], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class EmbeddingCache:
    """Forward intermediates needed by the backward pass."""

    plane_count: int
    activations: np.ndarray
    z: np.ndarray
    norm: float
    feature: np.ndarray
    projection: np.ndarray


class EmbeddingModel:
    def __init__(self, config: ModelConfig) -> None:
        self.config = config
        self.kernels = filter_bank(config)
        height, width = config.input_size
        self.radius = self.kernels.shape[1] // 2
        self.fft_shape = (height + self.kernels.shape[1] - 1, width + self.kernels.shape[2] - 1)
        self.kernel_spectra = np.fft.rfft2(self.kernels, s=self.fft_shape)
        self.row_edges = _cell_edges(height, config.pool_grid[0])
        self.col_edges = _cell_edges(width, config.pool_grid[1])
        self.cell_counts = np.outer(np.diff(self.row_edges), np.diff(self.col_edges)).astype(np.float64)
        self.projection = self._make_projection("projection", 1)
        self._rgbd_projection: np.ndarray | None = None

    @property
    def model_id(self) -> str:
        return self.config.model_id

    @property
    def dim(self) -> int:
        return self.config.dim

    def _make_projection(self, label: str, plane_count: int) -> np.ndarray:
        inputs = plane_count * self.config.filter_count * self.config.pool_grid[0] * self.config.pool_grid[1]
        rng = make_rng(self.config.seed, label)
        return rng.standard_normal((self.config.dim, inputs)) / math.sqrt(inputs)

    @property
    def rgbd_projection(self) -> np.ndarray:
        if self._rgbd_projection is None:
            self._rgbd_projection = self._make_projection("projection-rgbd", 4)
        return self._rgbd_projection

    def _check_image(self, image: np.ndarray) -> np.ndarray:
        array = np.asarray(image, dtype=np.float64)
        expected = (*self.config.input_size, 3)
        if array.shape != expected:
            raise ValueError(f"{self.model_id} expects images of shape {expected}, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("image contains non-finite values")
        if array.min() < -RANGE_TOLERANCE or array.max() > 1.0 + RANGE_TOLERANCE:
            raise ValueError("image values must lie in [0, 1]")
        return array

    def _convolve(self, planes: np.ndarray) -> np.ndarray:
        height, width = self.config.input_size
        spectra = np.fft.rfft2(planes, s=self.fft_shape)
        full = np.fft.irfft2(spectra[:, None] * self.kernel_spectra[None], s=self.fft_shape)
        r = self.radius
        return full[:, :, r : r + height, r : r + width].reshape(-1, height, width)

    def _correlate(self, grads: np.ndarray, plane_count: int) -> np.ndarray:
        height, width = self.config.input_size
        r = self.radius
        padded = np.zeros((plane_count, self.kernels.shape[0], *self.fft_shape))
        padded[:, :, r : r + height, r : r + width] = grads.reshape(plane_count, -1, height, width)
        spectra = np.fft.rfft2(padded)
        full = np.fft.irfft2(spectra * np.conj(self.kernel_spectra)[None], s=self.fft_shape)
        return full[:, :, :height, :width].sum(axis=1)

    def _pool(self, activations: np.ndarray) -> np.ndarray:
        rows = np.add.reduceat(activations, self.row_edges[:-1], axis=1)
        cells = np.add.reduceat(rows, self.col_edges[:-1], axis=2)
        return cells / self.cell_counts[None]

    def _unpool(self, grad_cells: np.ndarray) -> np.ndarray:
        spread = grad_cells / self.cell_counts[None]
        spread = np.repeat(spread, np.diff(self.row_edges), axis=1)
        return np.repeat(spread, np.diff(self.col_edges), axis=2)

    def forward_planes(self, planes: np.ndarray, projection: np.ndarray) -> Tuple[np.ndarray, EmbeddingCache]:
        activations = np.tanh(self.config.gain * self._convolve(planes))
        pooled = self._pool(activations).reshape(-1)
        z = projection @ pooled
        norm = float(np.linalg.norm(z))
        if norm == 0.0 or not math.isfinite(norm):
            raise RuntimeError(f"{self.model_id}: degenerate embedding (norm={norm})")
        feature = z / norm
        cache = EmbeddingCache(
            plane_count=int(planes.shape[0]),
            activations=activations,
            z=z,
            norm=norm,
            feature=feature,
            projection=projection,
        )
        return feature, cache

    def backward_planes(self, cache: EmbeddingCache, upstream: np.ndarray) -> np.ndarray:
        upstream = np.asarray(upstream, dtype=np.float64)
        if upstream.shape != (self.dim,):
            raise ValueError(f"upstream gradient must have shape ({self.dim},), got {upstream.shape}")
        if not np.all(np.isfinite(upstream)):
            raise ValueError("upstream gradient must be finite")
        feature = cache.feature
        grad_z = (upstream - feature * float(feature @ upstream)) / cache.norm
        grad_pooled = (cache.projection.T @ grad_z).reshape(-1, *self.config.pool_grid)
        grad_activations = self._unpool(grad_pooled)
        grad_responses = grad_activations * self.config.gain * (1.0 - cache.activations**2)
        return self._correlate(grad_responses, cache.plane_count)

    def forward(self, image: np.ndarray) -> Tuple[np.ndarray, EmbeddingCache]:
        gray = self._check_image(image) @ GRAY_WEIGHTS
        return self.forward_planes(gray[None], self.projection)

    def backward(self, cache: EmbeddingCache, upstream: np.ndarray) -> np.ndarray:
        """Image gradient (H, W, 3) of ``upstream . f(image)``."""
        grad_gray = self.backward_planes(cache, upstream)[0]
        return grad_gray[:, :, None] * GRAY_WEIGHTS[None, None, :]

    def forward_rgbd(self, image: np.ndarray, depth: np.ndarray) -> Tuple[np.ndarray, EmbeddingCache]:
        """R, G, B and normalized depth as four planes through the shared filter bank."""
        rgb = self._check_image(image)
        depth = np.asarray(depth, dtype=np.float64)
        if depth.shape != rgb.shape[:2]:
            raise ValueError(f"depth plane must have shape {rgb.shape[:2]}, got {depth.shape}")
        if not np.all(np.isfinite(depth)):
            raise ValueError("depth plane must be normalized (finite, background = 1)")
        return self.forward_planes(np.concatenate([rgb.transpose(2, 0, 1), depth[None]]), self.rgbd_projection)


_MODEL_CACHE: dict[Tuple[str, Tuple[int, int]], EmbeddingModel] = {}


def load_model(model_id: str, input_size: Optional[Tuple[int, int]] = None) -> EmbeddingModel:
    """Committed model by id, built once per process and input size.

    ``input_size`` rescales the input grid only; filters, pooling grid and
    projection seed stay those of the committed configuration.
    """
    config = get_model_config(model_id)
    if input_size is not None:
        config = replace(config, input_size=(int(input_size[0]), int(input_size[1])))
    key = (model_id, config.input_size)
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = EmbeddingModel(config)
        logger.debug("built embedding model %s at %s", model_id, config.input_size)
    return _MODEL_CACHE[key]


def embed(model: EmbeddingModel, image: np.ndarray) -> np.ndarray:
    return model.forward(image)[0]


def embed_grad(model: EmbeddingModel, image: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    _, cache = model.forward(image)
    return model.backward(cache, upstream)


def normalize_depth(render: RenderOutput) -> np.ndarray:
    """Depth rescaled to [0, 1] over covered pixels; background set to 1."""
    plane = np.ones(render.depth.shape)
    covered = render.coverage.astype(bool)
    if covered.any():
        values = render.depth[covered]
        low, high = float(values.min()), float(values.max())
        span = high - low
        plane[covered] = (values - low) / span if span > 0 else 0.0
    return plane


def embed_rgbd(model: EmbeddingModel, image: np.ndarray, depth: np.ndarray) -> np.ndarray:
    return model.forward_rgbd(image, depth)[0]
