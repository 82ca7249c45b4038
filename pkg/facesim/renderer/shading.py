"""Texture sampling, Lambertian shading and the texture adjoint.

For a fixed shape, viewpoint and lighting the rendered image is linear in the
texture: each covered pixel is a Lambert-scaled bilinear blend of four texels.
:class:`TextureSampler` stores that blend so the forward map and its exact
transpose share one set of indices and weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from facesim.utils.types import Lighting, RenderOutput, ShapeMap, TextureMap, Viewpoint

from .rasterizer import Fragments, rasterize

BACKGROUND = 0.5


def bilinear_taps(uv: np.ndarray, texture_res: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Flat texel indices (P, 4) and weights (P, 4) for uv samples (P, 2).

    A sample at ``u`` reads texel column ``x = u * (W - 1)``; the lower tap is
    clamped to ``[0, W - 2]`` so the upper tap always exists.
    """
    height, width = texture_res
    x = uv[:, 0] * (width - 1)
    y = uv[:, 1] * (height - 1)
    x0 = np.clip(np.floor(x), 0, width - 2).astype(np.int64)
    y0 = np.clip(np.floor(y), 0, height - 2).astype(np.int64)
    fx = x - x0
    fy = y - y0
    indices = np.stack(
        [y0 * width + x0, y0 * width + x0 + 1, (y0 + 1) * width + x0, (y0 + 1) * width + x0 + 1],
        axis=1,
    )
    weights = np.stack(
        [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy],
        axis=1,
    )
    return indices, weights


def lambert_factor(normals: np.ndarray, lighting: Lighting) -> np.ndarray:
    cosine = np.maximum(0.0, normals @ lighting.direction)
    return lighting.ambient + (1.0 - lighting.ambient) * cosine


@dataclass(frozen=True, eq=False)
class TextureSampler:
    """Linear map texture -> image for one (fragments, lighting) pair."""

    image_size: Tuple[int, int]
    texture_res: Tuple[int, int]
    pixels: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @staticmethod
    def build(fragments: Fragments, lighting: Lighting, texture_res: Tuple[int, int]) -> "TextureSampler":
        if texture_res[0] < 2 or texture_res[1] < 2:
            raise ValueError(f"texture must be at least 2x2 for bilinear sampling, got {texture_res}")
        pixels = np.flatnonzero(fragments.coverage.ravel())
        uv = fragments.uv.reshape(-1, 2)[pixels]
        indices, weights = bilinear_taps(uv, texture_res)
        shade = lambert_factor(fragments.normals.reshape(-1, 3)[pixels], lighting)
        return TextureSampler(
            image_size=fragments.image_size,
            texture_res=(int(texture_res[0]), int(texture_res[1])),
            pixels=pixels,
            indices=indices,
            weights=weights * shade[:, None],
        )

    def forward(self, texture_values: np.ndarray) -> np.ndarray:
        height, width = self.image_size
        flat_texture = np.asarray(texture_values, dtype=np.float64).reshape(-1, 3)
        image = np.full((height * width, 3), BACKGROUND)
        image[self.pixels] = np.einsum("pk,pkc->pc", self.weights, flat_texture[self.indices])
        return np.clip(image.reshape(height, width, 3), 0.0, 1.0)

    def adjoint(self, upstream: np.ndarray) -> np.ndarray:
        """Transpose of :meth:`forward` on covered pixels, reduced texel by texel with bincount."""
        t_height, t_width = self.texture_res
        flat_upstream = np.asarray(upstream, dtype=np.float64).reshape(-1, 3)[self.pixels]
        flat_indices = self.indices.ravel()
        grad = np.empty((t_height * t_width, 3))
        for channel in range(3):
            contributions = (self.weights * flat_upstream[:, channel : channel + 1]).ravel()
            grad[:, channel] = np.bincount(flat_indices, weights=contributions, minlength=t_height * t_width)
        return grad.reshape(t_height, t_width, 3)


def shade(fragments: Fragments, texture_values: np.ndarray, lighting: Lighting) -> RenderOutput:
    texture_values = np.asarray(texture_values, dtype=np.float64)
    sampler = TextureSampler.build(fragments, lighting, texture_values.shape[:2])
    return RenderOutput(
        image=sampler.forward(texture_values),
        depth=fragments.depth,
        coverage=fragments.coverage,
    )


def render(
    shape: ShapeMap,
    texture: TextureMap,
    viewpoint: Viewpoint,
    lighting: Lighting,
    image_size: Tuple[int, int] = (112, 112),
) -> RenderOutput:
    return shade(rasterize(shape, viewpoint, image_size), texture.values, lighting)


def render_grad_texture(
    shape: ShapeMap,
    texture: TextureMap,
    viewpoint: Viewpoint,
    lighting: Lighting,
    upstream: np.ndarray,
    image_size: Tuple[int, int] | None = None,
) -> np.ndarray:
    """dL/dtexture given dL/dimage; geometry and shading weights are constants."""
    upstream = np.asarray(upstream, dtype=np.float64)
    if not np.all(np.isfinite(upstream)):
        raise ValueError("upstream gradient must be finite")
    size = image_size if image_size is not None else upstream.shape[:2]
    fragments = rasterize(shape, viewpoint, size)
    sampler = TextureSampler.build(fragments, lighting, texture.resolution)
    return sampler.adjoint(upstream)
