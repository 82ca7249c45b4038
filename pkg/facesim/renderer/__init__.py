from .camera import VIEW_EXTENT, project, rotate, rotation_matrix
from .export import write_render
from .rasterizer import Fragments, rasterize
from .shading import BACKGROUND, TextureSampler, render, render_grad_texture, shade
from .warp import (
    apply_transform2d,
    compose_transforms,
    identity_transform,
    sample_transform2d,
    transform2d_grad,
    warp_chain_grad,
)

__all__ = [
    "BACKGROUND",
    "Fragments",
    "TextureSampler",
    "VIEW_EXTENT",
    "apply_transform2d",
    "compose_transforms",
    "identity_transform",
    "project",
    "rasterize",
    "render",
    "render_grad_texture",
    "rotate",
    "rotation_matrix",
    "sample_transform2d",
    "shade",
    "transform2d_grad",
    "warp_chain_grad",
    "write_render",
]
