from .identity import identity_from_dict, identity_to_dict, synth_identity, zero_identity
from .masks import mask_from_array, region_mask
from .shape import FACE_WIDTH, SHAPE_AMPLITUDE, build_shape, triangle_areas, triangle_indices
from .texture import BASE_TONE, build_texture, texture_coeff_grad
from .face import build_face, surface_points, uv_to_image

__all__ = [
    "BASE_TONE",
    "FACE_WIDTH",
    "SHAPE_AMPLITUDE",
    "build_face",
    "build_shape",
    "build_texture",
    "identity_from_dict",
    "identity_to_dict",
    "mask_from_array",
    "region_mask",
    "surface_points",
    "synth_identity",
    "texture_coeff_grad",
    "triangle_areas",
    "triangle_indices",
    "uv_to_image",
    "zero_identity",
]
