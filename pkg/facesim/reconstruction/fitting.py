"""Recover identity texture coefficients from a single neutral-view image.

The objective is ``D_f(x', x) + lam * ||x' - x||_1`` where ``x'`` is the
candidate face rendered at the neutral viewpoint and lighting. The shape is
frozen at the initial identity; only texture coefficients are optimized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from facesim.geometry import build_shape, build_texture, synth_identity, texture_coeff_grad
from facesim.recognizer import EmbeddingModel, feature_distance, load_model
from facesim.renderer import Fragments, TextureSampler, rasterize
from facesim.utils.config import FitConfig
from facesim.utils.errors import check_finite
from facesim.utils.optim import AdamOptimizer
from facesim.utils.types import FitResult, IdentityParams, Lighting, RenderOutput, ShapeMap, Viewpoint

logger = logging.getLogger(__name__)

LOG_EVERY = 50


@dataclass(frozen=True)
class ObjectiveValue:
    total: float
    feature_term: float
    l1_term: float


def neutral_sampler(
    shape: ShapeMap, image_size: Tuple[int, int], texture_res: Tuple[int, int]
) -> Tuple[TextureSampler, Fragments]:
    fragments = rasterize(shape, Viewpoint(), image_size)
    return TextureSampler.build(fragments, Lighting(), texture_res), fragments


def _resolve_model(config: FitConfig, model: Optional[EmbeddingModel]) -> EmbeddingModel:
    return model if model is not None else load_model(config.model_id)


def _check_target(target: np.ndarray, model: EmbeddingModel) -> np.ndarray:
    array = np.asarray(target, dtype=np.float64)
    expected = (*model.config.input_size, 3)
    if array.shape != expected:
        raise ValueError(f"target must be an image of shape {expected}, got {array.shape}")
    return array


def fit_objective(
    params: IdentityParams,
    shape: ShapeMap,
    target: np.ndarray,
    config: FitConfig,
    model: Optional[EmbeddingModel] = None,
    texture_res: Tuple[int, int] = (256, 256),
) -> ObjectiveValue:
    """Objective value at ``params`` split into its feature and weighted L1 terms."""
    model = _resolve_model(config, model)
    target = _check_target(target, model)
    sampler, _ = neutral_sampler(shape, model.config.input_size, texture_res)
    image = sampler.forward(build_texture(params, texture_res).values)
    feature_term = feature_distance(model.forward(image)[0], model.forward(target)[0])
    l1_term = config.lam * float(np.abs(image - target).sum())
    return ObjectiveValue(total=feature_term + l1_term, feature_term=feature_term, l1_term=l1_term)


def fit_face(
    target: np.ndarray,
    config: FitConfig,
    init_seed: int,
    model: Optional[EmbeddingModel] = None,
    shape_res: Tuple[int, int] = (64, 64),
    texture_res: Tuple[int, int] = (256, 256),
    free_coeffs: Optional[Sequence[int]] = None,
    init_params: Optional[IdentityParams] = None,
) -> FitResult:
    """Fit texture coefficients to ``target``; returns the best-loss iterate.

    ``free_coeffs`` restricts the optimization to a subset of texture
    coefficients (the rest keep their initial values). ``init_params``
    overrides the identity synthesized from ``init_seed``.
    """
    model = _resolve_model(config, model)
    target = _check_target(target, model)
    init = init_params if init_params is not None else synth_identity(init_seed)
    shape = build_shape(init, shape_res)
    sampler, fragments = neutral_sampler(shape, model.config.input_size, texture_res)
    target_feature = model.forward(target)[0]

    coeffs = np.array(init.texture_coeffs, dtype=np.float64)
    free = np.zeros(coeffs.shape, dtype=bool)
    if free_coeffs is None:
        free[:] = True
    else:
        free[np.asarray(list(free_coeffs), dtype=np.int64)] = True
    optimizer = AdamOptimizer(coeffs.shape, learning_rate=config.learning_rate)

    loss_trace = []
    best_loss = np.inf
    best_coeffs = coeffs.copy()
    best_iteration = 0
    best_image = None
    initial_l1 = 0.0
    for iteration in range(config.max_iters):
        params = init.replace_texture(coeffs)
        image = sampler.forward(build_texture(params, texture_res).values)
        feature, cache = model.forward(image)
        residual = image - target
        l1 = float(np.abs(residual).sum())
        loss = check_finite("fit_face", iteration, feature_distance(feature, target_feature) + config.lam * l1)
        loss_trace.append(loss)
        if iteration == 0:
            initial_l1 = l1
        if loss < best_loss:
            best_loss, best_coeffs, best_iteration, best_image = loss, coeffs.copy(), iteration, image
        if iteration % LOG_EVERY == 0:
            logger.info("fit iteration %d: loss %.6f (l1 %.4f)", iteration, loss, l1)

        grad_image = model.backward(cache, 2.0 * (feature - target_feature)) + config.lam * np.sign(residual)
        grad_coeffs = texture_coeff_grad(sampler.adjoint(grad_image), coeffs)
        if not np.all(np.isfinite(grad_coeffs)):
            check_finite("fit_face gradient", iteration, float(np.abs(grad_coeffs).sum()))
        grad_coeffs = np.where(free, grad_coeffs, 0.0)
        coeffs = np.clip(optimizer.step(coeffs, grad_coeffs), -1.0, 1.0)
        coeffs = np.where(free, coeffs, init.texture_coeffs)

    best_params = init.replace_texture(best_coeffs)
    final_render = RenderOutput(image=best_image, depth=fragments.depth, coverage=fragments.coverage)
    final_l1 = float(np.abs(best_image - target).sum())
    logger.info(
        "fit finished: best loss %.6f at iteration %d, l1 %.4f -> %.4f",
        best_loss,
        best_iteration,
        initial_l1,
        final_l1,
    )
    return FitResult(
        params=best_params,
        loss_trace=loss_trace,
        final_render=final_render,
        initial_l1=initial_l1,
        final_l1=final_l1,
        best_iteration=best_iteration,
    )
