"""Masked patch attacks on the texture of a fixed-shape face.

Every method keeps the attacker's shape and the texture outside the mask
untouched, so the adversarial face differs from the clean one only in the
patch region. Per iteration the sampled conditions are rendered, embedded
and differentiated back to the texture; the gradient of the mean sampled
loss drives the update. Candidate evaluations may run on a thread pool, but
results are always reduced in index order and the random generator is only
consumed on the calling thread, so serial and threaded runs agree bit for bit.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from facesim.geometry import build_face, uv_to_image
from facesim.recognizer import EmbeddingCache, EmbeddingModel, calibrated_model, decide, feature_distance
from facesim.renderer import (
    Fragments,
    TextureSampler,
    compose_transforms,
    rasterize,
    sample_transform2d,
    warp_chain_grad,
)
from facesim.utils.errors import NonFiniteError, check_finite
from facesim.utils.optim import AdamOptimizer
from facesim.utils.seeding import make_rng
from facesim.utils.types import (
    AttackConfig,
    AttackResult,
    CandidateSet,
    Condition,
    Face3D,
    IdentityParams,
    Lighting,
    PatchMask,
    TextureMap,
    Transform2D,
    Viewpoint,
)

from .candidates import candidates_for_method
from .objective import attack_loss, attack_loss_sign, compose_texture, project_patch_values
from .sampling import importance_probs, sample_conditions, uniform_probs

logger = logging.getLogger(__name__)

LOG_EVERY = 20
IterateCallback = Callable[[int, np.ndarray], None]


@dataclass
class Evaluation:
    index: int
    loss: float
    distance: float
    feature: np.ndarray
    cache: EmbeddingCache
    transforms: Tuple[Transform2D, ...]
    image: np.ndarray


class ConditionEvaluator:
    """Renders, embeds and differentiates one face under a fixed list of conditions.

    Rasterization and sampling weights depend only on shape and condition, so
    they are built once per candidate and reused for every texture.
    """

    def __init__(
        self,
        shape,
        conditions: Sequence[Condition],
        model: EmbeddingModel,
        victim_feature: np.ndarray,
        mode: str,
        texture_res: Tuple[int, int],
        threads: int = 1,
    ) -> None:
        self.conditions = tuple(conditions)
        self.model = model
        self.victim_feature = victim_feature
        self.mode = mode
        self.threads = max(1, int(threads))
        size = model.config.input_size
        fragments: Dict[Viewpoint, Fragments] = {}
        self.samplers: List[TextureSampler] = []
        for condition in self.conditions:
            if condition.viewpoint not in fragments:
                fragments[condition.viewpoint] = rasterize(shape, condition.viewpoint, size)
            self.samplers.append(TextureSampler.build(fragments[condition.viewpoint], condition.lighting, texture_res))
        self.forward_passes = 0
        self.backward_passes = 0

    def _map(self, function: Callable, items: Sequence) -> list:
        if self.threads == 1 or len(items) <= 1:
            return [function(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(function, items))

    def forward(self, index: int, texture_values: np.ndarray, extra: Tuple[Transform2D, ...] = ()) -> Evaluation:
        transforms = self.conditions[index].transforms + tuple(extra)
        image = self.samplers[index].forward(texture_values)
        warped = compose_transforms(image, transforms) if transforms else image
        feature, cache = self.model.forward(warped)
        distance = feature_distance(feature, self.victim_feature)
        return Evaluation(index, attack_loss(self.mode, distance), distance, feature, cache, transforms, image)

    def backward(self, evaluation: Evaluation) -> np.ndarray:
        upstream = attack_loss_sign(self.mode) * 2.0 * (evaluation.feature - self.victim_feature)
        grad_image = self.model.backward(evaluation.cache, upstream)
        if evaluation.transforms:
            grad_image = warp_chain_grad(evaluation.image, evaluation.transforms, grad_image)
        return self.samplers[evaluation.index].adjoint(grad_image)

    def forward_many(
        self,
        indices: Sequence[int],
        texture_values: np.ndarray,
        extras: Optional[Sequence[Tuple[Transform2D, ...]]] = None,
    ) -> List[Evaluation]:
        extras = list(extras) if extras is not None else [()] * len(indices)
        self.forward_passes += len(indices)
        return self._map(lambda pair: self.forward(pair[0], texture_values, pair[1]), list(zip(indices, extras)))

    def mean_gradient(self, evaluations: Sequence[Evaluation]) -> np.ndarray:
        self.backward_passes += len(evaluations)
        grads = self._map(self.backward, list(evaluations))
        total = np.zeros_like(grads[0])
        for grad in grads:
            total += grad
        return total / len(grads)


def _as_face(
    attacker: Union[Face3D, IdentityParams], shape_res: Tuple[int, int], texture_res: Tuple[int, int]
) -> Face3D:
    if isinstance(attacker, Face3D):
        return attacker
    return build_face(attacker, shape_res, texture_res)


def resample_victim(face: Face3D, victim_image: np.ndarray) -> np.ndarray:
    """Victim image pulled back into texture space through the neutral projection."""
    image = np.asarray(victim_image, dtype=np.float64)
    height, width = image.shape[:2]
    positions = uv_to_image(face.shape, face.texture.resolution, (height, width))
    x = np.clip(positions[:, :, 0] - 0.5, 0.0, width - 1.0)
    y = np.clip(positions[:, :, 1] - 0.5, 0.0, height - 1.0)
    x0 = np.clip(np.floor(x), 0, width - 2).astype(np.int64)
    y0 = np.clip(np.floor(y), 0, height - 2).astype(np.int64)
    fx = (x - x0)[:, :, None]
    fy = (y - y0)[:, :, None]
    top = image[y0, x0] * (1.0 - fx) + image[y0, x0 + 1] * fx
    bottom = image[y0 + 1, x0] * (1.0 - fx) + image[y0 + 1, x0 + 1] * fx
    return np.clip(top * (1.0 - fy) + bottom * fy, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class PatchBasis:
    """Cosine fields over the mask's bounding box, (K*K, H, W), for the latent-code attack."""

    fields: np.ndarray
    size: int

    @staticmethod
    def build(mask: PatchMask, size: int) -> "PatchBasis":
        if size < 4:
            raise ValueError(f"basis size must be >= 4, got {size}")
        rows = np.flatnonzero(mask.values.any(axis=1))
        cols = np.flatnonzero(mask.values.any(axis=0))
        height, width = mask.resolution
        r0, r1, c0, c1 = rows[0], rows[-1], cols[0], cols[-1]
        u = np.clip((np.arange(width) - c0) / max(c1 - c0, 1), 0.0, 1.0)
        v = np.clip((np.arange(height) - r0) / max(r1 - r0, 1), 0.0, 1.0)
        uu, vv = np.meshgrid(u, v)
        fields = np.stack(
            [np.cos(np.pi * p * uu) * np.cos(np.pi * q * vv) for p in range(size) for q in range(size)]
        )
        return PatchBasis(fields=fields, size=size)

    def expand(self, code: np.ndarray) -> np.ndarray:
        """Pre-squash perturbation field (H, W, 3) for a (K*K, 3) code."""
        return np.tensordot(self.fields, code, axes=([0], [0]))

    def decode(self, code: np.ndarray, epsilon: float) -> np.ndarray:
        return epsilon * np.tanh(self.expand(code))

    def pullback(self, grad_field: np.ndarray) -> np.ndarray:
        return np.tensordot(self.fields, grad_field, axes=([0, 1], [0, 1]))


def _check_inputs(face: Face3D, mask: PatchMask, model: EmbeddingModel, victim_image: np.ndarray) -> np.ndarray:
    if mask.resolution != face.texture.resolution:
        raise ValueError(f"mask resolution {mask.resolution} must match texture {face.texture.resolution}")
    if not np.any(mask.values > 0.0):
        raise ValueError("mask is empty")
    victim = np.asarray(victim_image, dtype=np.float64)
    expected = (*model.config.input_size, 3)
    if victim.shape != expected:
        raise ValueError(f"victim image must have shape {expected}, got {victim.shape}")
    return victim


def _resolve_candidates(config: AttackConfig, candidates: Optional[CandidateSet]) -> CandidateSet:
    if candidates is None:
        return candidates_for_method(config)
    if config.method == "MIM" and len(candidates) != 1:
        raise ValueError("MIM optimizes a single fixed condition")
    if config.method != "MIM":
        if len(candidates) != config.candidate_count:
            raise ValueError(f"expected {config.candidate_count} candidates, got {len(candidates)}")
    return candidates


def _reference_delta(model: EmbeddingModel, delta: Optional[float], face: Face3D) -> float:
    if delta is not None:
        return float(delta)
    _, threshold = calibrated_model(
        model.model_id, model.config.input_size, face.shape.resolution, face.texture.resolution
    )
    return threshold.delta


def _fresh_transforms(config: AttackConfig, count: int, rng: np.random.Generator) -> List[Tuple[Transform2D, ...]]:
    # MIM stays on its single fixed neutral condition.
    if config.method == "MIM" or config.transform2d_sigma <= 0.0:
        return [()] * count
    return [
        (
            sample_transform2d(config.transform2d_sigma, rng, "rotation"),
            sample_transform2d(config.transform2d_sigma, rng, "projective"),
        )
        for _ in range(count)
    ]


def _sampled_step(
    evaluator: ConditionEvaluator,
    config: AttackConfig,
    texture_values: np.ndarray,
    rng: np.random.Generator,
    iteration: int,
) -> Tuple[float, np.ndarray]:
    """Mean sampled loss and its texture gradient for one iteration."""
    count = len(evaluator.conditions)
    importance = config.method in {"Face3DAdv_x", "Face3DAdv_w"} and config.use_importance_sampling
    if config.method == "MIM":
        sampled = [0]
        evaluations = evaluator.forward_many(sampled, texture_values)
    elif importance:
        everything = evaluator.forward_many(list(range(count)), texture_values)
        losses = np.array([check_finite("attack loss", iteration, e.loss) for e in everything])
        sampled = sample_conditions(importance_probs(losses), config.sample_count, rng, config.with_replacement)
        evaluations = [everything[index] for index in sampled]
    else:
        sampled = sample_conditions(uniform_probs(count), config.sample_count, rng, config.with_replacement)
        evaluations = []

    extras = _fresh_transforms(config, len(sampled), rng)
    if any(extras):
        evaluations = evaluator.forward_many(sampled, texture_values, extras)
    elif not evaluations:
        evaluations = evaluator.forward_many(sampled, texture_values)

    mean_loss = check_finite("attack loss", iteration, float(np.mean([e.loss for e in evaluations])))
    grad = evaluator.mean_gradient(evaluations)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteError("attack gradient", iteration, float(np.abs(grad).sum()))
    return mean_loss, grad


def _neutral_success(
    face: Face3D,
    texture_values: np.ndarray,
    model: EmbeddingModel,
    victim_feature: np.ndarray,
    mode: str,
    delta: float,
) -> bool:
    fragments = rasterize(face.shape, Viewpoint(), model.config.input_size)
    image = TextureSampler.build(fragments, Lighting(), face.texture.resolution).forward(texture_values)
    decision = decide(feature_distance(model.forward(image)[0], victim_feature), delta)
    return decision == ("same" if mode == "impersonation" else "different")


def run_attack(
    attacker: Union[Face3D, IdentityParams],
    victim_image: np.ndarray,
    mask: PatchMask,
    model: EmbeddingModel,
    candidates: Optional[CandidateSet],
    config: AttackConfig,
    delta: Optional[float] = None,
    on_iterate: Optional[IterateCallback] = None,
    threads: int = 1,
    shape_res: Tuple[int, int] = (64, 64),
    texture_res: Tuple[int, int] = (256, 256),
) -> AttackResult:
    """Sign-gradient patch attack (MIM, EOT, Face3DAdv_x); Face3DAdv_w is dispatched to its own loop."""
    if config.method == "Face3DAdv_w":
        return face3dadv_w(
            attacker, victim_image, mask, model, candidates, config, config.basis_dim,
            delta=delta, on_iterate=on_iterate, threads=threads, shape_res=shape_res, texture_res=texture_res,
        )
    face = _as_face(attacker, shape_res, texture_res)
    victim = _check_inputs(face, mask, model, victim_image)
    candidates = _resolve_candidates(config, candidates)
    victim_feature = model.forward(victim)[0]
    evaluator = ConditionEvaluator(
        face.shape, candidates.conditions, model, victim_feature, config.mode, face.texture.resolution, threads
    )
    rng = make_rng(config.rng_seed, "attack")
    clean = face.texture.values
    inside = mask.values[:, :, None]

    start = resample_victim(face, victim) if config.init_from_victim else clean
    adv = project_patch_values(compose_texture(start, clean, mask), clean, mask.values, config.epsilon)
    if on_iterate is not None:
        on_iterate(0, adv)

    momentum = np.zeros_like(clean)
    loss_trace: List[float] = []
    for iteration in range(config.iters):
        mean_loss, grad = _sampled_step(evaluator, config, adv, rng, iteration)
        loss_trace.append(mean_loss)
        direction = grad * inside
        if config.method == "MIM":
            l1 = float(np.abs(direction).sum())
            momentum = config.momentum_mu * momentum + (direction / l1 if l1 > 0.0 else direction)
            direction = momentum
        adv = project_patch_values(adv - config.alpha * np.sign(direction) * inside, clean, mask.values, config.epsilon)
        if on_iterate is not None:
            on_iterate(iteration + 1, adv)
        if iteration % LOG_EVERY == 0:
            logger.info("%s iteration %d: mean loss %.6f", config.method, iteration, mean_loss)

    success = _neutral_success(face, adv, model, victim_feature, config.mode, _reference_delta(model, delta, face))
    logger.info(
        "%s %s finished: %d iterations, success at neutral: %s", config.method, config.mode, config.iters, success
    )
    return AttackResult(
        adv_texture=TextureMap(values=adv),
        loss_trace=loss_trace,
        iterations_run=config.iters,
        success_at_neutral=success,
        method=config.method,
        mode=config.mode,
        forward_passes=evaluator.forward_passes,
        backward_passes=evaluator.backward_passes,
    )


def face3dadv_w(
    attacker: Union[Face3D, IdentityParams],
    victim_image: np.ndarray,
    mask: PatchMask,
    model: EmbeddingModel,
    candidates: Optional[CandidateSet],
    config: AttackConfig,
    basis_dim: int = 8,
    delta: Optional[float] = None,
    on_iterate: Optional[IterateCallback] = None,
    threads: int = 1,
    shape_res: Tuple[int, int] = (64, 64),
    texture_res: Tuple[int, int] = (256, 256),
) -> AttackResult:
    """Patch optimized as a smooth code: ``t* = clip(t_a + M * eps * tanh(B w))`` with Adam on ``w``."""
    face = _as_face(attacker, shape_res, texture_res)
    victim = _check_inputs(face, mask, model, victim_image)
    candidates = _resolve_candidates(config, candidates)
    basis = PatchBasis.build(mask, basis_dim)
    victim_feature = model.forward(victim)[0]
    evaluator = ConditionEvaluator(
        face.shape, candidates.conditions, model, victim_feature, config.mode, face.texture.resolution, threads
    )
    rng = make_rng(config.rng_seed, "attack")
    clean = face.texture.values
    inside = mask.values[:, :, None]
    code = np.zeros((basis_dim * basis_dim, 3))
    optimizer = AdamOptimizer(code.shape, learning_rate=config.learning_rate)

    def decode(current: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        squashed = np.tanh(basis.expand(current))
        raw = clean + inside * (config.epsilon * squashed)
        return np.clip(raw, 0.0, 1.0), squashed, raw

    adv, squashed, raw = decode(code)
    if on_iterate is not None:
        on_iterate(0, adv)
    loss_trace: List[float] = []
    for iteration in range(config.iters):
        mean_loss, grad = _sampled_step(evaluator, config, adv, rng, iteration)
        loss_trace.append(mean_loss)
        passed = (raw > 0.0) & (raw < 1.0)
        grad_field = grad * inside * passed * config.epsilon * (1.0 - squashed**2)
        code = optimizer.step(code, basis.pullback(grad_field))
        adv, squashed, raw = decode(code)
        if on_iterate is not None:
            on_iterate(iteration + 1, adv)
        if iteration % LOG_EVERY == 0:
            logger.info("Face3DAdv_w iteration %d: mean loss %.6f", iteration, mean_loss)

    success = _neutral_success(face, adv, model, victim_feature, config.mode, _reference_delta(model, delta, face))
    return AttackResult(
        adv_texture=TextureMap(values=adv),
        loss_trace=loss_trace,
        iterations_run=config.iters,
        success_at_neutral=success,
        method="Face3DAdv_w",
        mode=config.mode,
        forward_passes=evaluator.forward_passes,
        backward_passes=evaluator.backward_passes,
    )
