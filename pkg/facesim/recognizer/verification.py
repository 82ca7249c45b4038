from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from facesim.geometry import build_face, synth_identity
from facesim.renderer import render
from facesim.utils.imageio import write_csv
from facesim.utils.seeding import make_rng
from facesim.utils.types import Lighting, Threshold, Viewpoint

from .embedding import EmbeddingModel, embed, load_model

logger = logging.getLogger(__name__)

MAX_DISTANCE = 4.0
GATE_MIN_ACCURACY = 0.9
GATE_IDENTITY_COUNT = 20
GATE_MAX_POSE_DEG = 10.0

ImagePair = Tuple[np.ndarray, np.ndarray]


def feature_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Squared Euclidean distance of unit vectors, clipped to [0, 4] against rounding."""
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(min(max(float(diff @ diff), 0.0), MAX_DISTANCE))


def decide(distance: float, delta: float) -> str:
    return "same" if distance < delta else "different"


def verify(model: EmbeddingModel, xa: np.ndarray, xb: np.ndarray, delta: float) -> str:
    return decide(feature_distance(embed(model, xa), embed(model, xb)), delta)


def verification_accuracy(distances: Sequence[float], labels: Sequence[bool], delta: float) -> float:
    """Fraction of pairs decided correctly; ``labels`` is True for genuine pairs."""
    values = np.asarray(distances, dtype=np.float64)
    genuine = np.asarray(labels, dtype=bool)
    if values.size == 0:
        raise ValueError("accuracy needs at least one pair")
    return float(np.mean((values < delta) == genuine))


def calibrate_from_distances(genuine: Sequence[float], impostor: Sequence[float]) -> Threshold:
    """Accuracy-maximizing threshold over midpoints of consecutive distinct distances.

    Ties go to the smaller threshold. With a single distinct distance the
    midpoint rule has no candidates and that distance itself is used.
    """
    if len(genuine) == 0 or len(impostor) == 0:
        raise ValueError("threshold calibration needs non-empty genuine and impostor lists")
    distances = np.concatenate([np.asarray(genuine, dtype=np.float64), np.asarray(impostor, dtype=np.float64)])
    labels = np.concatenate([np.ones(len(genuine), dtype=bool), np.zeros(len(impostor), dtype=bool)])
    distinct = np.unique(distances)
    candidates = (distinct[:-1] + distinct[1:]) / 2.0 if distinct.size > 1 else distinct
    best_delta = float(candidates[0])
    best_accuracy = -1.0
    for delta in candidates:
        accuracy = verification_accuracy(distances, labels, float(delta))
        if accuracy > best_accuracy:
            best_delta, best_accuracy = float(delta), accuracy
    return Threshold(delta=min(max(best_delta, 0.0), MAX_DISTANCE), accuracy=best_accuracy)


def calibrate_threshold(
    model: EmbeddingModel,
    genuine_pairs: Sequence[ImagePair],
    impostor_pairs: Sequence[ImagePair],
) -> Threshold:
    if not genuine_pairs or not impostor_pairs:
        raise ValueError("threshold calibration needs non-empty genuine and impostor pair lists")
    genuine = [feature_distance(embed(model, a), embed(model, b)) for a, b in genuine_pairs]
    impostor = [feature_distance(embed(model, a), embed(model, b)) for a, b in impostor_pairs]
    return calibrate_from_distances(genuine, impostor)


@dataclass
class SeparationReport:
    model_id: str
    threshold: Threshold
    genuine: List[float] = field(default_factory=list)
    impostor: List[float] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return self.threshold.accuracy

    @property
    def passed(self) -> bool:
        return self.threshold.accuracy >= GATE_MIN_ACCURACY


def check_model_separation(
    model: EmbeddingModel,
    identity_seeds: Sequence[int] | None = None,
    shape_res: Tuple[int, int] = (64, 64),
    texture_res: Tuple[int, int] = (256, 256),
    seed: int = 0,
) -> SeparationReport:
    """Calibrated verification accuracy over synthetic identities.

    Genuine pairs compare an identity at the neutral pose with itself at a
    seeded pose whose yaw and pitch lie within +-10 degrees; impostor pairs
    compare neighbouring identities, both at the neutral pose.
    """
    seeds = list(identity_seeds) if identity_seeds is not None else list(range(1000, 1000 + GATE_IDENTITY_COUNT))
    if len(seeds) < 2:
        raise ValueError("the separation check needs at least two identities")
    rng = make_rng(seed, f"separation/{model.model_id}")
    lighting = Lighting()
    size = model.config.input_size
    neutral_features = []
    genuine: List[float] = []
    for identity_seed in seeds:
        face = build_face(synth_identity(identity_seed), shape_res, texture_res)
        neutral = embed(model, render(face.shape, face.texture, Viewpoint(), lighting, size).image)
        yaw, pitch = rng.uniform(-GATE_MAX_POSE_DEG, GATE_MAX_POSE_DEG, 2)
        posed = render(face.shape, face.texture, Viewpoint(float(yaw), float(pitch)), lighting, size).image
        genuine.append(feature_distance(neutral, embed(model, posed)))
        neutral_features.append(neutral)
    impostor = [
        feature_distance(neutral_features[index], neutral_features[(index + 1) % len(seeds)])
        for index in range(len(seeds))
    ]
    threshold = calibrate_from_distances(genuine, impostor)
    report = SeparationReport(model.model_id, threshold, genuine, impostor)
    logger.info(
        "model %s: separation accuracy %.3f at delta %.4f", model.model_id, report.accuracy, threshold.delta
    )
    return report


@lru_cache(maxsize=None)
def calibrated_model(
    model_id: str,
    input_size: Tuple[int, int] = (112, 112),
    shape_res: Tuple[int, int] = (64, 64),
    texture_res: Tuple[int, int] = (256, 256),
    identity_count: int = GATE_IDENTITY_COUNT,
    strict: bool = True,
) -> Tuple[EmbeddingModel, Threshold]:
    """Committed model plus its reference threshold.

    Raises when the separation gate fails unless ``strict`` is off, in which
    case the calibrated threshold is returned with a warning.
    """
    model = load_model(model_id, input_size)
    report = check_model_separation(
        model, range(1000, 1000 + identity_count), shape_res=shape_res, texture_res=texture_res
    )
    if not report.passed:
        message = f"model {model_id} fails the separation gate: accuracy {report.accuracy:.3f} < {GATE_MIN_ACCURACY}"
        if strict:
            raise RuntimeError(message)
        logger.warning(message)
    return model, report.threshold


def write_features_csv(path: Path, labels: Sequence[str], features: Sequence[np.ndarray]) -> None:
    if len(labels) != len(features):
        raise ValueError("labels and features must have the same length")
    dim = len(features[0]) if features else 0
    fieldnames = ["label"] + [f"f{index}" for index in range(dim)]
    rows = []
    for label, feature in zip(labels, features):
        row = {"label": label}
        row.update({f"f{index}": repr(float(value)) for index, value in enumerate(feature)})
        rows.append(row)
    write_csv(path, rows, fieldnames)
