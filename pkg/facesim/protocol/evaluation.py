from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from facesim.recognizer import EmbeddingModel, decide, embed, feature_distance
from facesim.renderer import Fragments, TextureSampler, compose_transforms, rasterize
from facesim.utils.imageio import write_csv, write_ppm
from facesim.utils.types import (
    Condition,
    ConditionRecord,
    ExperimentReport,
    ProtocolSpec,
    ShapeMap,
    TextureMap,
    Viewpoint,
)

from .conditions import enumerate_conditions

logger = logging.getLogger(__name__)

REPORT_FIELDS = [
    "index",
    "yaw_deg",
    "pitch_deg",
    "azimuth_deg",
    "transforms",
    "distance",
    "decision",
    "success",
]


def success_decision(mode: str) -> str:
    if mode == "impersonation":
        return "same"
    if mode == "dodging":
        return "different"
    raise ValueError(f"unknown attack mode '{mode}'")


def evaluate_attack(
    adv_texture: Union[TextureMap, np.ndarray],
    shape: ShapeMap,
    victim_image: np.ndarray,
    model: EmbeddingModel,
    delta: float,
    spec: ProtocolSpec,
    mode: str,
    method: str = "",
    threads: int = 1,
    conditions: Optional[Sequence[Condition]] = None,
) -> ExperimentReport:
    """Render the adversarial face under every protocol condition and score it against the victim.

    ``conditions`` overrides the enumeration of ``spec`` (``spec.kind`` is
    still recorded). Records come back in condition order whatever the
    thread count.
    """
    target = success_decision(mode)
    values = adv_texture.values if isinstance(adv_texture, TextureMap) else np.asarray(adv_texture, dtype=np.float64)
    texture_res = (int(values.shape[0]), int(values.shape[1]))
    size = model.config.input_size
    victim_feature = embed(model, victim_image)
    listed = list(conditions) if conditions is not None else enumerate_conditions(spec)

    fragments: Dict[Viewpoint, Fragments] = {}
    for condition in listed:
        if condition.viewpoint not in fragments:
            fragments[condition.viewpoint] = rasterize(shape, condition.viewpoint, size)

    def score(item: Tuple[int, Condition]) -> ConditionRecord:
        index, condition = item
        sampler = TextureSampler.build(fragments[condition.viewpoint], condition.lighting, texture_res)
        image = sampler.forward(values)
        if condition.transforms:
            image = compose_transforms(image, condition.transforms)
        distance = feature_distance(embed(model, image), victim_feature)
        decision = decide(distance, delta)
        return ConditionRecord(index, condition, distance, decision, decision == target)

    items = list(enumerate(listed))
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(score, items))
    else:
        records = [score(item) for item in items]
    report = ExperimentReport(kind=spec.kind, mode=mode, model_id=model.model_id, method=method, records=records)
    logger.info(
        "%s on %s (%s, %s): ASR %.2f%% over %d conditions",
        method or "texture", model.model_id, spec.kind, mode, report.asr, len(records),
    )
    return report


@dataclass(frozen=True, eq=False)
class Heatmap:
    """Success fraction per (pitch, yaw) cell, averaged over lighting and warps."""

    pitches: Tuple[float, ...]
    yaws: Tuple[float, ...]
    values: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.pitches), len(self.yaws)


def success_heatmap(report: ExperimentReport) -> Heatmap:
    if not report.records:
        raise ValueError("cannot build a heatmap from an empty report")
    pitches = tuple(sorted({r.condition.viewpoint.pitch_deg for r in report.records}))
    yaws = tuple(sorted({r.condition.viewpoint.yaw_deg for r in report.records}))
    totals = np.zeros((len(pitches), len(yaws)))
    counts = np.zeros((len(pitches), len(yaws)))
    for record in report.records:
        row = pitches.index(record.condition.viewpoint.pitch_deg)
        col = yaws.index(record.condition.viewpoint.yaw_deg)
        totals[row, col] += float(record.success)
        counts[row, col] += 1.0
    values = np.divide(totals, counts, out=np.zeros_like(totals), where=counts > 0)
    return Heatmap(pitches=pitches, yaws=yaws, values=values)


def write_heatmap_ppm(path: Path, heatmap: Heatmap) -> None:
    """One pixel per cell: red for failure, green for success, blended by fraction."""
    fraction = heatmap.values
    image = np.stack([1.0 - fraction, fraction, np.zeros_like(fraction)], axis=2)
    write_ppm(path, image)


def report_rows(report: ExperimentReport) -> List[Dict[str, Any]]:
    rows = []
    for record in report.records:
        described = record.condition.describe()
        rows.append(
            {
                "index": record.index,
                "yaw_deg": repr(described["yaw_deg"]),
                "pitch_deg": repr(described["pitch_deg"]),
                "azimuth_deg": repr(described["azimuth_deg"]),
                "transforms": json.dumps(described["transforms"], sort_keys=True),
                "distance": repr(record.distance),
                "decision": record.decision,
                "success": int(record.success),
            }
        )
    return rows


def write_report_csv(path: Path, report: ExperimentReport) -> None:
    write_csv(path, report_rows(report), REPORT_FIELDS)


def report_to_dict(report: ExperimentReport) -> Dict[str, Any]:
    return {
        "kind": report.kind,
        "mode": report.mode,
        "model_id": report.model_id,
        "method": report.method,
        "conditions": len(report.records),
        "successes": report.successes,
        "asr": report.asr,
    }


def asr_from_rows(rows: Sequence[Dict[str, Any]]) -> float:
    """ASR recomputed from CSV rows (success column as written)."""
    if not rows:
        return 0.0
    return 100.0 * sum(int(row["success"]) for row in rows) / len(rows)
