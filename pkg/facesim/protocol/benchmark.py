"""Cross-model benchmark: craft on white-box models, evaluate on every model and protocol.

Each attacker identity is attacked once per (white-box model, method); the
crafted texture is then scored on every evaluation model under every
protocol spec. The optional ``clean`` baseline scores the unperturbed
texture on the same grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from facesim.attack import run_attack
from facesim.geometry import build_face, region_mask, synth_identity
from facesim.reconstruction import fit_face
from facesim.recognizer import EmbeddingModel, calibrated_model, load_model
from facesim.renderer import render
from facesim.utils.config import ExperimentConfig
from facesim.utils.imageio import write_csv
from facesim.utils.seeding import derive_seed
from facesim.utils.structured_data import write_json
from facesim.utils.types import AttackResult, ExperimentReport, Face3D, Lighting, ProtocolSpec, Viewpoint

from .evaluation import evaluate_attack, report_to_dict, write_report_csv

logger = logging.getLogger(__name__)

CLEAN_METHOD = "clean"
CELL_FIELDS = [
    "attacker",
    "victim",
    "white_box_model",
    "method",
    "eval_model",
    "kind",
    "mode",
    "white_box",
    "conditions",
    "successes",
    "asr",
]

IdentityPair = Tuple[int, int]


@dataclass(frozen=True)
class BenchmarkCell:
    attacker: int
    victim: int
    white_box_model: str
    method: str
    eval_model: str
    kind: str
    mode: str
    white_box: bool
    conditions: int
    successes: int
    asr: float

    def to_row(self) -> Dict[str, Any]:
        return {
            "attacker": self.attacker,
            "victim": self.victim,
            "white_box_model": self.white_box_model,
            "method": self.method,
            "eval_model": self.eval_model,
            "kind": self.kind,
            "mode": self.mode,
            "white_box": int(self.white_box),
            "conditions": self.conditions,
            "successes": self.successes,
            "asr": repr(self.asr),
        }

    def report_stem(self) -> str:
        crafted_on = self.white_box_model or "none"
        return f"a{self.attacker}_v{self.victim}_{crafted_on}_{self.method}_{self.eval_model}_{self.kind}"


@dataclass
class BenchmarkBundle:
    cells: List[BenchmarkCell] = field(default_factory=list)
    reports: List[ExperimentReport] = field(default_factory=list)
    results: Dict[Tuple[int, str, str], AttackResult] = field(default_factory=dict)

    def cell(self, **criteria: Any) -> List[BenchmarkCell]:
        return [c for c in self.cells if all(getattr(c, key) == value for key, value in criteria.items())]

    def matrix(self) -> Dict[str, Any]:
        """Nested ASR summary: method -> white-box model -> eval model -> kind -> mean ASR over attackers."""
        grouped: Dict[Tuple[str, str, str, str], List[float]] = {}
        for c in self.cells:
            grouped.setdefault((c.method, c.white_box_model or "none", c.eval_model, c.kind), []).append(c.asr)
        summary: Dict[str, Any] = {}
        for (method, crafted_on, eval_model, kind), values in sorted(grouped.items()):
            node = summary.setdefault(method, {}).setdefault(crafted_on, {}).setdefault(eval_model, {})
            node[kind] = float(np.mean(values))
        return summary


def protocol_specs(config: ExperimentConfig) -> List[ProtocolSpec]:
    return [
        ProtocolSpec(
            kind=kind,
            rng_seed=derive_seed(config.seed, f"protocol/{kind}"),
            sigma_max=config.sigma_max,
            count_2d=config.count_2d,
        )
        for kind in config.protocol_kinds
    ]


def identity_pairs(config: ExperimentConfig) -> List[IdentityPair]:
    """Impersonation pairs distinct identities; dodging pairs each attacker with itself."""
    if config.mode == "dodging":
        return [(seed, seed) for seed in config.attacker_seeds]
    return list(zip(config.attacker_seeds, config.victim_seeds))


def reference_model(config: ExperimentConfig, model_id: str) -> Tuple[EmbeddingModel, float]:
    model, threshold = calibrated_model(
        model_id,
        config.image_size,
        config.shape_res,
        config.texture_res,
        config.calibration_identities,
        config.calibration_strict,
    )
    return model, threshold.delta


def neutral_image(face: Face3D, image_size: Tuple[int, int]) -> np.ndarray:
    return render(face.shape, face.texture, Viewpoint(), Lighting(), image_size).image


def attacker_face(config: ExperimentConfig, seed: int) -> Face3D:
    """Synthetic attacker face, or its reconstruction from a neutral render when fitting is on.

    The fit keeps the attacker's own shape and starts from a flat texture.
    """
    identity = synth_identity(seed)
    face = build_face(identity, config.shape_res, config.texture_res)
    if not config.fit_enabled:
        return face
    target = neutral_image(face, config.image_size)
    fitted = fit_face(
        target,
        config.fit,
        init_seed=seed,
        model=load_model(config.fit.model_id, config.image_size),
        shape_res=config.shape_res,
        texture_res=config.texture_res,
        init_params=identity.replace_texture(np.zeros_like(identity.texture_coeffs)),
    )
    logger.info("attacker %d reconstructed: l1 %.4f -> %.4f", seed, fitted.initial_l1, fitted.final_l1)
    return build_face(fitted.params, config.shape_res, config.texture_res)


def run_benchmark(
    identities: Sequence[IdentityPair],
    methods: Sequence[str],
    models: Sequence[str],
    specs: Sequence[ProtocolSpec],
    config: ExperimentConfig,
    include_clean: Optional[bool] = None,
) -> BenchmarkBundle:
    if not models:
        raise ValueError("run_benchmark needs at least one model")
    if len(models) < 2:
        logger.warning("only one model given; the benchmark has no transfer cells")
    include_clean = config.include_clean if include_clean is None else include_clean
    white_box_models = [model for model in config.white_box_models if model in models] or [models[0]]
    mask = region_mask(config.region, config.texture_res)
    references = {model_id: reference_model(config, model_id) for model_id in models}

    bundle = BenchmarkBundle()

    def score(
        texture: Any, face: Face3D, victim_image: np.ndarray, attacker: int, victim: int,
        crafted_on: str, method: str,
    ) -> None:
        for eval_model in models:
            model, delta = references[eval_model]
            for spec in specs:
                report = evaluate_attack(
                    texture, face.shape, victim_image, model, delta, spec, config.mode, method, config.threads
                )
                bundle.reports.append(report)
                bundle.cells.append(
                    BenchmarkCell(
                        attacker=attacker,
                        victim=victim,
                        white_box_model=crafted_on,
                        method=method,
                        eval_model=eval_model,
                        kind=spec.kind,
                        mode=config.mode,
                        white_box=eval_model == crafted_on,
                        conditions=len(report.records),
                        successes=report.successes,
                        asr=report.asr,
                    )
                )

    for attacker, victim in identities:
        face = attacker_face(config, attacker)
        victim_face = build_face(synth_identity(victim), config.shape_res, config.texture_res)
        victim_image = neutral_image(victim_face, config.image_size)
        if include_clean:
            score(face.texture, face, victim_image, attacker, victim, "", CLEAN_METHOD)
        for crafted_on in white_box_models:
            model, delta = references[crafted_on]
            for method in methods:
                attack_config = config.attack_config(
                    method, derive_seed(config.seed, f"attack/{attacker}/{crafted_on}/{method}")
                )
                result = run_attack(
                    face, victim_image, mask, model, None, attack_config, delta=delta, threads=config.threads
                )
                bundle.results[(attacker, crafted_on, method)] = result
                score(result.adv_texture, face, victim_image, attacker, victim, crafted_on, method)
    logger.info("benchmark finished: %d cells", len(bundle.cells))
    return bundle


def write_benchmark(out_dir: Path, bundle: BenchmarkBundle) -> Dict[str, Path]:
    paths = {
        "cells_csv": out_dir / "bench_cells.csv",
        "summary_json": out_dir / "bench_summary.json",
    }
    write_csv(paths["cells_csv"], [cell.to_row() for cell in bundle.cells], CELL_FIELDS)
    entries = []
    for cell, report in zip(bundle.cells, bundle.reports):
        relative = f"reports/{cell.report_stem()}.csv"
        write_report_csv(out_dir / relative, report)
        paths[relative] = out_dir / relative
        entries.append({**report_to_dict(report), "report_csv": relative})
    write_json(paths["summary_json"], {"cells": entries, "matrix": bundle.matrix()})
    return paths
