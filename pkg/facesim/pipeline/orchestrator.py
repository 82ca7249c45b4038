"""Stage runner behind the command line.

Every command writes into one output directory, then records the resolved
config (``config.json``) and a run record (``run.json``: command, config
hash, seed, artifact list). Nothing time- or host-dependent is written, and
the thread count and output location are left out of the stored config, so
reruns are byte-identical.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from facesim.attack import run_attack, write_attack_result
from facesim.audits import report_to_dict as repro_report_to_dict
from facesim.audits import run_reproducibility_audit
from facesim.contracts import validate_config_data
from facesim.geometry import build_face, identity_to_dict, region_mask, synth_identity
from facesim.protocol import (
    attacker_face,
    evaluate_attack,
    identity_pairs,
    neutral_image,
    protocol_specs,
    reference_model,
    report_to_dict,
    run_benchmark,
    success_heatmap,
    write_benchmark,
    write_heatmap_ppm,
    write_report_csv,
)
from facesim.reconstruction import fit_face
from facesim.recognizer import load_model
from facesim.renderer import render, write_render
from facesim.utils.config import ExperimentConfig, _deep_merge, config_hash, load_config
from facesim.utils.imageio import load_image, save_array, write_csv, write_ppm
from facesim.utils.seeding import derive_seed
from facesim.utils.structured_data import write_json
from facesim.utils.types import AttackResult, Face3D, Lighting, TextureMap, Viewpoint

logger = logging.getLogger(__name__)

AUDIT_FILE = "repro_audit.json"
# Execution settings that must not change outputs.
NON_SEMANTIC_KEYS = ("threads", "output_dir")

Artifacts = Dict[str, Path]


def config_snapshot(config: ExperimentConfig) -> Dict[str, Any]:
    snapshot = config.to_dict()
    for key in NON_SEMANTIC_KEYS:
        snapshot.pop(key, None)
    return snapshot


def resolve_config(config_path: Optional[Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Defaults + config file + overrides, schema-checked; raises ValueError listing every violation."""
    if config_path is not None and not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")
    raw = load_config(config_path if config_path is not None else Path("facesim.yaml"))
    if overrides:
        raw = _deep_merge(raw, overrides)
    errors = validate_config_data(raw)
    if errors:
        raise ValueError("invalid config: " + "; ".join(errors))
    return ExperimentConfig.from_dict(raw)


class Orchestrator:
    def __init__(self, config: ExperimentConfig, out_dir: Optional[Path] = None) -> None:
        self.config = config
        self.out_dir = Path(out_dir) if out_dir is not None else Path(config.output_dir)
        self.config_fingerprint = config_hash(config_snapshot(config))
        self._pair: Optional[Tuple[int, int, Face3D, np.ndarray]] = None

    @classmethod
    def from_path(
        cls,
        config_path: Optional[Path] = None,
        overrides: Optional[Dict[str, Any]] = None,
        out_dir: Optional[Path] = None,
    ) -> "Orchestrator":
        return cls(resolve_config(config_path, overrides), out_dir)

    def synth(self, seed: int) -> Artifacts:
        cfg = self.config
        params = synth_identity(seed)
        face = build_face(params, cfg.shape_res, cfg.texture_res)
        artifacts = {
            "identity": self.out_dir / "identity.json",
            "texture_ppm": self.out_dir / "texture.ppm",
            "texture_npy": self.out_dir / "texture.npy",
            "shape_npy": self.out_dir / "shape.npy",
        }
        write_json(artifacts["identity"], identity_to_dict(params))
        write_ppm(artifacts["texture_ppm"], face.texture.values)
        save_array(artifacts["texture_npy"], face.texture.values)
        save_array(artifacts["shape_npy"], face.shape.positions)
        neutral = render(face.shape, face.texture, Viewpoint(), Lighting(), cfg.image_size)
        artifacts.update(write_render(neutral, self.out_dir, "neutral"))
        self._finish("synth", artifacts, {"identity_seed": seed})
        return artifacts

    def render(
        self,
        seed: int,
        viewpoint: Viewpoint,
        lighting: Lighting,
        texture_path: Optional[Path] = None,
    ) -> Artifacts:
        cfg = self.config
        face = build_face(synth_identity(seed), cfg.shape_res, cfg.texture_res)
        texture = self._load_texture(texture_path) if texture_path is not None else face.texture
        output = render(face.shape, texture, viewpoint, lighting, cfg.image_size)
        artifacts = write_render(output, self.out_dir, "render")
        self._finish(
            "render",
            artifacts,
            {
                "identity_seed": seed,
                "viewpoint": {"yaw_deg": viewpoint.yaw_deg, "pitch_deg": viewpoint.pitch_deg},
                "lighting": {"azimuth_deg": lighting.azimuth_deg, "ambient": lighting.ambient},
            },
        )
        return artifacts

    def fit(self, target_path: Path, init_seed: Optional[int] = None) -> Artifacts:
        cfg = self.config
        target = load_image(target_path)
        seed = cfg.seed if init_seed is None else init_seed
        model = load_model(cfg.fit.model_id, cfg.image_size)
        result = fit_face(
            target, cfg.fit, init_seed=seed, model=model, shape_res=cfg.shape_res, texture_res=cfg.texture_res
        )
        artifacts = {
            "identity": self.out_dir / "fit_identity.json",
            "loss_csv": self.out_dir / "fit_loss.csv",
            "summary": self.out_dir / "fit.json",
        }
        write_json(artifacts["identity"], identity_to_dict(result.params))
        write_csv(
            artifacts["loss_csv"],
            ({"iteration": index, "loss": repr(loss)} for index, loss in enumerate(result.loss_trace)),
            ["iteration", "loss"],
        )
        write_json(
            artifacts["summary"],
            {
                "init_seed": seed,
                "iterations": len(result.loss_trace),
                "best_iteration": result.best_iteration,
                "initial_l1": result.initial_l1,
                "final_l1": result.final_l1,
                "best_loss": min(result.loss_trace),
            },
        )
        artifacts.update(write_render(result.final_render, self.out_dir, "fit_render"))
        self._finish("fit", artifacts, {"target": target_path.name, "init_seed": seed})
        return artifacts

    def attack(self) -> Tuple[Dict[str, AttackResult], Artifacts]:
        """Craft one patch per configured method for the first identity pair on the first white-box model."""
        results, artifacts = self._craft()
        self._finish("attack", artifacts, {"identity_pair": list(identity_pairs(self.config)[0])})
        return results, artifacts

    def protocol(self) -> Artifacts:
        cfg = self.config
        attacker, victim, face, victim_image = self._first_pair()
        artifacts: Artifacts = {}
        if cfg.texture_path is not None:
            texture = self._load_texture(Path(cfg.texture_path))
            method = "texture"
        else:
            results, artifacts = self._craft()
            method = cfg.methods[0]
            texture = results[method].adv_texture

        protocol_dir = self.out_dir / "protocol"
        cells: List[Dict[str, Any]] = []
        for model_id in cfg.models:
            model, delta = reference_model(cfg, model_id)
            for spec in protocol_specs(cfg):
                report = evaluate_attack(
                    texture, face.shape, victim_image, model, delta, spec, cfg.mode, method, cfg.threads
                )
                stem = f"{model_id}_{spec.kind}"
                csv_path = protocol_dir / f"{stem}.csv"
                heatmap_path = protocol_dir / f"{stem}_heatmap.ppm"
                write_report_csv(csv_path, report)
                heatmap = success_heatmap(report)
                write_heatmap_ppm(heatmap_path, heatmap)
                cells.append(
                    {
                        **report_to_dict(report),
                        "report_csv": f"{stem}.csv",
                        "heatmap": f"{stem}_heatmap.ppm",
                        "heatmap_shape": list(heatmap.shape),
                        "heatmap_pitches": list(heatmap.pitches),
                        "heatmap_yaws": list(heatmap.yaws),
                    }
                )
                artifacts[f"{stem}_csv"] = csv_path
                artifacts[f"{stem}_heatmap"] = heatmap_path
        summary_path = protocol_dir / "protocol_summary.json"
        write_json(summary_path, {"method": method, "mode": cfg.mode, "cells": cells})
        artifacts["protocol_summary"] = summary_path
        self._finish("protocol", artifacts, {"identity_pair": [attacker, victim]})
        return artifacts

    def bench(self) -> Artifacts:
        cfg = self.config
        bundle = run_benchmark(identity_pairs(cfg), cfg.methods, cfg.models, protocol_specs(cfg), cfg)
        artifacts = write_benchmark(self.out_dir / "bench", bundle)
        self._finish("bench", artifacts, {"cells": len(bundle.cells)})
        return artifacts

    def audit(self, mode: Optional[str] = None, expected_config_hash: Optional[str] = None) -> Dict[str, Any]:
        report = repro_report_to_dict(
            run_reproducibility_audit(self.out_dir, mode or self.config.repro_mode, expected_config_hash)
        )
        write_json(self.out_dir / AUDIT_FILE, report)
        return report

    def _first_pair(self) -> Tuple[int, int, Face3D, np.ndarray]:
        """Attacker face and victim image of the first identity pair, built once per orchestrator."""
        if self._pair is None:
            cfg = self.config
            attacker, victim = identity_pairs(cfg)[0]
            victim_face = build_face(synth_identity(victim), cfg.shape_res, cfg.texture_res)
            self._pair = (attacker, victim, attacker_face(cfg, attacker), neutral_image(victim_face, cfg.image_size))
        return self._pair

    def _craft(self) -> Tuple[Dict[str, AttackResult], Artifacts]:
        cfg = self.config
        attacker, _, face, victim_image = self._first_pair()
        mask = region_mask(cfg.region, cfg.texture_res)
        white_box = cfg.white_box_models[0]
        model, delta = reference_model(cfg, white_box)
        results: Dict[str, AttackResult] = {}
        artifacts: Artifacts = {}
        for method in cfg.methods:
            attack_config = cfg.attack_config(method, derive_seed(cfg.seed, f"attack/{attacker}/{white_box}/{method}"))
            result = run_attack(face, victim_image, mask, model, None, attack_config, delta=delta, threads=cfg.threads)
            attack_dir = self.out_dir / "attack" / method
            written = write_attack_result(attack_dir, result, attack_config)
            save_array(attack_dir / "clean_texture.npy", face.texture.values)
            save_array(attack_dir / "mask.npy", mask.values)
            artifacts.update({f"{method}_{name}": path for name, path in written.items()})
            artifacts[f"{method}_clean_texture"] = attack_dir / "clean_texture.npy"
            artifacts[f"{method}_mask"] = attack_dir / "mask.npy"
            results[method] = result
        return results, artifacts

    def _load_texture(self, path: Path) -> TextureMap:
        values = load_image(path)
        if values.shape[:2] != self.config.texture_res:
            raise ValueError(f"texture {path} is {values.shape[:2]}, expected {self.config.texture_res}")
        return TextureMap(values=values)

    def _finish(self, command: str, artifacts: Artifacts, extra: Dict[str, Any]) -> None:
        snapshot = config_snapshot(self.config)
        write_json(self.out_dir / "config.json", snapshot)
        relative = sorted(path.relative_to(self.out_dir).as_posix() for path in artifacts.values())
        metadata = {
            "command": command,
            "config_hash": self.config_fingerprint,
            "seed": self.config.seed,
            "artifacts": relative,
        }
        metadata.update(extra)
        write_json(self.out_dir / "run.json", metadata)
        logger.info("%s wrote %d artifacts to %s", command, len(relative), self.out_dir)

