from __future__ import annotations

from pathlib import Path
from typing import Any, Dict

from facesim.utils.imageio import save_array, write_csv, write_ppm
from facesim.utils.structured_data import write_json
from facesim.utils.types import AttackConfig, AttackResult


def attack_config_to_dict(config: AttackConfig) -> Dict[str, Any]:
    return {
        "mode": config.mode,
        "method": config.method,
        "epsilon": config.epsilon,
        "alpha": config.alpha,
        "iters": config.iters,
        "momentum_mu": config.momentum_mu,
        "sample_count": config.sample_count,
        "candidate_count": config.candidate_count,
        "use_importance_sampling": config.use_importance_sampling,
        "transform2d_sigma": config.transform2d_sigma,
        "rng_seed": config.rng_seed,
        "basis_dim": config.basis_dim,
        "learning_rate": config.learning_rate,
        "init_from_victim": config.init_from_victim,
        "with_replacement": config.with_replacement,
    }


def attack_result_to_dict(result: AttackResult) -> Dict[str, Any]:
    return {
        "method": result.method,
        "mode": result.mode,
        "iterations_run": result.iterations_run,
        "success_at_neutral": result.success_at_neutral,
        "final_loss": result.loss_trace[-1] if result.loss_trace else None,
        "forward_passes": result.forward_passes,
        "backward_passes": result.backward_passes,
    }


def write_loss_trace(path: Path, loss_trace: list[float]) -> None:
    write_csv(
        path,
        ({"iteration": index, "loss": repr(float(loss))} for index, loss in enumerate(loss_trace)),
        ["iteration", "loss"],
    )


def write_attack_result(out_dir: Path, result: AttackResult, config: AttackConfig) -> Dict[str, Path]:
    paths = {
        "texture_ppm": out_dir / "adv_texture.ppm",
        "texture_npy": out_dir / "adv_texture.npy",
        "loss_csv": out_dir / "loss_trace.csv",
        "attack_json": out_dir / "attack.json",
    }
    write_ppm(paths["texture_ppm"], result.adv_texture.values)
    save_array(paths["texture_npy"], result.adv_texture.values)
    write_loss_trace(paths["loss_csv"], result.loss_trace)
    write_json(
        paths["attack_json"],
        {"config": attack_config_to_dict(config), "result": attack_result_to_dict(result)},
    )
    return paths
