from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from .structured_data import load_structured_file
from .types import ATTACK_METHODS, ATTACK_MODES, PROTOCOL_KINDS, REGION_NAMES, AttackConfig

IMPERSONATION_EPSILON = 40.0 / 255.0
DODGING_EPSILON = 1.0
DEFAULT_ALPHA = 1.5 / 255.0
# N for the 2D baselines, N2 for the 3D methods.
BASELINE_ITERS = 400
FACE3DADV_ITERS = 100

DEFAULT_CONFIG: Dict[str, Any] = {
    "seed": 0,
    "output_dir": "runs/default",
    "threads": 1,
    "identities": {
        "attackers": [1],
        "victims": [2],
    },
    "resolutions": {
        "shape": [64, 64],
        "texture": [256, 256],
        "image": [112, 112],
    },
    "models": ["modelA", "modelB", "modelC"],
    "white_box_models": ["modelA"],
    "region": "eyeglass",
    "attack": {
        "mode": "impersonation",
        "methods": ["Face3DAdv_x"],
        "epsilon": None,
        "alpha": DEFAULT_ALPHA,
        "iters": None,
        "momentum_mu": 1.0,
        "sample_count": 10,
        "candidate_count": 20,
        "use_importance_sampling": True,
        "transform2d_sigma": 0.0,
        "basis_dim": 8,
        "learning_rate": 0.01,
        "init_from_victim": True,
        "with_replacement": False,
    },
    "fit": {
        "enabled": False,
        "lam": 0.01,
        "max_iters": 300,
        "learning_rate": 0.01,
        "model": "modelA",
    },
    "protocol": {
        "kinds": ["mixture"],
        "sigma_max": 0.1,
        "count_2d": 30,
        "texture_path": None,
    },
    "calibration": {
        "identities": 20,
        "strict": True,
    },
    "benchmark": {
        "include_clean": True,
    },
    "reproducibility": {
        "mode": "soft",
    },
}


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    result = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = _deep_merge(result[key], value)
        else:
            result[key] = value
    return result


def load_config(config_path: Path = Path("facesim.yaml")) -> Dict[str, Any]:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if config_path.exists():
        user_config = load_structured_file(config_path)
        if not isinstance(user_config, dict):
            raise RuntimeError(f"Config file {config_path} must contain a mapping/object.")
        config = _deep_merge(config, user_config)
    return config


def config_hash(config: Dict[str, Any]) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def default_epsilon(mode: str) -> float:
    return DODGING_EPSILON if mode == "dodging" else IMPERSONATION_EPSILON


def default_iters(method: str) -> int:
    return BASELINE_ITERS if method in {"MIM", "EOT"} else FACE3DADV_ITERS


@dataclass(frozen=True)
class FitConfig:
    lam: float = 0.01
    max_iters: int = 300
    learning_rate: float = 0.01
    model_id: str = "modelA"

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")


def _pair(value: Any, name: str) -> Tuple[int, int]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ValueError(f"{name} must be a [rows, cols] pair, got {value!r}")
    return int(value[0]), int(value[1])


@dataclass
class ExperimentConfig:
    """Everything needed to rerun an experiment, resolved from the merged config dict."""

    seed: int = 0
    output_dir: str = "runs/default"
    threads: int = 1
    attacker_seeds: Tuple[int, ...] = (1,)
    victim_seeds: Tuple[int, ...] = (2,)
    shape_res: Tuple[int, int] = (64, 64)
    texture_res: Tuple[int, int] = (256, 256)
    image_size: Tuple[int, int] = (112, 112)
    models: Tuple[str, ...] = ("modelA", "modelB", "modelC")
    white_box_models: Tuple[str, ...] = ("modelA",)
    region: str = "eyeglass"
    mode: str = "impersonation"
    methods: Tuple[str, ...] = ("Face3DAdv_x",)
    epsilon: float = IMPERSONATION_EPSILON
    alpha: float = DEFAULT_ALPHA
    iters: Optional[int] = None
    momentum_mu: float = 1.0
    sample_count: int = 10
    candidate_count: int = 20
    use_importance_sampling: bool = True
    transform2d_sigma: float = 0.0
    basis_dim: int = 8
    learning_rate: float = 0.01
    init_from_victim: bool = True
    with_replacement: bool = False
    fit: FitConfig = field(default_factory=FitConfig)
    fit_enabled: bool = False
    protocol_kinds: Tuple[str, ...] = ("mixture",)
    sigma_max: float = 0.1
    count_2d: int = 30
    texture_path: Optional[str] = None
    calibration_identities: int = 20
    calibration_strict: bool = True
    include_clean: bool = True
    repro_mode: str = "soft"

    def __post_init__(self) -> None:
        if self.mode not in ATTACK_MODES:
            raise ValueError(f"unknown attack mode '{self.mode}'")
        for method in self.methods:
            if method not in ATTACK_METHODS:
                raise ValueError(f"unknown attack method '{method}'")
        for kind in self.protocol_kinds:
            if kind not in PROTOCOL_KINDS:
                raise ValueError(f"unknown protocol kind '{kind}'")
        if self.region not in REGION_NAMES:
            raise ValueError(f"unknown region '{self.region}'")
        if self.calibration_identities < 2:
            raise ValueError(f"calibration needs at least two identities, got {self.calibration_identities}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if not self.white_box_models or any(m not in self.models for m in self.white_box_models):
            raise ValueError("white_box_models must be a non-empty subset of models")
        if self.mode == "impersonation" and len(self.victim_seeds) != len(self.attacker_seeds):
            raise ValueError("impersonation needs one victim seed per attacker seed")

    def attack_config(self, method: str, rng_seed: int) -> AttackConfig:
        return AttackConfig(
            mode=self.mode,
            method=method,
            epsilon=self.epsilon,
            alpha=self.alpha,
            iters=self.iters if self.iters is not None else default_iters(method),
            momentum_mu=self.momentum_mu,
            sample_count=self.sample_count,
            candidate_count=self.candidate_count,
            use_importance_sampling=self.use_importance_sampling,
            transform2d_sigma=self.transform2d_sigma,
            rng_seed=rng_seed,
            basis_dim=self.basis_dim,
            learning_rate=self.learning_rate,
            init_from_victim=self.init_from_victim,
            with_replacement=self.with_replacement,
        )

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "output_dir": self.output_dir,
            "threads": self.threads,
            "identities": {
                "attackers": list(self.attacker_seeds),
                "victims": list(self.victim_seeds),
            },
            "resolutions": {
                "shape": list(self.shape_res),
                "texture": list(self.texture_res),
                "image": list(self.image_size),
            },
            "models": list(self.models),
            "white_box_models": list(self.white_box_models),
            "region": self.region,
            "attack": {
                "mode": self.mode,
                "methods": list(self.methods),
                "epsilon": self.epsilon,
                "alpha": self.alpha,
                "iters": self.iters,
                "momentum_mu": self.momentum_mu,
                "sample_count": self.sample_count,
                "candidate_count": self.candidate_count,
                "use_importance_sampling": self.use_importance_sampling,
                "transform2d_sigma": self.transform2d_sigma,
                "basis_dim": self.basis_dim,
                "learning_rate": self.learning_rate,
                "init_from_victim": self.init_from_victim,
                "with_replacement": self.with_replacement,
            },
            "fit": {
                "enabled": self.fit_enabled,
                "lam": self.fit.lam,
                "max_iters": self.fit.max_iters,
                "learning_rate": self.fit.learning_rate,
                "model": self.fit.model_id,
            },
            "protocol": {
                "kinds": list(self.protocol_kinds),
                "sigma_max": self.sigma_max,
                "count_2d": self.count_2d,
                "texture_path": self.texture_path,
            },
            "calibration": {
                "identities": self.calibration_identities,
                "strict": self.calibration_strict,
            },
            "benchmark": {"include_clean": self.include_clean},
            "reproducibility": {"mode": self.repro_mode},
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "ExperimentConfig":
        merged = _deep_merge(copy.deepcopy(DEFAULT_CONFIG), data)
        identities = merged["identities"]
        resolutions = merged["resolutions"]
        attack = merged["attack"]
        fit = merged["fit"]
        protocol = merged["protocol"]
        mode = str(attack["mode"])
        epsilon = attack.get("epsilon")
        iters = attack.get("iters")
        texture_path = protocol.get("texture_path")
        return ExperimentConfig(
            seed=int(merged["seed"]),
            output_dir=str(merged["output_dir"]),
            threads=int(merged["threads"]),
            attacker_seeds=tuple(int(seed) for seed in identities["attackers"]),
            victim_seeds=tuple(int(seed) for seed in identities["victims"]),
            shape_res=_pair(resolutions["shape"], "resolutions.shape"),
            texture_res=_pair(resolutions["texture"], "resolutions.texture"),
            image_size=_pair(resolutions["image"], "resolutions.image"),
            models=tuple(str(model) for model in merged["models"]),
            white_box_models=tuple(str(model) for model in merged["white_box_models"]),
            region=str(merged["region"]),
            mode=mode,
            methods=tuple(str(method) for method in attack["methods"]),
            epsilon=float(epsilon) if epsilon is not None else default_epsilon(mode),
            alpha=float(attack["alpha"]),
            iters=int(iters) if iters is not None else None,
            momentum_mu=float(attack["momentum_mu"]),
            sample_count=int(attack["sample_count"]),
            candidate_count=int(attack["candidate_count"]),
            use_importance_sampling=bool(attack["use_importance_sampling"]),
            transform2d_sigma=float(attack["transform2d_sigma"]),
            basis_dim=int(attack["basis_dim"]),
            learning_rate=float(attack["learning_rate"]),
            init_from_victim=bool(attack["init_from_victim"]),
            with_replacement=bool(attack["with_replacement"]),
            fit=FitConfig(
                lam=float(fit["lam"]),
                max_iters=int(fit["max_iters"]),
                learning_rate=float(fit["learning_rate"]),
                model_id=str(fit["model"]),
            ),
            fit_enabled=bool(fit["enabled"]),
            protocol_kinds=tuple(str(kind) for kind in protocol["kinds"]),
            sigma_max=float(protocol["sigma_max"]),
            count_2d=int(protocol["count_2d"]),
            texture_path=str(texture_path) if texture_path is not None else None,
            calibration_identities=int(merged["calibration"]["identities"]),
            calibration_strict=bool(merged["calibration"]["strict"]),
            include_clean=bool(merged["benchmark"]["include_clean"]),
            repro_mode=str(merged["reproducibility"]["mode"]),
        )
