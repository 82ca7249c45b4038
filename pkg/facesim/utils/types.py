from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np

RegionName = Literal["eyeglass", "respirator", "hat"]
AttackMode = Literal["dodging", "impersonation"]
AttackMethod = Literal["MIM", "EOT", "Face3DAdv_x", "Face3DAdv_w"]
Decision = Literal["same", "different"]
ProtocolKind = Literal[
    "pitch", "yaw", "lighting", "mixture", "rotation2d", "projective2d", "mixture2d"
]

REGION_NAMES: Tuple[str, ...] = ("eyeglass", "respirator", "hat")
ATTACK_MODES: Tuple[str, ...] = ("dodging", "impersonation")
ATTACK_METHODS: Tuple[str, ...] = ("MIM", "EOT", "Face3DAdv_x", "Face3DAdv_w")
PROTOCOL_KINDS: Tuple[str, ...] = (
    "pitch",
    "yaw",
    "lighting",
    "mixture",
    "rotation2d",
    "projective2d",
    "mixture2d",
)

# Unit-norm embedding output.
FeatureVector = np.ndarray


def _frozen_array(values: np.ndarray, dtype: Any = np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class IdentityParams:
    seed: int
    shape_coeffs: np.ndarray
    texture_coeffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape_coeffs", _frozen_array(self.shape_coeffs))
        object.__setattr__(self, "texture_coeffs", _frozen_array(self.texture_coeffs))
        for name in ("shape_coeffs", "texture_coeffs"):
            values = getattr(self, name)
            if values.ndim != 1:
                raise ValueError(f"{name} must be a vector, got shape {values.shape}")
            if values.size and float(np.max(np.abs(values))) > 1.0:
                raise ValueError(f"{name} must lie in [-1, 1]")

    def replace_texture(self, texture_coeffs: np.ndarray) -> "IdentityParams":
        return IdentityParams(self.seed, self.shape_coeffs, texture_coeffs)

    def same_values(self, other: "IdentityParams") -> bool:
        return (
            self.seed == other.seed
            and np.array_equal(self.shape_coeffs, other.shape_coeffs)
            and np.array_equal(self.texture_coeffs, other.texture_coeffs)
        )


@dataclass(frozen=True, eq=False)
class ShapeMap:
    """Grid of 3D vertex positions; each grid quad is split into two triangles.

    Vertex (row, col) carries uv = (col / (cols - 1), row / (rows - 1)).
    """

    positions: np.ndarray

    def __post_init__(self) -> None:
        positions = _frozen_array(self.positions)
        if positions.ndim != 3 or positions.shape[2] != 3:
            raise ValueError(f"positions must be (rows, cols, 3), got {positions.shape}")
        if positions.shape[0] < 2 or positions.shape[1] < 2:
            raise ValueError("a shape map needs at least a 2x2 vertex grid")
        object.__setattr__(self, "positions", positions)

    @property
    def resolution(self) -> Tuple[int, int]:
        return int(self.positions.shape[0]), int(self.positions.shape[1])


@dataclass(frozen=True, eq=False)
class TextureMap:
    values: np.ndarray

    def __post_init__(self) -> None:
        values = _frozen_array(self.values)
        if values.ndim != 3 or values.shape[2] != 3:
            raise ValueError(f"texture values must be (H, W, 3), got {values.shape}")
        if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("texture values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def resolution(self) -> Tuple[int, int]:
        return int(self.values.shape[0]), int(self.values.shape[1])


@dataclass(frozen=True, eq=False)
class PatchMask:
    values: np.ndarray
    region_name: str

    def __post_init__(self) -> None:
        values = _frozen_array(self.values)
        if values.ndim != 2:
            raise ValueError(f"mask values must be (H, W), got {values.shape}")
        if not np.all((values == 0.0) | (values == 1.0)):
            raise ValueError("mask values must be exactly 0 or 1")
        fraction = float(values.mean())
        if not 0.02 <= fraction <= 0.25:
            raise ValueError(
                f"mask '{self.region_name}' covers {fraction:.4f} of the texture; expected [0.02, 0.25]"
            )
        object.__setattr__(self, "values", values)

    @property
    def resolution(self) -> Tuple[int, int]:
        return int(self.values.shape[0]), int(self.values.shape[1])

    @property
    def area_fraction(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True, eq=False)
class Face3D:
    params: Optional[IdentityParams]
    shape: ShapeMap
    texture: TextureMap


@dataclass(frozen=True)
class Viewpoint:
    yaw_deg: float = 0.0
    pitch_deg: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.yaw_deg) > 60 or abs(self.pitch_deg) > 60:
            raise ValueError(
                f"viewpoint out of range: yaw={self.yaw_deg}, pitch={self.pitch_deg} (limit 60 degrees)"
            )


@dataclass(frozen=True)
class Lighting:
    azimuth_deg: float = 0.0
    ambient: float = 0.3

    def __post_init__(self) -> None:
        if abs(self.azimuth_deg) > 60:
            raise ValueError(f"lighting azimuth out of range: {self.azimuth_deg} (limit 60 degrees)")
        if not 0.0 <= self.ambient <= 1.0:
            raise ValueError(f"ambient must lie in [0, 1], got {self.ambient}")

    @property
    def direction(self) -> np.ndarray:
        azimuth = math.radians(self.azimuth_deg)
        return np.array([math.sin(azimuth), 0.0, math.cos(azimuth)])


@dataclass(frozen=True, eq=False)
class RenderOutput:
    image: np.ndarray
    depth: np.ndarray
    coverage: np.ndarray


@dataclass(frozen=True)
class Transform2D:
    kind: Literal["rotation", "projective"]
    rotation_deg: float = 0.0
    projective_params: Tuple[float, ...] = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.kind not in {"rotation", "projective"}:
            raise ValueError(f"unknown transform kind '{self.kind}'")
        if len(self.projective_params) != 8:
            raise ValueError("projective transforms take exactly 8 parameters")
        object.__setattr__(
            self, "projective_params", tuple(float(value) for value in self.projective_params)
        )

    @property
    def rotation_rad(self) -> float:
        """Rotation angle in radians, the unit `sample_transform2d` draws in."""
        return math.radians(self.rotation_deg)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "rotation":
            return {"kind": "rotation", "rotation_deg": self.rotation_deg}
        return {"kind": "projective", "projective_params": list(self.projective_params)}

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "Transform2D":
        if data.get("kind") == "rotation":
            return Transform2D(kind="rotation", rotation_deg=float(data.get("rotation_deg", 0.0)))
        return Transform2D(
            kind="projective",
            projective_params=tuple(float(v) for v in data.get("projective_params", [])),
        )


@dataclass(frozen=True)
class Condition:
    viewpoint: Viewpoint = field(default_factory=Viewpoint)
    lighting: Lighting = field(default_factory=Lighting)
    transforms: Tuple[Transform2D, ...] = ()

    def describe(self) -> Dict[str, Any]:
        return {
            "yaw_deg": self.viewpoint.yaw_deg,
            "pitch_deg": self.viewpoint.pitch_deg,
            "azimuth_deg": self.lighting.azimuth_deg,
            "transforms": [transform.to_dict() for transform in self.transforms],
        }


@dataclass(frozen=True)
class Threshold:
    delta: float
    accuracy: float = float("nan")

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= 4.0:
            raise ValueError(f"threshold must lie in [0, 4], got {self.delta}")


@dataclass(frozen=True)
class CandidateSet:
    conditions: Tuple[Condition, ...]
    transform2d_sigma: float = 0.0

    def __post_init__(self) -> None:
        if not self.conditions:
            raise ValueError("a candidate set needs at least one condition")
        if len(set(self.conditions)) != len(self.conditions):
            raise ValueError("candidate conditions must be distinct")
        if self.transform2d_sigma < 0:
            raise ValueError("transform2d_sigma must be >= 0")

    def __len__(self) -> int:
        return len(self.conditions)


@dataclass(frozen=True, eq=False)
class ImportanceDistribution:
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = _frozen_array(self.probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("importance probabilities must be a non-empty vector")
        if not np.all(probs > 0) or abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError("importance probabilities must be strictly positive and sum to 1")
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class AttackConfig:
    mode: str = "impersonation"
    method: str = "Face3DAdv_x"
    epsilon: float = 40.0 / 255.0
    alpha: float = 1.5 / 255.0
    iters: int = 100
    momentum_mu: float = 1.0
    sample_count: int = 10
    candidate_count: int = 20
    use_importance_sampling: bool = True
    transform2d_sigma: float = 0.0
    rng_seed: int = 0
    basis_dim: int = 8
    learning_rate: float = 0.01
    init_from_victim: bool = True
    with_replacement: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ATTACK_MODES:
            raise ValueError(f"unknown attack mode '{self.mode}'")
        if self.method not in ATTACK_METHODS:
            raise ValueError(f"unknown attack method '{self.method}'")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        # epsilon == 0 is the degenerate no-perturbation run used in tests.
        if self.epsilon > 0 and self.alpha > self.epsilon:
            raise ValueError(f"alpha ({self.alpha}) must not exceed epsilon ({self.epsilon})")
        if self.iters < 0:
            raise ValueError(f"iters must be >= 0, got {self.iters}")
        if self.sample_count < 1 or self.sample_count > self.candidate_count:
            raise ValueError(
                f"sample_count ({self.sample_count}) must lie in [1, candidate_count ({self.candidate_count})]"
            )
        if self.transform2d_sigma < 0:
            raise ValueError("transform2d_sigma must be >= 0")
        if self.basis_dim < 4:
            raise ValueError(f"basis_dim must be >= 4, got {self.basis_dim}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


@dataclass(frozen=True, eq=False)
class AttackResult:
    adv_texture: TextureMap
    loss_trace: List[float]
    iterations_run: int
    success_at_neutral: bool
    method: str
    mode: str
    forward_passes: int = 0
    backward_passes: int = 0


@dataclass(frozen=True, eq=False)
class FitResult:
    params: IdentityParams
    loss_trace: List[float]
    final_render: RenderOutput
    initial_l1: float
    final_l1: float
    best_iteration: int


@dataclass(frozen=True)
class ProtocolSpec:
    kind: str
    rng_seed: int = 0
    sigma_max: float = 0.1
    count_2d: int = 30

    def __post_init__(self) -> None:
        if self.kind not in PROTOCOL_KINDS:
            raise ValueError(f"unknown protocol kind '{self.kind}'")
        if self.sigma_max < 0:
            raise ValueError("sigma_max must be >= 0")
        if self.count_2d < 1:
            raise ValueError("count_2d must be >= 1")


@dataclass(frozen=True)
class ConditionRecord:
    index: int
    condition: Condition
    distance: float
    decision: str
    success: bool


@dataclass
class ExperimentReport:
    kind: str
    mode: str
    model_id: str
    method: str
    records: List[ConditionRecord] = field(default_factory=list)

    @property
    def successes(self) -> int:
        return sum(1 for record in self.records if record.success)

    @property
    def asr(self) -> float:
        if not self.records:
            return 0.0
        return 100.0 * self.successes / len(self.records)


@dataclass
class ReproAuditCheck:
    check_id: str
    description: str
    required: bool
    passed: bool
    severity: str
    message: str
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ReproAuditReport:
    out_dir: str
    mode: str
    checks: List[ReproAuditCheck] = field(default_factory=list)
    passed: bool = True
    summary: str = ""
    environment: Dict[str, Any] = field(default_factory=dict)
