from .candidates import (
    GRID_AZIMUTHS,
    candidates_for_method,
    eot_candidates,
    neutral_candidates,
    stratified_candidates,
)
from .engine import ConditionEvaluator, PatchBasis, face3dadv_w, resample_victim, run_attack
from .export import attack_config_to_dict, attack_result_to_dict, write_attack_result, write_loss_trace
from .objective import (
    attack_loss,
    compose_texture,
    masked_linf,
    outside_mask_equal,
    project_patch,
    project_patch_values,
    total_variation,
)
from .sampling import importance_probs, sample_conditions, uniform_probs

__all__ = [
    "ConditionEvaluator",
    "GRID_AZIMUTHS",
    "PatchBasis",
    "attack_config_to_dict",
    "attack_loss",
    "attack_result_to_dict",
    "candidates_for_method",
    "compose_texture",
    "eot_candidates",
    "face3dadv_w",
    "importance_probs",
    "masked_linf",
    "neutral_candidates",
    "outside_mask_equal",
    "project_patch",
    "project_patch_values",
    "resample_victim",
    "run_attack",
    "sample_conditions",
    "stratified_candidates",
    "total_variation",
    "uniform_probs",
    "write_attack_result",
    "write_loss_trace",
]
