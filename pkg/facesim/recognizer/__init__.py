from .embedding import (
    EmbeddingCache,
    EmbeddingModel,
    embed,
    embed_grad,
    embed_rgbd,
    filter_bank,
    load_model,
    normalize_depth,
)
from .models import MODEL_CONFIGS, ModelConfig, get_model_config
from .verification import (
    SeparationReport,
    calibrate_from_distances,
    calibrate_threshold,
    calibrated_model,
    check_model_separation,
    decide,
    feature_distance,
    verification_accuracy,
    verify,
    write_features_csv,
)

__all__ = [
    "EmbeddingCache",
    "EmbeddingModel",
    "MODEL_CONFIGS",
    "ModelConfig",
    "SeparationReport",
    "calibrate_from_distances",
    "calibrate_threshold",
    "calibrated_model",
    "check_model_separation",
    "decide",
    "embed",
    "embed_grad",
    "embed_rgbd",
    "feature_distance",
    "filter_bank",
    "get_model_config",
    "load_model",
    "normalize_depth",
    "verification_accuracy",
    "verify",
    "write_features_csv",
]
