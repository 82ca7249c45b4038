from .benchmark import (
    CLEAN_METHOD,
    BenchmarkBundle,
    BenchmarkCell,
    attacker_face,
    identity_pairs,
    neutral_image,
    protocol_specs,
    reference_model,
    run_benchmark,
    write_benchmark,
)
from .conditions import EXPECTED_COUNTS, LIGHTING_AZIMUTHS, MIXTURE_ANGLES, SWEEP_ANGLES, enumerate_conditions
from .evaluation import (
    Heatmap,
    asr_from_rows,
    evaluate_attack,
    report_rows,
    report_to_dict,
    success_heatmap,
    write_heatmap_ppm,
    write_report_csv,
)

__all__ = [
    "BenchmarkBundle",
    "BenchmarkCell",
    "CLEAN_METHOD",
    "EXPECTED_COUNTS",
    "Heatmap",
    "LIGHTING_AZIMUTHS",
    "MIXTURE_ANGLES",
    "SWEEP_ANGLES",
    "asr_from_rows",
    "attacker_face",
    "enumerate_conditions",
    "evaluate_attack",
    "identity_pairs",
    "neutral_image",
    "protocol_specs",
    "reference_model",
    "report_rows",
    "report_to_dict",
    "run_benchmark",
    "success_heatmap",
    "write_benchmark",
    "write_heatmap_ppm",
    "write_report_csv",
]
