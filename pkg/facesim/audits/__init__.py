from .reproducibility import report_to_dict, run_reproducibility_audit

__all__ = ["report_to_dict", "run_reproducibility_audit"]
