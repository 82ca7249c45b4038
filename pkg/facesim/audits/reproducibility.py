from __future__ import annotations

import platform
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from facesim.audits.repro_checks import get_repro_check_registry
from facesim.utils.types import ReproAuditReport

AUDIT_MODES = ("soft", "hard")


def _environment() -> Dict[str, str]:
    """Versions that can change float results across machines."""
    try:
        import numba

        numba_version = str(numba.__version__)
    except ImportError:
        numba_version = "unavailable"
    return {
        "python_version": platform.python_version(),
        "numpy_version": np.__version__,
        "numba_version": numba_version,
        "platform": platform.platform(),
    }


def run_reproducibility_audit(
    out_dir: Path,
    mode: str = "soft",
    expected_config_hash: Optional[str] = None,
) -> ReproAuditReport:
    """Run every registered check against one output directory.

    The mode only affects how callers react: `hard` turns a failed required check into a non-zero exit.
    """
    if mode not in AUDIT_MODES:
        raise ValueError(f"audit mode must be 'soft' or 'hard', got '{mode}'")
    if not out_dir.exists():
        raise FileNotFoundError(f"Output directory not found: {out_dir}")

    checks = [definition.run(out_dir, expected_config_hash) for definition in get_repro_check_registry().values()]
    failed = [check.check_id for check in checks if check.required and not check.passed]
    summary = f"{len(failed)} required reproducibility check(s) failed." if failed else "Reproducibility checks passed."
    return ReproAuditReport(
        out_dir=str(out_dir),
        mode=mode,
        checks=checks,
        passed=not failed,
        summary=summary,
        environment=_environment(),
    )


def report_to_dict(report: ReproAuditReport) -> Dict[str, object]:
    return asdict(report)
