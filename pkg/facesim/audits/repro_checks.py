from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from facesim.attack import masked_linf, outside_mask_equal
from facesim.protocol import asr_from_rows
from facesim.utils.config import config_hash
from facesim.utils.imageio import load_array, read_csv
from facesim.utils.types import PatchMask, ReproAuditCheck

ASR_TOLERANCE = 1e-9
# Rounding of (clean + eps) - clean.
EPSILON_SLACK = 1e-12


@dataclass(frozen=True)
class Outcome:
    passed: bool
    message: str
    details: Dict[str, Any] = field(default_factory=dict)


Evaluator = Callable[[Path, Optional[str]], Outcome]


@dataclass(frozen=True)
class ReproCheckDefinition:
    check_id: str
    description: str
    required: bool
    severity: str
    evaluator: Evaluator

    def run(self, out_dir: Path, expected_config_hash: Optional[str] = None) -> ReproAuditCheck:
        outcome = self.evaluator(out_dir, expected_config_hash)
        return ReproAuditCheck(
            check_id=self.check_id,
            description=self.description,
            required=self.required,
            passed=outcome.passed,
            severity=self.severity,
            message=outcome.message,
            details=outcome.details,
        )


# Registration order is the order checks appear in the report.
_REGISTRY: Dict[str, ReproCheckDefinition] = {}


def _check(
    check_id: str, description: str, severity: str = "major", required: bool = True
) -> Callable[[Evaluator], Evaluator]:
    def register(evaluator: Evaluator) -> Evaluator:
        _REGISTRY[check_id] = ReproCheckDefinition(check_id, description, required, severity, evaluator)
        return evaluator

    return register


def get_repro_check_registry() -> Dict[str, ReproCheckDefinition]:
    return dict(_REGISTRY)


def _load_json(path: Path) -> Tuple[Any, bool]:
    if not path.exists():
        return {}, False
    try:
        return json.loads(path.read_text(encoding="utf-8")), True
    except json.JSONDecodeError:
        return {}, False


def _load_run_json(out_dir: Path) -> Tuple[Dict[str, Any], bool]:
    data, ok = _load_json(out_dir / "run.json")
    return (data if isinstance(data, dict) else {}), ok


def _presence(path: Path) -> Outcome:
    exists = path.exists()
    return Outcome(exists, "present" if exists else "missing", {"path": str(path)})


@_check("run_json_present", "Run metadata file exists", severity="critical")
def _check_run_json_present(out_dir: Path, _: Optional[str]) -> Outcome:
    return _presence(out_dir / "run.json")


@_check("config_snapshot_present", "Resolved experiment config is stored next to the outputs")
def _check_config_snapshot(out_dir: Path, _: Optional[str]) -> Outcome:
    return _presence(out_dir / "config.json")


@_check("config_hash_match", "Run metadata config hash matches the stored config")
def _check_config_hash(out_dir: Path, expected_config_hash: Optional[str]) -> Outcome:
    run_json, _ = _load_run_json(out_dir)
    run_hash = str(run_json.get("config_hash", ""))
    expected = expected_config_hash
    if expected is None:
        snapshot, ok = _load_json(out_dir / "config.json")
        expected = config_hash(snapshot) if ok else None
    passed = expected is not None and run_hash == expected
    return Outcome(passed, "match" if passed else "mismatch", {"expected": expected, "actual": run_hash})


@_check("artifacts_present", "Every artifact recorded for the command exists")
def _check_artifacts(out_dir: Path, _: Optional[str]) -> Outcome:
    run_json, _ = _load_run_json(out_dir)
    artifacts = [str(item) for item in run_json.get("artifacts", [])]
    missing = [item for item in artifacts if not (out_dir / item).exists()]
    passed = bool(artifacts) and not missing
    return Outcome(
        passed,
        "ok" if passed else ("no_artifacts" if not artifacts else "missing"),
        {"command": run_json.get("command"), "missing": missing},
    )


@_check("deterministic_seed_declared", "Run metadata declares a deterministic seed", severity="minor", required=False)
def _check_seed_declared(out_dir: Path, _: Optional[str]) -> Outcome:
    run_json, _ = _load_run_json(out_dir)
    has_seed = isinstance(run_json.get("seed"), int)
    return Outcome(has_seed, "seed_present" if has_seed else "seed_missing")


def _texture_violations(attack_dir: Path) -> List[str]:
    record, ok = _load_json(attack_dir / "attack.json")
    if not ok:
        return [f"{attack_dir.name}: unreadable attack.json"]
    epsilon = float(record.get("config", {}).get("epsilon", 0.0))
    try:
        adv = load_array(attack_dir / "adv_texture.npy")
        clean = load_array(attack_dir / "clean_texture.npy")
        mask = PatchMask(values=load_array(attack_dir / "mask.npy"), region_name="recorded")
    except (FileNotFoundError, RuntimeError, ValueError) as exc:
        return [f"{attack_dir.name}: {exc}"]
    problems = []
    if adv.shape != clean.shape or adv.shape[:2] != mask.resolution:
        return [f"{attack_dir.name}: texture and mask shapes disagree"]
    if adv.min() < 0.0 or adv.max() > 1.0:
        problems.append(f"{attack_dir.name}: values leave [0, 1]")
    if masked_linf(adv, clean, mask) > epsilon + EPSILON_SLACK:
        problems.append(f"{attack_dir.name}: masked L-inf exceeds epsilon {epsilon}")
    if not outside_mask_equal(adv, clean, mask):
        problems.append(f"{attack_dir.name}: texture changed outside the mask")
    return problems


@_check("adversarial_texture_feasible", "Stored adversarial textures satisfy the patch projection constraints")
def _check_texture_feasibility(out_dir: Path, _: Optional[str]) -> Outcome:
    attack_dirs = sorted(path.parent for path in out_dir.rglob("attack.json"))
    problems = [problem for attack_dir in attack_dirs for problem in _texture_violations(attack_dir)]
    return Outcome(
        not problems,
        ("skipped" if not attack_dirs else "ok") if not problems else "violations",
        {"checked": len(attack_dirs), "problems": problems},
    )


@_check("asr_agreement", "Per-condition CSV reports agree with the JSON ASR summaries")
def _check_asr_agreement(out_dir: Path, _: Optional[str]) -> Outcome:
    problems: List[str] = []
    checked = 0
    for summary_path in sorted(out_dir.rglob("*summary.json")):
        summary, ok = _load_json(summary_path)
        if not ok or not isinstance(summary, dict):
            continue
        for cell in summary.get("cells", []):
            relative = cell.get("report_csv")
            if not relative:
                continue
            checked += 1
            try:
                rows = read_csv(summary_path.parent / relative)
            except FileNotFoundError:
                problems.append(f"{relative}: missing")
                continue
            recomputed = asr_from_rows(rows)
            if not abs(recomputed - float(cell.get("asr", float("nan")))) <= ASR_TOLERANCE:
                problems.append(f"{relative}: csv asr {recomputed} != json asr {cell.get('asr')}")
    return Outcome(
        not problems,
        ("skipped" if checked == 0 else "ok") if not problems else "mismatch",
        {"checked": checked, "problems": problems},
    )
