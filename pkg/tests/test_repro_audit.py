from __future__ import annotations

import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from facesim.audits import report_to_dict, run_reproducibility_audit
from facesim.audits.repro_checks import get_repro_check_registry
from facesim.geometry import region_mask
from facesim.pipeline.orchestrator import AUDIT_FILE, Orchestrator
from facesim.utils.config import ExperimentConfig
from facesim.utils.imageio import save_array

from helpers import TEXTURE_RES, random_texture, small_config_data


def _failed(report) -> list:
    return [check.check_id for check in report.checks if check.required and not check.passed]


class ReproAuditTests(unittest.TestCase):
    def _orchestrator(self, out_dir: Path) -> Orchestrator:
        return Orchestrator(ExperimentConfig.from_dict(small_config_data()), out_dir)

    def test_audit_passes_for_a_fresh_run(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            run_dir = Path(tmpdir) / "synth"
            orchestrator = self._orchestrator(run_dir)
            orchestrator.synth(3)
            report = run_reproducibility_audit(run_dir, mode="hard")
            self.assertTrue(report.passed, _failed(report))
            self.assertEqual(report.mode, "hard")
            matched = run_reproducibility_audit(run_dir, expected_config_hash=orchestrator.config_fingerprint)
            self.assertTrue(matched.passed)

            written = orchestrator.audit()
            self.assertTrue((run_dir / AUDIT_FILE).exists())
            self.assertEqual(written["mode"], "soft")
            self.assertTrue(written["passed"])
            stored = json.loads((run_dir / AUDIT_FILE).read_text(encoding="utf-8"))
            self.assertEqual(stored["checks"], report_to_dict(report)["checks"])

    def test_missing_artifact_fails(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            run_dir = Path(tmpdir) / "synth"
            self._orchestrator(run_dir).synth(3)
            (run_dir / "texture.npy").unlink()
            report = run_reproducibility_audit(run_dir, mode="hard")
            self.assertFalse(report.passed)
            self.assertIn("artifacts_present", _failed(report))

    def test_edited_config_snapshot_fails_the_hash_check(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            run_dir = Path(tmpdir) / "synth"
            self._orchestrator(run_dir).synth(3)
            snapshot = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
            snapshot["seed"] = 99
            (run_dir / "config.json").write_text(json.dumps(snapshot), encoding="utf-8")
            self.assertEqual(_failed(run_reproducibility_audit(run_dir)), ["config_hash_match"])
            self.assertIn(
                "config_hash_match",
                _failed(run_reproducibility_audit(run_dir, expected_config_hash="0" * 64)),
            )

    def test_missing_run_metadata(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            report = run_reproducibility_audit(Path(tmpdir))
            self.assertIn("run_json_present", _failed(report))
            self.assertIn("artifacts_present", _failed(report))

    def test_report_follows_registry_order(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            report = run_reproducibility_audit(Path(tmpdir))
        self.assertEqual([check.check_id for check in report.checks], list(get_repro_check_registry()))
        optional = [check.check_id for check in report.checks if not check.required]
        self.assertEqual(optional, ["deterministic_seed_declared"])
        self.assertIn("numpy_version", report.environment)

    def test_bad_arguments(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            with self.assertRaises(ValueError):
                run_reproducibility_audit(Path(tmpdir), mode="strict")
            with self.assertRaises(FileNotFoundError):
                run_reproducibility_audit(Path(tmpdir) / "absent")


class TextureFeasibilityAuditTests(unittest.TestCase):
    epsilon = 0.1

    def _write_attack_dir(self, attack_dir: Path, adv: np.ndarray, clean: np.ndarray) -> None:
        attack_dir.mkdir(parents=True)
        mask = region_mask("eyeglass", TEXTURE_RES)
        save_array(attack_dir / "adv_texture.npy", adv)
        save_array(attack_dir / "clean_texture.npy", clean)
        save_array(attack_dir / "mask.npy", mask.values)
        (attack_dir / "attack.json").write_text(
            json.dumps({"config": {"epsilon": self.epsilon}, "result": {}}), encoding="utf-8"
        )

    def _check(self, run_dir: Path):
        report = run_reproducibility_audit(run_dir)
        return next(check for check in report.checks if check.check_id == "adversarial_texture_feasible")

    def test_feasible_patch_passes(self) -> None:
        clean = random_texture(1)
        inside = region_mask("eyeglass", TEXTURE_RES).values > 0
        adv = clean.copy()
        adv[inside] = np.clip(adv[inside] + self.epsilon, 0.0, 1.0)
        with tempfile.TemporaryDirectory() as tmpdir:
            self._write_attack_dir(Path(tmpdir) / "attack" / "MIM", adv, clean)
            check = self._check(Path(tmpdir))
        self.assertTrue(check.passed, check.details)
        self.assertEqual(check.details["checked"], 1)

    def test_change_outside_the_mask_fails(self) -> None:
        clean = random_texture(1)
        outside = region_mask("eyeglass", TEXTURE_RES).values == 0
        adv = clean.copy()
        adv[outside] += 0.01
        with tempfile.TemporaryDirectory() as tmpdir:
            self._write_attack_dir(Path(tmpdir) / "attack" / "MIM", adv, clean)
            check = self._check(Path(tmpdir))
        self.assertFalse(check.passed)
        self.assertIn("outside the mask", check.details["problems"][0])

    def test_budget_overrun_fails(self) -> None:
        clean = random_texture(1)
        inside = region_mask("eyeglass", TEXTURE_RES).values > 0
        adv = clean.copy()
        adv[inside] = np.where(adv[inside] > 0.5, adv[inside] - 0.3, adv[inside] + 0.3)
        with tempfile.TemporaryDirectory() as tmpdir:
            self._write_attack_dir(Path(tmpdir) / "attack" / "EOT", adv, clean)
            check = self._check(Path(tmpdir))
        self.assertFalse(check.passed)


class AsrAgreementAuditTests(unittest.TestCase):
    def test_protocol_outputs_agree_until_edited(self) -> None:
        config = ExperimentConfig.from_dict(small_config_data())
        with tempfile.TemporaryDirectory() as tmpdir:
            run_dir = Path(tmpdir) / "protocol"
            Orchestrator(config, run_dir).protocol()
            report = run_reproducibility_audit(run_dir, mode="hard")
            self.assertTrue(report.passed, _failed(report))
            feasibility = next(c for c in report.checks if c.check_id == "adversarial_texture_feasible")
            self.assertEqual(feasibility.details["checked"], 1)

            summary_path = run_dir / "protocol" / "protocol_summary.json"
            summary = json.loads(summary_path.read_text(encoding="utf-8"))
            summary["cells"][0]["asr"] = summary["cells"][0]["asr"] + 5.0
            summary_path.write_text(json.dumps(summary), encoding="utf-8")
            self.assertEqual(_failed(run_reproducibility_audit(run_dir)), ["asr_agreement"])


if __name__ == "__main__":
    unittest.main()
