from __future__ import annotations

import tempfile
import unittest
from pathlib import Path

import numpy as np

from facesim.protocol import (
    EXPECTED_COUNTS,
    LIGHTING_AZIMUTHS,
    SWEEP_ANGLES,
    asr_from_rows,
    enumerate_conditions,
    evaluate_attack,
    report_rows,
    report_to_dict,
    success_heatmap,
    write_heatmap_ppm,
    write_report_csv,
)
from facesim.utils.imageio import read_csv
from facesim.utils.types import Condition, Lighting, ProtocolSpec, Viewpoint

from helpers import neutral, random_texture, small_face, tiny_model


class ConditionEnumerationTests(unittest.TestCase):
    def test_sweep_counts(self) -> None:
        for kind, expected in EXPECTED_COUNTS.items():
            with self.subTest(kind=kind):
                self.assertEqual(len(enumerate_conditions(ProtocolSpec(kind))), expected)
        self.assertEqual(EXPECTED_COUNTS, {"pitch": 30, "yaw": 30, "lighting": 20, "mixture": 108})

    def test_sweeps_are_symmetric_and_skip_neutral(self) -> None:
        self.assertNotIn(0.0, SWEEP_ANGLES)
        self.assertEqual(sorted(SWEEP_ANGLES), sorted(-angle for angle in SWEEP_ANGLES))
        pitches = [c.viewpoint.pitch_deg for c in enumerate_conditions(ProtocolSpec("pitch"))]
        yaws = [c.viewpoint.yaw_deg for c in enumerate_conditions(ProtocolSpec("yaw"))]
        self.assertEqual(pitches, list(SWEEP_ANGLES))
        self.assertEqual(yaws, list(SWEEP_ANGLES))

    def test_lighting_sweep(self) -> None:
        self.assertEqual(LIGHTING_AZIMUTHS[0], -60.0)
        self.assertEqual(LIGHTING_AZIMUTHS[-1], 54.0)
        for condition in enumerate_conditions(ProtocolSpec("lighting")):
            self.assertEqual(condition.viewpoint, Viewpoint())

    def test_mixture_is_distinct_and_pitch_major(self) -> None:
        conditions = enumerate_conditions(ProtocolSpec("mixture"))
        self.assertEqual(len(set(conditions)), 108)
        self.assertEqual(conditions[0], Condition(Viewpoint(-15.0, -15.0), Lighting(-40.0)))
        self.assertEqual(conditions[1].lighting.azimuth_deg, 0.0)
        self.assertEqual(conditions[3].viewpoint, Viewpoint(-9.0, -15.0))

    def test_planar_kinds_are_seeded(self) -> None:
        for kind, kinds in (("rotation2d", ["rotation"]), ("projective2d", ["projective"]),
                            ("mixture2d", ["rotation", "projective"])):
            with self.subTest(kind=kind):
                first = enumerate_conditions(ProtocolSpec(kind, rng_seed=4, count_2d=12))
                second = enumerate_conditions(ProtocolSpec(kind, rng_seed=4, count_2d=12))
                other = enumerate_conditions(ProtocolSpec(kind, rng_seed=5, count_2d=12))
                self.assertEqual(first, second)
                self.assertNotEqual(first, other)
                self.assertEqual(len(first), 12)
                for condition in first:
                    self.assertEqual(condition.viewpoint, Viewpoint())
                    self.assertEqual([t.kind for t in condition.transforms], kinds)

    def test_spec_validation(self) -> None:
        with self.assertRaises(ValueError):
            ProtocolSpec("roll")
        with self.assertRaises(ValueError):
            ProtocolSpec("rotation2d", count_2d=0)


class EvaluateAttackTests(unittest.TestCase):
    def setUp(self) -> None:
        self.model = tiny_model()
        self.face = small_face(1)
        self.victim = neutral(self.face)

    def test_identical_face_is_matched(self) -> None:
        spec = ProtocolSpec("pitch")
        kwargs = dict(conditions=[Condition()])
        impersonation = evaluate_attack(
            self.face.texture, self.face.shape, self.victim, self.model, 0.1, spec, "impersonation", **kwargs
        )
        dodging = evaluate_attack(
            self.face.texture, self.face.shape, self.victim, self.model, 0.1, spec, "dodging", **kwargs
        )
        self.assertEqual(impersonation.records[0].distance, 0.0)
        self.assertEqual(impersonation.asr, 100.0)
        self.assertEqual(dodging.asr, 0.0)

    def test_texture_is_not_modified(self) -> None:
        texture = random_texture(3)
        before = texture.copy()
        evaluate_attack(texture, self.face.shape, self.victim, self.model, 0.5, ProtocolSpec("lighting"), "dodging")
        np.testing.assert_array_equal(texture, before)

    def test_threads_keep_condition_order(self) -> None:
        texture = random_texture(4)
        spec = ProtocolSpec("yaw")
        serial = evaluate_attack(texture, self.face.shape, self.victim, self.model, 0.5, spec, "impersonation")
        threaded = evaluate_attack(
            texture, self.face.shape, self.victim, self.model, 0.5, spec, "impersonation", threads=3
        )
        self.assertEqual([r.index for r in threaded.records], list(range(30)))
        self.assertEqual([r.distance for r in serial.records], [r.distance for r in threaded.records])

    def test_asr_and_rows_agree(self) -> None:
        texture = random_texture(5)
        report = evaluate_attack(
            texture, self.face.shape, self.victim, self.model, 0.3, ProtocolSpec("lighting"), "dodging", method="MIM"
        )
        self.assertEqual(report.asr, 100.0 * report.successes / 20)
        self.assertEqual(asr_from_rows(report_rows(report)), report.asr)
        summary = report_to_dict(report)
        self.assertEqual(summary["conditions"], 20)
        self.assertEqual(summary["method"], "MIM")
        self.assertEqual(summary["model_id"], "tiny")
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "report.csv"
            write_report_csv(path, report)
            rows = read_csv(path)
        self.assertEqual(len(rows), 20)
        self.assertEqual(asr_from_rows(rows), report.asr)
        self.assertEqual(float(rows[0]["azimuth_deg"]), -60.0)

    def test_unknown_mode(self) -> None:
        with self.assertRaises(ValueError):
            evaluate_attack(
                self.face.texture, self.face.shape, self.victim, self.model, 0.1, ProtocolSpec("pitch"), "evasion"
            )


class HeatmapTests(unittest.TestCase):
    def test_mixture_heatmap_grid(self) -> None:
        face = small_face(2)
        report = evaluate_attack(
            face.texture, face.shape, neutral(face), tiny_model(), 4.0, ProtocolSpec("mixture"), "impersonation"
        )
        heatmap = success_heatmap(report)
        self.assertEqual(heatmap.shape, (6, 6))
        # every distance is below the largest possible threshold
        np.testing.assert_array_equal(heatmap.values, 1.0)
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "heatmap.ppm"
            write_heatmap_ppm(path, heatmap)
            self.assertTrue(path.read_bytes().startswith(b"P6\n6 6\n255\n"))

    def test_sweep_heatmap_is_a_column(self) -> None:
        face = small_face(2)
        report = evaluate_attack(
            face.texture, face.shape, neutral(face), tiny_model(), 0.2, ProtocolSpec("pitch"), "dodging"
        )
        heatmap = success_heatmap(report)
        self.assertEqual(heatmap.shape, (30, 1))
        self.assertEqual(heatmap.yaws, (0.0,))
        self.assertAlmostEqual(float(heatmap.values.mean()), report.asr / 100.0)


if __name__ == "__main__":
    unittest.main()
