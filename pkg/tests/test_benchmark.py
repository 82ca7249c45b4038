from __future__ import annotations

import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from facesim.geometry import build_shape, synth_identity
from facesim.protocol import (
    CLEAN_METHOD,
    asr_from_rows,
    attacker_face,
    identity_pairs,
    protocol_specs,
    run_benchmark,
    write_benchmark,
)
from facesim.utils.config import ExperimentConfig, FitConfig
from facesim.utils.imageio import read_csv
from facesim.utils.seeding import derive_seed
from facesim.utils.types import ProtocolSpec


def _config(**changes) -> ExperimentConfig:
    base = ExperimentConfig(
        shape_res=(16, 16),
        texture_res=(32, 32),
        image_size=(32, 32),
        models=("modelA", "modelB"),
        white_box_models=("modelA",),
        methods=("MIM",),
        iters=2,
        protocol_kinds=("lighting",),
        calibration_identities=3,
        calibration_strict=False,
        include_clean=False,
    )
    return base.with_overrides(**changes)


class BenchmarkHelpersTests(unittest.TestCase):
    def test_protocol_specs_use_labelled_seeds(self) -> None:
        config = _config(protocol_kinds=("pitch", "rotation2d"), count_2d=7, sigma_max=0.05)
        specs = protocol_specs(config)
        self.assertEqual([spec.kind for spec in specs], ["pitch", "rotation2d"])
        self.assertEqual(specs[1].rng_seed, derive_seed(config.seed, "protocol/rotation2d"))
        self.assertEqual(specs[1].count_2d, 7)
        self.assertEqual(specs[1].sigma_max, 0.05)

    def test_identity_pairs(self) -> None:
        self.assertEqual(identity_pairs(_config(attacker_seeds=(1, 3), victim_seeds=(2, 4))), [(1, 2), (3, 4)])
        dodging = _config(mode="dodging", attacker_seeds=(1, 3), victim_seeds=(2,))
        self.assertEqual(identity_pairs(dodging), [(1, 1), (3, 3)])

    def test_attacker_face_from_reconstruction(self) -> None:
        config = _config(fit_enabled=True, fit=FitConfig(max_iters=2))
        face = attacker_face(config, 5)
        self.assertEqual(face.params.seed, 5)
        self.assertEqual(face.texture.resolution, (32, 32))
        self.assertEqual(face.shape.resolution, (16, 16))
        expected = build_shape(synth_identity(5), config.shape_res)
        np.testing.assert_array_equal(face.shape.positions, expected.positions)


class RunBenchmarkTests(unittest.TestCase):
    def test_cells_cover_models_and_flag_white_box(self) -> None:
        config = _config()
        bundle = run_benchmark([(1, 2)], ["MIM"], ["modelA", "modelB"], [ProtocolSpec("lighting")], config)
        self.assertEqual(len(bundle.cells), 2)
        self.assertEqual(len(bundle.reports), 2)
        (white,) = bundle.cell(eval_model="modelA")
        (transfer,) = bundle.cell(eval_model="modelB")
        self.assertTrue(white.white_box)
        self.assertFalse(transfer.white_box)
        self.assertEqual(transfer.white_box_model, "modelA")
        self.assertEqual(white.conditions, 20)
        self.assertEqual(white.asr, 100.0 * white.successes / 20)
        self.assertIn((1, "modelA", "MIM"), bundle.results)
        self.assertEqual(set(bundle.matrix()["MIM"]["modelA"]), {"modelA", "modelB"})

    def test_clean_baseline_cells(self) -> None:
        config = _config(include_clean=True)
        bundle = run_benchmark([(1, 2)], ["MIM"], ["modelA", "modelB"], [ProtocolSpec("lighting")], config)
        self.assertEqual(len(bundle.cells), 4)
        clean = bundle.cell(method=CLEAN_METHOD)
        self.assertEqual(len(clean), 2)
        for cell in clean:
            self.assertEqual(cell.white_box_model, "")
            self.assertFalse(cell.white_box)

    def test_white_box_falls_back_to_first_model(self) -> None:
        config = _config(models=("modelA", "modelB"), white_box_models=("modelA",))
        bundle = run_benchmark([(1, 2)], ["MIM"], ["modelB"], [ProtocolSpec("lighting")], config)
        (cell,) = bundle.cells
        self.assertEqual(cell.white_box_model, "modelB")
        self.assertTrue(cell.white_box)

    def test_benchmark_is_reproducible_and_written(self) -> None:
        config = _config()
        specs = [ProtocolSpec("lighting")]
        first = run_benchmark([(1, 2)], ["MIM"], ["modelA", "modelB"], specs, config)
        second = run_benchmark([(1, 2)], ["MIM"], ["modelA", "modelB"], specs, config)
        self.assertEqual(first.cells, second.cells)
        with tempfile.TemporaryDirectory() as tmpdir:
            a = write_benchmark(Path(tmpdir) / "a", first)
            b = write_benchmark(Path(tmpdir) / "b", second)
            self.assertEqual(a["cells_csv"].read_bytes(), b["cells_csv"].read_bytes())
            self.assertEqual(a["summary_json"].read_bytes(), b["summary_json"].read_bytes())
            summary = json.loads(a["summary_json"].read_text(encoding="utf-8"))
            self.assertEqual(len(summary["cells"]), 2)
            for entry in summary["cells"]:
                rows = read_csv(Path(tmpdir) / "a" / entry["report_csv"])
                self.assertEqual(len(rows), 20)
                self.assertEqual(asr_from_rows(rows), entry["asr"])
            self.assertEqual(len(read_csv(a["cells_csv"])), 2)

    def test_needs_a_model(self) -> None:
        with self.assertRaises(ValueError):
            run_benchmark([(1, 2)], ["MIM"], [], [ProtocolSpec("lighting")], _config())


if __name__ == "__main__":
    unittest.main()
