from __future__ import annotations

import json
import math
import tempfile
import unittest
from pathlib import Path
from typing import List
from unittest import mock

import numpy as np

from facesim.attack import (
    PatchBasis,
    attack_loss,
    candidates_for_method,
    compose_texture,
    eot_candidates,
    face3dadv_w,
    masked_linf,
    outside_mask_equal,
    project_patch,
    resample_victim,
    run_attack,
    stratified_candidates,
    total_variation,
    write_attack_result,
)
from facesim.geometry import region_mask
from facesim.recognizer import verify
from facesim.renderer import render, sample_transform2d
from facesim.utils.imageio import read_csv
from facesim.utils.seeding import make_rng
from facesim.utils.types import AttackConfig, Lighting, TextureMap, Viewpoint

from helpers import IMAGE_SIZE, TEXTURE_RES, neutral, random_texture, small_face, tiny_model

EPSILON = 40.0 / 255.0


class ObjectiveTests(unittest.TestCase):
    def setUp(self) -> None:
        self.mask = region_mask("eyeglass", TEXTURE_RES)
        self.clean = random_texture(0)

    def test_loss_signs(self) -> None:
        self.assertEqual(attack_loss("impersonation", 0.7), 0.7)
        self.assertEqual(attack_loss("dodging", 0.7), -0.7)
        with self.assertRaises(ValueError):
            attack_loss("evasion", 0.7)

    def test_projection_is_feasible_and_idempotent(self) -> None:
        wild = np.random.default_rng(1).uniform(-0.5, 1.5, self.clean.shape)
        projected = project_patch(wild, self.clean, self.mask, EPSILON)
        self.assertLessEqual(masked_linf(projected, self.clean, self.mask), EPSILON + 1e-12)
        self.assertTrue(outside_mask_equal(projected, self.clean, self.mask))
        self.assertGreaterEqual(float(projected.values.min()), 0.0)
        self.assertLessEqual(float(projected.values.max()), 1.0)
        again = project_patch(projected, self.clean, self.mask, EPSILON)
        np.testing.assert_array_equal(again.values, projected.values)

    def test_projection_clamp_arithmetic(self) -> None:
        clean = np.full((*TEXTURE_RES, 3), 0.5)
        projected = project_patch(np.full_like(clean, 0.9), clean, self.mask, 0.15).values
        inside = self.mask.values > 0
        np.testing.assert_allclose(projected[inside], 0.65, atol=1e-12)
        np.testing.assert_array_equal(projected[~inside], 0.5)

    def test_projection_checks_shapes(self) -> None:
        with self.assertRaises(ValueError):
            project_patch(np.zeros((16, 16, 3)), self.clean, self.mask, EPSILON)

    def test_compose_texture(self) -> None:
        patch = np.ones_like(self.clean)
        composed = compose_texture(patch, self.clean, self.mask)
        inside = self.mask.values > 0
        np.testing.assert_array_equal(composed[inside], 1.0)
        np.testing.assert_array_equal(composed[~inside], self.clean[~inside])

    def test_total_variation(self) -> None:
        self.assertEqual(total_variation(np.full((4, 4, 3), 0.3)), 0.0)
        ramp = np.zeros((2, 3, 1))
        ramp[:, 1:, 0] = 1.0
        self.assertEqual(total_variation(ramp), 2.0)


class CandidateTests(unittest.TestCase):
    def test_default_grid(self) -> None:
        candidates = stratified_candidates(20)
        self.assertEqual(len(candidates), 20)
        poses = [c for c in candidates.conditions if c.viewpoint != Viewpoint()]
        lights = [c for c in candidates.conditions if c.lighting != Lighting()]
        self.assertEqual(len(poses), 14)
        self.assertEqual(len(lights), 6)
        self.assertNotIn(Viewpoint(), [c.viewpoint for c in poses])

    def test_smaller_counts_stay_spread(self) -> None:
        candidates = stratified_candidates(10)
        self.assertEqual(len(candidates), 10)
        self.assertTrue(any(c.lighting != Lighting() for c in candidates.conditions))
        with self.assertRaises(ValueError):
            stratified_candidates(0)
        with self.assertRaises(ValueError):
            stratified_candidates(21)

    def test_eot_candidates_are_planar_and_reproducible(self) -> None:
        first = eot_candidates(8, make_rng(3, "eot"))
        second = eot_candidates(8, make_rng(3, "eot"))
        self.assertEqual(first.conditions, second.conditions)
        for condition in first.conditions:
            self.assertEqual(condition.viewpoint, Viewpoint())
            self.assertEqual([t.kind for t in condition.transforms], ["rotation", "projective"])

    def test_candidates_by_method(self) -> None:
        self.assertEqual(len(candidates_for_method(AttackConfig(method="MIM"))), 1)
        eot = candidates_for_method(AttackConfig(method="EOT", candidate_count=12, sample_count=4))
        self.assertEqual(len(eot), 12)
        self.assertEqual(len(candidates_for_method(AttackConfig(method="Face3DAdv_x"))), 20)

    def test_attack_config_validation(self) -> None:
        with self.assertRaises(ValueError):
            AttackConfig(sample_count=30, candidate_count=20)
        with self.assertRaises(ValueError):
            AttackConfig(alpha=0.5, epsilon=0.1)
        with self.assertRaises(ValueError):
            AttackConfig(method="PGD")
        AttackConfig(epsilon=0.0, alpha=0.01)


class RunAttackTests(unittest.TestCase):
    def setUp(self) -> None:
        self.model = tiny_model()
        self.face = small_face(1)
        self.victim = neutral(small_face(2))
        self.mask = region_mask("eyeglass", TEXTURE_RES)

    def _run(self, config: AttackConfig, threads: int = 1, on_iterate=None):
        return run_attack(
            self.face,
            self.victim,
            self.mask,
            self.model,
            None,
            config,
            delta=1.0,
            on_iterate=on_iterate,
            threads=threads,
        )

    def _check_feasible(self, config: AttackConfig) -> None:
        seen: List[int] = []
        clean = self.face.texture

        def check(iteration: int, values: np.ndarray) -> None:
            seen.append(iteration)
            self.assertLessEqual(masked_linf(values, clean, self.mask), config.epsilon + 1e-12)
            self.assertTrue(outside_mask_equal(values, clean, self.mask))
            self.assertGreaterEqual(float(values.min()), 0.0)
            self.assertLessEqual(float(values.max()), 1.0)

        result = self._run(config, on_iterate=check)
        self.assertEqual(seen, list(range(config.iters + 1)))
        self.assertEqual(len(result.loss_trace), config.iters)
        self.assertEqual(result.iterations_run, config.iters)

    def test_every_method_stays_feasible(self) -> None:
        for method in ("MIM", "EOT", "Face3DAdv_x", "Face3DAdv_w"):
            with self.subTest(method=method):
                config = AttackConfig(
                    method=method, iters=3, sample_count=2, candidate_count=4, learning_rate=0.2
                )
                self._check_feasible(config)

    def test_dodging_budget_is_feasible(self) -> None:
        config = AttackConfig(mode="dodging", method="Face3DAdv_x", epsilon=1.0, iters=2, sample_count=2,
                              candidate_count=4)
        self._check_feasible(config)

    def test_importance_sampling_pass_counts(self) -> None:
        config = AttackConfig(method="Face3DAdv_x", iters=4, sample_count=3, candidate_count=6)
        result = self._run(config)
        self.assertEqual(result.forward_passes, 4 * 6)
        self.assertEqual(result.backward_passes, 4 * 3)

    def test_uniform_sampling_pass_counts(self) -> None:
        for method, use_importance in (("EOT", True), ("Face3DAdv_x", False)):
            with self.subTest(method=method):
                config = AttackConfig(
                    method=method, iters=3, sample_count=2, candidate_count=4, use_importance_sampling=use_importance
                )
                result = self._run(config)
                self.assertEqual(result.forward_passes, 3 * 2)
                self.assertEqual(result.backward_passes, 3 * 2)

    def test_mim_pass_counts(self) -> None:
        result = self._run(AttackConfig(method="MIM", iters=3))
        self.assertEqual((result.forward_passes, result.backward_passes), (3, 3))

    def test_threads_do_not_change_results(self) -> None:
        config = AttackConfig(method="Face3DAdv_x", iters=3, sample_count=3, candidate_count=6, rng_seed=5)
        serial = self._run(config, threads=1)
        threaded = self._run(config, threads=3)
        np.testing.assert_array_equal(serial.adv_texture.values, threaded.adv_texture.values)
        self.assertEqual(serial.loss_trace, threaded.loss_trace)

    def test_runs_are_reproducible(self) -> None:
        config = AttackConfig(method="EOT", iters=2, sample_count=2, candidate_count=4, rng_seed=9)
        first = self._run(config)
        second = self._run(config)
        np.testing.assert_array_equal(first.adv_texture.values, second.adv_texture.values)
        self.assertEqual(first.loss_trace, second.loss_trace)

    def test_mim_lowers_the_impersonation_loss(self) -> None:
        config = AttackConfig(method="MIM", iters=10, init_from_victim=False)
        result = self._run(config)
        self.assertLess(result.loss_trace[-1], result.loss_trace[0])

    def test_attack_leaves_geometry_alone(self) -> None:
        result = self._run(AttackConfig(method="MIM", iters=2))
        viewpoint = Viewpoint(yaw_deg=10.0, pitch_deg=5.0)
        clean = render(self.face.shape, self.face.texture, viewpoint, Lighting(), IMAGE_SIZE)
        adv = render(self.face.shape, result.adv_texture, viewpoint, Lighting(), IMAGE_SIZE)
        np.testing.assert_array_equal(clean.depth, adv.depth)
        np.testing.assert_array_equal(clean.coverage, adv.coverage)

    def test_input_validation(self) -> None:
        config = AttackConfig(method="MIM", iters=1)
        with self.assertRaises(ValueError):
            run_attack(self.face, self.victim, region_mask("eyeglass", (64, 64)), self.model, None, config, delta=1.0)
        with self.assertRaises(ValueError):
            run_attack(self.face, np.zeros((8, 8, 3)), self.mask, self.model, None, config, delta=1.0)
        x_config = AttackConfig(method="Face3DAdv_x", iters=1, sample_count=2, candidate_count=4)
        with self.assertRaises(ValueError):
            run_attack(self.face, self.victim, self.mask, self.model, stratified_candidates(6), x_config, delta=1.0)

    def test_zero_iterations_keep_the_start(self) -> None:
        config = AttackConfig(method="Face3DAdv_x", iters=0, sample_count=2, candidate_count=4, init_from_victim=False)
        result = self._run(config)
        np.testing.assert_array_equal(result.adv_texture.values, self.face.texture.values)
        self.assertEqual(result.loss_trace, [])

    def test_latent_attack_starts_from_the_clean_texture(self) -> None:
        config = AttackConfig(method="Face3DAdv_w", iters=2, sample_count=2, candidate_count=4, rng_seed=3)
        seen: List[np.ndarray] = []
        result = face3dadv_w(
            self.face, self.victim, self.mask, self.model, None, config, basis_dim=4, delta=1.0,
            on_iterate=lambda iteration, values: seen.append(values.copy()),
        )
        np.testing.assert_array_equal(seen[0], self.face.texture.values)
        self.assertEqual(result.method, "Face3DAdv_w")
        self.assertEqual(len(result.loss_trace), 2)
        self.assertEqual(result.forward_passes, 2 * 4)

    def test_mim_keeps_its_fixed_neutral_condition(self) -> None:
        warped = AttackConfig(method="MIM", iters=2, transform2d_sigma=0.1)
        with mock.patch("facesim.attack.engine.sample_transform2d", wraps=sample_transform2d) as sampler:
            result = self._run(warped)
        self.assertEqual(sampler.call_count, 0)
        plain = self._run(AttackConfig(method="MIM", iters=2))
        np.testing.assert_array_equal(result.adv_texture.values, plain.adv_texture.values)
        self.assertEqual(result.loss_trace, plain.loss_trace)

    def test_other_methods_draw_fresh_transforms(self) -> None:
        config = AttackConfig(method="Face3DAdv_x", iters=2, sample_count=2, candidate_count=4, transform2d_sigma=0.1)
        with mock.patch("facesim.attack.engine.sample_transform2d", wraps=sample_transform2d) as sampler:
            self._run(config)
        # one rotation and one projective warp per sampled condition
        self.assertEqual(sampler.call_count, 2 * 2 * 2)

    def test_zero_budget_returns_the_clean_texture(self) -> None:
        clean_image = neutral(self.face)
        for mode, wanted in (("impersonation", "same"), ("dodging", "different")):
            with self.subTest(mode=mode):
                config = AttackConfig(
                    mode=mode, method="Face3DAdv_x", epsilon=0.0, alpha=0.01, iters=2, sample_count=2,
                    candidate_count=4,
                )
                result = self._run(config)
                np.testing.assert_array_equal(result.adv_texture.values, self.face.texture.values)
                clean_success = verify(self.model, clean_image, self.victim, 1.0) == wanted
                self.assertEqual(result.success_at_neutral, clean_success)

    def test_latent_patch_is_smoother_than_the_texel_patch(self) -> None:
        base = dict(iters=3, sample_count=2, candidate_count=4, rng_seed=4, learning_rate=0.002)
        texel = self._run(AttackConfig(method="Face3DAdv_x", **base))
        latent = face3dadv_w(
            self.face, self.victim, self.mask, self.model, None, AttackConfig(method="Face3DAdv_w", **base),
            basis_dim=4, delta=1.0,
        )
        inside = self.mask.values[:, :, None]
        clean = self.face.texture.values
        texel_tv = total_variation(inside * (texel.adv_texture.values - clean))
        latent_tv = total_variation(inside * (latent.adv_texture.values - clean))
        self.assertGreater(texel_tv, 0.0)
        self.assertLessEqual(latent_tv, texel_tv)

    def test_write_attack_result(self) -> None:
        config = AttackConfig(method="MIM", iters=2)
        result = self._run(config)
        with tempfile.TemporaryDirectory() as tmpdir:
            paths = write_attack_result(Path(tmpdir), result, config)
            record = json.loads(paths["attack_json"].read_text(encoding="utf-8"))
            rows = read_csv(paths["loss_csv"])
            stored = np.load(paths["texture_npy"])
        self.assertEqual(record["config"]["method"], "MIM")
        self.assertEqual(record["result"]["forward_passes"], 2)
        self.assertEqual([float(row["loss"]) for row in rows], result.loss_trace)
        np.testing.assert_array_equal(stored, result.adv_texture.values)


class PatchHelpersTests(unittest.TestCase):
    def test_basis_pullback_is_the_adjoint(self) -> None:
        basis = PatchBasis.build(region_mask("hat", TEXTURE_RES), 4)
        self.assertEqual(basis.fields.shape, (16, *TEXTURE_RES))
        rng = np.random.default_rng(2)
        code = rng.standard_normal((16, 3))
        field = rng.standard_normal((*TEXTURE_RES, 3))
        lhs = float((basis.expand(code) * field).sum())
        rhs = float((code * basis.pullback(field)).sum())
        self.assertAlmostEqual(lhs, rhs, delta=1e-9 * max(1.0, abs(lhs)))
        self.assertLessEqual(float(np.abs(basis.decode(code, EPSILON)).max()), EPSILON)
        with self.assertRaises(ValueError):
            PatchBasis.build(region_mask("hat", TEXTURE_RES), 2)

    def test_single_coefficient_decode_matches_the_cosine_field(self) -> None:
        mask = region_mask("eyeglass", TEXTURE_RES)
        size, p, q, channel, weight = 4, 2, 1, 1, 0.7
        basis = PatchBasis.build(mask, size)
        code = np.zeros((size * size, 3))
        code[p * size + q, channel] = weight
        decoded = basis.decode(code, EPSILON)

        rows = np.flatnonzero(mask.values.any(axis=1))
        cols = np.flatnonzero(mask.values.any(axis=0))
        r0, r1, c0, c1 = int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])
        expected = np.zeros_like(decoded)
        for row in range(TEXTURE_RES[0]):
            v = min(max((row - r0) / (r1 - r0), 0.0), 1.0)
            for col in range(TEXTURE_RES[1]):
                u = min(max((col - c0) / (c1 - c0), 0.0), 1.0)
                field = math.cos(math.pi * p * u) * math.cos(math.pi * q * v)
                expected[row, col, channel] = EPSILON * math.tanh(weight * field)
        np.testing.assert_allclose(decoded, expected, atol=1e-12)

    def test_resample_victim(self) -> None:
        face = small_face(1)
        values = resample_victim(face, neutral(small_face(2)))
        self.assertEqual(values.shape, (*TEXTURE_RES, 3))
        self.assertGreaterEqual(float(values.min()), 0.0)
        self.assertLessEqual(float(values.max()), 1.0)
        TextureMap(values=values)


if __name__ == "__main__":
    unittest.main()
