from __future__ import annotations

import unittest

import numpy as np

from facesim.attack import importance_probs, sample_conditions, uniform_probs
from facesim.utils.seeding import make_rng
from facesim.utils.types import ImportanceDistribution


class ImportanceProbsTests(unittest.TestCase):
    def test_softmax_properties_over_random_losses(self) -> None:
        rng = np.random.default_rng(0)
        for _ in range(1000):
            losses = rng.normal(0.0, 3.0, int(rng.integers(1, 30)))
            probs = importance_probs(losses).probs
            self.assertAlmostEqual(float(probs.sum()), 1.0, delta=1e-9)
            self.assertTrue(np.all(probs > 0.0))
            self.assertEqual(int(np.argmax(probs)), int(np.argmax(losses)))

    def test_equal_losses_give_uniform_probabilities(self) -> None:
        probs = importance_probs(np.full(7, 0.3)).probs
        np.testing.assert_allclose(probs, 1.0 / 7.0, atol=1e-12)
        np.testing.assert_allclose(uniform_probs(7).probs, probs, atol=1e-12)

    def test_analytic_values(self) -> None:
        probs = importance_probs(np.array([np.log(2.0), 0.0, 0.0])).probs
        np.testing.assert_allclose(probs, [0.5, 0.25, 0.25], atol=1e-12)
        np.testing.assert_allclose(importance_probs(np.zeros(4)).probs, 0.25, atol=1e-12)

    def test_raising_one_loss_moves_mass_to_it(self) -> None:
        rng = np.random.default_rng(7)
        for _ in range(200):
            losses = rng.normal(0.0, 2.0, 5)
            before = importance_probs(losses).probs
            for index in range(5):
                raised = losses.copy()
                raised[index] += rng.uniform(0.1, 2.0)
                after = importance_probs(raised).probs
                others = np.arange(5) != index
                self.assertGreater(after[index], before[index])
                self.assertTrue(np.all(after[others] < before[others]))
                self.assertEqual(int(np.argmax(after)), int(np.argmax(raised)))

    def test_huge_loss_gap_keeps_every_probability_positive(self) -> None:
        probs = importance_probs(np.array([0.0, -800.0])).probs
        self.assertTrue(np.all(probs > 0.0))
        self.assertEqual(float(probs[0]), 1.0)
        self.assertEqual(int(np.argmax(probs)), 0)
        with self.assertRaises(ValueError):
            ImportanceDistribution(probs=np.array([1.0, 0.0]))

    def test_large_losses_do_not_overflow(self) -> None:
        probs = importance_probs(np.array([1000.0, 999.0])).probs
        self.assertTrue(np.all(np.isfinite(probs)))
        self.assertGreater(probs[0], probs[1])

    def test_invalid_losses(self) -> None:
        with self.assertRaises(ValueError):
            importance_probs(np.array([]))
        with self.assertRaises(ValueError):
            importance_probs(np.array([0.1, np.nan]))
        with self.assertRaises(ValueError):
            ImportanceDistribution(probs=np.array([0.5, 0.6]))


class SampleConditionsTests(unittest.TestCase):
    def test_monte_carlo_frequencies_follow_probabilities(self) -> None:
        dist = importance_probs(np.array([0.0, 0.5, 1.0, -1.0, 2.0]))
        rng = make_rng(42, "sampling-test")
        draws = 100_000
        counts = np.zeros(dist.probs.size)
        for _ in range(draws):
            counts[sample_conditions(dist, 1, rng, with_replacement=True)[0]] += 1
        np.testing.assert_allclose(counts / draws, dist.probs, atol=0.01)

    def test_near_certain_candidate_is_always_drawn(self) -> None:
        dist = ImportanceDistribution(probs=np.array([1.0 - 1e-12, 5e-13, 5e-13]))
        rng = make_rng(5, "sampling-test")
        for _ in range(2000):
            self.assertEqual(sample_conditions(dist, 1, rng, with_replacement=True), [0])
            self.assertIn(0, sample_conditions(dist, 2, rng))

    def test_without_replacement_draws_are_distinct(self) -> None:
        dist = importance_probs(np.linspace(-1.0, 1.0, 20))
        chosen = sample_conditions(dist, 10, make_rng(1, "s"))
        self.assertEqual(len(chosen), 10)
        self.assertEqual(len(set(chosen)), 10)

    def test_drawing_everything_gives_a_permutation(self) -> None:
        dist = uniform_probs(6)
        self.assertEqual(sorted(sample_conditions(dist, 6, make_rng(2, "s"))), list(range(6)))

    def test_draws_are_reproducible(self) -> None:
        dist = importance_probs(np.arange(8, dtype=float))
        first = sample_conditions(dist, 4, make_rng(3, "s"))
        second = sample_conditions(dist, 4, make_rng(3, "s"))
        self.assertEqual(first, second)

    def test_invalid_counts(self) -> None:
        dist = uniform_probs(3)
        with self.assertRaises(ValueError):
            sample_conditions(dist, 4, make_rng(0, "s"))
        with self.assertRaises(ValueError):
            sample_conditions(dist, 0, make_rng(0, "s"))
        with self.assertRaises(ValueError):
            uniform_probs(0)


if __name__ == "__main__":
    unittest.main()
