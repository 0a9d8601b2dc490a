import unittest

import numpy as np

from calculators.wiretap_channel import build_channels, mutual_information
from calculators.wiretap_common import InputStrategy, LinkGeometry, PhysicalParams
from calculators.wiretap_montecarlo import (
    RNG_ALGORITHM,
    ClickTally,
    conditional_independence_pvalues,
    empirical_mutual_information,
    simulate_clicks,
    simulate_joint_clicks,
    simulation_report,
)


class TestWiretapMonteCarlo(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.params = PhysicalParams()
        cls.geom = LinkGeometry(attenuation_db=70.0, relative_transmittance=0.9)
        cls.strategy = InputStrategy(q_on=0.544, n_a=1.94e7)
        cls.runs = {
            n: simulate_joint_clicks(cls.params, cls.geom, cls.strategy, n, seed=1) for n in (10_000, 100_000, 1_000_000)
        }
        cls.joint = cls.runs[1_000_000]
        cls.w_b, cls.w_e = build_channels(cls.params, cls.geom, cls.strategy.n_a)

    def test_slot_accounting(self):
        self.assertEqual(self.joint.n_slots, 1_000_000)
        self.assertEqual(self.joint.block_counts.shape, (100, 2, 2, 2))
        bob, eve = self.joint.bob(), self.joint.eve()
        self.assertEqual(bob.trials, eve.trials)
        self.assertEqual(sum(bob.trials), 1_000_000)
        self.assertEqual(bob.n00 + bob.n01 + bob.n10 + bob.n11, 1_000_000)
        on_fraction = bob.trials[1] / 1_000_000
        self.assertAlmostEqual(on_fraction, 0.544, delta=4 * np.sqrt(0.544 * 0.456 / 1_000_000))

    def test_empirical_channels_match_model(self):
        for n_slots, joint in self.runs.items():
            for tally, analytic in ((joint.bob(), self.w_b), (joint.eve(), self.w_e)):
                with self.subTest(n_slots=n_slots):
                    estimate, (_, se1) = tally.channel_estimate()
                    self.assertAlmostEqual(estimate.p1_given_1, analytic.p1_given_1, delta=3 * se1)
        bob_estimate, _ = self.joint.bob().channel_estimate()
        # about five dark clicks are expected in the off slots
        self.assertLess(bob_estimate.p1_given_0, 1e-4)

    def test_empirical_mutual_information(self):
        for n_slots, joint in self.runs.items():
            for tally, analytic in ((joint.bob(), self.w_b), (joint.eve(), self.w_e)):
                with self.subTest(n_slots=n_slots):
                    estimate = empirical_mutual_information(tally)
                    expected = mutual_information(analytic, self.strategy.q_on).nats_per_use
                    self.assertEqual(estimate.method, "jackknife")
                    self.assertGreater(estimate.std_error_nats, 0.0)
                    self.assertAlmostEqual(estimate.rate.nats_per_use, expected, delta=3 * estimate.std_error_nats)

    def test_no_information_without_light(self):
        params = PhysicalParams(dcr_bob=1e7)
        bob, _ = simulate_clicks(params, self.geom, InputStrategy(q_on=0.5, n_a=0.0), 100_000, seed=3)
        self.assertLess(empirical_mutual_information(bob).rate.nats_per_use, 1e-4)

    def test_conditional_independence(self):
        p0, p1 = conditional_independence_pvalues(self.joint)
        self.assertGreater(p0, 1e-4)
        self.assertGreater(p1, 1e-4)

    def test_seeded_runs_are_reproducible(self):
        first = simulate_joint_clicks(self.params, self.geom, self.strategy, 50_000, seed=42)
        again = simulate_joint_clicks(self.params, self.geom, self.strategy, 50_000, seed=42, workers=3)
        other = simulate_joint_clicks(self.params, self.geom, self.strategy, 50_000, seed=43)
        np.testing.assert_array_equal(first.block_counts, again.block_counts)
        self.assertFalse(np.array_equal(first.counts, other.counts))

    def test_auxiliary_channel_shifts_the_input(self):
        strategy = InputStrategy(q_on=0.3, n_a=1.94e7, aux=(0.2, 0.9))
        bob, _ = simulate_clicks(self.params, self.geom, strategy, 200_000, seed=5)
        expected = strategy.input_marginal
        self.assertAlmostEqual(bob.trials[1] / 200_000, expected, delta=4 * np.sqrt(expected * (1 - expected) / 200_000))

    def test_tallies_merge(self):
        bob = self.joint.bob()
        merged = bob + bob
        np.testing.assert_array_equal(merged.counts, 2 * bob.counts)
        self.assertEqual(merged.block_counts.shape[0], 200)
        joint = self.joint + self.joint
        self.assertEqual(joint.n_slots, 2_000_000)

    def test_small_runs(self):
        joint = simulate_joint_clicks(self.params, self.geom, self.strategy, 10, seed=1)
        self.assertEqual(joint.block_counts.shape[0], 10)
        single = ClickTally(np.array([[[40, 10], [5, 45]]]))
        self.assertEqual(empirical_mutual_information(single).method, "information-density")
        with self.assertRaisesRegex(ValueError, r"Number of slots \(n_slots\) must be at least 1."):
            simulate_joint_clicks(self.params, self.geom, self.strategy, 0, seed=1)

    def test_missing_symbol(self):
        bob, _ = simulate_clicks(self.params, self.geom, InputStrategy(q_on=0.0, n_a=1e7), 1000, seed=2)
        with self.assertRaisesRegex(ValueError, r"needs both input symbols to be sent"):
            bob.channel_estimate()
        with self.assertRaisesRegex(ValueError, r"needs both input symbols to be sent"):
            empirical_mutual_information(bob)

    def test_simulation_report(self):
        report = simulation_report(self.params, self.geom, self.strategy, 20_000, seed=9, workers=2)
        self.assertEqual(report["rng"], {"algorithm": RNG_ALGORITHM, "seed": 9, "blocks": 100})
        self.assertIn("mutual_information", report["bob"])
        self.assertEqual(report["bob"]["analytic"], self.w_b.as_dict())
        self.assertEqual(set(report["independence_pvalues"]), {"x0", "x1"})


if __name__ == "__main__":
    unittest.main()
