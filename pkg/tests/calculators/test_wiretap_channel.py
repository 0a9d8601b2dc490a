import math
import unittest

import numpy as np

from calculators.wiretap_channel import (
    build_channels,
    channel_report,
    click_probability,
    concatenate,
    input_marginal,
    mutual_information,
    mutual_information_array,
    objective_array,
    power_used,
    secrecy_objective,
)
from calculators.wiretap_common import BinaryChannel, InputStrategy, LinkGeometry, PhysicalParams


def brute_force_mutual_information(p10: float, p11: float, q: float) -> float:
    """Sum over the joint distribution of (X, Y) directly."""
    rows = {0: (1.0 - q, (1.0 - p10, p10)), 1: (q, (1.0 - p11, p11))}
    p_y = [rows[0][0] * rows[0][1][y] + rows[1][0] * rows[1][1][y] for y in (0, 1)]
    total = 0.0
    for x, (p_x, w) in rows.items():
        for y in (0, 1):
            joint = p_x * w[y]
            if joint > 0:
                total += joint * math.log(w[y] / p_y[y])
    return total


class TestWiretapChannel(unittest.TestCase):

    def setUp(self):
        self.params = PhysicalParams()
        self.geom = LinkGeometry(attenuation_db=70.0, relative_transmittance=0.9)
        self.strategy = InputStrategy(q_on=0.544, n_a=1.94e7)

    def test_click_probability(self):
        self.assertAlmostEqual(click_probability(1e-7, 1.94e7, 1e4, 1e-9), 1.0 - math.exp(-1.94001), places=12)
        # dark clicks only
        self.assertAlmostEqual(click_probability(1e-7, 0.0, 1e4, 1e-9), 1e-5, delta=1e-10)
        self.assertEqual(click_probability(0.0, 0.0, 0.0, 1e-9), 0.0)
        self.assertEqual(click_probability(0.0, math.inf, 0.0, 1e-9), 0.0)
        self.assertAlmostEqual(click_probability(1.0, 1e3, 0.0, 1e-9), 1.0)
        values = click_probability(1e-7, np.array([0.0, 1e6, 1e7, 1e8]), 1e4, 1e-9)
        self.assertTrue(np.all(np.diff(values) > 0))
        with self.assertRaisesRegex(ValueError, r"Click probability input \(n_a\) must be nonnegative."):
            click_probability(1e-7, -1.0, 1e4, 1e-9)

    def test_build_channels(self):
        w_b, w_e = build_channels(self.params, self.geom, 1.94e7)
        self.assertAlmostEqual(w_b.p1_given_0, 1e-5, delta=1e-10)
        self.assertAlmostEqual(w_b.p1_given_1, 1.0 - math.exp(-1.94001), places=10)
        self.assertAlmostEqual(w_e.p1_given_0, 1e-9, delta=1e-15)
        self.assertAlmostEqual(w_e.p1_given_1, 1.0 - math.exp(-1.746 - 1e-9), places=10)
        self.assertGreater(w_b.p1_given_1, w_e.p1_given_1)
        with self.assertRaisesRegex(ValueError, r"Photons per on-pulse \(n_a\) must be nonnegative."):
            build_channels(self.params, self.geom, -1.0)

    def test_mutual_information_examples(self):
        self.assertAlmostEqual(mutual_information(BinaryChannel(0.0, 1.0), 0.5).bits_per_use, 1.0, places=12)
        self.assertEqual(mutual_information(BinaryChannel(0.3, 0.3), 0.4).nats_per_use, 0.0)
        self.assertEqual(mutual_information(BinaryChannel(0.0, 1.0), 0.0).nats_per_use, 0.0)
        self.assertEqual(mutual_information(BinaryChannel(1e-5, 0.85624), 1.0).nats_per_use, 0.0)
        flat = mutual_information_array(np.array([0.3, 1e-5, 0.7]), np.array([0.3, 1e-5, 0.7]), 0.4)
        np.testing.assert_array_equal(flat, np.zeros(3))
        self.assertAlmostEqual(mutual_information(BinaryChannel(1e-5, 0.85624), 0.544).bits_per_use, 0.674, delta=2e-3)
        with self.assertRaisesRegex(ValueError, r"On-probability \(q\) must lie in \[0, 1\]"):
            mutual_information(BinaryChannel(0.1, 0.9), 1.2)

    def test_mutual_information_matches_brute_force(self):
        rng = np.random.default_rng(20240501)
        p10, p11, q = rng.uniform(0.0, 1.0, size=(3, 10_000))
        # also sweep the small-probability corner where the clicks live
        p10[:2000] = 10.0 ** rng.uniform(-12.0, -3.0, size=2000)
        fast = mutual_information_array(p10, p11, q)
        slow = np.array([brute_force_mutual_information(*case) for case in zip(p10, p11, q)])
        np.testing.assert_allclose(fast, slow, rtol=0.0, atol=1e-12)

    def test_data_processing_inequality(self):
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            p10, p11, q, a, b = rng.uniform(0.0, 1.0, size=5)
            ch = BinaryChannel(p10, p11)
            through_flip = mutual_information(concatenate((a, b), ch), q).nats_per_use
            direct = mutual_information(ch, input_marginal(q, (a, b))).nats_per_use
            self.assertLessEqual(through_flip, direct + 1e-12)

    def test_concatenate(self):
        w_b = BinaryChannel(1e-5, 0.85624)
        combined = concatenate((0.002, 1.0), w_b)
        self.assertAlmostEqual(combined.p1_given_0, 0.00172246, places=7)
        self.assertAlmostEqual(combined.p1_given_1, 0.85624, places=12)
        self.assertEqual(concatenate((0.0, 1.0), w_b), w_b)
        swapped = concatenate((1.0, 0.0), w_b)
        self.assertEqual((swapped.p1_given_0, swapped.p1_given_1), (w_b.p1_given_1, w_b.p1_given_0))
        with self.assertRaisesRegex(ValueError, r"Auxiliary keep probability \(b\)"):
            concatenate((0.0, 1.5), w_b)

    def test_input_marginal_and_power(self):
        self.assertAlmostEqual(input_marginal(0.544, (0.002, 1.0)), 0.544912, places=9)
        self.assertAlmostEqual(input_marginal(0.3, (0.0, 1.0)), 0.3)
        self.assertAlmostEqual(power_used(0.544, 1.94e7, self.params), 1.398578e-3, delta=1e-9)
        self.assertEqual(power_used(0.0, math.inf, self.params), 0.0)
        # full budget at q = 1
        self.assertAlmostEqual(power_used(1.0, self.params.max_photons_per_slot, self.params), self.params.power_watts, places=15)
        with self.assertRaisesRegex(ValueError, r"Power accounting needs nonnegative inputs."):
            power_used(-0.1, 1.0, self.params)

    def test_secrecy_objective_reference_point(self):
        rate = secrecy_objective(self.params, self.geom, self.strategy)
        self.assertAlmostEqual(rate.bits_per_use / 0.0442, 1.0, delta=0.02)
        self.assertAlmostEqual(rate.bits_per_second / 44.2e6, 1.0, delta=0.02)
        w_b, w_e = build_channels(self.params, self.geom, 1.94e7)
        difference = mutual_information(w_b, 0.544).nats_per_use - mutual_information(w_e, 0.544).nats_per_use
        self.assertAlmostEqual(rate.nats_per_use, difference, places=14)

    def test_secrecy_objective_can_be_negative(self):
        # Eve as close as Bob with a quieter detector
        geom = LinkGeometry(attenuation_db=70.0, relative_transmittance=1.0)
        self.assertLess(secrecy_objective(self.params, geom, self.strategy).nats_per_use, 0.0)
        # Eve sees nothing
        blind = LinkGeometry(attenuation_db=70.0, relative_transmittance=0.0)
        w_b, _ = build_channels(self.params, blind, 1.94e7)
        self.assertAlmostEqual(
            secrecy_objective(self.params, blind, self.strategy).nats_per_use,
            mutual_information(w_b, 0.544).nats_per_use,
            places=14,
        )

    def test_objective_array_broadcasts(self):
        qs = np.array([0.1, 0.544, 0.9])
        values = objective_array(self.params, self.geom, qs[:, None], np.array([1e6, 1.94e7])[None, :])
        self.assertEqual(values.shape, (3, 2))
        self.assertAlmostEqual(values[1, 1], secrecy_objective(self.params, self.geom, self.strategy).nats_per_use, places=14)
        capacity_only = objective_array(self.params, self.geom, 0.544, 1.94e7, include_eve=False)
        self.assertGreater(float(capacity_only), float(values[1, 1]))

    def test_channel_report(self):
        report = channel_report(self.params, self.geom, self.strategy)
        self.assertAlmostEqual(report["mi_bob"]["bits_per_use"], 0.6734, delta=2e-3)
        self.assertAlmostEqual(report["mi_eve"]["bits_per_use"], 0.6293, delta=2e-3)
        self.assertTrue(report["feasible"])
        self.assertNotIn("w_bob_aux", report)

        aux_report = channel_report(self.params, self.geom, InputStrategy(q_on=0.544, n_a=1.94e7, aux=(0.002, 1.0)))
        self.assertAlmostEqual(aux_report["w_bob_aux"]["p1_given_0"], 0.00172246, delta=1e-6)
        self.assertAlmostEqual(aux_report["power_used_w"], power_used(0.544912, 1.94e7, self.params), places=15)

        too_bright = channel_report(self.params, self.geom, InputStrategy(q_on=1.0, n_a=1e9))
        self.assertFalse(too_bright["feasible"])


if __name__ == "__main__":
    unittest.main()
