import unittest

from calculators.wiretap_common import InfeasibleResultError, LinkGeometry, PhysicalParams
from calculators.wiretap_optimize import maximize
from calculators.wiretap_sweep import (
    DEFAULT_FLOOR_BPS,
    GAIN_FLOOR_BPS,
    SWEEP_AUX_CSV_HEADER,
    SWEEP_CSV_HEADER,
    find_zero_threshold,
    regime_boundary,
    sweep_attenuation,
    threshold_gain,
)


class TestWiretapSweep(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.params = PhysicalParams()
        cls.threshold_090 = find_zero_threshold(cls.params, 0.9)
        cls.threshold_099 = find_zero_threshold(cls.params, 0.99)

    def test_zero_secrecy_thresholds(self):
        self.assertAlmostEqual(self.threshold_090, 124.4, delta=0.5)
        self.assertAlmostEqual(self.threshold_099, 107.6, delta=0.5)
        self.assertGreater(self.threshold_090, self.threshold_099)

    def test_randomizing_channel_extends_the_threshold(self):
        gain = threshold_gain(self.params, 0.99)
        self.assertEqual(gain.floor_bps, GAIN_FLOOR_BPS)
        self.assertAlmostEqual(gain.gain_db, 6.0, delta=2.0)
        self.assertEqual(gain.as_dict()["gain_db"], gain.gain_db)

    def test_rate_at_threshold_reaches_the_floor(self):
        for eta_zy, threshold in ((0.9, self.threshold_090), (0.99, self.threshold_099)):
            geom = LinkGeometry(attenuation_db=threshold, relative_transmittance=eta_zy)
            self.assertGreaterEqual(maximize(self.params, geom, "secrecy").objective.bits_per_second, DEFAULT_FLOOR_BPS)

    def test_randomized_sweep_dominates_and_flips_only_off_pulses(self):
        alphas = [90.0, 100.0, 105.0]
        plain = sweep_attenuation(self.params, alphas, "secrecy", 0.99)
        aux = sweep_attenuation(self.params, alphas, "secrecy-aux", 0.99)
        for p, a in zip(plain, aux):
            self.assertGreaterEqual(a.objective.nats_per_use, p.objective.nats_per_use * (1.0 - 1e-9))
            self.assertEqual(a.regime, "noise-limited")
            self.assertGreater(a.aux_a, 0.0)
            self.assertLessEqual(a.flip_1_to_0, 1e-6)

    def test_threshold_not_reached_in_bracket(self):
        self.assertIsNone(find_zero_threshold(self.params, 0.9, bracket=(0.0, 50.0)))

    def test_threshold_requires_secrecy_at_bracket_start(self):
        # Eve as close as Bob with the quieter detector
        with self.assertRaisesRegex(InfeasibleResultError, r"already below the floor"):
            find_zero_threshold(self.params, 1.0)
        with self.assertRaisesRegex(ValueError, r"Mode must be one of secrecy, secrecy-aux"):
            find_zero_threshold(self.params, 0.9, "capacity")
        with self.assertRaisesRegex(ValueError, r"Rate floor \(floor_bps\) must be positive."):
            find_zero_threshold(self.params, 0.9, floor_bps=0.0)

    def test_capacity_sweep_shape(self):
        rows = sweep_attenuation(self.params, [50.0, 55.0, 60.0, 80.0, 90.0, 100.0], "capacity", 0.9)
        rates = [row.objective.bits_per_second for row in rows]
        for rate in rates[1:3]:
            self.assertAlmostEqual(rate / rates[0], 1.0, delta=1e-3)
        for before, after in zip(rates[2:], rates[3:]):
            self.assertLess(after, before)
        self.assertTrue(all(row.boundary_active for row in rows))
        self.assertEqual(rows[0].regime, "loss-independent")
        self.assertEqual(rows[-1].regime, "noise-limited")

    def test_secrecy_sweep_keeps_received_photons(self):
        rows = sweep_attenuation(self.params, [70.0, 60.0, 65.0, 70.0], "secrecy", 0.9)
        self.assertEqual([row.attenuation_db for row in rows], [60.0, 65.0, 70.0])
        for row in rows[1:]:
            self.assertAlmostEqual(row.n_b_star / rows[0].n_b_star, 1.0, delta=1e-3)
            self.assertAlmostEqual(row.objective.bits_per_second / rows[0].objective.bits_per_second, 1.0, delta=1e-3)
            self.assertFalse(row.boundary_active)
        self.assertEqual(len(rows[0].csv_cells()), len(SWEEP_CSV_HEADER))
        self.assertEqual(rows[0].as_dict()["regime"], "loss-independent")

    def test_parallel_sweep_matches_warm_sweep(self):
        alphas = [70.0, 90.0]
        warm = sweep_attenuation(self.params, alphas, "secrecy", 0.9)
        cold = sweep_attenuation(self.params, alphas, "secrecy", 0.9, warm_start=False, workers=2)
        for w, c in zip(warm, cold):
            self.assertEqual(w.attenuation_db, c.attenuation_db)
            self.assertAlmostEqual(c.objective.bits_per_second / w.objective.bits_per_second, 1.0, delta=1e-4)

    def test_aux_sweep_rows_carry_flip_probabilities(self):
        rows = sweep_attenuation(self.params, [70.0], "secrecy-aux", 0.9)
        self.assertEqual(len(rows[0].csv_cells()), len(SWEEP_AUX_CSV_HEADER))
        self.assertIsNotNone(rows[0].aux_a)
        self.assertGreaterEqual(rows[0].flip_1_to_0, 0.0)

    def test_sweep_validation(self):
        with self.assertRaisesRegex(ValueError, r"At least one attenuation value is required."):
            sweep_attenuation(self.params, [], "secrecy", 0.9)
        with self.assertRaisesRegex(ValueError, r"Attenuation \(alpha_db\) must be nonnegative."):
            sweep_attenuation(self.params, [-1.0], "secrecy", 0.9)

    def test_regime_boundary(self):
        # the interior optimum n_B = 1.94 hits the budget near 78.5 dB
        boundary = regime_boundary(self.params, 0.9)
        self.assertGreater(boundary, 78.0)
        self.assertLess(boundary, 82.0)


if __name__ == "__main__":
    unittest.main()
