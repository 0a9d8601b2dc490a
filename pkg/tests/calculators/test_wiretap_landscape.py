import unittest

import numpy as np

from calculators.wiretap_channel import objective_array
from calculators.wiretap_common import LinkGeometry, PhysicalParams
from calculators.wiretap_landscape import (
    AUX_GAIN_CSV_HEADER,
    aux_gain_profile,
    is_more_capable,
    objective_landscape,
)


class TestWiretapLandscape(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.params = PhysicalParams()
        cls.geom = LinkGeometry(attenuation_db=70.0, relative_transmittance=0.9)
        cls.qs = np.array([0.0, 0.1, 0.544, 1.0])
        cls.n_bs = np.array([0.01, 1.94, 100.0])
        cls.profile = aux_gain_profile(cls.params, 0.9, 1.94, [0.0, 0.2, 0.544, 0.8])

    def test_landscape_values(self):
        landscape = objective_landscape(self.params, self.geom, self.qs, self.n_bs)
        self.assertEqual(landscape.values.shape, (4, 3))
        expected = objective_array(self.params, self.geom, 0.544, 1.94 / self.geom.eta_bob)
        self.assertAlmostEqual(landscape.values[2, 1], float(expected), places=14)
        np.testing.assert_array_equal(landscape.values[0], np.zeros(3))

    def test_landscape_feasibility_boundary(self):
        landscape = objective_landscape(self.params, self.geom, self.qs, self.n_bs)
        self.assertTrue(landscape.feasible[2, 1])
        self.assertTrue(landscape.feasible[0].all())
        # q n_B h f0 / Delta > eta_y P at 100 received photons
        self.assertFalse(landscape.feasible[3, 2])
        self.assertFalse(landscape.feasible[1, 2])
        rows = landscape.rows()
        self.assertEqual(len(rows), 12)
        self.assertEqual(rows[7][:2], [0.544, 1.94])
        self.assertIsInstance(rows[7][3], bool)

    def test_capacity_landscape_dominates(self):
        capacity = objective_landscape(self.params, self.geom, self.qs, self.n_bs, mode="capacity")
        secrecy = objective_landscape(self.params, self.geom, self.qs, self.n_bs, mode="secrecy")
        self.assertTrue(np.all(capacity.values >= secrecy.values))
        with self.assertRaisesRegex(ValueError, r"Mode must be one of capacity, secrecy"):
            objective_landscape(self.params, self.geom, self.qs, self.n_bs, mode="secrecy-aux")

    def test_landscape_grid_validation(self):
        with self.assertRaisesRegex(ValueError, r"Grid value \(qs\) must lie in \[0, 1\]"):
            objective_landscape(self.params, self.geom, [0.5, 1.5], self.n_bs)
        with self.assertRaisesRegex(ValueError, r"Grid \(n_bs\) must be a non-empty sequence."):
            objective_landscape(self.params, self.geom, self.qs, [])

    def test_aux_gain_never_hurts(self):
        for point in self.profile:
            self.assertGreaterEqual(point.f_be_aux.nats_per_use, point.f_be.nats_per_use)
            self.assertGreaterEqual(point.f_be_aux.nats_per_use, 0.0)
            self.assertEqual(len(point.csv_cells()), len(AUX_GAIN_CSV_HEADER))

    def test_aux_gain_flips_off_pulses(self):
        at_optimum = self.profile[2]
        self.assertEqual(at_optimum.q, 0.544)
        self.assertGreater(at_optimum.f_be_aux.nats_per_use, at_optimum.f_be.nats_per_use)
        # a few off slots are lit to blind the quieter detector
        self.assertGreater(at_optimum.a_star, 0.0)
        self.assertAlmostEqual(at_optimum.as_dict()["flip_1_to_0"], 1.0 - at_optimum.b_star)

    def test_aux_gain_constant_input(self):
        silent = self.profile[0]
        self.assertEqual(silent.f_be.nats_per_use, 0.0)
        self.assertAlmostEqual(silent.f_be_aux.nats_per_use, 0.0, places=12)

    def test_more_capable(self):
        qs = np.concatenate([np.logspace(-6.0, -1.0, 11), np.linspace(0.2, 1.0, 5)])
        n_a = 1.94 / self.geom.eta_bob
        check = is_more_capable(self.params, self.geom, n_a, qs)
        # Eve's quieter detector wins for rare on-pulses
        self.assertFalse(check.more_capable)
        self.assertLess(check.min_margin_nats, 0.0)
        self.assertLess(check.q_at_min, 0.5)
        blind = is_more_capable(self.params, LinkGeometry(attenuation_db=70.0, relative_transmittance=0.0), n_a, qs)
        self.assertTrue(blind.more_capable)
        self.assertEqual(set(blind.as_dict()), {"more_capable", "min_margin_nats", "q_at_min"})


if __name__ == "__main__":
    unittest.main()
