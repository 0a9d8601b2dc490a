import math
import unittest

from calculators.wiretap_codelength import (
    CODELENGTH_CSV_HEADER,
    bounds_at_length,
    length_for_target,
    length_table,
    required_length,
)
from calculators.wiretap_common import InfeasibleResultError


class TestWiretapCodeLength(unittest.TestCase):

    def test_bounds_at_length(self):
        bound = bounds_at_length(1.59e-4, 1.59e-4, 10_000)
        self.assertAlmostEqual(bound.eps_bound, 0.4078, places=3)
        self.assertEqual(bound.eps_bound, bound.delta_bound)
        self.assertLess(bounds_at_length(1.59e-4, 0.0, 135_000).eps_bound, 1e-9)
        # a zero exponent never improves on the trivial bound
        self.assertEqual(bounds_at_length(1.59e-4, 0.0, 135_000).delta_bound, 2.0)
        self.assertEqual(list(bound.as_dict()), list(CODELENGTH_CSV_HEADER))

    def test_balanced_required_length(self):
        self.assertEqual(required_length(1.59e-4, 1.59e-4, 1e-9, 1e-9), 134_695)
        n = required_length(1.59e-4, 1.59e-4, 1e-9, 1e-9)
        self.assertLessEqual(bounds_at_length(1.59e-4, 1.59e-4, n).eps_bound, 1e-9)
        self.assertGreater(bounds_at_length(1.59e-4, 1.59e-4, n - 1).eps_bound, 1e-9)

    def test_unbalanced_length_is_set_by_the_weaker_exponent(self):
        n = required_length(4.00e-4, 0.29e-4, 1e-9, 1e-9)
        self.assertGreater(n, 7e5)
        self.assertEqual(n, length_for_target(0.29e-4, 1e-9))
        self.assertGreater(n, required_length(1.59e-4, 1.59e-4, 1e-9, 1e-9) * 5)

    def test_length_for_target_edge_cases(self):
        self.assertEqual(length_for_target(1e-3, 2.0), 1)
        self.assertEqual(length_for_target(0.0, 3.0), 1)
        self.assertEqual(length_for_target(100.0, 1e-9), 1)
        self.assertEqual(length_for_target(math.log(2.0), 1.0), 1)
        with self.assertRaisesRegex(InfeasibleResultError, r"A zero exponent never brings the bound"):
            length_for_target(0.0, 1e-9, "eps")
        with self.assertRaisesRegex(ValueError, r"Bound target \(delta\) must be positive."):
            length_for_target(1e-3, 0.0, "delta")
        with self.assertRaisesRegex(InfeasibleResultError, r"delta"):
            required_length(1.59e-4, 0.0, 1e-9, 1e-9)

    def test_length_table(self):
        table = length_table(1.59e-4, 1.59e-4)
        self.assertEqual(len(table), 51)
        self.assertEqual(table[0].n, 100)
        self.assertEqual(table[-1].n, 10_000_000)
        lengths = [row.n for row in table]
        self.assertEqual(lengths, sorted(set(lengths)))
        eps = [row.eps_bound for row in table]
        for before, after in zip(eps, eps[1:]):
            self.assertLessEqual(after, before)
        self.assertLess(eps[30], eps[29])
        # the bound only becomes useful past about 10^4 uses
        self.assertGreater(table[20].eps_bound, 0.4)
        with self.assertRaisesRegex(ValueError, r"Largest code length \(n_max\) must be at least n_min"):
            length_table(1.59e-4, 1.59e-4, n_min=1e3, n_max=1e2)

    def test_bounds_validation(self):
        with self.assertRaisesRegex(ValueError, r"Code length \(n\) must be at least 1. Got: 0"):
            bounds_at_length(1e-4, 1e-4, 0)
        with self.assertRaisesRegex(ValueError, r"Error exponent \(F_c\) must be nonnegative."):
            bounds_at_length(-1e-4, 1e-4, 10)


if __name__ == "__main__":
    unittest.main()
