import itertools
import unittest
from pathlib import Path
import sys

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent / "src"))

from vam_gridworld.common.errors import ConfigError, ContractError
from vam_gridworld.env.dataset import generate_split
from vam_gridworld.harness.config import load_run_config
from vam_gridworld.harness.gap_study import GapRow, average_ranks, gap_study, spearman, summarize_gap


def brute_force_ranks(values):
    """Rank of each value: 1 + number below + half the other ties."""
    return [1 + sum(v < x for v in values) + (sum(v == x for v in values) - 1) / 2 for x in values]


class TestRanks(unittest.TestCase):

    def test_ties_share_the_mean_position(self):
        np.testing.assert_array_equal(average_ranks([10, 20, 20, 30]), [1.0, 2.5, 2.5, 4.0])
        np.testing.assert_array_equal(average_ranks([5, 5, 5]), [2.0, 2.0, 2.0])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 5), min_size=1, max_size=12))
    def test_matches_brute_force(self, values):
        np.testing.assert_allclose(average_ranks(values), brute_force_ranks(values))


class TestSpearman(unittest.TestCase):

    def test_perfect_orders(self):
        self.assertEqual(spearman([1, 2, 3], [10, 20, 30]), 1.0)
        self.assertEqual(spearman([1, 2, 3], [3, 2, 1]), -1.0)

    def test_constant_column_is_zero(self):
        self.assertEqual(spearman([4, 4, 4], [1, 2, 3]), 0.0)

    def test_length_mismatch(self):
        with self.assertRaises(ContractError):
            spearman([1, 2], [1, 2, 3])

    def test_matches_pearson_on_ranks(self):
        for x in itertools.permutations([1.0, 2.0, 2.0, 5.0]):
            y = [3.0, 1.0, 4.0, 1.0]
            expected = np.corrcoef(brute_force_ranks(list(x)), brute_force_ranks(y))[0, 1]
            self.assertAlmostEqual(spearman(x, y), expected)


class TestSummary(unittest.TestCase):

    def test_hand_example(self):
        rows = [GapRow(2, 55.0, 45.0), GapRow(0, 50.0, 40.0), GapRow(1, 60.0, 30.0)]
        report = summarize_gap(rows)
        self.assertEqual([r.seed for r in report.rows], [0, 1, 2])
        self.assertEqual(report.selected_seed, 1)
        self.assertEqual(report.best_test_seed, 2)
        self.assertEqual(report.regret, 15.0)
        self.assertAlmostEqual(report.spearman, -0.5)
        self.assertAlmostEqual(report.valid_unseen_mean, 55.0)
        self.assertAlmostEqual(report.valid_unseen_std, 5.0)
        self.assertAlmostEqual(report.test_unseen_std, float(np.std([40.0, 30.0, 45.0], ddof=1)))

    def test_validation_ties_pick_lowest_seed(self):
        report = summarize_gap([GapRow(0, 50.0, 10.0), GapRow(1, 50.0, 30.0), GapRow(2, 40.0, 20.0)])
        self.assertEqual(report.selected_seed, 0)
        self.assertEqual(report.regret, 20.0)

    def test_to_dict(self):
        report = summarize_gap([GapRow(s, float(s), float(s)) for s in range(3)])
        data = report.to_dict()
        self.assertEqual(len(data["rows"]), 3)
        self.assertEqual(data["spearman"], 1.0)
        self.assertEqual(data["regret"], 0.0)


class TestGapStudy(unittest.TestCase):

    def setUp(self):
        self.config = load_run_config(overrides=[
            'model.hidden=4', 'model.language_layers=1', 'model.cross_layers=1',
            'train.epochs=1', 'train.batch_size=2',
        ])

    def test_needs_three_distinct_seeds(self):
        with self.assertRaises(ConfigError):
            gap_study(self.config, [], [], [], seeds=[0, 1])
        with self.assertRaises(ConfigError):
            gap_study(self.config, [], [], [], seeds=[0, 1, 1])

    def test_small_study(self):
        env = self.config.env
        report = gap_study(self.config, generate_split('train', 2, env), generate_split('valid_unseen', 2, env),
                           generate_split('test_unseen', 2, env), seeds=[0, 1, 2])
        self.assertEqual([r.seed for r in report.rows], [0, 1, 2])
        self.assertIn(report.selected_seed, (0, 1, 2))
        self.assertGreaterEqual(report.regret, 0.0)
        self.assertTrue(-1.0 <= report.spearman <= 1.0)


if __name__ == '__main__':
    unittest.main()
