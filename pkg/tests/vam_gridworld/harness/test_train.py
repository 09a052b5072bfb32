import json
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch
import sys

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent / "src"))

from vam_gridworld.common.errors import ContractError, TrainingError
from vam_gridworld.env.dataset import generate_split
from vam_gridworld.env.instructions import load_vocabulary
from vam_gridworld.harness.config import load_run_config
from vam_gridworld.harness.steps import episode_groups
from vam_gridworld.harness.train import NAN_DUMP, select_epoch, teacher_forced_accuracy, train
from vam_gridworld.tensor.autodiff import Tensor

TINY = ['model.hidden=8', 'model.language_layers=1', 'model.cross_layers=1', 'model.history_window=2',
        'train.epochs=2', 'train.batch_size=2']


class TestTrain(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.config = load_run_config(overrides=TINY)
        cls.episodes = generate_split('train', 3, cls.config.env)

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_loss_curve_and_checkpoints(self):
        result = train(self.config, self.episodes, self.temp_dir)
        # 3 episodes in batches of 2: two steps per epoch
        self.assertEqual([s for s, _ in result.loss_curve], [1, 2, 3, 4])
        self.assertTrue(all(np.isfinite(v) for _, v in result.loss_curve))
        self.assertEqual(len(result.epochs), 2)
        self.assertEqual(len(result.checkpoints), 2)
        for stem in result.checkpoints:
            self.assertTrue(Path(stem + '.json').exists())
            self.assertTrue(Path(stem + '.bin').exists())
        self.assertTrue((Path(self.temp_dir) / 'model.json').exists())
        self.assertTrue(Path(result.checkpoints[0]).name.startswith('epoch_001'))

    def test_same_seed_same_curve(self):
        a = train(self.config, self.episodes)
        b = train(self.config, self.episodes)
        self.assertEqual(a.loss_curve, b.loss_curve)
        for name, p in a.model.params.items():
            np.testing.assert_array_equal(p.data, b.model.params[name].data)

    def test_no_episodes(self):
        with self.assertRaises(ContractError):
            train(self.config, [])

    def test_select_epoch(self):
        result = train(self.config, self.episodes, self.temp_dir)
        valid = generate_split('valid_unseen', 2, self.config.env)
        best, rates = select_epoch(result.checkpoints, valid, self.config)
        self.assertEqual(len(rates), 2)
        self.assertIn(best, (0, 1))
        self.assertEqual(rates[best], max(rates))
        self.assertTrue(all(0.0 <= r <= 100.0 for r in rates))

    def test_non_finite_loss_dumps_batch(self):
        nan = Tensor(np.array(np.nan), requires_grad=True)
        with patch('vam_gridworld.harness.train.VamModel.compute_loss', return_value=nan):
            with self.assertRaises(TrainingError):
                train(self.config, self.episodes, self.temp_dir)
        dump = json.loads((Path(self.temp_dir) / NAN_DUMP).read_text())
        self.assertEqual(dump["epoch"], 1)
        self.assertEqual(dump["step"], 1)
        self.assertEqual(len(dump["episodes"]), 2)
        self.assertEqual({e["split"] for e in dump["episodes"]}, {"train"})


class TestOverfit(unittest.TestCase):
    """A small model memorises a single demonstration."""

    def test_single_episode(self):
        config = load_run_config(overrides=[
            'model.hidden=16', 'model.language_layers=1', 'model.cross_layers=1',
            'train.epochs=500', 'train.batch_size=1', 'train.learning_rate=0.003', 'train.weight_decay=0.0',
        ])
        episode = min(generate_split('train', 5, config.env), key=lambda e: e.oracle_length)
        result = train(config, [episode])
        groups = episode_groups(episode, load_vocabulary(), config.model)
        loss, accuracy = teacher_forced_accuracy(result.model, groups)
        self.assertEqual(accuracy, 1.0)
        self.assertLess(loss, 0.05)


if __name__ == '__main__':
    unittest.main()
