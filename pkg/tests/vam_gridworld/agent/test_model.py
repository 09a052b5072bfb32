import dataclasses
import shutil
import tempfile
import unittest
from pathlib import Path
import sys

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent / "src"))

from vam_gridworld.agent.config import ModelConfig
from vam_gridworld.agent.inputs import history_row
from vam_gridworld.agent.model import VamModel, assign_views_to_actions, parameter_specs
from vam_gridworld.common.config import to_plain
from vam_gridworld.common.errors import ConfigError, ContractError, DataError
from vam_gridworld.env.actions import ACTION_KINDS, NAVIGATION_KINDS, NUM_ACTIONS, ActionKind
from vam_gridworld.env.catalog import NUM_CATEGORIES
from vam_gridworld.env.instructions import load_vocabulary
from vam_gridworld.env.world import NUM_VIEWS, VIEW_NAMES
from vam_gridworld.harness.gradcheck_suite import random_group
from vam_gridworld.tensor.autodiff import backward
from vam_gridworld.tensor.checkpoint import save_checkpoint

NAV = len(NAVIGATION_KINDS)


def small_config(**changes) -> ModelConfig:
    config = ModelConfig(hidden=8, language_layers=1, cross_layers=1, vocab_size=len(load_vocabulary()),
                         history_window=3, max_positions=32, max_subgoal_steps=8)
    return dataclasses.replace(config, **changes)


class TestViewAssignment(unittest.TestCase):

    def test_every_action_has_a_view(self):
        assign = assign_views_to_actions()
        self.assertEqual(len(assign), NUM_ACTIONS)
        self.assertEqual(set(assign), set(range(NUM_VIEWS)))

    def test_turns_and_looks(self):
        assign = dict(zip(ACTION_KINDS, assign_views_to_actions()))
        self.assertEqual(VIEW_NAMES[assign[ActionKind.TURN_LEFT]], 'left')
        self.assertEqual(VIEW_NAMES[assign[ActionKind.TURN_RIGHT]], 'right')
        self.assertEqual(VIEW_NAMES[assign[ActionKind.LOOK_UP]], 'up')
        self.assertEqual(VIEW_NAMES[assign[ActionKind.LOOK_DOWN]], 'down')
        self.assertEqual(VIEW_NAMES[assign[ActionKind.MOVE_FORWARD]], 'front')
        self.assertEqual(VIEW_NAMES[assign[ActionKind.PICKUP]], 'front')
        self.assertEqual(VIEW_NAMES[assign[ActionKind.STOP]], 'front')


class TestForward(unittest.TestCase):

    def setUp(self):
        self.config = small_config()
        self.model = VamModel(self.config, seed=3)
        self.group = dataclasses.replace(random_group(np.random.default_rng(0), self.config, steps=3),
                                         token_ids=(4, 9, 17, 2, 30, 11))

    def test_shapes(self):
        out = self.model.forward(self.group)
        self.assertEqual(out.scores.M.shape, (3, NUM_ACTIONS))
        self.assertEqual(out.scores.gated.shape, (3, NUM_ACTIONS))
        self.assertEqual(out.object_logits.shape, (3, NUM_CATEGORIES))
        self.assertEqual(out.type_logits.shape, (3, 2))
        self.assertEqual(out.views.shape, (3 * NUM_VIEWS, self.config.hidden))
        np.testing.assert_allclose(out.action_distribution().data.sum(axis=1), 1.0)

    def test_deterministic(self):
        again = VamModel(self.config, seed=3).forward(self.group)
        np.testing.assert_array_equal(self.model.forward(self.group).scores.gated.data, again.scores.gated.data)

    def test_seed_changes_parameters(self):
        other = VamModel(self.config, seed=4)
        self.assertFalse(np.array_equal(other.params['match1.w'].data, self.model.params['match1.w'].data))

    def test_language_order_matters(self):
        shuffled = dataclasses.replace(self.group, token_ids=tuple(reversed(self.group.token_ids)))
        a = self.model.forward(self.group).scores.gated.data
        b = self.model.forward(shuffled).scores.gated.data
        self.assertFalse(np.allclose(a, b))

    def test_history_only_changes_its_own_step(self):
        history = self.group.history.copy()
        history[1] = history_row([ActionKind.PICKUP] * 3, self.config.history_window, NUM_ACTIONS)
        self.assertFalse(np.array_equal(history[1], self.group.history[1]))
        perturbed = dataclasses.replace(self.group, history=history)
        a = self.model.forward(self.group).scores.gated.data
        b = self.model.forward(perturbed).scores.gated.data
        self.assertFalse(np.allclose(a[1], b[1]))
        np.testing.assert_allclose(a[0], b[0])
        np.testing.assert_allclose(a[2], b[2])

    def test_gate_is_positive_and_shared_per_type(self):
        gate = self.model.forward(self.group).scores.gate.data
        self.assertTrue(np.all(gate > 0))
        for row in gate:
            self.assertTrue(np.allclose(row[:NAV], row[0]))
            self.assertTrue(np.allclose(row[NAV:], row[NAV]))

    def test_gate_override(self):
        scores = self.model.forward(self.group, gate_override=(1.0, 0.1)).scores
        np.testing.assert_allclose(scores.gate.data[:, :NAV], 1.0)
        np.testing.assert_allclose(scores.gate.data[:, NAV:], 0.1)
        np.testing.assert_allclose(scores.gated.data, scores.M.data * scores.gate.data)

    def test_bad_tokens(self):
        with self.assertRaises(ContractError):
            self.model.encode_language([])
        with self.assertRaises(ContractError):
            self.model.encode_language([self.config.vocab_size])
        with self.assertRaises(ContractError):
            self.model.encode_language([1] * (self.config.max_positions + 1))

    def test_unresolved_vocabulary(self):
        with self.assertRaises(ConfigError):
            VamModel(dataclasses.replace(self.config, vocab_size=0))


class TestRows(unittest.TestCase):

    def setUp(self):
        self.config = small_config()
        self.group = random_group(np.random.default_rng(1), self.config, steps=2)

    def test_gate_only_in_row_four(self):
        row3 = parameter_specs(self.config.for_row(3))
        row4 = parameter_specs(self.config.for_row(4))
        self.assertNotIn('gate.w', row3)
        self.assertEqual(set(row4) - set(row3), {'gate.w', 'gate.b'})
        for name, spec in row3.items():
            self.assertEqual(row4[name], spec)

    def test_shared_parameters_start_equal(self):
        row3 = VamModel(self.config.for_row(3), seed=0)
        row4 = VamModel(self.config.for_row(4), seed=0)
        for name in row3.params:
            np.testing.assert_array_equal(row3.params[name].data, row4.params[name].data)

    def test_row_three_has_unit_gate(self):
        out = VamModel(self.config.for_row(3)).forward(self.group)
        self.assertIsNone(out.type_logits)
        np.testing.assert_array_equal(out.scores.gate.data, 1.0)

    def test_row_four_with_unit_gate_reproduces_row_three(self):
        row3 = VamModel(self.config.for_row(3), seed=0).forward(self.group)
        row4 = VamModel(self.config.for_row(4), seed=0).forward(self.group, gate_override=(1.0, 1.0))
        np.testing.assert_array_equal(row4.scores.M.data, row3.scores.M.data)
        np.testing.assert_array_equal(row4.scores.gated.data, row3.scores.gated.data)
        np.testing.assert_array_equal(row4.object_logits.data, row3.object_logits.data)

    def test_row_one_ignores_side_views(self):
        model = VamModel(self.config.for_row(1), seed=0)
        views = self.group.views.copy()
        views[:, 1:, :] = 0.0
        front_only = dataclasses.replace(self.group, views=views)
        np.testing.assert_array_equal(model.forward(front_only).scores.gated.data,
                                      model.forward(self.group).scores.gated.data)
        views[:, 0, :] = 0.0
        blind = dataclasses.replace(self.group, views=views)
        self.assertFalse(np.array_equal(model.forward(blind).scores.gated.data,
                                        model.forward(self.group).scores.gated.data))

    def test_classifier_rows(self):
        f = self.config.feature_width
        d = self.config.hidden
        row1 = parameter_specs(self.config.for_row(1))
        row2 = parameter_specs(self.config.for_row(2))
        self.assertEqual(row1['fusion.w'][0], (f + d, d))
        self.assertEqual(row2['fusion.w'][0], (NUM_VIEWS * f + d, d))
        self.assertIn('classifier.w', row1)
        self.assertNotIn('action_embedding', row2)
        for row in (1, 2):
            out = VamModel(self.config.for_row(row)).forward(self.group)
            self.assertEqual(out.scores.gated.shape, (2, NUM_ACTIONS))
            self.assertEqual(out.views.shape, (2, d))


class TestTraining(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.config = small_config()
        self.model = VamModel(self.config, seed=0)
        self.group = dataclasses.replace(random_group(np.random.default_rng(2), self.config, steps=3),
                                         token_ids=(5, 6, 7))

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_gradient_reaches_word_embedding(self):
        self.model.zero_grad()
        loss = self.model.compute_loss([self.model.forward(self.group)], [self.group])
        backward(loss)
        grad = self.model.params['word_embedding'].grad
        self.assertIsNotNone(grad)
        self.assertTrue(np.any(grad[[5, 6, 7]] != 0))
        self.assertFalse(np.any(grad[8:]))
        for name, p in self.model.params.items():
            self.assertIsNotNone(p.grad, name)

    def test_every_parameter_group_gets_gradient(self):
        self.model.zero_grad()
        backward(self.model.compute_loss([self.model.forward(self.group)], [self.group]))
        groups = self.model.parameter_groups()
        for name in ('word_embedding', 'language', 'history', 'fusion', 'cross', 'action_embedding',
                     'match1', 'match2', 'gate', 'object_head'):
            self.assertIn(name, groups)
        for group, names in groups.items():
            moved = [n for n in names if np.any(self.model.params[n].grad != 0)]
            self.assertTrue(moved, f"no gradient reaches {group}")
        for part in ('gate.w', 'fusion.w', 'word_embedding'):
            self.assertTrue(np.any(self.model.params[part].grad != 0), part)

    def test_loss_needs_ground_truth(self):
        bare = dataclasses.replace(self.group, actions=(), object_categories=())
        with self.assertRaises(ContractError):
            self.model.compute_loss([self.model.forward(bare)], [bare])

    def test_save_and_load(self):
        stem = str(Path(self.temp_dir) / 'model')
        self.model.save(stem, {"epoch": 1})
        loaded = VamModel.load(stem)
        self.assertEqual(loaded.config, self.config)
        np.testing.assert_array_equal(loaded.forward(self.group).scores.gated.data,
                                      self.model.forward(self.group).scores.gated.data)

    def test_load_rejects_foreign_parameters(self):
        # A row-4 parameter set labelled as row 3 carries a stray gate layer
        stem = str(Path(self.temp_dir) / "relabelled")
        row4 = VamModel(self.config.for_row(4))
        save_checkpoint(row4.params, stem, {"model_config": to_plain(self.config.for_row(3)), "seed": 0})
        with self.assertRaises(DataError):
            VamModel.load(stem)


if __name__ == '__main__':
    unittest.main()
