import unittest
from pathlib import Path
import sys

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent / "src"))

from vam_gridworld.agent.inputs import NO_OBJECT, build_group, history_row, language_ids
from vam_gridworld.common.errors import ContractError
from vam_gridworld.env.actions import NUM_ACTIONS, STOP, Action, ActionKind
from vam_gridworld.env.instructions import load_vocabulary
from vam_gridworld.env.world import FEATURE_WIDTH, NUM_VIEWS, AgentPose, ObjectState, World, observe

GRID = ((1, 1, 1, 1), (1, 0, 2, 1), (1, 0, 0, 1), (1, 1, 1, 1))


class TestHistory(unittest.TestCase):

    def test_empty_history_is_all_null(self):
        row = history_row([], 2, NUM_ACTIONS).reshape(2, NUM_ACTIONS + 1)
        np.testing.assert_array_equal(row[:, NUM_ACTIONS], [1.0, 1.0])
        self.assertEqual(row.sum(), 2.0)

    def test_oldest_first_and_truncated(self):
        kinds = [ActionKind.PICKUP, ActionKind.TURN_LEFT, ActionKind.MOVE_FORWARD]
        row = history_row(kinds, 2, NUM_ACTIONS).reshape(2, NUM_ACTIONS + 1)
        self.assertEqual(int(np.argmax(row[0])), ActionKind.TURN_LEFT.index)
        self.assertEqual(int(np.argmax(row[1])), ActionKind.MOVE_FORWARD.index)


class TestBuildGroup(unittest.TestCase):

    def setUp(self):
        objects = (ObjectState(0, 'Counter', (2, 1)), ObjectState(1, 'Apple', (2, 1), container=0))
        self.world = World(0, 0, 'kitchen', GRID, objects, AgentPose(1, 1, heading=1))
        self.categories = (3, 7)

    def test_targets_become_indices(self):
        obs = observe(self.world)
        group = build_group([1, 2], [obs, obs], [[], [ActionKind.PICKUP]], [0, 1], self.categories,
                            window=2, num_actions=NUM_ACTIONS,
                            targets=[Action(ActionKind.PICKUP, 1), STOP])
        self.assertEqual(group.steps, 2)
        self.assertEqual(group.views.shape, (2, NUM_VIEWS, FEATURE_WIDTH))
        self.assertEqual(group.actions, (ActionKind.PICKUP.index, ActionKind.STOP.index))
        self.assertEqual(group.object_categories, (7, NO_OBJECT))
        self.assertEqual(group.action_types, (1, 1))
        self.assertEqual(group.visible[0], ((0, 3), (1, 7)))

    def test_mismatched_lengths(self):
        obs = observe(self.world)
        with self.assertRaises(ContractError):
            build_group([1], [obs, obs], [[]], [0, 1], self.categories, 2, NUM_ACTIONS)
        with self.assertRaises(ContractError):
            build_group([1], [obs], [[]], [0], self.categories, 2, NUM_ACTIONS, targets=[STOP, STOP])

    def test_foreign_target(self):
        obs = observe(self.world)
        with self.assertRaises(ContractError):
            build_group([1], [obs], [[]], [0], self.categories, 2, NUM_ACTIONS, targets=['Jump'])

    def test_language_ids(self):
        vocab = load_vocabulary()
        ids = language_ids(vocab, ['go', 'to'], ['the', 'apple'])
        self.assertEqual(vocab.decode(ids), ['go', 'to', '<sep>', 'the', 'apple'])


if __name__ == '__main__':
    unittest.main()
