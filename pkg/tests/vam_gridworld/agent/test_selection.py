import unittest
from pathlib import Path
import sys

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent / "src"))

from vam_gridworld.agent.selection import apply_gate, argmax_lowest, select_action, select_object
from vam_gridworld.common.errors import ContractError
from vam_gridworld.env.actions import ACTION_KINDS, NAVIGATION_KINDS, NUM_ACTIONS, STOP, Action, ActionKind

TYPES = [int(k not in NAVIGATION_KINDS) for k in ACTION_KINDS]


class TestGate(unittest.TestCase):

    def test_hand_example(self):
        gated = apply_gate([0.5, 0.9, 0.8], (1.0, 0.1), [0, 0, 1])
        np.testing.assert_allclose(gated, [0.5, 0.9, 0.08])
        self.assertEqual(argmax_lowest(gated), 1)

        scores = np.full(NUM_ACTIONS, -10.0)
        scores[ActionKind.MOVE_FORWARD.index] = 0.5
        scores[ActionKind.TURN_LEFT.index] = 0.9
        scores[ActionKind.PICKUP.index] = 0.8
        action = select_action(apply_gate(scores, (1.0, 0.1), TYPES), visible=[(4, 2)])
        self.assertEqual(action, Action(ActionKind.TURN_LEFT))

    def test_gate_must_be_positive(self):
        with self.assertRaises(ContractError):
            apply_gate([1.0, 2.0], (1.0, 0.0), [0, 1])

    def test_within_type_argmax_is_invariant(self):
        rng = np.random.default_rng(0)
        nav = np.array([t == 0 for t in TYPES])
        for _ in range(1000):
            scores = rng.normal(size=NUM_ACTIONS)
            gate = np.exp(rng.uniform(-3.0, 3.0, size=2))
            gated = apply_gate(scores, gate, TYPES)
            for mask in (nav, ~nav):
                self.assertEqual(argmax_lowest(gated[mask]), argmax_lowest(scores[mask]))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=NUM_ACTIONS, max_size=NUM_ACTIONS))
    def test_uniform_gate_is_identity(self, scores):
        gated = apply_gate(scores, (1.0, 1.0), TYPES)
        self.assertEqual(argmax_lowest(gated), argmax_lowest(scores))
        self.assertEqual(select_action(gated, []), select_action(scores, []))


class TestSelection(unittest.TestCase):

    def test_argmax_ties_pick_lowest(self):
        self.assertEqual(argmax_lowest([1.0, 3.0, 3.0]), 1)
        with self.assertRaises(ContractError):
            argmax_lowest([])

    def test_stop_and_navigation_take_no_object(self):
        scores = np.zeros(NUM_ACTIONS)
        scores[ActionKind.STOP.index] = 1.0
        self.assertEqual(select_action(scores, [(1, 0)]), STOP)
        scores[ActionKind.LOOK_DOWN.index] = 2.0
        self.assertEqual(select_action(scores, [(1, 0)]).object_arg, None)

    def test_object_by_category_score(self):
        category_scores = [0.1, 0.7, 0.3]
        self.assertEqual(select_object(category_scores, [(5, 0), (8, 1), (2, 2)]), 8)

    def test_object_ties_pick_lowest_id(self):
        self.assertEqual(select_object([0.5, 0.5], [(6, 0), (3, 1), (9, 1)]), 3)

    def test_nothing_visible(self):
        self.assertIsNone(select_object([1.0], []))
        scores = np.zeros(NUM_ACTIONS)
        scores[ActionKind.OPEN.index] = 1.0
        self.assertEqual(select_action(scores, []), Action(ActionKind.OPEN))

    def test_manipulation_without_category_scores(self):
        scores = np.zeros(NUM_ACTIONS)
        scores[ActionKind.PICKUP.index] = 1.0
        self.assertEqual(select_action(scores, [(7, 0), (4, 3)]), Action(ActionKind.PICKUP, 4))
        self.assertEqual(select_action(scores, [(7, 0), (4, 3)], [0.0] * 4), Action(ActionKind.PICKUP, 4))


if __name__ == '__main__':
    unittest.main()
