import unittest
from pathlib import Path
import sys

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent / "src"))

from vam_gridworld.common.errors import ContractError
from vam_gridworld.env.actions import STOP, Action, ActionKind, NAVIGATION_KINDS
from vam_gridworld.env.config import EnvConfig, split_config
from vam_gridworld.env.generator import generate_episode
from vam_gridworld.env.world import (FEATURE_WIDTH, FREE, NUM_VIEWS, PITCH_MAX, PITCH_MIN, VIEW_NAMES, AgentPose,
                                     ObjectState, World, observe, reachable_ids, sight, step)

# 5x5 room, walls around, a counter at (3, 1) holding an apple.
GRID = (
    (1, 1, 1, 1, 1),
    (1, 0, 0, 2, 1),
    (1, 0, 0, 0, 1),
    (1, 0, 0, 0, 1),
    (1, 1, 1, 1, 1),
)


def kitchen_world(agent: AgentPose = AgentPose(2, 1, heading=1)) -> World:
    objects = (
        ObjectState(0, 'Counter', (3, 1)),
        ObjectState(1, 'Apple', (3, 1), container=0),
        ObjectState(2, 'Knife', (3, 1), container=0),
    )
    return World(seed=0, layout_id=0, archetype='kitchen', grid=GRID, objects=objects, agent=agent)


class TestWorldInvariants(unittest.TestCase):

    def test_agent_must_stand_on_free_cell(self):
        with self.assertRaises(ContractError):
            kitchen_world(AgentPose(0, 0, heading=0))

    def test_object_ids_follow_inventory_order(self):
        with self.assertRaises(ContractError):
            World(0, 0, 'kitchen', GRID, (ObjectState(1, 'Counter', (3, 1)),), AgentPose(1, 1, 0))

    def test_unknown_category(self):
        with self.assertRaises(ContractError):
            ObjectState(0, 'Dragon', (1, 1))

    def test_heated_and_cooled_exclusive(self):
        with self.assertRaises(ContractError):
            ObjectState(0, 'Apple', (1, 1), heated=True, cooled=True)


class TestStep(unittest.TestCase):

    def test_turn_left_four_times(self):
        world = kitchen_world()
        turned = world
        for _ in range(4):
            turned, ok = step(turned, Action(ActionKind.TURN_LEFT))
            self.assertTrue(ok)
        self.assertEqual(turned.agent, world.agent)
        self.assertEqual(turned.state_hash(), world.state_hash())

    def test_blocked_move(self):
        world = kitchen_world()
        after, ok = step(world, Action(ActionKind.MOVE_FORWARD))
        self.assertFalse(ok)
        self.assertEqual(after.state_hash(), world.state_hash())

    def test_move_into_free_cell(self):
        world = kitchen_world(AgentPose(1, 2, heading=2))
        after, ok = step(world, Action(ActionKind.MOVE_FORWARD))
        self.assertTrue(ok)
        self.assertEqual(after.agent.cell, (1, 3))

    def test_pitch_is_bounded(self):
        world, ok = step(kitchen_world(), Action(ActionKind.LOOK_UP))
        self.assertTrue(ok)
        _, ok = step(world, Action(ActionKind.LOOK_UP))
        self.assertFalse(ok)

    def test_pickup_reachable_object(self):
        world = kitchen_world()
        self.assertEqual(reachable_ids(world), (0, 1, 2))
        after, ok = step(world, Action(ActionKind.PICKUP, 1))
        self.assertTrue(ok)
        self.assertTrue(after.object(1).held)
        self.assertIsNone(after.object(1).container)
        # One hand only
        _, ok = step(after, Action(ActionKind.PICKUP, 2))
        self.assertFalse(ok)

    def test_held_object_moves_with_agent(self):
        world, _ = step(kitchen_world(), Action(ActionKind.PICKUP, 1))
        world, _ = step(world, Action(ActionKind.TURN_RIGHT))
        world, ok = step(world, Action(ActionKind.MOVE_FORWARD))
        self.assertTrue(ok)
        self.assertEqual(world.object(1).position, world.agent.cell)

    def test_pickup_out_of_reach_fails(self):
        world = kitchen_world(AgentPose(1, 3, heading=0))
        after, ok = step(world, Action(ActionKind.PICKUP, 1))
        self.assertFalse(ok)
        self.assertEqual(after.state_hash(), world.state_hash())

    def test_slice_needs_knife(self):
        world = kitchen_world()
        _, ok = step(world, Action(ActionKind.SLICE, 1))
        self.assertFalse(ok)
        world, _ = step(world, Action(ActionKind.PICKUP, 2))
        world, ok = step(world, Action(ActionKind.SLICE, 1))
        self.assertTrue(ok)
        self.assertTrue(world.object(1).sliced)

    def test_put_back(self):
        world, _ = step(kitchen_world(), Action(ActionKind.PICKUP, 1))
        world, ok = step(world, Action(ActionKind.PUT, 0))
        self.assertTrue(ok)
        self.assertFalse(world.object(1).held)
        self.assertEqual(world.object(1).container, 0)

    def test_stop_is_a_no_op(self):
        world = kitchen_world()
        after, ok = step(world, STOP)
        self.assertTrue(ok)
        self.assertIs(after, world)

    def test_unknown_object_id(self):
        with self.assertRaises(ContractError):
            step(kitchen_world(), Action(ActionKind.PICKUP, 99))

    def test_navigation_cannot_take_object(self):
        with self.assertRaises(ContractError):
            Action(ActionKind.MOVE_FORWARD, 1)


class TestObserve(unittest.TestCase):

    def test_shape(self):
        obs = observe(kitchen_world())
        self.assertEqual(obs.features.shape, (NUM_VIEWS, FEATURE_WIDTH))
        self.assertEqual(obs.front_visible, (0, 1, 2))

    def test_walled_pocket_views_are_identical(self):
        grid = ((1, 1, 1), (1, 0, 1), (1, 1, 1))
        world = World(0, 0, 'bedroom', grid, (), AgentPose(1, 1, heading=0))
        obs = observe(world)
        for i in range(1, NUM_VIEWS):
            np.testing.assert_array_equal(obs.features[i], obs.features[0])

    def test_object_visible_only_at_its_level(self):
        world, _ = step(kitchen_world(), Action(ActionKind.LOOK_DOWN))
        self.assertEqual(sight(world, world.agent).visible, ())
        self.assertEqual(observe(kitchen_world()).visible[4], ())

    def test_observe_does_not_change_world(self):
        world = kitchen_world()
        before = world.state_hash()
        observe(world)
        self.assertEqual(world.state_hash(), before)


class TestViewConsistency(unittest.TestCase):
    """Side views predict what the agent sees after the matching navigation action"""

    env_config = EnvConfig()

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 400), st.lists(st.sampled_from(NAVIGATION_KINDS), max_size=6))
    def test_side_views_match_turned_front(self, seed, walk):
        world = generate_episode(seed, split_config('train', self.env_config), self.env_config).world
        for kind in walk:
            world, _ = step(world, Action(kind))
        obs = observe(world)
        left = observe(step(world, Action(ActionKind.TURN_LEFT))[0])
        right = observe(step(world, Action(ActionKind.TURN_RIGHT))[0])
        np.testing.assert_array_equal(obs.view('left'), left.view('front'))
        np.testing.assert_array_equal(obs.view('right'), right.view('front'))
        np.testing.assert_array_equal(left.view('right'), obs.view('front'))
        for name, kind in (('up', ActionKind.LOOK_UP), ('down', ActionKind.LOOK_DOWN)):
            looked, ok = step(world, Action(kind))
            expected = observe(looked).view('front') if ok else obs.view('front')
            np.testing.assert_array_equal(obs.view(name), expected)

    def test_five_hundred_random_poses(self):
        rng = np.random.default_rng(0)
        split = split_config('train', self.env_config)
        worlds = [generate_episode(seed, split, self.env_config).world for seed in range(10)]
        turns = (('left', ActionKind.TURN_LEFT), ('right', ActionKind.TURN_RIGHT),
                 ('up', ActionKind.LOOK_UP), ('down', ActionKind.LOOK_DOWN))
        for i in range(500):
            base = worlds[i % len(worlds)]
            free = [(x, y) for y in range(base.height) for x in range(base.width) if base.cell_type((x, y)) == FREE]
            x, y = free[int(rng.integers(len(free)))]
            pose = AgentPose(x, y, heading=int(rng.integers(4)), pitch=int(rng.integers(PITCH_MIN, PITCH_MAX + 1)))
            world = base.with_state(agent=pose)
            obs = observe(world)
            for name, kind in turns:
                moved, ok = step(world, Action(kind))
                expected = observe(moved) if ok else obs
                np.testing.assert_array_equal(obs.view(name), expected.view('front'), f"pose {pose} view {name}")
                self.assertEqual(obs.visible[VIEW_NAMES.index(name)], expected.front_visible)


if __name__ == '__main__':
    unittest.main()
