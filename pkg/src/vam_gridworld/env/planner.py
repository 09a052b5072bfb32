"""Oracle planner: breadth-first navigation legs plus fixed manipulation macros."""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from vam_gridworld.common.errors import PlanningError
from vam_gridworld.env.actions import STOP, Action, ActionKind, NAVIGATION_KINDS
from vam_gridworld.env.task import Subgoal, TaskSpec, advance_pointer, goal_conditions_met
from vam_gridworld.env.world import AgentPose, ViewObservation, World, observe, pose_after, sight, step

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrajectoryStep:
    world_hash: str
    observation: ViewObservation
    action: Action
    subgoal_index: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    steps: Tuple[TrajectoryStep, ...]
    final_hash: str

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def actions(self) -> Tuple[Action, ...]:
        return tuple(s.action for s in self.steps)

    @property
    def subgoal_labels(self) -> Tuple[int, ...]:
        return tuple(s.subgoal_index for s in self.steps)

    def subgoal_start(self, subgoal_index: int) -> int:
        """First step whose label reaches ``subgoal_index``."""
        for t, label in enumerate(self.subgoal_labels):
            if label >= subgoal_index:
                return t
        return len(self.steps) - 1

    def subgoal_steps(self, subgoal_index: int) -> List[int]:
        return [t for t, label in enumerate(self.subgoal_labels) if label == subgoal_index]


def navigate(world: World, target_id: int) -> List[ActionKind]:
    """
    Shortest navigation leg after which ``target_id`` is reachable.

    Breadth-first over (cell, heading, pitch); successors expand in action
    order, so ties go to the lowest action index.

    Raises:
        PlanningError: If no pose reaches the target.
    """
    def reached(pose: AgentPose) -> bool:
        s = sight(world, pose)
        return s.distance == 1 and target_id in s.visible

    start = world.agent
    if reached(start):
        return []
    parents: Dict[AgentPose, Tuple[AgentPose, ActionKind]] = {}
    seen = {start}
    queue = deque([start])
    while queue:
        pose = queue.popleft()
        for kind in NAVIGATION_KINDS:
            nxt = pose_after(world, kind, pose)
            if nxt is None or nxt in seen:
                continue
            seen.add(nxt)
            parents[nxt] = (pose, kind)
            if reached(nxt):
                path = []
                while nxt != start:
                    nxt, k = parents[nxt]
                    path.append(k)
                return path[::-1]
            queue.append(nxt)
    raise PlanningError(f"Object {target_id} is not reachable from {start}")


def _with_appliance(world: World, appliance_id: int, inner: List[Action]) -> List[Action]:
    if world.object(appliance_id).traits.openable:
        return [Action(ActionKind.OPEN, appliance_id)] + inner + [Action(ActionKind.CLOSE, appliance_id)]
    return inner


def subgoal_macro(world: World, subgoal: Subgoal) -> List[Action]:
    """Ground-truth actions for one subgoal starting from ``world``."""
    kind = subgoal.subgoal_type
    t, r = subgoal.target, subgoal.receptacle
    if kind == 'GotoLocation':
        return [Action(k) for k in navigate(world, t)]
    if kind == 'PickupObject':
        return [Action(ActionKind.PICKUP, t)]
    if kind == 'PutObject':
        return _with_appliance(world, r, [Action(ActionKind.PUT, r)])
    if kind == 'SliceObject':
        return [Action(ActionKind.SLICE, t)]
    if kind == 'ToggleObject':
        return [Action(ActionKind.TOGGLE_ON, t)]
    if kind == 'CleanObject':
        return [Action(ActionKind.PUT, r), Action(ActionKind.TOGGLE_ON, r),
                Action(ActionKind.TOGGLE_OFF, r), Action(ActionKind.PICKUP, t)]
    if kind == 'HeatObject':
        if world.object(r).traits.openable:
            return [Action(ActionKind.OPEN, r), Action(ActionKind.PUT, r), Action(ActionKind.CLOSE, r),
                    Action(ActionKind.TOGGLE_ON, r), Action(ActionKind.TOGGLE_OFF, r),
                    Action(ActionKind.OPEN, r), Action(ActionKind.PICKUP, t), Action(ActionKind.CLOSE, r)]
        return [Action(ActionKind.PUT, r), Action(ActionKind.TOGGLE_ON, r),
                Action(ActionKind.TOGGLE_OFF, r), Action(ActionKind.PICKUP, t)]
    if kind == 'CoolObject':
        return [Action(ActionKind.OPEN, r), Action(ActionKind.PUT, r), Action(ActionKind.CLOSE, r),
                Action(ActionKind.OPEN, r), Action(ActionKind.PICKUP, t), Action(ActionKind.CLOSE, r)]
    raise PlanningError(f"No macro for subgoal type {kind}")


def replay(world: World, actions: Sequence[Action]) -> Tuple[List[World], List[bool]]:
    """Worlds before each action plus the final world, and each action's success."""
    worlds = [world]
    successes = []
    for action in actions:
        world, ok = step(world, action)
        worlds.append(world)
        successes.append(ok)
    return worlds, successes


def label_trajectory(world: World, task: TaskSpec, actions: Sequence[Action]) -> Trajectory:
    """Replay ``actions`` recording hashes, observations and instruction-pointer labels."""
    steps = []
    pointer = 0
    for action in actions:
        pointer = advance_pointer(world, task.subgoals, pointer)
        steps.append(TrajectoryStep(world.state_hash(), observe(world), action, pointer))
        world, _ = step(world, action)
    return Trajectory(tuple(steps), world.state_hash())


def plan_actions(world: World, task: TaskSpec) -> List[Action]:
    """
    Ground-truth action list ending in Stop.

    Raises:
        PlanningError: If a target is unreachable, a macro step fails, or the
            final world misses a goal condition.
    """
    met, total = goal_conditions_met(world, task)
    if met == total:
        return [STOP]

    actions: List[Action] = []
    current = world
    for index, subgoal in enumerate(task.subgoals):
        for action in subgoal_macro(current, subgoal):
            current, ok = step(current, action)
            if not ok:
                raise PlanningError(f"Subgoal {index} ({subgoal.subgoal_type}): {action} failed")
            actions.append(action)

    met, total = goal_conditions_met(current, task)
    if met != total:
        raise PlanningError(f"Plan ends with {met}/{total} goal conditions met")
    actions.append(STOP)
    return actions


def plan_oracle(world: World, task: TaskSpec) -> Trajectory:
    """Ground-truth trajectory for ``task``; replaying it meets every goal condition."""
    return label_trajectory(world, task, plan_actions(world, task))


def navigation_routes(task: TaskSpec, trajectory: Trajectory) -> List[Tuple[str, ...]]:
    """Per subgoal, the navigation action names the oracle spends on it (empty for non-goto)."""
    routes: List[Tuple[str, ...]] = []
    for index, subgoal in enumerate(task.subgoals):
        if subgoal.subgoal_type != 'GotoLocation':
            routes.append(())
            continue
        routes.append(tuple(
            trajectory.steps[t].action.kind.value
            for t in trajectory.subgoal_steps(index)
            if trajectory.steps[t].action.kind in NAVIGATION_KINDS
        ))
    return routes
