"""
Procedural episodes: room layouts, object placement, task sampling.

The layout of a room depends only on its layout id, so seen splits share
furniture arrangements with training while objects, agent start and task
are redrawn per episode seed.
"""

import functools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from vam_gridworld.common.errors import GenerationError, PlanningError
from vam_gridworld.env.catalog import ARCHETYPES, Archetype, is_place_target, is_start_surface
from vam_gridworld.env.config import EnvConfig, SplitConfig
from vam_gridworld.env.instructions import render_instructions
from vam_gridworld.env.planner import Trajectory, navigation_routes, plan_oracle
from vam_gridworld.env.task import GOAL_CONDITIONS_PER_TASK, GoalCondition, Subgoal, TaskSpec, goal_conditions_met
from vam_gridworld.env.world import DELTAS, FREE, FURNITURE, WALL, AgentPose, ObjectState, World

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

TASK_TYPES = (
    'pick_and_place', 'pick_heat_place', 'pick_cool_place',
    'pick_clean_place', 'slice_and_place', 'look_at_in_light',
)


@dataclass(frozen=True, eq=False)
class Episode:
    """One generated episode: initial world, task with instructions, oracle trajectory."""

    seed: int
    split: str
    world: World
    task: TaskSpec
    trajectory: Trajectory

    @property
    def oracle_length(self) -> int:
        return len(self.trajectory)


@dataclass(frozen=True)
class Layout:
    archetype: Archetype
    grid: Tuple[Tuple[int, ...], ...]
    furniture_cells: Tuple[Cell, ...]

    def free_cells(self) -> List[Cell]:
        return [(x, y) for y, row in enumerate(self.grid) for x, kind in enumerate(row) if kind == FREE]


def _neighbours(cell: Cell) -> List[Cell]:
    return [(cell[0] + dx, cell[1] + dy) for dx, dy in DELTAS]


def _free_connected(grid: List[List[int]]) -> bool:
    free = [(x, y) for y, row in enumerate(grid) for x, kind in enumerate(row) if kind == FREE]
    if not free:
        return False
    seen = {free[0]}
    queue = deque([free[0]])
    while queue:
        for nx, ny in _neighbours(queue.popleft()):
            if (nx, ny) not in seen and grid[ny][nx] == FREE:
                seen.add((nx, ny))
                queue.append((nx, ny))
    return len(seen) == len(free)


def _has_free_neighbour(grid: List[List[int]], cell: Cell) -> bool:
    return any(grid[y][x] == FREE for x, y in _neighbours(cell))


@functools.lru_cache(maxsize=256)
def build_layout(layout_id: int, grid_size: int) -> Layout:
    """
    Room for ``layout_id``: walled border, archetype furniture on interior cells.

    Free cells stay 4-connected and every furniture cell keeps a free
    neighbour, so each piece can be faced from somewhere.

    Raises:
        GenerationError: If the furniture cannot be placed.
    """
    archetype = ARCHETYPES[layout_id % len(ARCHETYPES)]
    rng = np.random.default_rng(layout_id)
    grid = [[WALL if x in (0, grid_size - 1) or y in (0, grid_size - 1) else FREE
             for x in range(grid_size)] for y in range(grid_size)]
    interior = [(x, y) for y in range(1, grid_size - 1) for x in range(1, grid_size - 1)]

    cells: List[Cell] = []
    for name in archetype.furniture:
        placed = False
        for i in rng.permutation(len(interior)):
            x, y = interior[i]
            if grid[y][x] != FREE:
                continue
            grid[y][x] = FURNITURE
            if _free_connected(grid) and all(_has_free_neighbour(grid, c) for c in cells + [(x, y)]):
                cells.append((x, y))
                placed = True
                break
            grid[y][x] = FREE
        if not placed:
            raise GenerationError(f"Layout {layout_id}: no room for {name} on a {grid_size}x{grid_size} grid")
    return Layout(archetype, tuple(tuple(row) for row in grid), tuple(cells))


def _choice(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


def _place_objects(rng: np.random.Generator, layout: Layout, small: Sequence[str]) -> List[ObjectState]:
    objects = [ObjectState(i, name, cell)
               for i, (name, cell) in enumerate(zip(layout.archetype.furniture, layout.furniture_cells))]
    surfaces = [o for o in objects if is_start_surface(o.category)]
    for name in small:
        holder = _choice(rng, surfaces)
        objects.append(ObjectState(len(objects), name, holder.position, container=holder.object_id))
    return objects


def _required_small(task_type: str) -> Tuple[str, ...]:
    return ('Knife',) if task_type == 'slice_and_place' else ()


def _furniture_with(objects: Sequence[ObjectState], role: str) -> List[ObjectState]:
    return [o for o in objects if o.traits.role == role and not o.traits.pickupable]


def _sample_task(rng: np.random.Generator, task_type: str, objects: Sequence[ObjectState]) -> Optional[TaskSpec]:
    """Subgoals and goal conditions for ``task_type``, or None if the room cannot host it."""
    small = [o for o in objects if o.traits.pickupable and o.traits.role != 'slicer']
    places = [o for o in objects if is_place_target(o.category)]

    def pick(candidates):
        return _choice(rng, candidates) if candidates else None

    def place_for(obj):
        return pick([p for p in places if p.object_id != obj.container])

    if task_type == 'pick_and_place':
        obj = pick(small)
        place = obj and place_for(obj)
        if place is None:
            return None
        o, r = obj.object_id, place.object_id
        subgoals = [Subgoal('GotoLocation', o), Subgoal('PickupObject', o),
                    Subgoal('GotoLocation', r), Subgoal('PutObject', o, r)]
        goals = [GoalCondition('out_of', o, obj.container), GoalCondition('in', o, r)]

    elif task_type in ('pick_heat_place', 'pick_cool_place', 'pick_clean_place'):
        flag, role, subgoal_type = {
            'pick_heat_place': ('heatable', 'heat', 'HeatObject'),
            'pick_cool_place': ('coolable', 'cool', 'CoolObject'),
            'pick_clean_place': ('cleanable', 'clean', 'CleanObject'),
        }[task_type]
        obj = pick([o for o in small if getattr(o.traits, flag)])
        appliance = pick(_furniture_with(objects, role))
        place = obj and place_for(obj)
        if obj is None or appliance is None or place is None:
            return None
        o, a, r = obj.object_id, appliance.object_id, place.object_id
        predicate = {'heat': 'heated', 'cool': 'cooled', 'clean': 'clean'}[role]
        subgoals = [Subgoal('GotoLocation', o), Subgoal('PickupObject', o),
                    Subgoal('GotoLocation', a), Subgoal(subgoal_type, o, a),
                    Subgoal('GotoLocation', r), Subgoal('PutObject', o, r)]
        goals = [GoalCondition(predicate, o), GoalCondition('in', o, r)]

    elif task_type == 'slice_and_place':
        knife = pick([o for o in objects if o.traits.role == 'slicer'])
        obj = pick([o for o in small if o.traits.sliceable])
        place = knife and place_for(knife)
        if knife is None or obj is None or place is None:
            return None
        k, o, r = knife.object_id, obj.object_id, place.object_id
        subgoals = [Subgoal('GotoLocation', k), Subgoal('PickupObject', k),
                    Subgoal('GotoLocation', o), Subgoal('SliceObject', o),
                    Subgoal('GotoLocation', r), Subgoal('PutObject', k, r)]
        goals = [GoalCondition('sliced', o), GoalCondition('in', k, r)]

    elif task_type == 'look_at_in_light':
        obj = pick(small)
        lamp = pick(_furniture_with(objects, 'light'))
        if obj is None or lamp is None:
            return None
        o, lid = obj.object_id, lamp.object_id
        subgoals = [Subgoal('GotoLocation', o), Subgoal('PickupObject', o),
                    Subgoal('GotoLocation', lid), Subgoal('ToggleObject', lid)]
        goals = [GoalCondition('held', o), GoalCondition('toggled_on', lid)]

    else:
        raise GenerationError(f"Unknown task type: {task_type!r}")

    if len(goals) != GOAL_CONDITIONS_PER_TASK:
        raise GenerationError(f"{task_type} produced {len(goals)} goal conditions, expected {GOAL_CONDITIONS_PER_TASK}")
    return TaskSpec(task_type, tuple(subgoals), tuple(goals))


def _sample_episode(rng: np.random.Generator, seed: int, split: SplitConfig, env_config: EnvConfig):
    layout_id = int(rng.integers(*split.layout_pool))
    layout = build_layout(layout_id, env_config.grid_size)
    archetype = layout.archetype
    task_type = _choice(rng, archetype.tasks)

    furniture_count = len(archetype.furniture)
    total = int(rng.integers(env_config.min_objects, env_config.max_objects + 1))
    small_count = max(1, min(total - furniture_count, len(archetype.small)))
    required = [name for name in _required_small(task_type) if name in archetype.small]
    rest = [name for name in archetype.small if name not in required]
    drawn = [rest[i] for i in rng.permutation(len(rest))[:max(0, small_count - len(required))]]
    objects = _place_objects(rng, layout, required + drawn)

    free = layout.free_cells()
    x, y = _choice(rng, free)
    agent = AgentPose(x, y, heading=int(rng.integers(4)), pitch=0)
    world = World(seed, layout_id, archetype.name, layout.grid, tuple(objects), agent, split.name)

    task = _sample_task(rng, task_type, objects)
    return world, task


def generate_episode(seed: int, split: SplitConfig, env_config: EnvConfig) -> Episode:
    """
    Sample a solvable episode for ``(seed, split)``.

    Unsolvable or already-satisfied draws are resampled from the same
    generator, so the result stays a pure function of its inputs.

    Raises:
        GenerationError: If ``max_generation_retries`` draws all fail.
    """
    rng = np.random.default_rng([split.index, seed])
    for attempt in range(env_config.max_generation_retries):
        world, task = _sample_episode(rng, seed, split, env_config)
        if task is None:
            logger.debug("seed %d/%s attempt %d: room cannot host the task", seed, split.name, attempt)
            continue
        met, total = goal_conditions_met(world, task)
        if met == total:
            logger.debug("seed %d/%s attempt %d: task satisfied at start", seed, split.name, attempt)
            continue
        try:
            trajectory = plan_oracle(world, task)
        except PlanningError as e:
            logger.debug("seed %d/%s attempt %d: %s", seed, split.name, attempt, e)
            continue
        task = task.with_routes(navigation_routes(task, trajectory))
        goal, steps = render_instructions(task, world, seed)
        task = task.with_instructions(goal, steps)
        return Episode(seed, split.name, world, task, trajectory)
    raise GenerationError(
        f"No solvable episode for seed {seed} in {split.name} after {env_config.max_generation_retries} attempts"
    )


def generate_world(seed: int, split: SplitConfig, env_config: EnvConfig) -> Tuple[World, TaskSpec]:
    """Initial world and its rendered task for ``(seed, split)``."""
    episode = generate_episode(seed, split, env_config)
    return episode.world, episode.task


def layout_pool_ids(splits: Sequence[SplitConfig]) -> Dict[str, frozenset]:
    return {s.name: frozenset(s.layout_ids()) for s in splits}
