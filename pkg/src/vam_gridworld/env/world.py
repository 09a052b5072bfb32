"""
World state, the transition function, and five-view egocentric observations.

Coordinates are (x, y) with y growing southwards; ``grid[y][x]`` holds the
cell type. Headings index ``DELTAS``: 0=N, 1=E, 2=S, 3=W. Camera pitch is
-1 (down), 0 (level) or +1 (up); an object is visible only at the pitch
matching its level.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from vam_gridworld.common.errors import ContractError
from vam_gridworld.env.actions import Action, ActionKind, NAVIGATION_KINDS
from vam_gridworld.env.catalog import CATEGORY_INDEX, NUM_CATEGORIES, CategoryTraits, traits

FREE, WALL, FURNITURE = 0, 1, 2
HEADING_NAMES = ('N', 'E', 'S', 'W')
DELTAS = ((0, -1), (1, 0), (0, 1), (-1, 0))
PITCH_MIN, PITCH_MAX = -1, 1

VIEW_NAMES = ('front', 'left', 'right', 'up', 'down')
VIEW_ACTIONS = (None, ActionKind.TURN_LEFT, ActionKind.TURN_RIGHT, ActionKind.LOOK_UP, ActionKind.LOOK_DOWN)
NUM_VIEWS = len(VIEW_NAMES)

_FLAG_NAMES = ('open', 'toggled_on', 'heated', 'cooled', 'clean', 'sliced')
OBJECT_REGION_WIDTH = NUM_CATEGORIES + len(_FLAG_NAMES)
FEATURE_WIDTH = OBJECT_REGION_WIDTH + 3 + 3 + NUM_CATEGORIES

Cell = Tuple[int, int]


@dataclass(frozen=True)
class AgentPose:
    x: int
    y: int
    heading: int
    pitch: int = 0

    @property
    def cell(self) -> Cell:
        return (self.x, self.y)

    def ahead(self, distance: int = 1) -> Cell:
        dx, dy = DELTAS[self.heading]
        return (self.x + dx * distance, self.y + dy * distance)


@dataclass(frozen=True)
class ObjectState:
    object_id: int
    category: str
    position: Cell
    clean: bool = False
    heated: bool = False
    cooled: bool = False
    sliced: bool = False
    toggled_on: bool = False
    held: bool = False
    open: bool = False
    container: Optional[int] = None

    def __post_init__(self):
        if self.category not in CATEGORY_INDEX:
            raise ContractError(f"Unknown object category: {self.category!r}")
        if self.heated and self.cooled:
            raise ContractError(f"Object {self.object_id} cannot be heated and cooled at once")

    @property
    def traits(self) -> CategoryTraits:
        return traits(self.category)

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class World:
    seed: int
    layout_id: int
    archetype: str
    grid: Tuple[Tuple[int, ...], ...]
    objects: Tuple[ObjectState, ...]
    agent: AgentPose
    split_tag: str = 'train'

    def __post_init__(self):
        if self.cell_type(self.agent.cell) != FREE:
            raise ContractError(f"Agent cell {self.agent.cell} is not traversable")
        for i, obj in enumerate(self.objects):
            if obj.object_id != i:
                raise ContractError("Object ids must equal their index in the inventory")
            if obj.held and obj.position != self.agent.cell:
                raise ContractError(f"Held object {obj.object_id} is not at the agent's cell")

    @property
    def width(self) -> int:
        return len(self.grid[0])

    @property
    def height(self) -> int:
        return len(self.grid)

    def cell_type(self, cell: Cell) -> int:
        x, y = cell
        if 0 <= y < self.height and 0 <= x < self.width:
            return self.grid[y][x]
        return WALL

    def object(self, object_id: int) -> ObjectState:
        if not isinstance(object_id, (int, np.integer)) or not 0 <= object_id < len(self.objects):
            raise ContractError(f"Unknown object id: {object_id!r}")
        return self.objects[int(object_id)]

    def held_object(self) -> Optional[ObjectState]:
        for obj in self.objects:
            if obj.held:
                return obj
        return None

    def objects_at(self, cell: Cell) -> List[ObjectState]:
        return [o for o in self.objects if not o.held and o.position == cell]

    def find_category(self, category: str) -> Optional[ObjectState]:
        for obj in self.objects:
            if obj.category == category:
                return obj
        return None

    def contents(self, receptacle_id: int) -> List[ObjectState]:
        return [o for o in self.objects if o.container == receptacle_id and not o.held]

    def object_level(self, obj: ObjectState) -> Optional[int]:
        if obj.held:
            return None
        if obj.container is not None:
            return self.objects[obj.container].traits.level
        return obj.traits.level

    def state_dict(self) -> Dict:
        return {
            "agent": dataclasses.asdict(self.agent),
            "objects": [o.to_dict() for o in self.objects],
        }

    def state_hash(self) -> str:
        """Digest of the mutable state (pose and objects); the layout is fixed per world."""
        text = json.dumps(self.state_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    def with_state(self, agent: Optional[AgentPose] = None,
                   objects: Optional[Sequence[ObjectState]] = None) -> 'World':
        return dataclasses.replace(
            self,
            agent=self.agent if agent is None else agent,
            objects=self.objects if objects is None else tuple(objects),
        )


# visibility --------------------------------------------------------------------

@dataclass(frozen=True)
class Sight:
    visible: Tuple[int, ...]
    distance: int
    facing: int


def sight(world: World, pose: AgentPose) -> Sight:
    """
    What the camera sees from ``pose``: the facing cell and one beyond.

    The ray stops at the first wall or furniture cell. Objects on that cell
    are visible when their level matches the pitch; the contents of a closed
    openable receptacle are hidden.
    """
    facing = world.cell_type(pose.ahead(1))
    for distance in (1, 2):
        cell = pose.ahead(distance)
        kind = world.cell_type(cell)
        if kind == WALL:
            break
        if kind == FURNITURE:
            ids = []
            for obj in world.objects_at(cell):
                if world.object_level(obj) != pose.pitch:
                    continue
                if obj.container is not None:
                    holder = world.objects[obj.container]
                    if holder.traits.openable and not holder.open:
                        continue
                ids.append(obj.object_id)
            return Sight(tuple(sorted(ids)), distance if ids else 0, facing)
    return Sight((), 0, facing)


def reachable_ids(world: World) -> Tuple[int, ...]:
    """Objects the agent can manipulate: visible in the front view at distance one."""
    s = sight(world, world.agent)
    return s.visible if s.distance == 1 else ()


def pose_after(world: World, kind: ActionKind, pose: Optional[AgentPose] = None) -> Optional[AgentPose]:
    """Pose after a navigation action from ``pose`` (default: the agent's), or None if it would fail."""
    pose = world.agent if pose is None else pose
    if kind is ActionKind.MOVE_FORWARD:
        nx, ny = pose.ahead(1)
        if world.cell_type((nx, ny)) != FREE:
            return None
        return dataclasses.replace(pose, x=nx, y=ny)
    if kind is ActionKind.TURN_LEFT:
        return dataclasses.replace(pose, heading=(pose.heading - 1) % 4)
    if kind is ActionKind.TURN_RIGHT:
        return dataclasses.replace(pose, heading=(pose.heading + 1) % 4)
    if kind is ActionKind.LOOK_UP:
        return dataclasses.replace(pose, pitch=pose.pitch + 1) if pose.pitch < PITCH_MAX else None
    if kind is ActionKind.LOOK_DOWN:
        return dataclasses.replace(pose, pitch=pose.pitch - 1) if pose.pitch > PITCH_MIN else None
    raise ContractError(f"{kind.value} is not a navigation action")


# observation ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ViewObservation:
    """Five view feature vectors in ``VIEW_NAMES`` order, plus per-view visible ids."""

    features: np.ndarray
    visible: Tuple[Tuple[int, ...], ...]

    def view(self, name: str) -> np.ndarray:
        return self.features[VIEW_NAMES.index(name)]

    @property
    def front_visible(self) -> Tuple[int, ...]:
        return self.visible[0]

    def equals(self, other: 'ViewObservation') -> bool:
        return self.visible == other.visible and np.array_equal(self.features, other.features)


def view_features(world: World, pose: AgentPose) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    Synthetic feature vector for one view.

    Layout: category histogram of visible objects | state flags present
    among them | nearest-object distance one-hot (none, 1, 2) | facing cell
    one-hot (free, wall, furniture) | held-object category one-hot.
    """
    s = sight(world, pose)
    vec = np.zeros(FEATURE_WIDTH, dtype=np.float64)
    flags_at = NUM_CATEGORIES
    dist_at = flags_at + len(_FLAG_NAMES)
    facing_at = dist_at + 3
    held_at = facing_at + 3

    for object_id in s.visible:
        obj = world.objects[object_id]
        vec[CATEGORY_INDEX[obj.category]] += 1.0
        for j, flag in enumerate(_FLAG_NAMES):
            if getattr(obj, flag):
                vec[flags_at + j] = 1.0
    vec[dist_at + s.distance] = 1.0
    vec[facing_at + s.facing] = 1.0
    held = world.held_object()
    if held is not None:
        vec[held_at + CATEGORY_INDEX[held.category]] = 1.0
    return vec, s.visible


def observe(world: World) -> ViewObservation:
    """
    Front view plus the views the agent would see after TurnLeft, TurnRight,
    LookUp and LookDown. A look that would fail yields the front view again.
    The world is not modified.
    """
    rows = []
    visible = []
    for kind in VIEW_ACTIONS:
        pose = world.agent if kind is None else (pose_after(world, kind) or world.agent)
        vec, ids = view_features(world, pose)
        rows.append(vec)
        visible.append(ids)
    return ViewObservation(np.stack(rows), tuple(visible))


# transitions ---------------------------------------------------------------------

def _replace_objects(world: World, updates: Sequence[ObjectState]) -> Tuple[ObjectState, ...]:
    objects = list(world.objects)
    for obj in updates:
        objects[obj.object_id] = obj
    return tuple(objects)


def _pickup(world: World, target: ObjectState) -> Optional[List[ObjectState]]:
    if not target.traits.pickupable or target.held or world.held_object() is not None:
        return None
    return [dataclasses.replace(target, held=True, container=None, position=world.agent.cell)]


def _put(world: World, target: ObjectState) -> Optional[List[ObjectState]]:
    held = world.held_object()
    if held is None or not target.traits.surface:
        return None
    if target.traits.openable and not target.open:
        return None
    return [dataclasses.replace(held, held=False, container=target.object_id, position=target.position)]


def _open(world: World, target: ObjectState) -> Optional[List[ObjectState]]:
    if not target.traits.openable or target.open:
        return None
    return [dataclasses.replace(target, open=True)]


def _close(world: World, target: ObjectState) -> Optional[List[ObjectState]]:
    if not target.traits.openable or not target.open:
        return None
    updates = [dataclasses.replace(target, open=False)]
    if target.traits.role == 'cool':
        updates += [dataclasses.replace(o, cooled=True, heated=False) for o in world.contents(target.object_id)]
    return updates


def _toggle_on(world: World, target: ObjectState) -> Optional[List[ObjectState]]:
    if not target.traits.toggleable or target.toggled_on:
        return None
    if target.traits.openable and target.open:
        return None
    updates = [dataclasses.replace(target, toggled_on=True)]
    contents = world.contents(target.object_id)
    if target.traits.role == 'heat':
        updates += [dataclasses.replace(o, heated=True, cooled=False) for o in contents]
    elif target.traits.role == 'clean':
        updates += [dataclasses.replace(o, clean=True) for o in contents]
    return updates


def _toggle_off(world: World, target: ObjectState) -> Optional[List[ObjectState]]:
    if not target.traits.toggleable or not target.toggled_on:
        return None
    return [dataclasses.replace(target, toggled_on=False)]


def _slice(world: World, target: ObjectState) -> Optional[List[ObjectState]]:
    held = world.held_object()
    if not target.traits.sliceable or target.sliced or held is None or held.traits.role != 'slicer':
        return None
    return [dataclasses.replace(target, sliced=True)]


_MANIPULATIONS = {
    ActionKind.PICKUP: _pickup,
    ActionKind.PUT: _put,
    ActionKind.OPEN: _open,
    ActionKind.CLOSE: _close,
    ActionKind.TOGGLE_ON: _toggle_on,
    ActionKind.TOGGLE_OFF: _toggle_off,
    ActionKind.SLICE: _slice,
}


def step(world: World, action: Action) -> Tuple[World, bool]:
    """
    Apply ``action``; failed actions return the same world and ``False``.

    Raises:
        ContractError: If ``object_arg`` names an object not in the world.
    """
    target = world.object(action.object_arg) if action.object_arg is not None else None
    kind = action.kind

    if kind in NAVIGATION_KINDS:
        pose = pose_after(world, kind)
        if pose is None:
            return world, False
        objects = world.objects
        held = world.held_object()
        if held is not None and pose.cell != world.agent.cell:
            objects = _replace_objects(world, [dataclasses.replace(held, position=pose.cell)])
        return world.with_state(agent=pose, objects=objects), True

    if kind is ActionKind.STOP:
        return world, True

    if target is None or target.object_id not in reachable_ids(world):
        return world, False
    updates = _MANIPULATIONS[kind](world, target)
    if updates is None:
        return world, False
    return world.with_state(objects=_replace_objects(world, updates)), True
