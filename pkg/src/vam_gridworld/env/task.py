"""Tasks: typed subgoals, goal-condition predicates, and subgoal progress."""

from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

from vam_gridworld.common.errors import ContractError
from vam_gridworld.env.world import World, reachable_ids

SUBGOAL_TYPES = (
    'GotoLocation', 'PickupObject', 'PutObject', 'CleanObject',
    'HeatObject', 'CoolObject', 'SliceObject', 'ToggleObject',
)

PREDICATES = ('clean', 'heated', 'cooled', 'sliced', 'toggled_on', 'held', 'in', 'out_of', 'reachable')

# Generated tasks all carry this many conditions; pooled GC >= SR depends on it.
GOAL_CONDITIONS_PER_TASK = 2


@dataclass(frozen=True)
class Subgoal:
    subgoal_type: str
    target: int
    receptacle: Optional[int] = None
    route: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.subgoal_type not in SUBGOAL_TYPES:
            raise ContractError(f"Unknown subgoal type: {self.subgoal_type!r}")

    def to_dict(self) -> Dict:
        return {
            "type": self.subgoal_type,
            "target": self.target,
            "receptacle": self.receptacle,
            "route": list(self.route),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Subgoal':
        return cls(data["type"], data["target"], data.get("receptacle"), tuple(data.get("route", ())))


@dataclass(frozen=True)
class GoalCondition:
    predicate: str
    object_id: int
    receptacle: Optional[int] = None

    def __post_init__(self):
        if self.predicate not in PREDICATES:
            raise ContractError(f"Unknown goal predicate: {self.predicate!r}")
        if self.predicate in ('in', 'out_of') and self.receptacle is None:
            raise ContractError(f"An '{self.predicate}' condition needs a receptacle")

    def holds(self, world: World) -> bool:
        obj = world.object(self.object_id)
        if self.predicate == 'in':
            return not obj.held and obj.container == self.receptacle
        if self.predicate == 'out_of':
            return obj.held or obj.container != self.receptacle
        if self.predicate == 'reachable':
            return self.object_id in reachable_ids(world)
        return bool(getattr(obj, self.predicate))

    def to_dict(self) -> Dict:
        return {"predicate": self.predicate, "object_id": self.object_id, "receptacle": self.receptacle}

    @classmethod
    def from_dict(cls, data: Dict) -> 'GoalCondition':
        return cls(data["predicate"], data["object_id"], data.get("receptacle"))


@dataclass(frozen=True)
class TaskSpec:
    task_type: str
    subgoals: Tuple[Subgoal, ...]
    goal_conditions: Tuple[GoalCondition, ...]
    goal_statement: Tuple[str, ...] = ()
    step_instructions: Tuple[Tuple[str, ...], ...] = ()

    def __post_init__(self):
        if not self.goal_conditions:
            raise ContractError("A task needs at least one goal condition")
        if not self.subgoals:
            raise ContractError("A task needs at least one subgoal")
        if self.step_instructions and len(self.step_instructions) != len(self.subgoals):
            raise ContractError("One step instruction is required per subgoal")

    def with_routes(self, routes: Sequence[Tuple[str, ...]]) -> 'TaskSpec':
        subgoals = tuple(
            replace(sg, route=tuple(route)) if sg.subgoal_type == 'GotoLocation' else sg
            for sg, route in zip(self.subgoals, routes)
        )
        return replace(self, subgoals=subgoals)

    def with_instructions(self, goal: Sequence[str], steps: Sequence[Sequence[str]]) -> 'TaskSpec':
        return replace(self, goal_statement=tuple(goal), step_instructions=tuple(tuple(s) for s in steps))

    def to_dict(self) -> Dict:
        return {
            "task_type": self.task_type,
            "goal_statement": list(self.goal_statement),
            "step_instructions": [list(s) for s in self.step_instructions],
            "subgoals": [sg.to_dict() for sg in self.subgoals],
            "goal_conditions": [gc.to_dict() for gc in self.goal_conditions],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'TaskSpec':
        return cls(
            task_type=data["task_type"],
            subgoals=tuple(Subgoal.from_dict(s) for s in data["subgoals"]),
            goal_conditions=tuple(GoalCondition.from_dict(g) for g in data["goal_conditions"]),
            goal_statement=tuple(data.get("goal_statement", ())),
            step_instructions=tuple(tuple(s) for s in data.get("step_instructions", ())),
        )


def goal_conditions_met(world: World, task: TaskSpec) -> Tuple[int, int]:
    """Count the task's goal conditions that hold in ``world``."""
    met = sum(1 for gc in task.goal_conditions if gc.holds(world))
    return met, len(task.goal_conditions)


def subgoal_complete(world: World, subgoal: Subgoal) -> bool:
    """Whether ``world`` satisfies the postcondition of ``subgoal``."""
    kind = subgoal.subgoal_type
    if kind == 'GotoLocation':
        return subgoal.target in reachable_ids(world)

    obj = world.object(subgoal.target)
    if kind == 'PickupObject':
        return obj.held
    if kind == 'PutObject':
        return not obj.held and obj.container == subgoal.receptacle
    if kind == 'SliceObject':
        return obj.sliced
    if kind == 'ToggleObject':
        return obj.toggled_on

    appliance = world.object(subgoal.receptacle)
    if kind == 'CleanObject':
        return obj.clean and obj.held and not appliance.toggled_on
    if kind == 'HeatObject':
        return obj.heated and obj.held and not appliance.open and not appliance.toggled_on
    if kind == 'CoolObject':
        return obj.cooled and obj.held and not appliance.open
    raise ContractError(f"Unhandled subgoal type: {kind}")


def advance_pointer(world: World, subgoals: Sequence[Subgoal], pointer: int) -> int:
    """Move past every leading subgoal whose postcondition already holds; never past the last."""
    while pointer < len(subgoals) - 1 and subgoal_complete(world, subgoals[pointer]):
        pointer += 1
    return pointer
