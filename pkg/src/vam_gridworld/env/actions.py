"""Action kinds, their types, and the Action value."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from vam_gridworld.common.errors import ContractError


class ActionType(Enum):
    NAVIGATION = 0
    MANIPULATION = 1


class ActionKind(Enum):
    MOVE_FORWARD = 'MoveForward'
    TURN_LEFT = 'TurnLeft'
    TURN_RIGHT = 'TurnRight'
    LOOK_UP = 'LookUp'
    LOOK_DOWN = 'LookDown'
    PICKUP = 'Pickup'
    PUT = 'Put'
    OPEN = 'Open'
    CLOSE = 'Close'
    TOGGLE_ON = 'ToggleOn'
    TOGGLE_OFF = 'ToggleOff'
    SLICE = 'Slice'
    STOP = 'Stop'

    @property
    def index(self) -> int:
        return ACTION_KINDS.index(self)

    @property
    def action_type(self) -> ActionType:
        return action_type_of(self)

    @classmethod
    def from_name(cls, name: str) -> 'ActionKind':
        try:
            return cls(name)
        except ValueError:
            raise ContractError(f"Unknown action kind: {name!r}") from None


# Index order is the model's output order.
ACTION_KINDS = tuple(ActionKind)
NUM_ACTIONS = len(ACTION_KINDS)
NAVIGATION_KINDS = ACTION_KINDS[:5]


def action_type_of(kind: ActionKind) -> ActionType:
    return ActionType.NAVIGATION if kind in NAVIGATION_KINDS else ActionType.MANIPULATION


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    object_arg: Optional[int] = None

    def __post_init__(self):
        if self.object_arg is not None and (self.action_type is ActionType.NAVIGATION
                                            or self.kind is ActionKind.STOP):
            raise ContractError(f"{self.kind.value} cannot carry an object argument")

    @property
    def action_type(self) -> ActionType:
        return action_type_of(self.kind)

    def to_dict(self):
        return {"action": self.kind.value, "object_arg": self.object_arg}

    @classmethod
    def from_dict(cls, data) -> 'Action':
        return cls(ActionKind.from_name(data["action"]), data.get("object_arg"))

    def __str__(self) -> str:
        return self.kind.value if self.object_arg is None else f"{self.kind.value}({self.object_arg})"


STOP = Action(ActionKind.STOP)
