"""Turning scores into an action with an optional object argument."""

from typing import Optional, Sequence, Tuple

import numpy as np

from vam_gridworld.common.errors import ContractError
from vam_gridworld.env.actions import ACTION_KINDS, STOP, Action, ActionKind, ActionType


def argmax_lowest(values: Sequence[float]) -> int:
    """Index of the largest value; the lowest index wins ties."""
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ContractError("argmax over an empty score vector")
    return int(np.argmax(arr))


def apply_gate(scores: Sequence[float], type_weights: Sequence[float], action_types: Sequence[int]) -> np.ndarray:
    """Multiply each score by the weight of its action's type."""
    weights = np.asarray(type_weights, dtype=np.float64)
    if np.any(weights <= 0):
        raise ContractError("gate weights must be strictly positive")
    return np.asarray(scores, dtype=np.float64) * weights[np.asarray(action_types, dtype=np.int64)]


def select_object(category_scores: Sequence[float], visible: Sequence[Tuple[int, int]]) -> Optional[int]:
    """
    Front-visible object whose category scores highest.

    Args:
        category_scores: One score per object category.
        visible: (object id, category index) pairs.

    Returns:
        The chosen object id (lowest id on ties), or None when nothing is visible.
    """
    if not visible:
        return None
    scores = np.asarray(category_scores, dtype=np.float64)
    best = max(visible, key=lambda pair: (scores[pair[1]], -pair[0]))
    return int(best[0])


def select_action(gated: Sequence[float], visible: Sequence[Tuple[int, int]],
                  category_scores: Optional[Sequence[float]] = None) -> Action:
    """
    Argmax action over gated scores for one step.

    A manipulation action takes the front-visible object picked by
    ``select_object``; with nothing visible it is emitted without an
    argument and will fail in the world.
    """
    kind: ActionKind = ACTION_KINDS[argmax_lowest(gated)]
    if kind is ActionKind.STOP:
        return STOP
    if kind.action_type is ActionType.NAVIGATION:
        return Action(kind)
    if category_scores is None:
        object_id = min((pair[0] for pair in visible), default=None)
    else:
        object_id = select_object(category_scores, visible)
    return Action(kind, object_id)
