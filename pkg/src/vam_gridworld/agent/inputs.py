"""Model inputs: one group of consecutive steps sharing an instruction."""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from vam_gridworld.common.errors import ContractError
from vam_gridworld.env.actions import NAVIGATION_KINDS, Action, ActionKind, ActionType
from vam_gridworld.env.catalog import CATEGORY_INDEX
from vam_gridworld.env.instructions import SEP, Vocabulary
from vam_gridworld.env.world import ViewObservation, World

NO_OBJECT = -1


@dataclass(frozen=True, eq=False)
class StepGroup:
    """
    Steps read against the same goal + step instruction.

    Attributes:
        token_ids: Goal tokens, separator, current step-instruction tokens.
        views: Raw view features, shape (steps, views, feature width).
        history: Concatenated one-hot windows of previous actions, shape
            (steps, window * (actions + 1)); the extra slot is the null action.
        offsets: Steps elapsed since the instruction became current.
        visible: Per step, (object id, category index) of front-visible objects.
        actions: Ground-truth action indices, empty at inference.
        object_categories: Ground-truth target category per step, ``NO_OBJECT``
            where the action takes no object.
    """

    token_ids: Tuple[int, ...]
    views: np.ndarray
    history: np.ndarray
    offsets: Tuple[int, ...]
    visible: Tuple[Tuple[Tuple[int, int], ...], ...]
    actions: Tuple[int, ...] = ()
    object_categories: Tuple[int, ...] = ()

    @property
    def steps(self) -> int:
        return self.views.shape[0]

    @property
    def action_types(self) -> Tuple[int, ...]:
        return tuple(int(i >= len(NAVIGATION_KINDS)) for i in self.actions)


def language_ids(vocab: Vocabulary, goal: Sequence[str], instruction: Sequence[str]) -> Tuple[int, ...]:
    """Goal and current instruction joined by the separator token."""
    return tuple(vocab.encode(list(goal) + [SEP] + list(instruction)))


def history_row(previous: Sequence[ActionKind], window: int, num_actions: int) -> np.ndarray:
    """One-hot encoding of the last ``window`` actions, oldest first, null-padded on the left."""
    slots: List[int] = [num_actions] * window
    recent = [k.index for k in previous[-window:]] if window else []
    slots[window - len(recent):] = recent
    row = np.zeros(window * (num_actions + 1), dtype=np.float64)
    for j, index in enumerate(slots):
        row[j * (num_actions + 1) + index] = 1.0
    return row


def category_indices(world: World) -> Tuple[int, ...]:
    return tuple(CATEGORY_INDEX[o.category] for o in world.objects)


def build_group(token_ids: Sequence[int], observations: Sequence[ViewObservation],
                histories: Sequence[Sequence[ActionKind]], offsets: Sequence[int],
                categories: Sequence[int], window: int, num_actions: int,
                targets: Optional[Sequence[Action]] = None) -> StepGroup:
    """
    Assemble a group from per-step observations and action histories.

    Raises:
        ContractError: If the per-step sequences differ in length or a target
            action is not in the action set.
    """
    n = len(observations)
    if n == 0 or len(histories) != n or len(offsets) != n:
        raise ContractError(f"build_group: {n} observations, {len(histories)} histories, {len(offsets)} offsets")
    visible = tuple(
        tuple((object_id, categories[object_id]) for object_id in obs.front_visible)
        for obs in observations
    )
    actions: Tuple[int, ...] = ()
    objects: Tuple[int, ...] = ()
    if targets is not None:
        if len(targets) != n:
            raise ContractError(f"build_group: {len(targets)} targets for {n} steps")
        for action in targets:
            if not isinstance(action, Action) or not isinstance(action.kind, ActionKind):
                raise ContractError(f"Ground-truth action {action!r} is not in the action set")
        actions = tuple(a.kind.index for a in targets)
        objects = tuple(
            categories[a.object_arg]
            if a.object_arg is not None and a.action_type is ActionType.MANIPULATION else NO_OBJECT
            for a in targets
        )
    return StepGroup(
        token_ids=tuple(int(i) for i in token_ids),
        views=np.stack([obs.features for obs in observations]),
        history=np.stack([history_row(h, window, num_actions) for h in histories]),
        offsets=tuple(int(o) for o in offsets),
        visible=visible,
        actions=actions,
        object_categories=objects,
    )
