"""Closed-loop rollouts of a policy in a generated episode."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from vam_gridworld.agent.inputs import build_group, category_indices, language_ids
from vam_gridworld.agent.model import VamModel
from vam_gridworld.agent.selection import select_action
from vam_gridworld.env.actions import ACTION_KINDS, STOP, Action, ActionKind, ActionType
from vam_gridworld.env.config import EnvConfig
from vam_gridworld.env.generator import Episode
from vam_gridworld.env.instructions import Vocabulary
from vam_gridworld.env.planner import Trajectory, TrajectoryStep, replay
from vam_gridworld.env.task import advance_pointer, goal_conditions_met, subgoal_complete
from vam_gridworld.env.world import ViewObservation, World, observe, step
from vam_gridworld.tensor.autodiff import Tensor

logger = logging.getLogger(__name__)

TERMINATIONS = ('stop', 'step_limit', 'failure_budget')


@dataclass
class RolloutContext:
    """What a policy may know besides the current world and observation."""

    episode: Episode
    pointer: int = 0
    offset: int = 0
    t: int = 0
    history: List[ActionKind] = field(default_factory=list)


class Policy:
    """Chooses one action per step; ``reset`` is called before each rollout."""

    name = 'policy'

    def reset(self, episode: Episode) -> None:
        pass

    def act(self, world: World, observation: ViewObservation, context: RolloutContext) -> Action:
        raise NotImplementedError


class ModelPolicy(Policy):
    """Greedy policy of a trained ``VamModel``."""

    name = 'model'

    def __init__(self, model: VamModel, vocab: Vocabulary):
        self.model = model
        self.vocab = vocab
        self._language: Dict[int, Tensor] = {}
        self._token_ids: Dict[int, tuple] = {}

    def reset(self, episode: Episode) -> None:
        self._language.clear()
        self._token_ids.clear()

    def _tokens(self, context: RolloutContext) -> tuple:
        pointer = context.pointer
        if pointer not in self._token_ids:
            task = context.episode.task
            ids = language_ids(self.vocab, task.goal_statement, task.step_instructions[pointer])
            self._token_ids[pointer] = ids
            # detached so the policy stays picklable for worker processes
            self._language[pointer] = Tensor(self.model.encode_language(ids).data)
        return self._token_ids[pointer]

    def act(self, world: World, observation: ViewObservation, context: RolloutContext) -> Action:
        cfg = self.model.config
        group = build_group(
            token_ids=self._tokens(context),
            observations=[observation],
            histories=[list(context.history)],
            offsets=[context.offset],
            categories=category_indices(world),
            window=cfg.history_window,
            num_actions=cfg.num_actions,
        )
        out = self.model.forward(group, language=self._language[context.pointer])
        return select_action(out.scores.gated.data[0], group.visible[0], out.object_logits.data[0])


class OraclePolicy(Policy):
    """Replays the episode's ground-truth actions by step index, then stops."""

    name = 'oracle'

    def act(self, world: World, observation: ViewObservation, context: RolloutContext) -> Action:
        actions = context.episode.trajectory.actions
        return actions[context.t] if context.t < len(actions) else STOP


class AlwaysStopPolicy(Policy):
    name = 'stop'

    def act(self, world: World, observation: ViewObservation, context: RolloutContext) -> Action:
        return STOP


class RandomPolicy(Policy):
    """Uniform over action kinds; manipulation targets uniform over front-visible objects."""

    name = 'random'

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def reset(self, episode: Episode) -> None:
        self._rng = np.random.default_rng([self.seed, episode.seed])

    def act(self, world: World, observation: ViewObservation, context: RolloutContext) -> Action:
        kind = ACTION_KINDS[int(self._rng.integers(len(ACTION_KINDS)))]
        if kind is ActionKind.STOP:
            return STOP
        if kind.action_type is ActionType.NAVIGATION:
            return Action(kind)
        visible = observation.front_visible
        target = visible[int(self._rng.integers(len(visible)))] if visible else None
        return Action(kind, target)


@dataclass(frozen=True, eq=False)
class RolloutResult:
    seed: int
    trajectory: Trajectory
    final_world: World
    success: bool
    goal_conditions: tuple
    failures: int
    termination: str

    @property
    def steps(self) -> int:
        return len(self.trajectory)

    @property
    def gc_fraction(self) -> float:
        met, total = self.goal_conditions
        return met / total


def rollout(policy: Policy, episode: Episode, env_config: EnvConfig) -> RolloutResult:
    """
    Run ``policy`` from the episode's initial world until it stops, hits the
    step limit, or exhausts the failure budget. In-world failures are data.
    """
    world = episode.world
    task = episode.task
    limit = env_config.step_limit(episode.oracle_length)
    context = RolloutContext(episode)
    steps: List[TrajectoryStep] = []
    failures = 0
    termination = 'step_limit'
    policy.reset(episode)

    while context.t < limit:
        pointer = advance_pointer(world, task.subgoals, context.pointer)
        if pointer != context.pointer:
            context.pointer, context.offset = pointer, 0
        observation = observe(world)
        action = policy.act(world, observation, context)
        steps.append(TrajectoryStep(world.state_hash(), observation, action, context.pointer))
        context.history.append(action.kind)
        context.t += 1
        context.offset += 1
        if action.kind is ActionKind.STOP:
            termination = 'stop'
            break
        world, ok = step(world, action)
        if not ok:
            failures += 1
            if failures >= env_config.failure_budget:
                termination = 'failure_budget'
                break

    met, total = goal_conditions_met(world, task)
    return RolloutResult(
        seed=episode.seed,
        trajectory=Trajectory(tuple(steps), world.state_hash()),
        final_world=world,
        success=met == total,
        goal_conditions=(met, total),
        failures=failures,
        termination=termination,
    )


def rollout_subgoal(policy: Policy, episode: Episode, subgoal_index: int,
                    env_config: EnvConfig) -> Optional[bool]:
    """
    Roll out one subgoal from the oracle's state at the subgoal's first step.

    History is the oracle's actions so far and the instruction pointer stays
    on ``subgoal_index``. Success means the subgoal's postcondition holds
    before the policy stops, fails too often, or runs out of steps.

    Returns:
        Success, or None when the oracle spends no step on this subgoal.
    """
    trajectory = episode.trajectory
    oracle_rows = trajectory.subgoal_steps(subgoal_index)
    if not oracle_rows:
        return None
    start = oracle_rows[0]
    actions = trajectory.actions
    worlds, _ = replay(episode.world, actions[:start])
    world = worlds[-1]
    subgoal = episode.task.subgoals[subgoal_index]

    context = RolloutContext(episode, pointer=subgoal_index, offset=0, t=start,
                             history=[a.kind for a in actions[:start]])
    limit = env_config.step_limit(len(oracle_rows))
    failures = 0
    policy.reset(episode)
    for _ in range(limit):
        if subgoal_complete(world, subgoal):
            return True
        action = policy.act(world, observe(world), context)
        context.history.append(action.kind)
        context.t += 1
        context.offset += 1
        if action.kind is ActionKind.STOP:
            break
        world, ok = step(world, action)
        if not ok:
            failures += 1
            if failures >= env_config.failure_budget:
                break
    return subgoal_complete(world, subgoal)
