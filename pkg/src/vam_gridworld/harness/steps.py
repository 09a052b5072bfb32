"""Teacher-forced step groups built from oracle trajectories."""

from typing import List, Sequence

from vam_gridworld.agent.config import ModelConfig
from vam_gridworld.agent.inputs import StepGroup, build_group, category_indices, language_ids
from vam_gridworld.env.generator import Episode
from vam_gridworld.env.instructions import Vocabulary


def episode_groups(episode: Episode, vocab: Vocabulary, config: ModelConfig) -> List[StepGroup]:
    """
    One group per subgoal that owns at least one oracle step.

    Histories hold the ground-truth actions before each step, so the model
    always conditions on the demonstration rather than its own predictions.
    """
    trajectory = episode.trajectory
    kinds = [a.kind for a in trajectory.actions]
    categories = category_indices(episode.world)
    groups = []
    for index, instruction in enumerate(episode.task.step_instructions):
        rows = trajectory.subgoal_steps(index)
        if not rows:
            continue
        start = rows[0]
        groups.append(build_group(
            token_ids=language_ids(vocab, episode.task.goal_statement, instruction),
            observations=[trajectory.steps[t].observation for t in rows],
            histories=[kinds[:t] for t in rows],
            offsets=[t - start for t in rows],
            categories=categories,
            window=config.history_window,
            num_actions=config.num_actions,
            targets=[trajectory.steps[t].action for t in rows],
        ))
    return groups


def dataset_groups(episodes: Sequence[Episode], vocab: Vocabulary, config: ModelConfig) -> List[List[StepGroup]]:
    return [episode_groups(ep, vocab, config) for ep in episodes]
