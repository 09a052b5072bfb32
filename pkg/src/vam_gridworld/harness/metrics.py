"""Success rate, goal-condition rate and the per-subgoal table."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

from vam_gridworld.common.errors import ContractError
from vam_gridworld.env.config import EnvConfig
from vam_gridworld.env.generator import Episode
from vam_gridworld.env.task import SUBGOAL_TYPES
from vam_gridworld.harness.rollout import Policy, RolloutResult, rollout, rollout_subgoal

logger = logging.getLogger(__name__)

# Share of GotoLocation among all subgoal instances in the original benchmark; metadata only.
REFERENCE_GOTO_SHARE = 48.0


@dataclass(frozen=True)
class EpisodeOutcome:
    seed: int
    success: bool
    met: int
    total: int
    steps: int
    failures: int
    termination: str

    @classmethod
    def from_result(cls, result: RolloutResult) -> 'EpisodeOutcome':
        met, total = result.goal_conditions
        return cls(result.seed, result.success, met, total, result.steps, result.failures, result.termination)

    def to_dict(self) -> Dict:
        return {
            "seed": self.seed,
            "success": self.success,
            "met": self.met,
            "total": self.total,
            "steps": self.steps,
            "failures": self.failures,
            "termination": self.termination,
        }


def success_rate(outcomes: Sequence[EpisodeOutcome]) -> float:
    """Percentage of episodes with every goal condition met."""
    if not outcomes:
        raise ContractError("success_rate: no episodes")
    return 100.0 * sum(1 for o in outcomes if o.success) / len(outcomes)


def goal_condition_rate(outcomes: Sequence[EpisodeOutcome]) -> float:
    """Met conditions over all conditions, pooled across episodes, as a percentage."""
    if not outcomes:
        raise ContractError("goal_condition_rate: no episodes")
    return 100.0 * sum(o.met for o in outcomes) / sum(o.total for o in outcomes)


@dataclass(frozen=True)
class SplitMetrics:
    split: str
    sr: float
    gc: float
    outcomes: Tuple[EpisodeOutcome, ...]

    @property
    def episodes(self) -> int:
        return len(self.outcomes)

    def summary(self) -> Dict:
        return {"split": self.split, "episodes": self.episodes, "sr": self.sr, "gc": self.gc}


def _rollout_chunk(args) -> List[EpisodeOutcome]:
    policy, episodes, env_config = args
    return [EpisodeOutcome.from_result(rollout(policy, ep, env_config)) for ep in episodes]


def rollout_outcomes(policy: Policy, episodes: Sequence[Episode], env_config: EnvConfig,
                     workers: int = 1) -> List[EpisodeOutcome]:
    """Outcomes in episode order; with ``workers > 1`` chunks run in separate processes."""
    if workers <= 1 or len(episodes) < 2:
        return _rollout_chunk((policy, episodes, env_config))
    size = -(-len(episodes) // workers)
    chunks = [(policy, list(episodes[i:i + size]), env_config) for i in range(0, len(episodes), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [o for part in pool.map(_rollout_chunk, chunks) for o in part]


def evaluate(policy: Policy, episodes: Sequence[Episode], env_config: EnvConfig,
             split: str = '', workers: int = 1) -> SplitMetrics:
    """
    SR and GC of ``policy`` over ``episodes``.

    Raises:
        ContractError: If ``episodes`` is empty.
    """
    if not episodes:
        raise ContractError(f"Cannot evaluate an empty split {split!r}")
    outcomes = rollout_outcomes(policy, episodes, env_config, workers)
    metrics = SplitMetrics(split, success_rate(outcomes), goal_condition_rate(outcomes), tuple(outcomes))
    logger.info("%s on %s: SR %.2f, GC %.2f over %d episodes",
                getattr(policy, 'name', 'policy'), split or 'episodes', metrics.sr, metrics.gc, metrics.episodes)
    if metrics.sr > metrics.gc:
        logger.warning("%s: SR %.2f exceeds pooled GC %.2f (episodes differ in condition counts)",
                       split, metrics.sr, metrics.gc)
    return metrics


def evaluate_splits(policy: Policy, episodes_by_split: Mapping[str, Sequence[Episode]],
                    env_config: EnvConfig, workers: int = 1) -> Dict[str, SplitMetrics]:
    return {split: evaluate(policy, eps, env_config, split, workers) for split, eps in episodes_by_split.items()}


@dataclass(frozen=True)
class SubgoalRow:
    subgoal_type: str
    instances: int
    successes: int
    success_rate: float
    share: float

    def to_dict(self) -> Dict:
        return {
            "subgoal_type": self.subgoal_type,
            "instances": self.instances,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "share": self.share,
        }


def subgoal_report(policy: Policy, episodes: Sequence[Episode], env_config: EnvConfig) -> List[SubgoalRow]:
    """
    Per-subgoal success under oracle repositioning, one row per type present.

    Subgoals the oracle completes without a single step are not instances.
    ``share`` is each type's percentage of all instances.
    """
    counts: Dict[str, List[int]] = {}
    for episode in episodes:
        for index, subgoal in enumerate(episode.task.subgoals):
            result = rollout_subgoal(policy, episode, index, env_config)
            if result is None:
                continue
            tally = counts.setdefault(subgoal.subgoal_type, [0, 0])
            tally[0] += 1
            tally[1] += int(result)
    total = sum(c[0] for c in counts.values())
    rows = []
    for subgoal_type in SUBGOAL_TYPES:
        if subgoal_type not in counts:
            continue
        instances, successes = counts[subgoal_type]
        rows.append(SubgoalRow(subgoal_type, instances, successes,
                               100.0 * successes / instances, 100.0 * instances / total))
    return rows
