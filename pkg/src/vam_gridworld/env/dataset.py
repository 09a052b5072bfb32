"""
Episode datasets on disk.

Layout::

    <root>/manifest.json
    <root>/<split>/episode_00000.json

Each episode document holds the seed, the task with its instructions and the
oracle action list. Loading regenerates the world from (seed, split) and
checks it against the stored hash and actions.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Sequence

from vam_gridworld.common.config import from_plain, to_plain
from vam_gridworld.common.errors import ConfigError, DataError, VamError
from vam_gridworld.env.actions import Action
from vam_gridworld.env.config import SPLIT_NAMES, TEST_SPLITS, EnvConfig, split_config
from vam_gridworld.env.generator import Episode, generate_episode

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
DATASET_FORMAT = 'vam-episodes/1'
TEST_SPLIT_PURPOSES = ('gap_study', 'eval')


def check_split_access(split: str, purpose: str) -> None:
    """
    Raises:
        DataError: If a test split is requested for anything but final evaluation.
    """
    if split in TEST_SPLITS and purpose not in TEST_SPLIT_PURPOSES:
        raise DataError(
            f"Split {split!r} is held out; purpose {purpose!r} may not read it "
            f"(allowed: {', '.join(TEST_SPLIT_PURPOSES)})"
        )


def generate_split(split: str, count: int, env_config: EnvConfig) -> List[Episode]:
    """Episodes for seeds ``0..count-1`` of ``split``, generated in memory."""
    cfg = split_config(split, env_config)
    return [generate_episode(seed, cfg, env_config) for seed in range(count)]


def episode_record(episode: Episode) -> Dict:
    world = episode.world
    return {
        "seed": episode.seed,
        "split": episode.split,
        "layout_id": world.layout_id,
        "archetype": world.archetype,
        "world_hash": world.state_hash(),
        "task": episode.task.to_dict(),
        "actions": [a.to_dict() for a in episode.trajectory.actions],
        "subgoal_labels": list(episode.trajectory.subgoal_labels),
    }


def _write_json(path: Path, data: Mapping) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + '\n', encoding='utf-8')


def write_dataset(root: str, sizes: Mapping[str, int], env_config: EnvConfig) -> Dict[str, int]:
    """
    Generate and write every split in ``sizes``.

    Returns:
        Number of episodes written per split.

    Raises:
        GenerationError: If a seed cannot produce a solvable episode.
    """
    root_path = Path(root)
    root_path.mkdir(parents=True, exist_ok=True)
    written = {}
    for split in SPLIT_NAMES:
        if split not in sizes:
            continue
        split_dir = root_path / split
        split_dir.mkdir(exist_ok=True)
        episodes = generate_split(split, sizes[split], env_config)
        for episode in episodes:
            _write_json(split_dir / f"episode_{episode.seed:05d}.json", episode_record(episode))
        written[split] = len(episodes)
        logger.info("Wrote %d %s episodes to %s", len(episodes), split, split_dir)

    _write_json(root_path / MANIFEST_NAME, {
        "format": DATASET_FORMAT,
        "env": to_plain(env_config),
        "splits": written,
    })
    return written


def read_manifest(root: str) -> Dict:
    path = Path(root) / MANIFEST_NAME
    if not path.exists():
        raise DataError(f"Dataset manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise DataError(f"Invalid JSON in {path}: {e}") from None
    if manifest.get("format") != DATASET_FORMAT:
        raise DataError(f"{path}: unsupported dataset format {manifest.get('format')!r}")
    return manifest


def manifest_env_config(root: str) -> EnvConfig:
    try:
        return from_plain(EnvConfig, read_manifest(root)["env"])
    except (ConfigError, KeyError) as e:
        raise DataError(f"Dataset manifest under {root} has a bad env section: {e}") from None


def load_split(root: str, split: str, env_config: EnvConfig, purpose: str) -> List[Episode]:
    """
    Load and verify one split.

    Args:
        root: Dataset directory written by ``write_dataset``.
        split: Split name.
        env_config: Environment settings the caller expects.
        purpose: Who is reading; test splits are only served to ``gap_study``
            and ``eval``.

    Returns:
        Episodes in seed order.

    Raises:
        DataError: If the split is held out for ``purpose``, missing, empty,
            generated under a different env config, or its stored episodes
            no longer match regeneration.
    """
    check_split_access(split, purpose)
    manifest = read_manifest(root)
    if manifest.get("env") != to_plain(env_config):
        raise DataError(f"Dataset under {root} was generated with a different env config")

    split_dir = Path(root) / split
    paths = sorted(split_dir.glob('episode_*.json'))
    if not paths:
        raise DataError(f"No episodes for split {split!r} under {split_dir}")

    cfg = split_config(split, env_config)
    episodes = []
    for path in paths:
        try:
            record = json.loads(path.read_text(encoding='utf-8'))
            seed = int(record["seed"])
            stored = [Action.from_dict(a) for a in record["actions"]]
        except (VamError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DataError(f"Malformed episode file {path}: {e}") from None
        try:
            episode = generate_episode(seed, cfg, env_config)
        except VamError as e:
            raise DataError(f"Cannot regenerate {path}: {e}") from None
        if episode.world.state_hash() != record.get("world_hash"):
            raise DataError(f"{path}: regenerated world does not match the stored hash")
        if list(episode.trajectory.actions) != stored:
            raise DataError(f"{path}: regenerated oracle trajectory differs from the stored actions")
        episodes.append(episode)
    logger.info("Loaded %d %s episodes from %s", len(episodes), split, split_dir)
    return episodes


def load_splits(root: str, splits: Sequence[str], env_config: EnvConfig, purpose: str) -> Dict[str, List[Episode]]:
    return {split: load_split(root, split, env_config, purpose) for split in splits}
