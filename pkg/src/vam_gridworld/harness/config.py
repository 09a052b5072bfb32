"""Run configuration: one JSON file, dotted overrides, every default materialised."""

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

from vam_gridworld.agent.config import ModelConfig
from vam_gridworld.common.config import apply_overrides, config_hash, from_plain, to_plain
from vam_gridworld.common.errors import ConfigError
from vam_gridworld.env.config import SPLIT_NAMES, EnvConfig
from vam_gridworld.env.instructions import load_vocabulary
from vam_gridworld.tensor.optim import AdamWState

logger = logging.getLogger(__name__)

WORKERS_ENV = 'VAM_WORKERS'


@dataclass(frozen=True)
class DataConfig:
    """Episodes per split."""

    train: int = 200
    valid_seen: int = 50
    valid_unseen: int = 50
    test_seen: int = 50
    test_unseen: int = 50

    def __post_init__(self):
        for name in SPLIT_NAMES:
            if getattr(self, name) < 1:
                raise ConfigError(f"data.{name} must be positive, got {getattr(self, name)}")

    def sizes(self) -> Dict[str, int]:
        return {name: getattr(self, name) for name in SPLIT_NAMES}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 8
    seed: int = 0
    learning_rate: float = 1e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 0.01
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("train.epochs and train.batch_size must be positive")
        # Validates the optimizer values with the optimizer's own rules.
        self.optimizer_state()

    def optimizer_state(self) -> AdamWState:
        return AdamWState(
            learning_rate=self.learning_rate,
            betas=tuple(self.betas),
            weight_decay=self.weight_decay,
            epsilon=self.epsilon,
        )


@dataclass(frozen=True)
class GapStudyConfig:
    seeds: int = 5
    first_seed: int = 0

    def __post_init__(self):
        if self.seeds < 1:
            raise ConfigError(f"gap_study.seeds must be positive, got {self.seeds}")

    def seed_list(self) -> Tuple[int, ...]:
        return tuple(range(self.first_seed, self.first_seed + self.seeds))


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    gap_study: GapStudyConfig = field(default_factory=GapStudyConfig)

    def to_dict(self) -> Dict[str, Any]:
        return to_plain(self)

    @property
    def hash(self) -> str:
        return config_hash(self)

    def with_seed(self, seed: int) -> 'RunConfig':
        return dataclasses.replace(self, train=dataclasses.replace(self.train, seed=seed))

    def with_row(self, row: int) -> 'RunConfig':
        return dataclasses.replace(self, model=self.model.for_row(row))


def resolve(config: RunConfig) -> RunConfig:
    """Fill values that depend on packaged resources (the vocabulary size)."""
    size = len(load_vocabulary())
    if config.model.vocab_size == 0:
        return dataclasses.replace(config, model=dataclasses.replace(config.model, vocab_size=size))
    if config.model.vocab_size < size:
        raise ConfigError(f"model.vocab_size={config.model.vocab_size} is smaller than the vocabulary ({size})")
    return config


def load_run_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Load a run config from JSON, apply ``key=value`` overrides, validate.

    Args:
        path: JSON file; None starts from the defaults.
        overrides: Dotted ``section.key=value`` strings, applied after the file.

    Returns:
        Fully validated RunConfig with every default filled in

    Raises:
        ConfigError: If the file is missing or malformed, a key is unknown,
            or a value fails validation.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigError(f"Config file not found: {path}")
        try:
            data = json.loads(config_path.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in config file {path}: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a JSON object")

    data = apply_overrides(data, overrides, to_plain(RunConfig()))
    config = resolve(from_plain(RunConfig, data))
    logger.debug("Effective config hash %s", config.hash)
    return config


def worker_count() -> int:
    """Worker processes from ``VAM_WORKERS`` (default 1)."""
    raw = os.environ.get(WORKERS_ENV, '1')
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1, got {workers}")
    return workers
