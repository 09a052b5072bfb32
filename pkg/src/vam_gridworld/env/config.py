"""Environment settings and the five dataset splits."""

from dataclasses import dataclass
from typing import Tuple

from vam_gridworld.common.errors import ConfigError

SPLIT_NAMES = ('train', 'valid_seen', 'valid_unseen', 'test_seen', 'test_unseen')
TEST_SPLITS = ('test_seen', 'test_unseen')


@dataclass(frozen=True)
class EnvConfig:
    grid_size: int = 9
    train_layouts: Tuple[int, int] = (0, 40)
    valid_unseen_layouts: Tuple[int, int] = (1000, 1010)
    test_unseen_layouts: Tuple[int, int] = (2000, 2010)
    min_objects: int = 8
    max_objects: int = 14
    failure_budget: int = 10
    step_limit_multiplier: int = 2
    step_limit_offset: int = 20
    max_generation_retries: int = 50

    def __post_init__(self):
        if self.grid_size < 5:
            raise ConfigError(f"grid_size must be at least 5, got {self.grid_size}")
        pools = {
            'train_layouts': self.train_layouts,
            'valid_unseen_layouts': self.valid_unseen_layouts,
            'test_unseen_layouts': self.test_unseen_layouts,
        }
        for name, pool in pools.items():
            if len(pool) != 2 or pool[0] < 0 or pool[1] <= pool[0]:
                raise ConfigError(f"{name} must be a non-empty [start, stop) range, got {pool}")
        ranges = sorted(pools.values())
        for (_, stop), (start, _) in zip(ranges, ranges[1:]):
            if start < stop:
                raise ConfigError(f"layout pools overlap: {ranges}")
        if not 1 <= self.min_objects <= self.max_objects:
            raise ConfigError("min_objects must be positive and not exceed max_objects")
        for name in ('failure_budget', 'step_limit_multiplier', 'max_generation_retries'):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.step_limit_offset < 0:
            raise ConfigError("step_limit_offset must be nonnegative")

    def step_limit(self, oracle_length: int) -> int:
        return self.step_limit_multiplier * oracle_length + self.step_limit_offset


@dataclass(frozen=True)
class SplitConfig:
    name: str
    index: int
    layout_pool: Tuple[int, int]

    def layout_ids(self) -> range:
        return range(*self.layout_pool)


def split_config(name: str, env_config: EnvConfig) -> SplitConfig:
    """
    Seen splits draw from the training pool; each unseen split has its own pool.

    Raises:
        ConfigError: For an unknown split name.
    """
    if name not in SPLIT_NAMES:
        raise ConfigError(f"Unknown split: {name!r}. Expected one of {', '.join(SPLIT_NAMES)}")
    if name == 'valid_unseen':
        pool = env_config.valid_unseen_layouts
    elif name == 'test_unseen':
        pool = env_config.test_unseen_layouts
    else:
        pool = env_config.train_layouts
    return SplitConfig(name=name, index=SPLIT_NAMES.index(name), layout_pool=tuple(pool))
