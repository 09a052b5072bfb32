"""
Seed variance and validation/test gap.

K models differing only in training seed are scored on valid_unseen and
test_unseen; the seed a practitioner would pick by validation is compared
with the best seed on test.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from vam_gridworld.common.errors import ConfigError, ContractError
from vam_gridworld.env.generator import Episode
from vam_gridworld.env.instructions import load_vocabulary
from vam_gridworld.harness.config import RunConfig
from vam_gridworld.harness.metrics import evaluate
from vam_gridworld.harness.rollout import ModelPolicy
from vam_gridworld.harness.train import train

logger = logging.getLogger(__name__)

MIN_SEEDS = 3


@dataclass(frozen=True)
class GapRow:
    seed: int
    valid_unseen_sr: float
    test_unseen_sr: float

    def to_dict(self) -> Dict:
        return {"seed": self.seed, "valid_unseen_sr": self.valid_unseen_sr, "test_unseen_sr": self.test_unseen_sr}


@dataclass(frozen=True)
class GapStudyReport:
    rows: Tuple[GapRow, ...]
    selected_seed: int
    best_test_seed: int
    regret: float
    spearman: float
    valid_unseen_std: float
    test_unseen_std: float
    valid_unseen_mean: float
    test_unseen_mean: float

    def to_dict(self) -> Dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "selected_seed": self.selected_seed,
            "best_test_seed": self.best_test_seed,
            "regret": self.regret,
            "spearman": self.spearman,
            "valid_unseen_std": self.valid_unseen_std,
            "test_unseen_std": self.test_unseen_std,
            "valid_unseen_mean": self.valid_unseen_mean,
            "test_unseen_mean": self.test_unseen_mean,
        }


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind='stable')
    ranks = np.empty(arr.size, dtype=np.float64)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation with averaged ties; 0.0 when either column is constant."""
    if len(x) != len(y):
        raise ContractError("spearman: columns differ in length")
    rx, ry = average_ranks(x), average_ranks(y)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    denom = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if denom == 0.0:
        return 0.0
    return float(np.clip(np.sum(dx * dy) / denom, -1.0, 1.0))


def summarize_gap(rows: Sequence[GapRow]) -> GapStudyReport:
    """
    Statistics of a per-seed table; rows are taken in seed order.

    Selection takes the highest valid_unseen SR (lowest seed on ties);
    regret is the best test SR minus the selected seed's test SR.
    """
    if not rows:
        raise ContractError("summarize_gap: no rows")
    rows = tuple(sorted(rows, key=lambda r: r.seed))
    val = np.array([r.valid_unseen_sr for r in rows])
    test = np.array([r.test_unseen_sr for r in rows])
    selected = int(np.argmax(val))
    best = int(np.argmax(test))
    ddof = 1 if len(rows) > 1 else 0
    return GapStudyReport(
        rows=rows,
        selected_seed=rows[selected].seed,
        best_test_seed=rows[best].seed,
        regret=float(test[best] - test[selected]),
        spearman=spearman(val, test),
        valid_unseen_std=float(np.std(val, ddof=ddof)),
        test_unseen_std=float(np.std(test, ddof=ddof)),
        valid_unseen_mean=float(np.mean(val)),
        test_unseen_mean=float(np.mean(test)),
    )


def _seed_row(args) -> GapRow:
    config, seed, train_eps, valid_eps, test_eps, out_dir = args
    vocab = load_vocabulary()
    seed_config = config.with_seed(seed)
    seed_dir = str(Path(out_dir) / f'seed_{seed}') if out_dir is not None else None
    model = train(seed_config, train_eps, seed_dir, vocab).model
    policy = ModelPolicy(model, vocab)
    val = evaluate(policy, valid_eps, config.env, 'valid_unseen').sr
    test = evaluate(policy, test_eps, config.env, 'test_unseen').sr
    logger.info("gap study seed %d: valid_unseen SR %.2f, test_unseen SR %.2f", seed, val, test)
    return GapRow(seed, val, test)


def gap_study(config: RunConfig, train_episodes: Sequence[Episode], valid_unseen: Sequence[Episode],
              test_unseen: Sequence[Episode], seeds: Optional[Sequence[int]] = None,
              out_dir: Optional[str] = None, workers: int = 1) -> GapStudyReport:
    """
    Train one model per seed and summarise the val/test relationship.

    Args:
        config: Shared configuration; only ``train.seed`` varies.
        seeds: Training seeds; defaults to ``config.gap_study.seed_list()``.
        workers: Parallel training processes; rows are merged in seed order.

    Raises:
        ConfigError: If fewer than three seeds are given.
    """
    seeds = tuple(config.gap_study.seed_list() if seeds is None else seeds)
    if len(seeds) < MIN_SEEDS:
        raise ConfigError(f"gap_study needs at least {MIN_SEEDS} seeds, got {len(seeds)}")
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"gap_study seeds must be distinct, got {list(seeds)}")
    jobs = [(config, s, list(train_episodes), list(valid_unseen), list(test_unseen), out_dir) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows: List[GapRow] = list(pool.map(_seed_row, jobs))
    else:
        rows = [_seed_row(job) for job in jobs]
    report = summarize_gap(rows)
    logger.info("gap study: selected seed %d, regret %.2f, spearman %.3f",
                report.selected_seed, report.regret, report.spearman)
    return report
