"""Teacher-forced minibatch training with per-epoch checkpoints."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from vam_gridworld.agent.inputs import StepGroup
from vam_gridworld.agent.model import VamModel
from vam_gridworld.common.errors import ContractError, NumericError, TrainingError
from vam_gridworld.env.generator import Episode
from vam_gridworld.env.instructions import Vocabulary, load_vocabulary
from vam_gridworld.harness.config import RunConfig
from vam_gridworld.harness.metrics import evaluate
from vam_gridworld.harness.rollout import ModelPolicy
from vam_gridworld.harness.steps import dataset_groups
from vam_gridworld.tensor.autodiff import backward
from vam_gridworld.tensor.optim import adamw_step

logger = logging.getLogger(__name__)

NAN_DUMP = 'nan_batch.json'


@dataclass
class TrainResult:
    model: VamModel
    loss_curve: List[Tuple[int, float]] = field(default_factory=list)
    epochs: List[Dict] = field(default_factory=list)
    checkpoints: List[str] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.loss_curve[-1][1] if self.loss_curve else float('nan')


def teacher_forced_accuracy(model: VamModel, groups: Sequence[StepGroup]) -> Tuple[float, float]:
    """(loss, fraction of steps whose argmax action matches the ground truth)."""
    outputs = [model.forward(g) for g in groups]
    loss = model.compute_loss(outputs, groups).item()
    correct = sum(int(np.sum(out.predicted_actions() == np.asarray(g.actions))) for out, g in zip(outputs, groups))
    return loss, correct / sum(g.steps for g in groups)


def _dump_batch(out_dir: Optional[str], epoch: int, step: int, loss: float,
                batch: Sequence[Episode], reason: str) -> Optional[Path]:
    if out_dir is None:
        return None
    path = Path(out_dir) / NAN_DUMP
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({
        "epoch": epoch,
        "step": step,
        "loss": repr(loss),
        "reason": reason,
        "episodes": [{"seed": ep.seed, "split": ep.split} for ep in batch],
    }, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    return path


def train(config: RunConfig, episodes: Sequence[Episode], out_dir: Optional[str] = None,
          vocab: Optional[Vocabulary] = None) -> TrainResult:
    """
    Train a model of ``config.model`` on ``episodes`` with AdamW.

    Episodes are shuffled per epoch by a generator seeded from
    ``config.train.seed``; each minibatch holds ``batch_size`` episodes.
    With ``out_dir`` set, ``checkpoints/epoch_NNN`` is written after every
    epoch and ``model`` after the last.

    Raises:
        ContractError: If ``episodes`` is empty.
        TrainingError: If the loss becomes non-finite; the offending batch is
            described in ``nan_batch.json`` under ``out_dir`` first.
    """
    if not episodes:
        raise ContractError("train: no episodes")
    vocab = vocab or load_vocabulary()
    tc = config.train
    model = VamModel(config.model, seed=tc.seed)
    state = tc.optimizer_state()
    groups = dataset_groups(episodes, vocab, config.model)
    rng = np.random.default_rng([tc.seed, len(episodes)])
    result = TrainResult(model)
    step = 0

    for epoch in range(1, tc.epochs + 1):
        order = rng.permutation(len(episodes))
        losses: List[float] = []
        correct = total = 0
        for start in range(0, len(order), tc.batch_size):
            batch = [int(i) for i in order[start:start + tc.batch_size]]
            batch_groups = [g for i in batch for g in groups[i]]
            model.zero_grad()
            try:
                outputs = [model.forward(g) for g in batch_groups]
                loss = model.compute_loss(outputs, batch_groups)
            except NumericError as e:
                dump = _dump_batch(out_dir, epoch, step + 1, float('nan'), [episodes[i] for i in batch], str(e))
                raise TrainingError(f"Non-finite values at epoch {epoch}, step {step + 1}: {e} (dump: {dump})") from e
            value = loss.item()
            if not np.isfinite(value):
                dump = _dump_batch(out_dir, epoch, step + 1, value, [episodes[i] for i in batch], 'non-finite loss')
                raise TrainingError(f"Loss became {value} at epoch {epoch}, step {step + 1} (dump: {dump})")
            backward(loss)
            adamw_step(model.params, state)
            step += 1
            result.loss_curve.append((step, value))
            losses.append(value)
            for out, g in zip(outputs, batch_groups):
                correct += int(np.sum(out.predicted_actions() == np.asarray(g.actions)))
                total += g.steps

        stats = {"epoch": epoch, "mean_loss": float(np.mean(losses)), "accuracy": correct / total}
        result.epochs.append(stats)
        logger.info("epoch %d/%d: loss %.4f, teacher-forced accuracy %.3f",
                    epoch, tc.epochs, stats["mean_loss"], stats["accuracy"])
        if out_dir is not None:
            stem = str(Path(out_dir) / 'checkpoints' / f'epoch_{epoch:03d}')
            model.save(stem, {"epoch": epoch, "config_hash": config.hash})
            result.checkpoints.append(stem)

    if out_dir is not None:
        model.save(str(Path(out_dir) / 'model'), {"epoch": tc.epochs, "config_hash": config.hash})
    return result


def select_epoch(checkpoints: Sequence[str], valid_unseen: Sequence[Episode], config: RunConfig,
                 vocab: Optional[Vocabulary] = None) -> Tuple[int, List[float]]:
    """
    Index of the checkpoint with the best valid_unseen SR (earliest on ties),
    and every checkpoint's SR. Test splits are never consulted.
    """
    if not checkpoints:
        raise ContractError("select_epoch: no checkpoints")
    vocab = vocab or load_vocabulary()
    rates = []
    for stem in checkpoints:
        policy = ModelPolicy(VamModel.load(stem), vocab)
        rates.append(evaluate(policy, valid_unseen, config.env, 'valid_unseen').sr)
    return int(np.argmax(rates)), rates
