"""Four cumulative ablation rows trained on one dataset and scored on valid_unseen."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from vam_gridworld.agent.config import ABLATION_ROWS, REFERENCE_ROW_SR
from vam_gridworld.env.generator import Episode
from vam_gridworld.env.instructions import Vocabulary, load_vocabulary
from vam_gridworld.harness.config import RunConfig
from vam_gridworld.harness.metrics import SubgoalRow, evaluate, subgoal_report
from vam_gridworld.harness.rollout import ModelPolicy
from vam_gridworld.harness.train import train

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AblationRow:
    row: int
    wide_view: bool
    view_act_matching: bool
    act_type_gate: bool
    sr: float
    gc: float
    reference_sr: float
    final_loss: float
    subgoals: tuple = field(default=())

    def to_dict(self) -> Dict:
        return {
            "row": self.row,
            "wide_view": self.wide_view,
            "view_act_matching": self.view_act_matching,
            "act_type_gate": self.act_type_gate,
            "sr": self.sr,
            "gc": self.gc,
            "reference_sr": self.reference_sr,
            "final_loss": self.final_loss,
        }


def run_ablation(config: RunConfig, train_episodes: Sequence[Episode], valid_unseen: Sequence[Episode],
                 out_dir: Optional[str] = None, vocab: Optional[Vocabulary] = None,
                 workers: int = 1) -> List[AblationRow]:
    """
    Train and evaluate rows 1-4 with identical data and training seed.

    Returns:
        One row per flag combination, in row order. ``reference_sr`` holds
        the published numbers for orientation only.
    """
    vocab = vocab or load_vocabulary()
    rows = []
    for row, flags in enumerate(ABLATION_ROWS, start=1):
        row_config = config.with_row(row)
        row_dir = str(Path(out_dir) / f'row_{row}') if out_dir is not None else None
        logger.info("ablation row %d: wide_view=%s view_act_matching=%s act_type_gate=%s", row, *flags)
        result = train(row_config, train_episodes, row_dir, vocab)
        policy = ModelPolicy(result.model, vocab)
        metrics = evaluate(policy, valid_unseen, config.env, 'valid_unseen', workers)
        subgoals: List[SubgoalRow] = subgoal_report(policy, valid_unseen, config.env)
        rows.append(AblationRow(row, *flags, sr=metrics.sr, gc=metrics.gc,
                                reference_sr=REFERENCE_ROW_SR[row - 1], final_loss=result.final_loss,
                                subgoals=tuple(subgoals)))
    return rows


def ablation_report(rows: Sequence[AblationRow], config: RunConfig) -> Dict:
    return {
        "config_hash": config.hash,
        "seed": config.train.seed,
        "split": "valid_unseen",
        "reference_note": "reference_sr values are published results on a different benchmark; not reproduced here",
        "rows": [r.to_dict() for r in rows],
        "subgoals": {str(r.row): [s.to_dict() for s in r.subgoals] for r in rows},
    }
