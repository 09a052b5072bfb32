"""Model hyperparameters and the four cumulative ablation rows."""

import dataclasses
from dataclasses import dataclass
from typing import Tuple

from vam_gridworld.common.errors import ConfigError
from vam_gridworld.env.actions import NUM_ACTIONS
from vam_gridworld.env.catalog import NUM_CATEGORIES
from vam_gridworld.env.world import FEATURE_WIDTH, NUM_VIEWS

# (wide_view, view_act_matching, act_type_gate) per ablation row, rows 1..4.
ABLATION_ROWS: Tuple[Tuple[bool, bool, bool], ...] = (
    (False, False, False),
    (True, False, False),
    (True, True, False),
    (True, True, True),
)

# Published success rates for the four rows; kept as report metadata only.
REFERENCE_ROW_SR: Tuple[float, ...] = (4.7, 9.3, 11.8, 13.8)


@dataclass(frozen=True)
class ModelConfig:
    """
    Agent architecture.

    ``vocab_size`` of 0 means "size of the packaged vocabulary" and is
    resolved when the run config is loaded.
    """

    hidden: int = 64
    language_layers: int = 2
    cross_layers: int = 2
    vocab_size: int = 0
    num_actions: int = NUM_ACTIONS
    num_views: int = NUM_VIEWS
    feature_width: int = FEATURE_WIDTH
    num_categories: int = NUM_CATEGORIES
    wide_view: bool = True
    view_act_matching: bool = True
    act_type_gate: bool = True
    history_window: int = 4
    max_positions: int = 128
    max_subgoal_steps: int = 32
    gate_loss_weight: float = 0.5

    def __post_init__(self):
        for name in ('hidden', 'language_layers', 'cross_layers', 'history_window',
                     'max_positions', 'max_subgoal_steps'):
            if getattr(self, name) < 1:
                raise ConfigError(f"model.{name} must be positive, got {getattr(self, name)}")
        if self.vocab_size < 0:
            raise ConfigError(f"model.vocab_size must be nonnegative, got {self.vocab_size}")
        fixed = {'num_actions': NUM_ACTIONS, 'num_views': NUM_VIEWS,
                 'feature_width': FEATURE_WIDTH, 'num_categories': NUM_CATEGORIES}
        for name, expected in fixed.items():
            if getattr(self, name) != expected:
                raise ConfigError(f"model.{name} must equal the environment's {expected}, got {getattr(self, name)}")
        if self.view_act_matching and not self.wide_view:
            raise ConfigError("model.view_act_matching requires model.wide_view")
        if self.act_type_gate and not self.view_act_matching:
            raise ConfigError("model.act_type_gate requires model.view_act_matching")
        if self.gate_loss_weight < 0:
            raise ConfigError("model.gate_loss_weight must be nonnegative")

    @property
    def flags(self) -> Tuple[bool, bool, bool]:
        return (self.wide_view, self.view_act_matching, self.act_type_gate)

    @property
    def row(self) -> int:
        """Ablation row number (1-4) of the current flags."""
        return ABLATION_ROWS.index(self.flags) + 1

    def for_row(self, row: int) -> 'ModelConfig':
        if not 1 <= row <= len(ABLATION_ROWS):
            raise ConfigError(f"Ablation row must be in 1..{len(ABLATION_ROWS)}, got {row}")
        wide, matching, gate = ABLATION_ROWS[row - 1]
        return dataclasses.replace(self, wide_view=wide, view_act_matching=matching, act_type_gate=gate)
