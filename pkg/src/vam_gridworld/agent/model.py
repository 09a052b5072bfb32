"""
Cross-modal agent with view-action matching and an action-type gate.

Language: word + position embeddings through pre-norm self-attention
blocks. Each view is split into two region tokens (objects, layout); each
token is joined with the step context (action history + steps elapsed on
the current instruction), projected by a linear layer, then passed through
cross-attention blocks over the language features. A view's feature V_i is
the mean of its region tokens.

The three ablation flags select how V_i become action scores:

    row 1  front view only, linear classifier over [V_front; context]
    row 2  five views concatenated into one feature, same classifier
    row 3  feedforward match score M_i over [V_view(a); A_a] per action
    row 4  row 3 times exp-positive per-type gate weights
"""

import functools
import logging
import math
import zlib
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from vam_gridworld.agent.config import ModelConfig
from vam_gridworld.agent.inputs import NO_OBJECT, StepGroup
from vam_gridworld.common.config import from_plain, to_plain
from vam_gridworld.common.errors import ConfigError, ContractError, DataError, DimensionError
from vam_gridworld.env.actions import ACTION_KINDS, NAVIGATION_KINDS, ActionKind
from vam_gridworld.env.world import OBJECT_REGION_WIDTH, VIEW_NAMES
from vam_gridworld.tensor import autodiff as ad
from vam_gridworld.tensor.autodiff import Tensor
from vam_gridworld.tensor.checkpoint import load_checkpoint, save_checkpoint

logger = logging.getLogger(__name__)

FRONT = VIEW_NAMES.index('front')

_VIEW_OF_ACTION = {
    ActionKind.TURN_LEFT: 'left',
    ActionKind.TURN_RIGHT: 'right',
    ActionKind.LOOK_UP: 'up',
    ActionKind.LOOK_DOWN: 'down',
}


def assign_views_to_actions() -> Tuple[int, ...]:
    """
    View index each action is scored against, in action order.

    Turns and looks use the view they would reveal; MoveForward, every
    manipulation action and Stop use the front view.
    """
    return tuple(VIEW_NAMES.index(_VIEW_OF_ACTION.get(kind, 'front')) for kind in ACTION_KINDS)


def type_matrix(num_actions: int = len(ACTION_KINDS)) -> np.ndarray:
    """(2, actions) indicator: row 0 navigation, row 1 manipulation (Stop included)."""
    m = np.zeros((2, num_actions), dtype=np.float64)
    m[0, :len(NAVIGATION_KINDS)] = 1.0
    m[1, len(NAVIGATION_KINDS):] = 1.0
    return m


@dataclass(frozen=True, eq=False)
class MatchScores:
    """Raw scores ``M``, positive gate weights, and ``gated = M * gate``; each (steps, actions)."""

    M: Tensor
    gate: Tensor
    gated: Tensor


@dataclass(frozen=True, eq=False)
class ModelOutput:
    scores: MatchScores
    object_logits: Tensor
    type_logits: Optional[Tensor]
    views: Tensor

    def action_distribution(self) -> Tensor:
        return ad.softmax(self.scores.gated, axis=-1)

    def predicted_actions(self) -> np.ndarray:
        return np.argmax(self.scores.gated.data, axis=1)


def parameter_specs(config: ModelConfig) -> Dict[str, Tuple[Tuple[int, ...], str]]:
    """Name -> (shape, initialiser) for every parameter the configured row uses."""
    d = config.hidden
    actions = config.num_actions
    specs: Dict[str, Tuple[Tuple[int, ...], str]] = {}

    def linear(prefix: str, n_in: int, n_out: int) -> None:
        specs[f'{prefix}.w'] = ((n_in, n_out), 'weight')
        specs[f'{prefix}.b'] = ((n_out,), 'zeros')

    def norm(prefix: str) -> None:
        specs[f'{prefix}.g'] = ((d,), 'ones')
        specs[f'{prefix}.b'] = ((d,), 'zeros')

    def block(prefix: str) -> None:
        norm(f'{prefix}.ln_attn')
        for part in ('q', 'k', 'v', 'o'):
            specs[f'{prefix}.attn.{part}'] = ((d, d), 'weight')
        norm(f'{prefix}.ln_ffn')
        linear(f'{prefix}.ffn1', d, d)
        linear(f'{prefix}.ffn2', d, d)

    specs['word_embedding'] = ((config.vocab_size, d), 'embedding')
    specs['position_embedding'] = ((config.max_positions, d), 'embedding')
    for layer in range(config.language_layers):
        block(f'language.{layer}')
    norm('language.ln_out')

    linear('history', config.history_window * (actions + 1), d)
    specs['offset_embedding'] = ((config.max_subgoal_steps, d), 'embedding')
    collapsed = config.wide_view and not config.view_act_matching
    view_width = config.num_views * config.feature_width if collapsed else config.feature_width
    linear('fusion', view_width + d, d)
    for layer in range(config.cross_layers):
        block(f'cross.{layer}')
    norm('cross.ln_out')

    if config.view_act_matching:
        specs['action_embedding'] = ((actions, d), 'embedding')
        linear('match1', 2 * d, d)
        linear('match2', d, 1)
    else:
        linear('classifier', 2 * d, actions)
    if config.act_type_gate:
        linear('gate', config.num_views * d, 2)
    linear('object_head', d, config.num_categories)
    return specs


def init_parameter(name: str, shape: Tuple[int, ...], kind: str, seed: int) -> np.ndarray:
    """Initial value drawn from a generator keyed by (seed, name), independent of other parameters."""
    if kind == 'ones':
        return np.ones(shape, dtype=np.float64)
    if kind == 'zeros':
        return np.zeros(shape, dtype=np.float64)
    rng = np.random.default_rng([seed, zlib.crc32(name.encode('utf-8'))])
    if kind == 'embedding':
        return rng.normal(0.0, 0.1, size=shape)
    return rng.normal(0.0, 1.0 / math.sqrt(shape[0]), size=shape)


class VamModel:
    """
    Parameters plus the forward pass of one ablation row.

    Example:
        >>> model = VamModel(ModelConfig(vocab_size=len(vocab)), seed=0)
        >>> out = model.forward(group)
        >>> loss = model.compute_loss([out], [group])
    """

    def __init__(self, config: ModelConfig, seed: int = 0, params: Optional[Dict[str, np.ndarray]] = None):
        if config.vocab_size < 1:
            raise ConfigError("model.vocab_size must be resolved to the vocabulary size before building a model")
        self.config = config
        self.seed = seed
        self.specs = parameter_specs(config)
        self.params: Dict[str, Tensor] = {}
        for name, (shape, kind) in self.specs.items():
            if params is not None:
                if name not in params:
                    raise DataError(f"Missing parameter {name!r}")
                value = np.asarray(params[name], dtype=np.float64)
                if value.shape != shape:
                    raise DataError(f"Parameter {name!r} has shape {value.shape}, expected {shape}")
            else:
                value = init_parameter(name, shape, kind, seed)
            self.params[name] = Tensor(value, requires_grad=True)
        self._region_masks = self._build_region_masks()

    def _build_region_masks(self) -> List[np.ndarray]:
        f = self.config.feature_width
        objects = np.zeros(f)
        objects[:OBJECT_REGION_WIDTH] = 1.0
        return [objects, 1.0 - objects]

    # building blocks -----------------------------------------------------------

    def _linear(self, prefix: str, x: Tensor) -> Tensor:
        return ad.matmul(x, self.params[f'{prefix}.w']) + self.params[f'{prefix}.b']

    def _norm(self, prefix: str, x: Tensor) -> Tensor:
        return ad.layer_norm(x, self.params[f'{prefix}.g'], self.params[f'{prefix}.b'])

    def _block(self, prefix: str, x: Tensor, context: Optional[Tensor] = None) -> Tensor:
        """Pre-norm attention (self-attention, or cross-attention onto ``context``) then a GELU FFN."""
        p = self.params
        h = self._norm(f'{prefix}.ln_attn', x)
        source = h if context is None else context
        attended = ad.attention(h @ p[f'{prefix}.attn.q'], source @ p[f'{prefix}.attn.k'],
                                source @ p[f'{prefix}.attn.v'])
        x = x + attended @ p[f'{prefix}.attn.o']
        h = self._norm(f'{prefix}.ln_ffn', x)
        return x + self._linear(f'{prefix}.ffn2', ad.gelu(self._linear(f'{prefix}.ffn1', h)))

    # encoders ------------------------------------------------------------------

    def encode_language(self, token_ids: Sequence[int]) -> Tensor:
        """
        Contextual token features, shape (tokens, hidden).

        Raises:
            ContractError: If the sequence is empty, too long, or holds ids
                outside the vocabulary.
        """
        ids = [int(i) for i in token_ids]
        if not ids:
            raise ContractError("encode_language: empty token sequence")
        if len(ids) > self.config.max_positions:
            raise ContractError(f"encode_language: {len(ids)} tokens exceed max_positions={self.config.max_positions}")
        if min(ids) < 0 or max(ids) >= self.config.vocab_size:
            raise ContractError(f"encode_language: token id outside a vocabulary of {self.config.vocab_size}")
        x = ad.take_rows(self.params['word_embedding'], ids) + ad.take_rows(self.params['position_embedding'],
                                                                           range(len(ids)))
        for layer in range(self.config.language_layers):
            x = self._block(f'language.{layer}', x)
        return self._norm('language.ln_out', x)

    def encode_history(self, history: np.ndarray) -> Tensor:
        """Linear map of one-hot action windows, shape (rows, hidden)."""
        history = np.atleast_2d(np.asarray(history, dtype=np.float64))
        expected = self.params['history.w'].shape[0]
        if history.shape[1] != expected:
            raise DimensionError(f"encode_history: rows of width {history.shape[1]}, expected {expected}")
        return self._linear('history', Tensor(history))

    def step_context(self, group: StepGroup) -> Tensor:
        """History embedding plus an embedding of steps spent on the current instruction."""
        last = self.config.max_subgoal_steps - 1
        offsets = [min(o, last) for o in group.offsets]
        return self.encode_history(group.history) + ad.take_rows(self.params['offset_embedding'], offsets)

    def fuse_views(self, view_rows: np.ndarray, context: Tensor, language: Tensor) -> Tensor:
        """
        One pooled cross-modal feature per row of ``view_rows``.

        Args:
            view_rows: Raw features, shape (rows, width); width is one view,
                or all views concatenated for the collapsed wide-view row.
            context: Step context per row, shape (rows, hidden).
            language: Output of ``encode_language``.

        Raises:
            DimensionError: If the feature width does not match the fusion layer.
        """
        view_rows = np.atleast_2d(np.asarray(view_rows, dtype=np.float64))
        d = self.config.hidden
        width = self.params['fusion.w'].shape[0] - d
        if view_rows.shape[1] != width:
            raise DimensionError(f"fuse_view: feature width {view_rows.shape[1]} does not match {width}")
        if context.shape != (view_rows.shape[0], d):
            raise DimensionError(f"fuse_view: context {context.shape} for {view_rows.shape[0]} rows")

        rows = view_rows.shape[0]
        repeats = width // self.config.feature_width
        masks = [np.tile(m, repeats) for m in self._region_masks]
        regions = len(masks)
        tokens = np.stack([view_rows * m for m in masks], axis=1).reshape(rows * regions, width)
        repeated = ad.take_rows(context, np.repeat(np.arange(rows), regions))

        x = self._linear('fusion', ad.concat([Tensor(tokens), repeated], axis=1))
        for layer in range(self.config.cross_layers):
            x = self._block(f'cross.{layer}', x, language)
        x = self._norm('cross.ln_out', x)

        pooled = ad.take_rows(x, np.arange(rows) * regions)
        for r in range(1, regions):
            pooled = pooled + ad.take_rows(x, np.arange(rows) * regions + r)
        return pooled * (1.0 / regions)

    def fuse_view(self, feature: np.ndarray, history: Tensor, language: Tensor) -> Tensor:
        """Single-view form of ``fuse_views``; returns V_i with shape (1, hidden)."""
        return self.fuse_views(np.asarray(feature)[None, :], history.reshape(1, self.config.hidden), language)

    # scoring -------------------------------------------------------------------

    def match_score(self, views: Tensor, actions: Tensor) -> Tensor:
        """Two-layer GELU feedforward over [V_i; A_i]; one score per row."""
        return self._linear('match2', ad.gelu(self._linear('match1', ad.concat([views, actions], axis=1))))

    def gate_weights(self, views: Tensor, steps: int) -> Tuple[Tensor, Tensor]:
        """
        Type logits (steps, 2) from the concatenated five views, and the
        exp-positive weight of each action's type (steps, actions).
        """
        flat = views.reshape(steps, self.config.num_views * self.config.hidden)
        logits = self._linear('gate', flat)
        return logits, ad.matmul(ad.exp(logits), Tensor(type_matrix(self.config.num_actions)))

    def forward(self, group: StepGroup, language: Optional[Tensor] = None,
                gate_override: Optional[Sequence[float]] = None) -> ModelOutput:
        """
        Scores for every step of ``group`` under the configured ablation row.

        Args:
            group: Steps sharing one instruction.
            language: Precomputed ``encode_language(group.token_ids)``.
            gate_override: Fixed (navigation, manipulation) gate weights used
                instead of the gate layer; only meaningful with matching on.
        """
        cfg = self.config
        steps = group.steps
        views_n = cfg.num_views
        if group.views.shape[1:] != (views_n, cfg.feature_width):
            raise DimensionError(f"forward: view block {group.views.shape[1:]}, "
                                 f"expected {(views_n, cfg.feature_width)}")
        language = self.encode_language(group.token_ids) if language is None else language
        context = self.step_context(group)

        if not cfg.wide_view:
            views = self.fuse_views(group.views[:, FRONT, :], context, language)
            front = views
        elif not cfg.view_act_matching:
            views = self.fuse_views(group.views.reshape(steps, views_n * cfg.feature_width), context, language)
            front = views
        else:
            per_view_context = ad.take_rows(context, np.repeat(np.arange(steps), views_n))
            views = self.fuse_views(group.views.reshape(steps * views_n, cfg.feature_width),
                                    per_view_context, language)
            front = ad.take_rows(views, np.arange(steps) * views_n + FRONT)

        type_logits = None
        actions = cfg.num_actions
        if not cfg.view_act_matching:
            M = self._linear('classifier', ad.concat([front, context], axis=1))
            gate = Tensor(np.ones((steps, actions)))
        else:
            assign = assign_views_to_actions()
            view_rows = [t * views_n + assign[a] for t in range(steps) for a in range(actions)]
            action_rows = [a for _ in range(steps) for a in range(actions)]
            M = self.match_score(ad.take_rows(views, view_rows),
                                 ad.take_rows(self.params['action_embedding'], action_rows)).reshape(steps, actions)
            if gate_override is not None:
                weights = np.asarray(gate_override, dtype=np.float64) @ type_matrix(actions)
                gate = Tensor(np.tile(weights, (steps, 1)))
            elif cfg.act_type_gate:
                type_logits, gate = self.gate_weights(views, steps)
            else:
                gate = Tensor(np.ones((steps, actions)))

        scores = MatchScores(M=M, gate=gate, gated=M * gate)
        return ModelOutput(scores=scores, object_logits=self._linear('object_head', front),
                           type_logits=type_logits, views=views)

    forward_variant = forward

    # loss ----------------------------------------------------------------------

    def compute_loss(self, outputs: Sequence[ModelOutput], groups: Sequence[StepGroup]) -> Tensor:
        """
        Teacher-forced loss over a batch of groups.

        Action cross-entropy on gated scores, averaged over all steps; object
        category cross-entropy averaged over steps whose target takes an
        object; plus ``gate_loss_weight`` times the action-type cross-entropy
        when the gate is on.

        Raises:
            ContractError: If a group carries no ground truth or a target
                action index is outside the action set.
        """
        if len(outputs) != len(groups) or not groups:
            raise ContractError("compute_loss: need one output per group and at least one group")
        actions = self.config.num_actions
        total_steps = sum(g.steps for g in groups)
        total_objects = sum(sum(1 for c in g.object_categories if c != NO_OBJECT) for g in groups)
        weight = self.config.gate_loss_weight

        terms: List[Tensor] = []
        for out, group in zip(outputs, groups):
            if len(group.actions) != group.steps:
                raise ContractError("compute_loss: group has no ground-truth actions")
            if any(not 0 <= a < actions for a in group.actions):
                raise ContractError(f"compute_loss: ground-truth action outside the {actions} known actions")
            share = group.steps / total_steps
            terms.append(ad.cross_entropy(out.scores.gated, group.actions) * share)

            rows = [t for t, c in enumerate(group.object_categories) if c != NO_OBJECT]
            if rows:
                targets = [group.object_categories[t] for t in rows]
                logits = ad.take_rows(out.object_logits, rows)
                terms.append(ad.cross_entropy(logits, targets) * (len(rows) / total_objects))

            if out.type_logits is not None and weight > 0:
                terms.append(ad.cross_entropy(out.type_logits, group.action_types) * (weight * share))
        return functools.reduce(ad.add, terms)

    # parameters ----------------------------------------------------------------

    def zero_grad(self) -> None:
        ad.zero_grad(self.params.values())

    def parameter_arrays(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def parameter_groups(self) -> Dict[str, List[str]]:
        """Parameter names by component, e.g. ``word_embedding`` or ``gate``."""
        groups: Dict[str, List[str]] = {}
        for name in self.params:
            groups.setdefault(name.split('.')[0], []).append(name)
        return groups

    def save(self, stem: str, metadata: Optional[Dict] = None) -> None:
        meta = {"model_config": to_plain(self.config), "seed": self.seed}
        meta.update(metadata or {})
        save_checkpoint(self.params, stem, meta)

    @classmethod
    def load(cls, stem: str) -> 'VamModel':
        """
        Raises:
            DataError: If the checkpoint is missing, unreadable, or does not
                match its recorded model config.
        """
        arrays, metadata = load_checkpoint(stem)
        if "model_config" not in metadata:
            raise DataError(f"Checkpoint {stem} has no model_config metadata")
        try:
            config = from_plain(ModelConfig, metadata["model_config"])
        except ConfigError as e:
            raise DataError(f"Checkpoint {stem}: {e}") from None
        extra = sorted(set(arrays) - set(parameter_specs(config)))
        if extra:
            raise DataError(f"Checkpoint {stem} has unexpected parameters: {', '.join(extra)}")
        return cls(config, seed=int(metadata.get("seed", 0)), params=arrays)
