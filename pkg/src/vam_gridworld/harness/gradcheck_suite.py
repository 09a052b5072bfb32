"""Finite-difference suite over every differentiable primitive and the full training loss."""

import logging
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from vam_gridworld.agent.config import ModelConfig
from vam_gridworld.agent.inputs import NO_OBJECT, StepGroup, history_row
from vam_gridworld.agent.model import VamModel
from vam_gridworld.env.actions import ACTION_KINDS, NUM_ACTIONS
from vam_gridworld.env.instructions import load_vocabulary
from vam_gridworld.env.world import FEATURE_WIDTH, NUM_VIEWS
from vam_gridworld.tensor import autodiff as ad
from vam_gridworld.tensor.autodiff import Tensor
from vam_gridworld.tensor.gradcheck import DEFAULT_STEP, GradcheckResult, gradient_error

logger = logging.getLogger(__name__)

TOLERANCE = 1e-3
INSTANCES = 20

Case = Tuple[Callable[[], Tensor], List[Tensor]]


def _param(rng: np.random.Generator, *shape: int, low: float = -1.0, high: float = 1.0) -> Tensor:
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True)


def _dims(rng: np.random.Generator, count: int, low: int = 1, high: int = 4) -> List[int]:
    return [int(d) for d in rng.integers(low, high + 1, size=count)]


def _weighted(out_fn: Callable[[], Tensor], shape: Tuple[int, ...], rng: np.random.Generator) -> Callable[[], Tensor]:
    """Scalarise through a fixed random weighting so every output entry matters."""
    weights = Tensor(rng.normal(size=shape))
    return lambda: ad.tensor_sum(out_fn() * weights)


def _elementwise(op) -> Callable[[np.random.Generator], Case]:
    def case(rng):
        m, n = _dims(rng, 2)
        a, b = _param(rng, m, n), _param(rng, n)
        if op is ad.div:
            b = Tensor(rng.uniform(0.5, 2.0, size=n) * rng.choice([-1.0, 1.0], size=n), requires_grad=True)
        return _weighted(lambda: op(a, b), (m, n), rng), [a, b]
    return case


def _unary(op, low: float = -2.0, high: float = 2.0) -> Callable[[np.random.Generator], Case]:
    def case(rng):
        m, n = _dims(rng, 2)
        x = _param(rng, m, n, low=low, high=high)
        return _weighted(lambda: op(x), (m, n), rng), [x]
    return case


def _matmul(rng):
    m, k, n = _dims(rng, 3)
    a, b = _param(rng, m, k), _param(rng, k, n)
    return _weighted(lambda: ad.matmul(a, b), (m, n), rng), [a, b]


def _transpose(rng):
    m, n = _dims(rng, 2)
    x = _param(rng, m, n)
    return _weighted(lambda: ad.transpose(x), (n, m), rng), [x]


def _reshape(rng):
    m, n = _dims(rng, 2)
    x = _param(rng, m, n)
    return _weighted(lambda: ad.reshape(x, (n, m)), (n, m), rng), [x]


def _sum(rng):
    m, n = _dims(rng, 2)
    x = _param(rng, m, n)
    return _weighted(lambda: ad.tensor_sum(x, axis=1), (m,), rng), [x]


def _mean(rng):
    m, n = _dims(rng, 2)
    x = _param(rng, m, n)
    return _weighted(lambda: ad.tensor_mean(x, axis=0, keepdims=True), (1, n), rng), [x]


def _concat(rng):
    m, n1, n2 = _dims(rng, 3)
    a, b = _param(rng, m, n1), _param(rng, m, n2)
    return _weighted(lambda: ad.concat([a, b], axis=1), (m, n1 + n2), rng), [a, b]


def _take_rows(rng):
    rows, n, picks = _dims(rng, 3)
    table = _param(rng, rows, n)
    idx = rng.integers(0, rows, size=picks)
    return _weighted(lambda: ad.take_rows(table, idx), (picks, n), rng), [table]


def _softmax(rng):
    m, n = _dims(rng, 2)
    x = _param(rng, m, n, low=-3.0, high=3.0)
    return _weighted(lambda: ad.softmax(x, axis=-1), (m, n), rng), [x]


def _log_softmax(rng):
    m, n = _dims(rng, 2)
    x = _param(rng, m, n, low=-3.0, high=3.0)
    return _weighted(lambda: ad.log_softmax(x, axis=-1), (m, n), rng), [x]


def _cross_entropy(rng):
    b, c = _dims(rng, 2, high=5)
    logits = _param(rng, b, c, low=-3.0, high=3.0)
    targets = rng.integers(0, c, size=b)
    return (lambda: ad.cross_entropy(logits, targets)), [logits]


def _layer_norm(rng):
    m, = _dims(rng, 1)
    d = int(rng.integers(2, 6))
    x, gain, bias = _param(rng, m, d), _param(rng, d), _param(rng, d)
    return _weighted(lambda: ad.layer_norm(x, gain, bias), (m, d), rng), [x, gain, bias]


def _attention(rng):
    nq, nk, d = _dims(rng, 3)
    q, k, v = _param(rng, nq, d), _param(rng, nk, d), _param(rng, nk, d)
    return _weighted(lambda: ad.attention(q, k, v), (nq, d), rng), [q, k, v]


def tiny_model_config(vocab_size: int) -> ModelConfig:
    return ModelConfig(hidden=4, language_layers=1, cross_layers=1, vocab_size=vocab_size,
                       history_window=2, max_positions=16, max_subgoal_steps=4)


def random_group(rng: np.random.Generator, config: ModelConfig, steps: int = 2) -> StepGroup:
    """A synthetic group with random tokens, views, histories and targets."""
    tokens = tuple(int(t) for t in rng.integers(0, config.vocab_size, size=5))
    histories = [[ACTION_KINDS[int(i)] for i in rng.integers(0, NUM_ACTIONS, size=t)] for t in range(steps)]
    actions = tuple(int(a) for a in rng.integers(0, NUM_ACTIONS, size=steps))
    objects = tuple(int(rng.integers(config.num_categories)) if t % 2 == 0 else NO_OBJECT for t in range(steps))
    return StepGroup(
        token_ids=tokens,
        views=rng.uniform(0.0, 1.0, size=(steps, NUM_VIEWS, FEATURE_WIDTH)),
        history=np.stack([history_row(h, config.history_window, config.num_actions) for h in histories]),
        offsets=tuple(range(steps)),
        visible=tuple(() for _ in range(steps)),
        actions=actions,
        object_categories=objects,
    )


def _compute_loss(rng):
    config = tiny_model_config(len(load_vocabulary()))
    model = VamModel(config, seed=int(rng.integers(1 << 31)))
    group = random_group(rng, config)
    return (lambda: model.compute_loss([model.forward(group)], [group])), list(model.params.values())


PRIMITIVE_CASES: Dict[str, Callable[[np.random.Generator], Case]] = {
    'add': _elementwise(ad.add),
    'sub': _elementwise(ad.sub),
    'mul': _elementwise(ad.mul),
    'div': _elementwise(ad.div),
    'exp': _unary(ad.exp),
    'log': _unary(ad.log, low=0.5, high=3.0),
    'tanh': _unary(ad.tanh),
    'gelu': _unary(ad.gelu),
    'matmul': _matmul,
    'transpose': _transpose,
    'reshape': _reshape,
    'sum': _sum,
    'mean': _mean,
    'concat': _concat,
    'take_rows': _take_rows,
    'softmax': _softmax,
    'log_softmax': _log_softmax,
    'cross_entropy': _cross_entropy,
    'layer_norm': _layer_norm,
    'attention': _attention,
}


def check_case(name: str, case: Callable[[np.random.Generator], Case], instances: int = INSTANCES,
               seed: int = 0, tolerance: float = TOLERANCE, max_entries: int = None) -> GradcheckResult:
    rng = np.random.default_rng([seed, sum(map(ord, name))])
    worst = 0.0
    for _ in range(instances):
        fn, tensors = case(rng)
        worst = max(worst, gradient_error(fn, tensors, DEFAULT_STEP, max_entries=max_entries, rng=rng))
    return GradcheckResult(name, worst, tolerance, instances)


def run_gradcheck_suite(instances: int = INSTANCES, seed: int = 0, tolerance: float = TOLERANCE,
                        names: Sequence[str] = ()) -> List[GradcheckResult]:
    """
    Check every primitive (and ``compute_loss`` on a tiny model) against
    central differences with h = 1e-5.

    Args:
        names: Restrict to these case names; empty means all.
    """
    cases = dict(PRIMITIVE_CASES)
    cases['compute_loss'] = _compute_loss
    results = []
    for name, case in cases.items():
        if names and name not in names:
            continue
        max_entries = 3 if name == 'compute_loss' else None
        result = check_case(name, case, instances, seed, tolerance, max_entries)
        logger.info("gradcheck %-14s max rel. error %.2e (%s)", name, result.max_relative_error,
                    'ok' if result.passed else 'FAILED')
        results.append(result)
    return results
