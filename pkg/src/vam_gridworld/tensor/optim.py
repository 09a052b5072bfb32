"""AdamW with decoupled weight decay."""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from vam_gridworld.common.errors import ConfigError, ContractError
from vam_gridworld.tensor.autodiff import Tensor

FULL_SCALE_LEARNING_RATE = 1e-5


@dataclass
class AdamWState:
    learning_rate: float = 1e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    weight_decay: float = 0.01
    epsilon: float = 1e-8
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if len(self.betas) != 2 or not all(0.0 < b < 1.0 for b in self.betas):
            raise ConfigError(f"betas must both lie in (0, 1), got {self.betas}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be nonnegative, got {self.weight_decay}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        self.betas = (float(self.betas[0]), float(self.betas[1]))


def adamw_step(params: Dict[str, Tensor], state: AdamWState) -> None:
    """
    Apply one AdamW update in place to every tensor in ``params``.

    Weight decay shrinks the parameter directly and never enters the moment
    estimates. Moments are bias-corrected with the post-increment step count.

    Raises:
        ContractError: If any parameter has no gradient.
    """
    missing = [name for name, p in params.items() if p.grad is None]
    if missing:
        raise ContractError(f"adamw_step: no gradient for {', '.join(sorted(missing))}")

    state.step += 1
    beta1, beta2 = state.betas
    lr = state.learning_rate
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step

    for name in sorted(params):
        p = params[name]
        g = p.grad
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        state.first_moment[name] = m
        state.second_moment[name] = v

        if state.weight_decay:
            p.data *= 1.0 - lr * state.weight_decay
        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
