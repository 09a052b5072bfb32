"""Central finite-difference checks against the analytic gradients of the tape."""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from vam_gridworld.tensor.autodiff import Tensor, backward

DEFAULT_STEP = 1e-5


@dataclass(frozen=True)
class GradcheckResult:
    name: str
    max_relative_error: float
    tolerance: float
    instances: int

    @property
    def passed(self) -> bool:
        return bool(self.max_relative_error < self.tolerance)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Norm of the difference over the summed norms; ``floor`` keeps all-zero gradients comparable."""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    scale = max(np.linalg.norm(a) + np.linalg.norm(n), floor)
    return float(np.linalg.norm(a - n) / scale)


def numerical_gradient(fn: Callable[[], Tensor], tensor: Tensor, h: float = DEFAULT_STEP,
                       entries: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Central differences of scalar ``fn()`` with respect to ``tensor``.

    ``entries`` limits the check to some flat indices; the others stay zero.
    The tensor is restored after each perturbation.
    """
    flat = tensor.data.reshape(-1)
    grad = np.zeros(flat.size, dtype=np.float64)
    indices = range(flat.size) if entries is None else entries
    for i in indices:
        original = flat[i]
        flat[i] = original + h
        plus = fn().item()
        flat[i] = original - h
        minus = fn().item()
        flat[i] = original
        grad[i] = (plus - minus) / (2.0 * h)
    return grad.reshape(tensor.shape)


def analytic_gradients(fn: Callable[[], Tensor], tensors: Sequence[Tensor]) -> List[np.ndarray]:
    for t in tensors:
        t.zero_grad()
    backward(fn())
    return [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in tensors]


def gradient_error(fn: Callable[[], Tensor], tensors: Sequence[Tensor], h: float = DEFAULT_STEP,
                   max_entries: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> float:
    """
    Largest relative error between analytic and numerical gradients over ``tensors``.

    With ``max_entries`` set, each tensor is checked at that many random
    entries (drawn from ``rng``) instead of everywhere.
    """
    analytic = analytic_gradients(fn, tensors)
    worst = 0.0
    for t, a in zip(tensors, analytic):
        if max_entries is not None and t.size > max_entries:
            generator = rng if rng is not None else np.random.default_rng(0)
            entries = np.sort(generator.choice(t.size, size=max_entries, replace=False))
            numeric = numerical_gradient(fn, t, h, entries)
            a = a.reshape(-1)[entries]
            numeric = numeric.reshape(-1)[entries]
        else:
            numeric = numerical_gradient(fn, t, h)
        worst = max(worst, relative_error(a, numeric))
    return worst
