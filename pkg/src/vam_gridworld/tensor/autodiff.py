"""
Dense float64 tensors with reverse-mode automatic differentiation.

Every primitive returns a new Tensor that remembers its parents and a
closure mapping the output gradient to one gradient per parent. The tape is
rebuilt from those links each time ``backward`` runs.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from vam_gridworld.common.errors import (
    ContractError,
    DimensionError,
    NumericError,
    TargetIndexError,
)

GradFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]
Operand = Union['Tensor', float, int, np.ndarray]

_GELU_C = math.sqrt(2.0 / math.pi)


class Tensor:
    """An n-dimensional float64 array that can carry a gradient."""

    __slots__ = ('data', 'requires_grad', 'grad', '_parents', '_grad_fn', '_op')

    def __init__(self, data, requires_grad: bool = False):
        self.data: np.ndarray = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple['Tensor', ...] = ()
        self._grad_fn: Optional[GradFn] = None
        self._op = 'leaf'

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def op(self) -> str:
        return self._op

    @property
    def parents(self) -> Tuple['Tensor', ...]:
        return self._parents

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float('nan')

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

    # operators -----------------------------------------------------------

    def __add__(self, other: Operand) -> 'Tensor':
        return add(self, other)

    def __radd__(self, other: Operand) -> 'Tensor':
        return add(other, self)

    def __sub__(self, other: Operand) -> 'Tensor':
        return sub(self, other)

    def __rsub__(self, other: Operand) -> 'Tensor':
        return sub(other, self)

    def __mul__(self, other: Operand) -> 'Tensor':
        return mul(self, other)

    def __rmul__(self, other: Operand) -> 'Tensor':
        return mul(other, self)

    def __truediv__(self, other: Operand) -> 'Tensor':
        return div(self, other)

    def __neg__(self) -> 'Tensor':
        return mul(self, -1.0)

    def __matmul__(self, other: 'Tensor') -> 'Tensor':
        return matmul(self, other)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> 'Tensor':
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> 'Tensor':
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> 'Tensor':
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    @property
    def T(self) -> 'Tensor':
        return transpose(self)


def _as_tensor(value: Operand) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data: np.ndarray, parents: Sequence[Tensor], grad_fn: GradFn, op: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = any(p.requires_grad for p in parents)
    out._parents = tuple(parents) if out.requires_grad else ()
    out._grad_fn = grad_fn if out.requires_grad else None
    out._op = op
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` back down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# elementwise -------------------------------------------------------------

def add(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast('add', a, b)

    def grad_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)
    return _result(a.data + b.data, (a, b), grad_fn, 'add')


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast('sub', a, b)

    def grad_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)
    return _result(a.data - b.data, (a, b), grad_fn, 'sub')


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast('mul', a, b)

    def grad_fn(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)
    return _result(a.data * b.data, (a, b), grad_fn, 'mul')


def div(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast('div', a, b)

    def grad_fn(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.shape))
    return _result(a.data / b.data, (a, b), grad_fn, 'div')


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)

    def grad_fn(g):
        return (g * y,)
    return _result(y, (x,), grad_fn, 'exp')


def log(x: Tensor) -> Tensor:
    def grad_fn(g):
        return (g / x.data,)
    return _result(np.log(x.data), (x,), grad_fn, 'log')


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)

    def grad_fn(g):
        return (g * (1.0 - y * y),)
    return _result(y, (x,), grad_fn, 'tanh')


def gelu(x: Tensor) -> Tensor:
    """Tanh-approximated GELU; smooth everywhere, which keeps gradient checks clean."""
    u = _GELU_C * (x.data + 0.044715 * x.data ** 3)
    t = np.tanh(u)
    y = 0.5 * x.data * (1.0 + t)

    def grad_fn(g):
        du = _GELU_C * (1.0 + 3.0 * 0.044715 * x.data ** 2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t * t) * du),)
    return _result(y, (x,), grad_fn, 'gelu')


# shape ---------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Product of two matrices; records dA = G·Bᵀ and dB = Aᵀ·G."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def grad_fn(g):
        return g @ b.data.T, a.data.T @ g
    return _result(a.data @ b.data, (a, b), grad_fn, 'matmul')


def transpose(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise DimensionError(f"transpose: expected a matrix, got shape {x.shape}")

    def grad_fn(g):
        return (g.T,)
    return _result(x.data.T.copy(), (x,), grad_fn, 'transpose')


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        y = x.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError(f"reshape: cannot view {x.shape} as {tuple(shape)}") from None

    def grad_fn(g):
        return (g.reshape(x.shape),)
    return _result(y, (x,), grad_fn, 'reshape')


def tensor_sum(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    y = np.sum(x.data, axis=axis, keepdims=keepdims)

    def grad_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)
    return _result(np.asarray(y, dtype=np.float64), (x,), grad_fn, 'sum')


def tensor_mean(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    count = x.size if axis is None else x.shape[axis]
    return mul(tensor_sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ContractError("concat: nothing to concatenate")
    try:
        y = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = ', '.join(str(t.shape) for t in tensors)
        raise DimensionError(f"concat: shapes {shapes} disagree off axis {axis}") from None
    cuts = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def grad_fn(g):
        return tuple(np.split(g, cuts, axis=axis))
    return _result(y, tuple(tensors), grad_fn, 'concat')


def take_rows(table: Tensor, indices: Sequence[int]) -> Tensor:
    """Gather rows of ``table``; repeated indices accumulate gradient."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise TargetIndexError(f"take_rows: index out of range for {table.shape[0]} rows")

    def grad_fn(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        return (full,)
    return _result(table.data[idx], (table,), grad_fn, 'take_rows')


# normalisation and losses ------------------------------------------------

def _check_finite(op: str, x: Tensor) -> None:
    if not np.all(np.isfinite(x.data)):
        raise NumericError(f"{op}: input contains non-finite values")


def _softmax_array(x: np.ndarray, axis: int) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax (max-subtracted) along ``axis``."""
    if x.ndim == 0 or x.shape[axis] < 1:
        raise DimensionError(f"softmax: empty axis in shape {x.shape}")
    _check_finite('softmax', x)
    y = _softmax_array(x.data, axis)

    def grad_fn(g):
        return (y * (g - np.sum(g * y, axis=axis, keepdims=True)),)
    return _result(y, (x,), grad_fn, 'softmax')


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    _check_finite('log_softmax', x)
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    lse = np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    y = shifted - lse
    p = np.exp(y)

    def grad_fn(g):
        return (g - p * np.sum(g, axis=axis, keepdims=True),)
    return _result(y, (x,), grad_fn, 'log_softmax')


def cross_entropy(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """Mean negative log-probability of each row's target class."""
    if logits.ndim != 2:
        raise DimensionError(f"cross_entropy: expected (batch, classes) logits, got {logits.shape}")
    batch, classes = logits.shape
    t = np.asarray(targets, dtype=np.int64).reshape(-1)
    if t.shape[0] != batch:
        raise DimensionError(f"cross_entropy: {t.shape[0]} targets for {batch} rows")
    if batch == 0:
        raise ContractError("cross_entropy: empty batch")
    if t.min() < 0 or t.max() >= classes:
        raise TargetIndexError(f"cross_entropy: target out of range for {classes} classes")
    _check_finite('cross_entropy', logits)

    p = _softmax_array(logits.data, axis=1)
    rows = np.arange(batch)
    shifted = logits.data - np.max(logits.data, axis=1, keepdims=True)
    log_p = shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
    loss = -np.mean(log_p[rows, t])

    def grad_fn(g):
        d = p.copy()
        d[rows, t] -= 1.0
        return (d * (g / batch),)
    return _result(np.asarray(loss), (logits,), grad_fn, 'cross_entropy')


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis to zero mean / unit variance, then apply ``gain`` and ``bias``."""
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise DimensionError(f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match width {d}")
    mu = np.mean(x.data, axis=-1, keepdims=True)
    xc = x.data - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    y = xhat * gain.data + bias.data
    lead = tuple(range(x.ndim - 1))

    def grad_fn(g):
        dxhat = g * gain.data
        dx = inv * (dxhat
                    - np.mean(dxhat, axis=-1, keepdims=True)
                    - xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True))
        return dx, np.sum(g * xhat, axis=lead), np.sum(g, axis=lead)
    return _result(y, (x, gain, bias), grad_fn, 'layer_norm')


def attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """Single-head scaled dot-product attention: softmax(q·kᵀ/√d)·v."""
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise DimensionError(f"attention: expected matrices, got {q.shape}, {k.shape}, {v.shape}")
    if q.shape[1] != k.shape[1]:
        raise DimensionError(f"attention: query width {q.shape} does not match key width {k.shape}")
    if k.shape[0] != v.shape[0]:
        raise DimensionError(f"attention: {k.shape} keys but {v.shape} values")
    scores = mul(matmul(q, transpose(k)), 1.0 / math.sqrt(q.shape[1]))
    return matmul(softmax(scores, axis=-1), v)


# tape ------------------------------------------------------------------------

@dataclass
class ComputationTape:
    """Nodes reachable from a root, inputs before the operations that use them."""

    nodes: List[Tensor] = field(default_factory=list)

    @classmethod
    def record(cls, root: Tensor) -> 'ComputationTape':
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def replay(self, root: Tensor) -> None:
        """Walk the tape backward from ``root``, adding gradients into ``.grad``."""
        pending: Dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
        for node in reversed(self.nodes):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            node.grad = g.copy() if node.grad is None else node.grad + g
            if node._grad_fn is None:
                continue
            for parent, pg in zip(node._parents, node._grad_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = pg if key not in pending else pending[key] + pg


def backward(loss: Tensor) -> ComputationTape:
    """
    Accumulate d(loss)/d(t) into ``t.grad`` for every tensor ``t`` on the tape.

    Repeated calls without zeroing add to the existing gradients.

    Raises:
        ContractError: If ``loss`` is not a scalar or nothing on its tape
            requires a gradient.
    """
    if loss.size != 1:
        raise ContractError(f"backward: loss must be a scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("backward: loss is not on the tape (no input requires grad)")
    tape = ComputationTape.record(loss)
    tape.replay(loss)
    return tape


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.zero_grad()
