"""Reverse-mode differentiation over dense float64 arrays.

Every operation records its parents and a backward closure on the
produced tensor; ``Tensor.backward()`` walks the recorded graph once in
reverse topological order, accumulates gradients into leaves, and frees
the tape. Arrays are always float64: the finite-difference checks this
package leans on are unreliable in single precision.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Sequence

import numpy as np


class ShapeMismatchError(ValueError):
    def __init__(self, op: str, *shapes: tuple):
        super().__init__(f"{op}: incompatible shapes {' and '.join(str(s) for s in shapes)}")


class NonFiniteInputError(FloatingPointError):
    pass


class OddDimensionError(ValueError):
    pass


class Tensor:
    """Dense float64 array, optionally participating in differentiation."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_grad_owned")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._grad_owned = False  # True once .grad is a private buffer safe to mutate

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None
        self._grad_owned = False

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def backward(self) -> None:
        """Backpropagate from a scalar; frees the tape as it goes."""
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            bw = node._backward
            if bw is None:
                continue  # leaf: keep its accumulated grad
            bw(node.grad)
            node._parents = ()
            node._backward = None
            if node is not self:
                node.grad = None

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return mul(self, 1.0 / other)
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take(self, key)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)


_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Skip tape recording inside the block (inference paths)."""
    global _GRAD_ENABLED
    saved = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = saved


def _from_op(data, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    # Stored gradients are never mutated unless this tensor owns the
    # buffer, so aliasing the incoming array (or a broadcast view of it)
    # on first touch is safe and avoids a zeros_like per accumulation.
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g
        t._grad_owned = False
    elif t._grad_owned:
        t.grad += g
    else:
        t.grad = t.grad + g
        t._grad_owned = True


def _owned_grad(t: Tensor) -> np.ndarray:
    """A mutable gradient buffer for scatter-style backwards."""
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    elif not t._grad_owned:
        t.grad = t.grad.copy()
    t._grad_owned = True
    return t.grad


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _broadcast_op(name, a, b, fwd, da, db) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = fwd(a.data, b.data)
    except ValueError:
        raise ShapeMismatchError(name, a.shape, b.shape) from None

    def backward(g):
        _accumulate(a, _unbroadcast(da(g, a.data, b.data), a.shape))
        _accumulate(b, _unbroadcast(db(g, a.data, b.data), b.shape))

    return _from_op(data, (a, b), backward)


def add(a, b) -> Tensor:
    return _broadcast_op("add", a, b, np.add, lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b) -> Tensor:
    return _broadcast_op("sub", a, b, np.subtract, lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b) -> Tensor:
    return _broadcast_op("mul", a, b, np.multiply, lambda g, x, y: g * y, lambda g, x, y: g * x)


def div(a, b) -> Tensor:
    return _broadcast_op(
        "div", a, b, np.divide, lambda g, x, y: g / y, lambda g, x, y: -g * x / (y * y)
    )


def power(a, exponent: float) -> Tensor:
    a = _as_tensor(a)
    data = a.data**exponent

    def backward(g):
        _accumulate(a, g * exponent * a.data ** (exponent - 1))

    return _from_op(data, (a,), backward)


def matmul(a, b) -> Tensor:
    """Matrix product; leading batch dimensions broadcast."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    data = np.matmul(a.data, b.data)

    def backward(g):
        _accumulate(a, _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape))
        _accumulate(b, _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape))

    return _from_op(data, (a, b), backward)


def transpose(a) -> Tensor:
    """Swap the last two axes."""
    a = _as_tensor(a)
    if a.ndim < 2:
        raise ShapeMismatchError("transpose", a.shape)
    data = np.swapaxes(a.data, -1, -2)

    def backward(g):
        _accumulate(a, np.swapaxes(g, -1, -2))

    return _from_op(data, (a,), backward)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    data = a.data.reshape(shape)

    def backward(g):
        _accumulate(a, g.reshape(a.shape))

    return _from_op(data, (a,), backward)


def take(a, key) -> Tensor:
    """Basic slicing/indexing; the backward pass scatters in place."""
    a = _as_tensor(a)
    data = a.data[key]

    def backward(g):
        if a.requires_grad:
            _owned_grad(a)[key] += g

    return _from_op(data, (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeMismatchError("concat", *[t.shape for t in tensors]) from None
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, offsets, axis=axis)):
            _accumulate(t, piece)

    return _from_op(data, tuple(tensors), backward)


def relu(a) -> Tensor:
    a = _as_tensor(a)
    data = np.maximum(a.data, 0.0)

    def backward(g):
        _accumulate(a, g * (a.data > 0.0))

    return _from_op(data, (a,), backward)


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    data = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1.0 - data * data))

    return _from_op(data, (a,), backward)


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    data = np.where(x >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def backward(g):
        _accumulate(a, g * data * (1.0 - data))

    return _from_op(data, (a,), backward)


def sum_(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.shape))

    return _from_op(data, (a,), backward)


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    if axis is None:
        count = a.data.size
    elif isinstance(axis, tuple):
        count = int(np.prod([a.shape[ax] for ax in axis]))
    else:
        count = a.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def mean_pool_rows(a) -> Tensor:
    """Mean over the row axis (second-to-last): (..., n, d) -> (..., d)."""
    a = _as_tensor(a)
    if a.ndim < 2:
        raise ShapeMismatchError("mean_pool_rows", a.shape)
    return mean(a, axis=a.ndim - 2)


def softmax(a, axis: int = -1) -> Tensor:
    """Row-wise softmax with max-subtraction; rejects non-finite input."""
    a = _as_tensor(a)
    if np.isnan(a.data).any():
        raise NonFiniteInputError("softmax input contains NaN")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        dot = (g * data).sum(axis=axis, keepdims=True)
        _accumulate(a, data * (g - dot))

    return _from_op(data, (a,), backward)


def layer_norm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    a, gain, bias = _as_tensor(a), _as_tensor(gain), _as_tensor(bias)
    d = a.shape[-1]
    if d < 2:
        raise ShapeMismatchError("layer_norm", a.shape)
    mu = a.data.mean(axis=-1, keepdims=True)
    var = a.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv
    data = xhat * gain.data + bias.data

    def backward(g):
        reduce_axes = tuple(range(g.ndim - 1))
        _accumulate(gain, _unbroadcast((g * xhat).sum(axis=reduce_axes), gain.shape))
        _accumulate(bias, _unbroadcast(g.sum(axis=reduce_axes), bias.shape))
        dxhat = g * gain.data
        term = dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        _accumulate(a, inv * term)

    return _from_op(data, (a, gain, bias), backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of a (vocab, d) table by an integer id array."""
    ids = np.asarray(ids, dtype=np.int64)
    data = table.data[ids]

    def backward(g):
        if table.requires_grad:
            np.add.at(_owned_grad(table), ids, g)

    return _from_op(data, (table,), backward)


def dropout(a: Tensor, p: float, rng, training: bool) -> Tensor:
    """Inverted dropout; identity when not training or p == 0."""
    if not training or p <= 0.0:
        return a
    keep = (rng.uniform(0.0, 1.0, a.shape) >= p).astype(np.float64) / (1.0 - p)
    return mul(a, Tensor(keep))


def positional_encoding(max_len: int, d: int) -> Tensor:
    """Sinusoidal position table: sin on even columns, cos on odd ones.

    entry[pos, 2i] = sin(pos / 10000^(2i/d)),
    entry[pos, 2i + 1] = cos(pos / 10000^(2i/d)).
    """
    if d % 2 != 0:
        raise OddDimensionError(f"encoding dimension must be even, got {d}")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    i2 = np.arange(0, d, 2, dtype=np.float64)
    angle = pos / np.power(10000.0, i2 / d)
    table = np.zeros((max_len, d), dtype=np.float64)
    table[:, 0::2] = np.sin(angle)
    table[:, 1::2] = np.cos(angle)
    return Tensor(table)
