"""Minimal reverse-mode differentiation over float64 numpy arrays.

A :class:`Tensor` wraps an ndarray and remembers how it was produced; calling
:func:`grad` on a scalar output walks the graph once in reverse topological
order and accumulates exact gradients.  The op set is exactly what the
attention network and its contrastive loss need: broadcast arithmetic,
(stacked) matmul, the pointwise nonlinearities, axis reductions, and the
gather / segment-sum pair that moves messages along graph edges.
"""

from __future__ import annotations

import numpy as np


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum out the axes numpy broadcasting added or stretched."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """Array node in the computation graph; leaves have no parents."""

    __slots__ = ("data", "grad", "_parents", "_bw")

    def __init__(self, data, parents=(), bw=None):
        self.data = _as_array(data)
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._bw = bw

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable Tensor's ``grad``."""
        if self.data.size != 1:
            raise ValueError("backward() needs a scalar-valued computation")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        for node in topo:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._bw is not None:
                node._bw(node.grad)

    # Operator sugar; every op also exists as a module function.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _t(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    out = Tensor(a.data + b.data, (a, b))

    def bw(g):
        a.grad += _unbroadcast(g, a.data.shape)
        b.grad += _unbroadcast(g, b.data.shape)

    out._bw = bw
    return out


def sub(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    out = Tensor(a.data - b.data, (a, b))

    def bw(g):
        a.grad += _unbroadcast(g, a.data.shape)
        b.grad -= _unbroadcast(g, b.data.shape)

    out._bw = bw
    return out


def mul(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    out = Tensor(a.data * b.data, (a, b))

    def bw(g):
        a.grad += _unbroadcast(g * b.data, a.data.shape)
        b.grad += _unbroadcast(g * a.data, b.data.shape)

    out._bw = bw
    return out


def div(a, b) -> Tensor:
    a, b = _t(a), _t(b)
    out = Tensor(a.data / b.data, (a, b))

    def bw(g):
        a.grad += _unbroadcast(g / b.data, a.data.shape)
        b.grad += _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)

    out._bw = bw
    return out


def matmul(a, b) -> Tensor:
    """np.matmul semantics for 2-D and leading-axis-stacked operands."""
    a, b = _t(a), _t(b)
    out = Tensor(np.matmul(a.data, b.data), (a, b))

    def bw(g):
        a.grad += _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.data.shape)
        b.grad += _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.data.shape)

    out._bw = bw
    return out


def relu(a) -> Tensor:
    a = _t(a)
    mask = a.data > 0.0
    out = Tensor(np.where(mask, a.data, 0.0), (a,))

    def bw(g):
        a.grad += g * mask

    out._bw = bw
    return out


def leaky_relu(a, slope: float = 0.2) -> Tensor:
    a = _t(a)
    mask = a.data > 0.0
    out = Tensor(np.where(mask, a.data, slope * a.data), (a,))

    def bw(g):
        a.grad += g * np.where(mask, 1.0, slope)

    out._bw = bw
    return out


def sigmoid(a) -> Tensor:
    a = _t(a)
    x = a.data
    s = np.where(x >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = Tensor(s, (a,))

    def bw(g):
        a.grad += g * s * (1.0 - s)

    out._bw = bw
    return out


def exp(a) -> Tensor:
    a = _t(a)
    e = np.exp(a.data)
    out = Tensor(e, (a,))

    def bw(g):
        a.grad += g * e

    out._bw = bw
    return out


def log(a) -> Tensor:
    a = _t(a)
    out = Tensor(np.log(a.data), (a,))

    def bw(g):
        a.grad += g / a.data

    out._bw = bw
    return out


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _t(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims), (a,))

    def bw(g):
        if axis is None:
            a.grad += np.broadcast_to(g, a.data.shape)
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            a.grad += np.broadcast_to(gg, a.data.shape)

    out._bw = bw
    return out


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _t(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a, shape) -> Tensor:
    a = _t(a)
    out = Tensor(a.data.reshape(shape), (a,))

    def bw(g):
        a.grad += g.reshape(a.data.shape)

    out._bw = bw
    return out


def gather(a, index: np.ndarray, axis: int = 0) -> Tensor:
    """Take rows (or axis slices) by integer index; backward scatter-adds."""
    a = _t(a)
    idx = np.asarray(index, dtype=np.int64)
    out = Tensor(np.take(a.data, idx, axis=axis), (a,))
    sel = (slice(None),) * axis + (idx,)

    def bw(g):
        np.add.at(a.grad, sel, g)

    out._bw = bw
    return out


def segment_sum(a, segments: np.ndarray, num_segments: int, axis: int = 0) -> Tensor:
    """Sum entries sharing a segment id along ``axis``; adjoint of gather."""
    a = _t(a)
    seg = np.asarray(segments, dtype=np.int64)
    shape = list(a.data.shape)
    shape[axis] = num_segments
    data = np.zeros(shape)
    sel = (slice(None),) * axis + (seg,)
    np.add.at(data, sel, a.data)
    out = Tensor(data, (a,))

    def bw(g):
        a.grad += np.take(g, seg, axis=axis)

    out._bw = bw
    return out


def grad(output: Tensor, wrt: list[Tensor]) -> list[np.ndarray]:
    """Exact reverse-mode gradients of a scalar output for each listed tensor.

    Tensors not reachable from ``output`` get zero gradients.
    """
    output = _t(output)
    for p in wrt:
        p.grad = None
    output.backward()
    return [
        p.grad if p.grad is not None else np.zeros_like(p.data) for p in wrt
    ]
