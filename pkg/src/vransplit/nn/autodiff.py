"""A small reverse-mode automatic differentiation engine over float64 numpy arrays.

Each op returns a :class:`Tensor` that remembers its parents and a closure
that pushes the output gradient back to them. :meth:`Tensor.backward` runs the
closures in reverse topological order and then releases the graph; a second
call on the same graph raises :class:`GraphConsumed`.
"""
from __future__ import annotations

import contextlib

import numpy as np

from ..errors import GraphConsumed, ShapeMismatch

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Build values only; no graph is recorded inside this block."""
    global _GRAD_ENABLED
    prev, _GRAD_ENABLED = _GRAD_ENABLED, False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "parents", "backward_fn", "consumed", "name")

    def __init__(self, value, requires_grad=False, name=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.parents = ()
        self.backward_fn = None
        self.consumed = False
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every leaf that requires grad."""
        if self.consumed:
            raise GraphConsumed("backward() already ran on this graph; run a new forward pass")
        if grad is None:
            if self.value.size != 1:
                raise ShapeMismatch("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.value)
        order = _topological(self)
        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.backward_fn is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node.parents, node.backward_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg
        for node in order:
            if node.backward_fn is not None:
                node.backward_fn = None
                node.parents = ()
                node.consumed = True


def _topological(root):
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def tensor(value, requires_grad=False, name=None) -> Tensor:
    return Tensor(value, requires_grad, name)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(value, parents, backward_fn):
    out = Tensor(value)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.parents = tuple(parents)
        out.backward_fn = backward_fn
    return out


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# --------------------------------------------------------------------------- elementwise


def add(a, b):
    a, b = _wrap(a), _wrap(b)
    return _make(a.value + b.value, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b):
    a, b = _wrap(a), _wrap(b)
    return _make(a.value - b.value, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    av, bv = a.value, b.value
    return _make(av * bv, (a, b),
                 lambda g: (_unbroadcast(g * bv, a.shape), _unbroadcast(g * av, b.shape)))


def scale(a, k: float):
    a = _wrap(a)
    return _make(a.value * k, (a,), lambda g: (g * k,))


def square(a):
    a = _wrap(a)
    av = a.value
    return _make(av * av, (a,), lambda g: (2.0 * av * g,))


def sigmoid(a):
    a = _wrap(a)
    y = 0.5 * (1.0 + np.tanh(0.5 * a.value))  # overflow-free logistic
    return _make(y, (a,), lambda g: (g * y * (1.0 - y),))


def tanh(a):
    a = _wrap(a)
    y = np.tanh(a.value)
    return _make(y, (a,), lambda g: (g * (1.0 - y * y),))


def relu(a):
    a = _wrap(a)
    mask = a.value > 0
    return _make(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


# --------------------------------------------------------------------------- linear algebra / shape


def linear(x, W, b=None):
    """``x @ W.T (+ b)`` for ``x`` of shape ``(..., in)`` and ``W`` of shape ``(out, in)``."""
    x, W = _wrap(x), _wrap(W)
    if x.shape[-1] != W.shape[1]:
        raise ShapeMismatch(f"linear: input width {x.shape[-1]} vs weight {W.shape}")
    xv, Wv = x.value, W.value
    y = xv @ Wv.T
    parents = (x, W)
    if b is not None:
        b = _wrap(b)
        if b.shape != (W.shape[0],):
            raise ShapeMismatch(f"linear: bias {b.shape} vs weight {W.shape}")
        y = y + b.value
        parents = (x, W, b)

    def back(g):
        gx = g @ Wv if x.requires_grad else None
        g2 = g.reshape(-1, g.shape[-1])
        gW = g2.T @ xv.reshape(-1, xv.shape[-1]) if W.requires_grad else None
        if b is None:
            return gx, gW
        return gx, gW, g2.sum(axis=0)

    return _make(y, parents, back)


def concat(xs, axis=-1):
    xs = [_wrap(x) for x in xs]
    value = np.concatenate([x.value for x in xs], axis=axis)
    bounds = np.cumsum([x.shape[axis] for x in xs])[:-1]
    return _make(value, xs, lambda g: tuple(np.split(g, bounds, axis=axis)))


def stack(xs, axis=1):
    xs = [_wrap(x) for x in xs]
    value = np.stack([x.value for x in xs], axis=axis)
    return _make(value, xs,
                 lambda g: tuple(np.take(g, i, axis=axis) for i in range(len(xs))))


def reshape(a, shape):
    a = _wrap(a)
    old = a.shape
    return _make(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))


def take_rows(table, idx):
    """Row lookup ``table[idx]`` (embedding); gradients scatter-add back."""
    table = _wrap(table)
    idx = np.asarray(idx, dtype=np.int64)
    shape = table.shape

    def back(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return _make(table.value[idx], (table,), back)


def pick(a, idx):
    """``a[..., idx]`` along the last axis, one index per leading row."""
    a = _wrap(a)
    idx = np.asarray(idx, dtype=np.int64)
    value = np.take_along_axis(a.value, idx[..., None], axis=-1)[..., 0]
    shape = a.shape

    def back(g):
        out = np.zeros(shape)
        np.put_along_axis(out, idx[..., None], g[..., None], axis=-1)
        return (out,)

    return _make(value, (a,), back)


def total(a):
    a = _wrap(a)
    shape = a.shape
    return _make(np.array(a.value.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(a):
    a = _wrap(a)
    return scale(total(a), 1.0 / max(a.value.size, 1))


def sum_last(a):
    a = _wrap(a)
    shape = a.shape
    return _make(a.value.sum(axis=-1), (a,), lambda g: (np.broadcast_to(g[..., None], shape).copy(),))


# --------------------------------------------------------------------------- softmax family


def softmax_values(z: np.ndarray, T: float = 1.0) -> np.ndarray:
    z = np.asarray(z, dtype=float) / T
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax(a, T: float = 1.0):
    a = _wrap(a)
    p = softmax_values(a.value, T)

    def back(g):
        return ((p * (g - (g * p).sum(axis=-1, keepdims=True))) / T,)

    return _make(p, (a,), back)


def log_softmax(a, T: float = 1.0):
    a = _wrap(a)
    z = a.value / T
    z = z - z.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    y = z - lse
    p = np.exp(y)

    def back(g):
        return ((g - p * g.sum(axis=-1, keepdims=True)) / T,)

    return _make(y, (a,), back)


def additive_scores(query, keys, v):
    """Bahdanau scores ``v . tanh(query[:, None, :] + keys)``.

    ``query`` is ``(B, H)`` (already projected), ``keys`` is ``(B, N, H)``
    (already projected), ``v`` is ``(H,)``. Returns ``(B, N)``.
    """
    query, keys, v = _wrap(query), _wrap(keys), _wrap(v)
    e = np.tanh(query.value[:, None, :] + keys.value)
    vv = v.value

    def back(g):
        ge = g[..., None] * vv * (1.0 - e * e)  # (B, N, H)
        return ge.sum(axis=1), ge, np.einsum("bn,bnh->h", g, e)

    return _make(e @ vv, (query, keys, v), back)


def weighted_sum(weights, values):
    """``sum_k weights[b, k] * values[b, k, :]`` -> ``(B, H)``."""
    weights, values = _wrap(weights), _wrap(values)
    wv, vv = weights.value, values.value

    def back(g):
        return np.einsum("bh,bnh->bn", g, vv), wv[..., None] * g[:, None, :]

    return _make(np.einsum("bn,bnh->bh", wv, vv), (weights, values), back)
