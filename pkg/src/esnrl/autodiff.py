"""A small reverse-mode autodiff tape over numpy arrays.

Just enough machinery to differentiate MLP forward passes and the squashed-
Gaussian policy losses: matmul, broadcasting add/mul, tanh/relu/exp/softplus,
column slicing, concatenation, elementwise minimum, and reductions. Values
are float64 arrays; gradients are accumulated by walking the tape in reverse
topological order.

Only subgraphs that lead back to a leaf created with ``requires=True``
participate in the backward pass, so wrapping a batch or a frozen network's
weights as constants costs nothing extra.
"""

from __future__ import annotations

import numpy as np


class Var:
    __slots__ = ("value", "grad", "parents", "bwd", "requires")

    def __init__(self, value, parents=(), bwd=None, requires=False):
        self.value = value
        self.grad = None
        self.parents = parents
        self.bwd = bwd
        self.requires = requires


def leaf(value: np.ndarray, requires: bool = False) -> Var:
    return Var(np.asarray(value, dtype=np.float64), requires=requires)


def constant(value) -> Var:
    return leaf(value, requires=False)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _binary(a: Var, b: Var, value, bwd) -> Var:
    requires = a.requires or b.requires
    return Var(value, (a, b), bwd if requires else None, requires)


def _unary(a: Var, value, bwd) -> Var:
    return Var(value, (a,), bwd if a.requires else None, a.requires)


def add(a: Var, b: Var) -> Var:
    def bwd(g):
        return (
            _unbroadcast(g, a.value.shape) if a.requires else None,
            _unbroadcast(g, b.value.shape) if b.requires else None,
        )

    return _binary(a, b, a.value + b.value, bwd)


def sub(a: Var, b: Var) -> Var:
    def bwd(g):
        return (
            _unbroadcast(g, a.value.shape) if a.requires else None,
            _unbroadcast(-g, b.value.shape) if b.requires else None,
        )

    return _binary(a, b, a.value - b.value, bwd)


def mul(a: Var, b: Var) -> Var:
    def bwd(g):
        return (
            _unbroadcast(g * b.value, a.value.shape) if a.requires else None,
            _unbroadcast(g * a.value, b.value.shape) if b.requires else None,
        )

    return _binary(a, b, a.value * b.value, bwd)


def scale(a: Var, c: float) -> Var:
    return _unary(a, a.value * c, lambda g: (g * c,))


def shift(a: Var, c) -> Var:
    return _unary(a, a.value + c, lambda g: (g,))


def neg(a: Var) -> Var:
    return _unary(a, -a.value, lambda g: (-g,))


def matmul(a: Var, b: Var) -> Var:
    # Supports stacked operands, e.g. (B, n) @ (2, n, m) -> (2, B, m); the
    # unbroadcast sums gradients over any broadcast batch axes. Gradients
    # for non-tracked operands (frozen weights, batch constants) are skipped.
    def bwd(g):
        ga = _unbroadcast(g @ b.value.swapaxes(-1, -2), a.value.shape) if a.requires else None
        gb = _unbroadcast(a.value.swapaxes(-1, -2) @ g, b.value.shape) if b.requires else None
        return ga, gb

    return _binary(a, b, a.value @ b.value, bwd)


def tanh(a: Var) -> Var:
    out = np.tanh(a.value)
    return _unary(a, out, lambda g: (g * (1.0 - out * out),))


def relu(a: Var) -> Var:
    out = np.maximum(a.value, 0.0)
    if not a.requires:
        return _unary(a, out, None)
    mask = np.sign(out)
    return _unary(a, out, lambda g: (g * mask,))


def exp(a: Var) -> Var:
    out = np.exp(a.value)
    return _unary(a, out, lambda g: (g * out,))


def softplus(a: Var) -> Var:
    # log(1 + e^x), stable at both tails; the logistic derivative is
    # computed as e^(x - softplus(x)), whose exponent is never positive.
    out = np.logaddexp(0.0, a.value)
    return _unary(a, out, lambda g: (g * np.exp(a.value - out),))


def square(a: Var) -> Var:
    return _unary(a, a.value * a.value, lambda g: (2.0 * g * a.value,))


def minimum(a: Var, b: Var) -> Var:
    mask = a.value <= b.value
    return _binary(a, b, np.where(mask, a.value, b.value), lambda g: (g * mask, g * ~mask))


def concat_cols(a: Var, b: Var) -> Var:
    na = a.value.shape[1]
    return _binary(a, b, np.concatenate([a.value, b.value], axis=1), lambda g: (g[:, :na], g[:, na:]))


def slice_cols(a: Var, start: int, stop: int) -> Var:
    def bwd(g):
        full = np.zeros_like(a.value)
        full[:, start:stop] = g
        return (full,)

    return _unary(a, a.value[:, start:stop], bwd)


def sum_rows(a: Var) -> Var:
    """Sum over axis 1: (B, n) -> (B,)."""
    return _unary(a, a.value.sum(axis=1), lambda g: (np.broadcast_to(g[:, None], a.value.shape),))


def take_first(a: Var, index: int) -> Var:
    """Select one slice along axis 0 of a stacked value: (k, ...) -> (...)."""

    def bwd(g):
        full = np.zeros_like(a.value)
        full[index] = g
        return (full,)

    return _unary(a, a.value[index], bwd)


def mean_all(a: Var) -> Var:
    n = a.value.size
    return _unary(a, np.float64(a.value.mean()), lambda g: (np.broadcast_to(np.asarray(g) / n, a.value.shape),))


def backward(loss: Var) -> None:
    """Accumulate gradients of ``loss`` into every reachable requires-leaf."""
    order: list[Var] = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.requires:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))

    loss.grad = np.float64(1.0)
    for node in reversed(order):
        if node.bwd is None or node.grad is None:
            continue
        for parent, grad in zip(node.parents, node.bwd(node.grad)):
            if not parent.requires or grad is None:
                continue
            parent.grad = grad if parent.grad is None else parent.grad + grad


class Adam:
    """Adam over a fixed list of parameter arrays, updated in place."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError(f"expected {len(self.params)} gradients, got {len(grads)}")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)

    def state(self) -> dict:
        return {"t": self.t, "m": [m.tolist() for m in self.m], "v": [v.tolist() for v in self.v]}

    def load_state(self, state: dict) -> None:
        self.t = int(state["t"])
        for m, saved in zip(self.m, state["m"]):
            m[...] = np.array(saved)
        for v, saved in zip(self.v, state["v"]):
            v[...] = np.array(saved)
