"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

Graphs are built per forward pass from a handful of fused operations (affine
map, GRU step, embedding row, concat, stabilized softmax cross-entropy) and
differentiated by a single iterative backward sweep. Everything is
deterministic: no threads, no global state, 64-bit throughout.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

Array = np.ndarray


class Node:
    """One value in the computation graph, with a backward closure."""

    __slots__ = ("value", "grad", "parents", "_backward")

    def __init__(self, value: Array, parents: tuple["Node", ...] = (), backward=None):
        self.value = value
        self.grad: Array | None = None
        self.parents = parents
        self._backward: Callable[[Array], None] | None = backward

    def accumulate(self, g: Array) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g


def leaf(value: Array) -> Node:
    """Graph input; shares storage with ``value`` (do not mutate mid-pass)."""
    return Node(np.asarray(value, dtype=np.float64))


def constant(value: Array) -> Node:
    return Node(np.asarray(value, dtype=np.float64))


def backward(root: Node) -> None:
    """Reverse accumulation from a scalar root in topological order."""
    if root.value.ndim != 0 and root.value.size != 1:
        raise ValueError(f"backward requires a scalar root, got shape {root.value.shape}")
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def add(a: Node, b: Node) -> Node:
    if a.value.shape != b.value.shape:
        raise ValueError(f"add shape mismatch: {a.value.shape} vs {b.value.shape}")

    def back(g: Array) -> None:
        a.accumulate(g)
        b.accumulate(g)

    return Node(a.value + b.value, (a, b), back)


def scale(a: Node, s: float) -> Node:
    def back(g: Array) -> None:
        a.accumulate(g * s)

    return Node(a.value * s, (a,), back)


def add_all(nodes: list[Node]) -> Node:
    """Sum of scalar nodes."""
    if not nodes:
        raise ValueError("add_all requires at least one node")

    def back(g: Array) -> None:
        for n in nodes:
            n.accumulate(g)

    return Node(np.asarray(sum(n.value for n in nodes), dtype=np.float64), tuple(nodes), back)


def affine(w: Node, x: Node, b: Node) -> Node:
    """``w @ x + b`` for a (m, n) matrix, (n,) vector, and (m,) bias."""
    m, n = w.value.shape
    if x.value.shape != (n,) or b.value.shape != (m,):
        raise ValueError(
            f"affine shape mismatch: w {w.value.shape}, x {x.value.shape}, b {b.value.shape}"
        )

    def back(g: Array) -> None:
        w.accumulate(np.outer(g, x.value))
        x.accumulate(w.value.T @ g)
        b.accumulate(g)

    return Node(w.value @ x.value + b.value, (w, x, b), back)


def concat(a: Node, b: Node) -> Node:
    na = a.value.shape[0]

    def back(g: Array) -> None:
        a.accumulate(g[:na])
        b.accumulate(g[na:])

    return Node(np.concatenate([a.value, b.value]), (a, b), back)


def stack(nodes: list[Node]) -> Node:
    """Stack scalar nodes into a vector."""

    def back(g: Array) -> None:
        for i, n in enumerate(nodes):
            n.accumulate(np.asarray(g[i]).reshape(n.value.shape))

    return Node(
        np.array([n.value.item() for n in nodes], dtype=np.float64), tuple(nodes), back
    )


def embedding_row(table: Node, index: int) -> Node:
    rows = table.value.shape[0]
    if not 0 <= index < rows:
        raise ValueError(f"embedding index {index} out of range for {rows} rows")

    def back(g: Array) -> None:
        if table.grad is None:
            table.grad = np.zeros_like(table.value)
        table.grad[index] += g

    return Node(table.value[index], (table,), back)


def gru_step(
    w_z: Node, u_z: Node, b_z: Node,
    w_r: Node, u_r: Node, b_r: Node,
    w_h: Node, u_h: Node, b_h: Node,
    x: Node, h: Node,
) -> Node:
    """Fused GRU update: ``h' = (1 - z) * h + z * tanh(...)``.

    Gate equations: z = sigmoid(Wz x + Uz h + bz), r likewise, candidate
    c = tanh(Wh x + Uh (r * h) + bh).
    """
    hidden, input_dim = w_z.value.shape
    if x.value.shape != (input_dim,):
        raise ValueError(f"gru_step input dim {x.value.shape[0]} != expected {input_dim}")
    if h.value.shape != (hidden,):
        raise ValueError(f"gru_step hidden dim {h.value.shape[0]} != expected {hidden}")

    xv, hv = x.value, h.value
    z = _sigmoid(w_z.value @ xv + u_z.value @ hv + b_z.value)
    r = _sigmoid(w_r.value @ xv + u_r.value @ hv + b_r.value)
    q = r * hv
    c = np.tanh(w_h.value @ xv + u_h.value @ q + b_h.value)
    out = (1.0 - z) * hv + z * c

    def back(g: Array) -> None:
        dz = g * (c - hv)
        dc = g * z
        dh = g * (1.0 - z)
        da_h = dc * (1.0 - c * c)
        w_h.accumulate(np.outer(da_h, xv))
        u_h.accumulate(np.outer(da_h, q))
        b_h.accumulate(da_h)
        dq = u_h.value.T @ da_h
        dr = dq * hv
        dh = dh + dq * r
        da_r = dr * r * (1.0 - r)
        w_r.accumulate(np.outer(da_r, xv))
        u_r.accumulate(np.outer(da_r, hv))
        b_r.accumulate(da_r)
        dh = dh + u_r.value.T @ da_r
        da_z = dz * z * (1.0 - z)
        w_z.accumulate(np.outer(da_z, xv))
        u_z.accumulate(np.outer(da_z, hv))
        b_z.accumulate(da_z)
        dh = dh + u_z.value.T @ da_z
        x.accumulate(w_z.value.T @ da_z + w_r.value.T @ da_r + w_h.value.T @ da_h)
        h.accumulate(dh)

    return Node(out, (w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h, x, h), back)


def softmax_xent(logits: Node, target: int) -> Node:
    """Cross-entropy against a one-hot target, max-subtracted for stability."""
    k = logits.value.shape[0]
    if k < 1:
        raise ValueError("softmax_xent requires at least one logit")
    if not 0 <= target < k:
        raise ValueError(f"target {target} out of range for {k} logits")
    shifted = logits.value - np.max(logits.value)
    exp = np.exp(shifted)
    probs = exp / exp.sum()
    loss = np.log(exp.sum()) - shifted[target]

    def back(g: Array) -> None:
        grad = probs.copy()
        grad[target] -= 1.0
        logits.accumulate(float(g) * grad)

    return Node(np.asarray(loss, dtype=np.float64), (logits,), back)


def softmax_xent_value(logits: Array, target: int) -> tuple[float, Array]:
    """Array-level loss and gradient (softmax minus one-hot)."""
    node = leaf(np.asarray(logits, dtype=np.float64))
    loss = softmax_xent(node, target)
    backward(loss)
    return float(loss.value), node.grad


def softmax(logits: Array) -> Array:
    shifted = logits - np.max(logits)
    exp = np.exp(shifted)
    return exp / exp.sum()


def _sigmoid(x: Array) -> Array:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out
