"""Parameter containers and layer primitives built on the autodiff core."""

from __future__ import annotations

import numpy as np

from ..corpus import WordVectors
from . import autodiff as ad


class Param:
    """A named float64 tensor with a persistent gradient buffer."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


class ParamLeaves:
    """One autodiff leaf per parameter for a single forward/backward pass."""

    def __init__(self, params: list[Param]):
        self._params = params
        self._leaves = {p.name: ad.leaf(p.value) for p in params}

    def __getitem__(self, param: Param) -> ad.Node:
        return self._leaves[param.name]

    def accumulate_grads(self) -> None:
        for p in self._params:
            node = self._leaves[p.name]
            if node.grad is not None:
                p.grad += node.grad


def xavier_uniform(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Uniform init with bound sqrt(6 / (fan_in + fan_out)); fan_in = cols."""
    rows, cols = shape
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=shape)


def from_word_vectors(vocabulary: list[str], vectors: WordVectors, dim: int) -> np.ndarray:
    """Embedding rows copied from a pretrained table; unknown words get zeros."""
    if vectors.dim != dim:
        raise ValueError(
            f"word vector dim {vectors.dim} does not match embedding width {dim}"
        )
    table = np.zeros((len(vocabulary), dim))
    for i, word in enumerate(vocabulary):
        table[i] = vectors.lookup(word)
    return table


def init_tensor(
    shape: tuple[int, int],
    scheme: str,
    seed: int,
    word_vectors: WordVectors | None = None,
    vocabulary: list[str] | None = None,
) -> np.ndarray:
    """Seeded initialization under a named scheme."""
    if scheme == "uniform_xavier":
        return xavier_uniform(shape, np.random.default_rng(seed))
    if scheme == "from_word_vectors":
        if word_vectors is None or vocabulary is None:
            raise ValueError("from_word_vectors requires word_vectors and vocabulary")
        if len(vocabulary) != shape[0]:
            raise ValueError(f"vocabulary size {len(vocabulary)} != rows {shape[0]}")
        return from_word_vectors(vocabulary, word_vectors, shape[1])
    raise ValueError(f"unknown init scheme {scheme!r}")


class GruCell:
    """Single-layer GRU cell in the update-gate convention h' = (1-z)h + z*c."""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator, prefix: str):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        h, d = hidden_dim, input_dim
        self.w_z = Param(f"{prefix}.w_z", xavier_uniform((h, d), rng))
        self.u_z = Param(f"{prefix}.u_z", xavier_uniform((h, h), rng))
        self.b_z = Param(f"{prefix}.b_z", np.zeros(h))
        self.w_r = Param(f"{prefix}.w_r", xavier_uniform((h, d), rng))
        self.u_r = Param(f"{prefix}.u_r", xavier_uniform((h, h), rng))
        self.b_r = Param(f"{prefix}.b_r", np.zeros(h))
        self.w_h = Param(f"{prefix}.w_h", xavier_uniform((h, d), rng))
        self.u_h = Param(f"{prefix}.u_h", xavier_uniform((h, h), rng))
        self.b_h = Param(f"{prefix}.b_h", np.zeros(h))

    def parameters(self) -> list[Param]:
        return [
            self.w_z, self.u_z, self.b_z,
            self.w_r, self.u_r, self.b_r,
            self.w_h, self.u_h, self.b_h,
        ]

    def step(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        """Graph-free forward step for inference."""
        x = np.asarray(x, dtype=np.float64)
        h = np.asarray(h, dtype=np.float64)
        if x.shape != (self.input_dim,):
            raise ValueError(f"gru input dim {x.shape} != expected ({self.input_dim},)")
        if h.shape != (self.hidden_dim,):
            raise ValueError(f"gru hidden dim {h.shape} != expected ({self.hidden_dim},)")
        z = ad._sigmoid(self.w_z.value @ x + self.u_z.value @ h + self.b_z.value)
        r = ad._sigmoid(self.w_r.value @ x + self.u_r.value @ h + self.b_r.value)
        c = np.tanh(self.w_h.value @ x + self.u_h.value @ (r * h) + self.b_h.value)
        return (1.0 - z) * h + z * c

    def graph_step(self, leaves: ParamLeaves, x: ad.Node, h: ad.Node) -> ad.Node:
        return ad.gru_step(
            leaves[self.w_z], leaves[self.u_z], leaves[self.b_z],
            leaves[self.w_r], leaves[self.u_r], leaves[self.b_r],
            leaves[self.w_h], leaves[self.u_h], leaves[self.b_h],
            x, h,
        )


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, prefix: str):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.w = Param(f"{prefix}.w", xavier_uniform((out_dim, in_dim), rng))
        self.b = Param(f"{prefix}.b", np.zeros(out_dim))

    def parameters(self) -> list[Param]:
        return [self.w, self.b]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.w.value @ x + self.b.value

    def graph_apply(self, leaves: ParamLeaves, x: ad.Node) -> ad.Node:
        return ad.affine(leaves[self.w], x, leaves[self.b])


class Embedding:
    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator, prefix: str):
        self.dim = dim
        self.table = Param(f"{prefix}.table", xavier_uniform((vocab_size, dim), rng))

    def parameters(self) -> list[Param]:
        return [self.table]

    def row(self, index: int) -> np.ndarray:
        return self.table.value[index]

    def graph_row(self, leaves: ParamLeaves, index: int) -> ad.Node:
        return ad.embedding_row(leaves[self.table], index)
