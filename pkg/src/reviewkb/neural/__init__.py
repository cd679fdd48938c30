"""Differentiable kernels: autodiff graph, layers, optimizers, grad checking."""

from . import autodiff
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import check_passes, grad_check
from .layers import (
    Dense,
    Embedding,
    GruCell,
    Param,
    ParamLeaves,
    from_word_vectors,
    init_tensor,
    xavier_uniform,
)
from .optim import Adam, Sgd, make_optimizer

__all__ = [
    "autodiff",
    "Adam",
    "Dense",
    "Embedding",
    "GruCell",
    "Param",
    "ParamLeaves",
    "Sgd",
    "check_passes",
    "from_word_vectors",
    "grad_check",
    "init_tensor",
    "load_checkpoint",
    "make_optimizer",
    "save_checkpoint",
    "xavier_uniform",
]
