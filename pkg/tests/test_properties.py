"""Hypothesis-driven invariant checks over random instances at small dims."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reviewkb.comprehension import SENT_CLS, SENT_NONE, ZeroSource, augment
from reviewkb.extraction import OpinionTuple
from reviewkb.neural import Dense, Embedding, GruCell, Param, ParamLeaves, check_passes, grad_check
from reviewkb.neural import autodiff as ad

seeds = st.integers(0, 2**31 - 1)
small_dims = st.integers(1, 8)


@given(seeds, small_dims, small_dims)
@settings(max_examples=25, deadline=None)
def test_gru_backward_random_instances(seed, input_dim, hidden_dim):
    rng = np.random.default_rng(seed)
    cell = GruCell(input_dim, hidden_dim, rng, "g")
    probe = Param("probe", rng.normal(size=(2, hidden_dim)) * 0.4)
    x = rng.normal(size=input_dim)
    h = rng.normal(size=hidden_dim)

    def run():
        params = cell.parameters() + [probe]
        for p in params:
            p.zero_grad()
        leaves = ParamLeaves(params)
        out = cell.graph_step(leaves, ad.constant(x), ad.constant(h))
        loss = ad.softmax_xent(ad.affine(leaves[probe], out, ad.constant(np.zeros(2))), 0)
        ad.backward(loss)
        leaves.accumulate_grads()
        return float(loss.value)

    assert check_passes(grad_check(run, cell.parameters() + [probe], max_coords=8), 1e-3)


@given(seeds, small_dims, small_dims)
@settings(max_examples=25, deadline=None)
def test_composite_graph_backward_random_instances(seed, dim, vocab_rows):
    # embedding row -> dense -> concat -> stacked scalars -> xent
    rng = np.random.default_rng(seed)
    emb = Embedding(vocab_rows, dim, rng, "e")
    dense = Dense(dim, 3, rng, "d")
    scorer = Dense(3 + dim, 1, rng, "s")
    params = emb.parameters() + dense.parameters() + scorer.parameters()
    row = int(rng.integers(vocab_rows))

    def run():
        for p in params:
            p.zero_grad()
        leaves = ParamLeaves(params)
        x = emb.graph_row(leaves, row)
        hidden = dense.graph_apply(leaves, x)
        wide = ad.concat(hidden, x)
        logits = ad.stack([scorer.graph_apply(leaves, wide) for _ in range(4)])
        loss = ad.softmax_xent(logits, 2)
        ad.backward(loss)
        leaves.accumulate_grads()
        return float(loss.value)

    assert check_passes(grad_check(run, params, max_coords=8), 1e-3)


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_softmax_simplex(seed):
    logits = np.random.default_rng(seed).normal(size=7) * 10
    probs = ad.softmax(logits)
    assert (probs >= 0).all()
    assert probs.sum() == pytest.approx(1.0, abs=1e-6)


class _MarkerSource:
    def __init__(self, width):
        self.width = width

    def vector(self, phrase):
        return np.full(self.width, float(len(phrase)))


def _random_extractions(rng, n_sentences):
    extractions = []
    for si in range(n_sentences):
        tuples = []
        for k in range(int(rng.integers(0, 3))):
            word = f"m{rng.integers(5)}"
            tuples.append(
                OpinionTuple(
                    modifier=word,
                    aspect=f"a{rng.integers(5)}",
                    sentence_index=si,
                    modifier_span=(2 * k, 2 * k + 1),
                    aspect_span=(2 * k + 1, 2 * k + 2),
                )
            )
        extractions.append(tuple(tuples))
    return tuple(extractions)


@given(seeds, st.integers(1, 4), st.integers(1, 6), st.integers(1, 5))
@settings(max_examples=100, deadline=None)
def test_augment_preserves_prefix_and_width(seed, n_sentences, d, h):
    rng = np.random.default_rng(seed)
    extractions = _random_extractions(rng, n_sentences)
    sentence_map = [SENT_CLS]
    n_tokens = 1
    for si in range(n_sentences):
        length = int(rng.integers(1, 4))
        sentence_map.extend([si] * length)
        n_tokens += length
    sentence_map.append(SENT_NONE)
    n_tokens += 1
    reps = rng.normal(size=(n_tokens, d))
    out = augment(reps, tuple(sentence_map), extractions, _MarkerSource(h))
    assert out.shape == (n_tokens, d + h)
    assert np.array_equal(out[:, :d], reps)
    # zero source appends exactly zeros
    zeroed = augment(reps, tuple(sentence_map), extractions, ZeroSource(h))
    assert np.array_equal(zeroed[:, d:], np.zeros((n_tokens, h)))
    # sentences without extractions carry zeros even under a nonzero source
    for i, si in enumerate(sentence_map):
        if si >= 0 and not extractions[si]:
            assert np.array_equal(out[i, d:], np.zeros(h))
