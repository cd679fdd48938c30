import numpy as np
import pytest

from reviewkb.corpus import WordVectors
from reviewkb.errors import NumericalError
from reviewkb.neural import (
    Adam,
    Dense,
    GruCell,
    Param,
    ParamLeaves,
    Sgd,
    check_passes,
    grad_check,
    init_tensor,
    load_checkpoint,
    make_optimizer,
    save_checkpoint,
)
from reviewkb.neural import autodiff as ad
from reviewkb.neural.autodiff import softmax_xent_value


def rng(seed=0):
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# GRU step


def test_gru_zero_weights_halves_hidden():
    cell = GruCell(3, 4, rng(), "g")
    for p in cell.parameters():
        p.value[...] = 0.0
    h = np.array([1.0, -2.0, 0.5, 3.0])
    assert np.array_equal(cell.step(np.zeros(3), h), 0.5 * h)


def test_gru_zero_hidden_stays_zero():
    cell = GruCell(3, 4, rng(), "g")
    for p in cell.parameters():
        p.value[...] = 0.0
    assert np.array_equal(cell.step(np.zeros(3), np.zeros(4)), np.zeros(4))


def test_gru_shape_mismatch():
    cell = GruCell(3, 4, rng(), "g")
    with pytest.raises(ValueError, match="dim"):
        cell.step(np.zeros(5), np.zeros(4))
    with pytest.raises(ValueError, match="dim"):
        cell.step(np.zeros(3), np.zeros(7))


def _gru_loss(cell, x, h, probe):
    def run():
        params = cell.parameters() + [probe]
        for p in params:
            p.zero_grad()
        leaves = ParamLeaves(params)
        out = cell.graph_step(leaves, ad.constant(x), ad.constant(h))
        out = cell.graph_step(leaves, ad.constant(x), out)  # unrolled twice
        logits = ad.affine(leaves[probe], out, ad.constant(np.zeros(2)))
        loss = ad.softmax_xent(logits, 0)
        ad.backward(loss)
        leaves.accumulate_grads()
        return float(loss.value)

    return run


def test_gru_backward_matches_finite_differences():
    cell = GruCell(5, 6, rng(1), "g")
    probe = Param("probe", rng(2).normal(size=(2, 6)) * 0.4)
    x = rng(3).normal(size=5)
    h = rng(4).normal(size=6)
    report = grad_check(_gru_loss(cell, x, h, probe), cell.parameters() + [probe])
    assert check_passes(report, 1e-3)


# ---------------------------------------------------------------------------
# softmax cross-entropy


def test_softmax_xent_uniform():
    for k in (2, 5, 9):
        loss, grad = softmax_xent_value(np.zeros(k), 0)
        assert loss == pytest.approx(np.log(k), rel=1e-12)
        assert grad.shape == (k,)


def test_softmax_xent_stabilized():
    loss, grad = softmax_xent_value(np.array([1000.0, 0.0]), 0)
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.isfinite(grad).all()


def test_softmax_xent_target_out_of_range():
    with pytest.raises(ValueError):
        softmax_xent_value(np.zeros(3), 3)


def test_softmax_xent_grad_matches_finite_differences():
    logits = Param("logits", rng(7).normal(size=6))

    def run():
        logits.zero_grad()
        leaves = ParamLeaves([logits])
        loss = ad.softmax_xent(leaves[logits], 2)
        ad.backward(loss)
        leaves.accumulate_grads()
        return float(loss.value)

    report = grad_check(run, [logits])
    assert check_passes(report, 1e-3)


def test_softmax_normalization():
    probs = ad.softmax(rng(8).normal(size=10) * 5)
    assert (probs >= 0).all()
    assert probs.sum() == pytest.approx(1.0, abs=1e-6)


# ---------------------------------------------------------------------------
# grad_check harness


def _linear_xent_setup():
    w = Param("w", rng(9).normal(size=(3, 4)) * 0.5)
    b = Param("b", np.zeros(3))
    x = rng(10).normal(size=4)

    def run():
        for p in (w, b):
            p.zero_grad()
        leaves = ParamLeaves([w, b])
        loss = ad.softmax_xent(ad.affine(leaves[w], ad.constant(x), leaves[b]), 1)
        ad.backward(loss)
        leaves.accumulate_grads()
        return float(loss.value)

    return run, [w, b]


def test_grad_check_linear_layer():
    run, params = _linear_xent_setup()
    report = grad_check(run, params)
    assert max(report.values()) < 1e-3


def test_grad_check_detects_corrupted_gradient():
    run, params = _linear_xent_setup()

    def corrupted():
        loss = run()
        params[0].grad += 0.1
        return loss

    report = grad_check(corrupted, params)
    assert report["w"] > 1e-3


def test_grad_check_zero_parameter_model():
    assert grad_check(lambda: 0.0, []) == {}


def test_grad_check_nonfinite_loss():
    with pytest.raises(NumericalError):
        grad_check(lambda: float("nan"), [])


# ---------------------------------------------------------------------------
# initialization and optimizers


def test_xavier_bound_and_determinism():
    t1 = init_tensor((20, 30), "uniform_xavier", seed=4)
    t2 = init_tensor((20, 30), "uniform_xavier", seed=4)
    assert np.array_equal(t1, t2)
    bound = np.sqrt(6.0 / 50)
    assert np.abs(t1).max() <= bound


def test_init_from_word_vectors():
    wv = WordVectors(dim=2, table={"good": np.array([0.1, 0.2])})
    table = init_tensor((2, 2), "from_word_vectors", seed=0, word_vectors=wv, vocabulary=["good", "nope"])
    assert np.allclose(table[0], [0.1, 0.2])
    assert np.array_equal(table[1], np.zeros(2))


def test_init_dim_mismatch():
    wv = WordVectors(dim=3, table={"good": np.zeros(3)})
    with pytest.raises(ValueError, match="dim"):
        init_tensor((1, 2), "from_word_vectors", seed=0, word_vectors=wv, vocabulary=["good"])


def test_sgd_zero_learning_rate_is_identity():
    p = Param("p", rng(11).normal(size=(4, 4)))
    before = p.value.copy()
    p.grad[...] = rng(12).normal(size=(4, 4))
    Sgd([p], 0.0).step()
    assert np.array_equal(p.value, before)


def test_sgd_step():
    p = Param("p", np.ones((2,)))
    p.grad[...] = np.array([1.0, -2.0])
    Sgd([p], 0.5).step()
    assert np.allclose(p.value, [0.5, 2.0])


def test_adam_deterministic():
    def run():
        p = Param("p", np.ones((3,)))
        opt = Adam([p], 0.1)
        g = np.array([0.5, -1.0, 2.0])
        for _ in range(5):
            p.grad[...] = g
            opt.step()
        return p.value.copy()

    assert np.array_equal(run(), run())


def test_make_optimizer_unknown_kind():
    with pytest.raises(ValueError):
        make_optimizer("rmsprop", [], 0.1)


# ---------------------------------------------------------------------------
# checkpoint format


def test_checkpoint_round_trip(tmp_path):
    tensors = {
        "a": rng(13).normal(size=(3, 4)),
        "b": rng(14).normal(size=(7,)),
    }
    metadata = {"kind": "test", "seed": 3, "hyperparameters": {"dim": 4}}
    save_checkpoint(tmp_path / "ckpt", tensors, metadata)
    loaded, meta = load_checkpoint(tmp_path / "ckpt")
    assert meta == metadata
    for name in tensors:
        assert np.array_equal(loaded[name], tensors[name])


def test_checkpoint_payload_is_little_endian_float64(tmp_path):
    save_checkpoint(tmp_path / "ckpt", {"a": np.array([1.0, 2.0])}, {})
    raw = (tmp_path / "ckpt.bin").read_bytes()
    assert np.array_equal(np.frombuffer(raw, dtype="<f8"), [1.0, 2.0])


def test_dense_and_embedding_grads():
    dense = Dense(4, 3, rng(15), "d")
    from reviewkb.neural import Embedding

    emb = Embedding(5, 4, rng(16), "e")
    params = dense.parameters() + emb.parameters()

    def run():
        for p in params:
            p.zero_grad()
        leaves = ParamLeaves(params)
        x = emb.graph_row(leaves, 2)
        loss = ad.softmax_xent(dense.graph_apply(leaves, x), 0)
        ad.backward(loss)
        leaves.accumulate_grads()
        return float(loss.value)

    assert check_passes(grad_check(run, params), 1e-3)
