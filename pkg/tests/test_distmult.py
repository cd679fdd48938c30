import numpy as np
import pytest

from reviewkb.distmult import (
    DistMultModel,
    batch_loss_and_grad,
    load_triples,
    phrase_vector,
    rank_eval,
    save_triples,
    score,
    train_distmult,
)
from reviewkb.fixtures import fixture_triples
from reviewkb.neural import check_passes, grad_check


def basis_model():
    model = DistMultModel(["a", "b", "c"], ["r"], dim=3, seed=0)
    model.entity_emb.value[...] = np.eye(3)
    model.relation_emb.value[...] = np.ones((1, 3))
    return model


def test_score_basis_vectors():
    model = basis_model()
    assert score(model, ("a", "r", "a")) == 1.0
    assert score(model, ("a", "r", "b")) == 0.0


def test_score_zero_relation():
    model = basis_model()
    model.relation_emb.value[...] = 0.0
    assert all(score(model, (h, "r", t)) == 0.0 for h in "abc" for t in "abc")


def test_score_unknown_id():
    model = basis_model()
    with pytest.raises(ValueError, match="unknown id 'zzz'"):
        score(model, ("zzz", "r", "a"))
    with pytest.raises(ValueError, match="unknown id 's'"):
        score(model, ("a", "s", "a"))


def test_score_symmetry_exact():
    model = DistMultModel([f"e{i}" for i in range(10)], ["r0", "r1"], dim=8, seed=5)
    rng = np.random.default_rng(0)
    for _ in range(200):
        h = f"e{rng.integers(10)}"
        t = f"e{rng.integers(10)}"
        r = f"r{rng.integers(2)}"
        assert score(model, (h, r, t)) == score(model, (t, r, h))


def test_train_requires_triples_and_dim():
    with pytest.raises(ValueError):
        train_distmult([], dim=4)
    with pytest.raises(ValueError):
        DistMultModel(["a"], ["r"], dim=0, seed=0)


def test_train_fixture_link_prediction():
    train, test = fixture_triples()
    model = train_distmult(train, dim=16, epochs=60, learning_rate=0.05, seed=0)
    result = rank_eval(model, test, train + test)
    assert result["mrr"] >= 0.8
    assert 0.0 < result["mrr"] <= 1.0


def test_loss_decreases():
    train, _ = fixture_triples()
    def epoch_loss(model):
        ids = [model.ids(t) for t in train]
        rng = np.random.default_rng(9)
        negatives = []
        for h, r, t in ids:
            for _ in range(4):
                negatives.append((int(rng.integers(20)), r, t))
        return batch_loss_and_grad(model, ids, negatives)

    untrained = DistMultModel(
        sorted({h for h, _, _ in train} | {t for _, _, t in train}),
        sorted({r for _, r, _ in train}),
        dim=16,
        seed=0,
    )
    trained = train_distmult(train, dim=16, epochs=10, learning_rate=0.05, seed=0)
    assert epoch_loss(trained) < epoch_loss(untrained)


def test_gradients_match_finite_differences():
    model = DistMultModel(["a", "b", "c"], ["r"], dim=4, seed=2)
    positives = [model.ids(("a", "r", "b")), model.ids(("b", "r", "c"))]
    negatives = [model.ids(("a", "r", "c"))]

    def run():
        return batch_loss_and_grad(model, positives, negatives)

    report = grad_check(run, model.parameters())
    assert check_passes(report, 1e-3)


def test_rank_eval_perfect_model():
    model = DistMultModel(["a", "b", "c"], ["r"], dim=2, seed=0)
    model.entity_emb.value[...] = [[1.0, 0.0], [10.0, 0.0], [-5.0, 0.0]]
    model.relation_emb.value[...] = [[1.0, 0.0]]
    # head "a": scores = (1, 10, -5); true tail "b" ranks first
    assert rank_eval(model, [("a", "r", "b")], [("a", "r", "b")])["mrr"] == 1.0


def test_rank_eval_single_entity():
    model = DistMultModel(["only"], ["r"], dim=2, seed=0)
    assert rank_eval(model, [("only", "r", "only")], [("only", "r", "only")])["mrr"] == 1.0


def test_rank_eval_matches_brute_force():
    model = DistMultModel(["a", "b", "c"], ["r"], dim=4, seed=3)
    test = [("a", "r", "b")]
    all_triples = [("a", "r", "b"), ("a", "r", "c")]
    result = rank_eval(model, test, all_triples)
    # brute force: candidates are a, b (c filtered as a known positive)
    scores = {t: score(model, ("a", "r", t)) for t in ("a", "b")}
    expected_rank = 1 + sum(1 for t, s in scores.items() if t != "b" and s > scores["b"])
    assert result["mrr"] == pytest.approx(1.0 / expected_rank)


def test_rank_eval_empty_test_set():
    model = basis_model()
    with pytest.raises(ValueError, match="empty test set"):
        rank_eval(model, [], [])


def test_filtered_rank_of_training_positives_finite():
    train, test = fixture_triples()
    model = train_distmult(train, dim=8, epochs=5, learning_rate=0.05, seed=0)
    result = rank_eval(model, train, train + test)
    assert 0.0 < result["mrr"] <= 1.0


def test_phrase_vector_chain():
    model = DistMultModel(["thin walls", "thin", "walls", "noisy"], ["r"], dim=3, seed=1)
    e = model.entity_emb.value
    assert np.array_equal(phrase_vector(model, "Thin  Walls"), e[model.entity_to_id["thin walls"]])
    mean = (e[model.entity_to_id["thin"]] + e[model.entity_to_id["noisy"]]) / 2.0
    assert np.allclose(phrase_vector(model, "thin noisy"), mean)
    assert np.array_equal(phrase_vector(model, "unknown words"), np.zeros(3))


def test_triples_io_round_trip(tmp_path):
    triples = [("a", "r", "b"), ("b", "s", "c")]
    save_triples(triples, tmp_path / "triples.tsv")
    assert load_triples(tmp_path / "triples.tsv") == triples


def test_training_deterministic():
    train, _ = fixture_triples()
    m1 = train_distmult(train[:20], dim=8, epochs=5, seed=7)
    m2 = train_distmult(train[:20], dim=8, epochs=5, seed=7)
    assert np.array_equal(m1.entity_emb.value, m2.entity_emb.value)
    assert np.array_equal(m1.relation_emb.value, m2.relation_emb.value)
