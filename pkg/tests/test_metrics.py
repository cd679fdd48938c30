import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_cls_scores, oracle_span_prf, oracle_token_f1
from reviewkb.metrics import aggregate, cls_scores, span_prf, token_f1

DATA = Path(__file__).parent / "data"


def load_cases(name):
    return json.loads((DATA / name).read_text())


def test_token_f1_identical():
    score = token_f1("same answer", "same answer")
    assert score.f1 == 1.0 and score.exact == 1


def test_token_f1_partial_overlap():
    assert token_f1("a b c", "b c d").f1 == pytest.approx(2 / 3)


def test_token_f1_empty_prediction():
    score = token_f1("", "nonempty gold")
    assert score.f1 == 0.0 and score.exact == 0


def test_token_f1_normalization_insensitive_to_case_and_punct():
    score = token_f1("The Parking.", "the parking")
    assert score.f1 == 1.0 and score.exact == 1


def test_token_f1_oracle_cases():
    cases = load_cases("token_f1_cases.json")
    assert len(cases) >= 20
    for case in cases:
        score = token_f1(case["prediction"], case["gold"])
        assert score.f1 == pytest.approx(case["f1"], abs=1e-9)
        assert score.exact == case["exact"]
        # and the oracle recomputes the frozen values
        f1, exact = oracle_token_f1(case["prediction"], case["gold"])
        assert f1 == pytest.approx(case["f1"], abs=1e-9) and exact == case["exact"]


texts = st.text(
    alphabet=st.characters(codec="ascii", exclude_characters="\x00"), max_size=40
)


@given(texts, texts)
@settings(max_examples=200, deadline=None)
def test_token_f1_symmetric_and_bounded(a, b):
    ab, ba = token_f1(a, b), token_f1(b, a)
    assert ab.f1 == pytest.approx(ba.f1, abs=1e-12)
    assert 0.0 <= ab.f1 <= 1.0
    if ab.exact == 1:
        assert ab.f1 == 1.0


@given(texts, texts)
@settings(max_examples=200, deadline=None)
def test_token_f1_matches_oracle(a, b):
    score = token_f1(a, b)
    f1, exact = oracle_token_f1(a, b)
    assert score.f1 == pytest.approx(f1, abs=1e-9)
    assert score.exact == exact


def test_span_prf_exact_match():
    result = span_prf([(0, 2), (3, 4)], [(0, 2), (3, 4)])
    assert result == {"precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_span_prf_partial():
    result = span_prf([(0, 2)], [(0, 2), (3, 4)])
    assert result["precision"] == 1.0
    assert result["recall"] == 0.5
    assert result["f1"] == pytest.approx(2 / 3)


def test_span_prf_no_predictions():
    assert span_prf([], [(0, 1)]) == {"precision": 0.0, "recall": 0.0, "f1": 0.0}


def test_span_prf_oracle_cases():
    cases = load_cases("span_prf_cases.json")
    assert len(cases) >= 20
    for case in cases:
        pred = [tuple(s) for s in case["pred"]]
        gold = [tuple(s) for s in case["gold"]]
        result = span_prf(pred, gold)
        for key in ("precision", "recall", "f1"):
            assert result[key] == pytest.approx(case["expected"][key], abs=1e-9)
        recomputed = oracle_span_prf(pred, gold)
        assert recomputed == pytest.approx(case["expected"], abs=1e-9)


def test_cls_scores_all_correct():
    result = cls_scores(["positive", "negative", "neutral"], ["positive", "negative", "neutral"])
    assert result.accuracy == 1.0 and result.macro_f1 == 1.0


def test_cls_scores_hand_confusion_matrix():
    # gold: pos, neg, neg, neg; pred: pos, pos, neg, neg
    # pos: tp=1 fp=1 fn=0 -> P=.5 R=1 F1=2/3; neg: tp=2 fp=0 fn=1 -> P=1 R=2/3 F1=.8
    result = cls_scores(
        ["positive", "positive", "negative", "negative"],
        ["positive", "negative", "negative", "negative"],
    )
    assert result.macro_f1 == pytest.approx((2 / 3 + 0.8 + 0.0) / 3)
    assert result.accuracy == 0.75


def test_cls_scores_single_class_prediction_balanced_gold():
    result = cls_scores(
        ["positive"] * 6,
        ["positive", "positive", "negative", "negative", "neutral", "neutral"],
    )
    assert result.accuracy == pytest.approx(1 / 3)


def test_cls_scores_length_mismatch():
    with pytest.raises(ValueError):
        cls_scores(["positive"], [])


def test_cls_scores_unknown_label():
    with pytest.raises(ValueError):
        cls_scores(["meh"], ["positive"])


def test_cls_oracle_cases():
    cases = load_cases("cls_cases.json")
    assert len(cases) >= 20
    for case in cases:
        result = cls_scores(case["pred"], case["gold"])
        assert result.accuracy == pytest.approx(case["expected"]["accuracy"], abs=1e-9)
        assert result.macro_f1 == pytest.approx(case["expected"]["macro_f1"], abs=1e-9)
        for cls, expected in case["expected"]["per_class"].items():
            for key in ("precision", "recall", "f1"):
                assert result.per_class[cls][key] == pytest.approx(expected[key], abs=1e-9)
        recomputed = oracle_cls_scores(case["pred"], case["gold"])
        assert recomputed["macro_f1"] == pytest.approx(case["expected"]["macro_f1"], abs=1e-9)


def test_aggregate_mean_and_population_std():
    result = aggregate([{"f1": 60.0}, {"f1": 62.0}])
    assert result["f1"]["mean"] == 61.0
    assert result["f1"]["std"] == 1.0


def test_aggregate_single_run():
    result = aggregate([{"f1": 0.5, "exact": 0.25}])
    assert result["f1"] == {"mean": 0.5, "std": 0.0}
    assert result["exact"] == {"mean": 0.25, "std": 0.0}


def test_aggregate_empty():
    with pytest.raises(ValueError):
        aggregate([])


def test_aggregate_identical_runs_zero_std():
    runs = [{"m": 0.7}] * 5
    assert aggregate(runs)["m"]["std"] == 0.0
