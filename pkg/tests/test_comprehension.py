import numpy as np
import pytest

from reviewkb.comprehension import (
    ConstantSource,
    EncoderModel,
    TaskModel,
    ZeroSource,
    ae_decode,
    ae_predict,
    asc_predict,
    augment,
    build_encoder_vocab,
    build_input,
    commonsense_matrix,
    make_absa_instances,
    make_qa_instances,
    prepare_qa,
    qa_logits,
    qa_predict,
    train_task,
    zero_commonsense_columns,
    SENT_CLS,
    SENT_NONE,
)
from reviewkb.corpus import (
    AbsaExample,
    QAExample,
    TokenSequence,
    make_review,
    tokenize,
)
from reviewkb.extraction import Lexicon

LEX = Lexicon(
    adjectives=frozenset({"very", "clean", "average", "noisy"}),
    aspect_nouns=frozenset({"bathroom", "food", "room"}),
)


def seq(text):
    return TokenSequence(tuple(tokenize(text)))


def qa_example(text, question, a0, a1, example_id="q0"):
    review = make_review("r0", "h0", text)
    return QAExample(
        review=review,
        question=seq(question),
        question_text=question,
        answer_char_start=a0,
        answer_char_end=a1,
        example_id=example_id,
    )


def absa_example(text, aspect_spans, target=None, polarity=None, example_id="a0"):
    return AbsaExample(
        text=text,
        sentence=seq(text),
        aspect_spans=tuple(aspect_spans),
        target_aspect=target,
        polarity=polarity,
        example_id=example_id,
    )


# ---------------------------------------------------------------------------
# build_input


def test_build_input_ae_single_synthetic():
    tokens = build_input("ae", {"review": seq("good food")})
    assert tokens.tokens[0].surface == "[CLS]"
    assert sum(t.synthetic for t in tokens.tokens) == 1


def test_build_input_asc_ends_with_sep_aspect():
    tokens = build_input("asc", {"review": seq("the bathroom sparkles"), "aspect": seq("bathroom")})
    surfaces = tokens.surfaces()
    assert surfaces[-2:] == ["[SEP]", "bathroom"]
    assert surfaces[0] == "[CLS]"


def test_build_input_qa_order():
    tokens = build_input("qa", {"question": seq("how was it"), "review": seq("fine stay")})
    surfaces = tokens.surfaces()
    assert surfaces == ["[CLS]", "how", "was", "it", "[SEP]", "fine", "stay"]
    assert sum(t.synthetic for t in tokens.tokens) == 2


def test_build_input_empty_parts():
    with pytest.raises(ValueError):
        build_input("ae", {})


# ---------------------------------------------------------------------------
# augmentation


class LookupSource:
    def __init__(self, table, width):
        self.table = table
        self.width = width

    def vector(self, phrase):
        return self.table[phrase]


def test_augment_first_extraction_rule():
    ex = qa_example("The bathroom is very clean but the food is average.", "how was it ?", 0, 10)
    inst = make_qa_instances([ex], LEX)[0]
    assert [t.key for t in inst.extractions[0]] == ["very clean bathroom", "average food"]
    prepared = prepare_qa(inst)
    table = {"very clean bathroom": np.array([1.0, 2.0]), "average food": np.array([9.0, 9.0])}
    source = LookupSource(table, 2)
    cs = commonsense_matrix(len(prepared.tokens), prepared.sentence_map, prepared.extractions, source)
    lo, hi = prepared.review_range
    for i in range(lo, hi):
        assert np.array_equal(cs[i], table["very clean bathroom"])
    # CLS takes the whole input's first extraction
    assert np.array_equal(cs[0], table["very clean bathroom"])
    # question tokens and SEP carry zeros
    for i in range(1, lo):
        assert np.array_equal(cs[i], np.zeros(2))


def test_augment_no_extractions_all_zero():
    ex = qa_example("Nothing opinionated here at all.", "what ?", 0, 7)
    inst = make_qa_instances([ex], LEX)[0]
    prepared = prepare_qa(inst)
    out = augment(np.ones((len(prepared.tokens), 3)), prepared.sentence_map, prepared.extractions, ZeroSource(4))
    assert np.array_equal(out[:, 3:], np.zeros((len(prepared.tokens), 4)))


def test_augment_preserves_first_d():
    ex = qa_example("The bathroom is very clean but the food is average.", "how ?", 0, 10)
    inst = make_qa_instances([ex], LEX)[0]
    prepared = prepare_qa(inst)
    reps = np.random.default_rng(0).normal(size=(len(prepared.tokens), 5))
    rs = LookupSource({k.key: np.full(3, 7.0) for s in inst.extractions for k in s}, 3)
    out = augment(reps, prepared.sentence_map, prepared.extractions, rs)
    assert np.array_equal(out[:, :5], reps)
    assert out.shape == (len(prepared.tokens), 8)


def test_sentence_map_markers():
    ex = qa_example("First one . Second one .", "q ?", 0, 5)
    inst = make_qa_instances([ex], LEX)[0]
    prepared = prepare_qa(inst)
    assert prepared.sentence_map[0] == SENT_CLS
    n_q = len(ex.question)
    assert set(prepared.sentence_map[1 : 1 + n_q + 1]) == {SENT_NONE}
    lo, hi = prepared.review_range
    assert prepared.sentence_map[lo:hi] == (0, 0, 0, 1, 1, 1)


# ---------------------------------------------------------------------------
# qa_predict


def build_qa_model(instances, seed=0, h=4):
    prepared = [prepare_qa(i) for i in instances]
    vocab = build_encoder_vocab(prepared)
    encoder = EncoderModel(vocab, token_dim=6, output_dim=8, seed=seed)
    return TaskModel("qa", encoder, commonsense_width=h, seed=seed)


def test_qa_predict_single_token_review():
    ex = qa_example("beautiful", "was it nice ?", 0, 9)
    inst = make_qa_instances([ex], LEX)[0]
    model = build_qa_model([inst])
    assert qa_predict(model, inst, ZeroSource(4)) == (0, 9)


def test_qa_predict_matches_brute_force():
    ex = qa_example("one two three four five six", "which ?", 0, 7)
    inst = make_qa_instances([ex], LEX)[0]
    for seed in range(6):
        model = build_qa_model([inst], seed=seed)
        source = ZeroSource(4)
        prepared = prepare_qa(inst)
        starts, ends = qa_logits(model, prepared, source)
        n = len(starts)
        assert n == 6
        best, best_pair = -np.inf, None
        pairs = 0
        for i in range(n):
            for j in range(i, n):
                if j - i > model.max_answer_tokens:
                    continue
                pairs += 1
                if starts[i] + ends[j] > best:
                    best, best_pair = starts[i] + ends[j], (i, j)
        assert pairs == 21
        i, j = best_pair
        lo, hi = prepared.review_range
        expected = (
            prepared.tokens.tokens[lo + i].start,
            prepared.tokens.tokens[lo + j].end,
        )
        assert qa_predict(model, inst, source) == expected


def test_qa_predict_never_selects_question_tokens():
    ex = qa_example("short review", "a very long question with many words ?", 0, 5)
    inst = make_qa_instances([ex], LEX)[0]
    for seed in range(8):
        model = build_qa_model([inst], seed=seed)
        cs, ce = qa_predict(model, inst, ZeroSource(4))
        assert 0 <= cs < ce <= len(ex.review.text)


def test_qa_predict_respects_answer_cap():
    words = " ".join(f"w{i}" for i in range(8))
    ex = qa_example(words, "q ?", 0, 2)
    inst = make_qa_instances([ex], LEX)[0]
    prepared = prepare_qa(inst)
    vocab = build_encoder_vocab([prepared])
    encoder = EncoderModel(vocab, token_dim=6, output_dim=8, seed=0)
    model = TaskModel("qa", encoder, commonsense_width=2, seed=0, max_answer_tokens=1)
    source = ZeroSource(2)
    cs, ce = qa_predict(model, inst, source)
    assert len(ex.review.text[cs:ce].split()) <= 2


# ---------------------------------------------------------------------------
# AE / ASC decoding


def test_ae_decode_examples():
    assert ae_decode(["O", "O", "O"]) == []
    assert ae_decode(["B", "I", "O", "B"]) == [(0, 2), (3, 4)]
    assert ae_decode(["I", "O", "I"]) == [(0, 1), (2, 3)]  # orphan I repaired


def test_asc_tie_breaks_to_positive():
    ex = absa_example("the bathroom sparkles", [(1, 2)], target=(1, 2), polarity="neutral")
    inst = make_absa_instances([ex], LEX)[0]
    from reviewkb.comprehension import prepare_absa

    prepared = prepare_absa(inst, "asc")
    vocab = build_encoder_vocab([prepared])
    encoder = EncoderModel(vocab, token_dim=4, output_dim=6, seed=0)
    model = TaskModel("asc", encoder, commonsense_width=2, seed=0)
    model.heads["asc"].w.value[...] = 0.0
    model.heads["asc"].b.value[...] = 0.0
    assert asc_predict(model, inst, ZeroSource(2)) == "positive"


# ---------------------------------------------------------------------------
# train_task


def _tiny_absa():
    return [
        absa_example("the clean bathroom", [(2, 3)], target=(2, 3), polarity="positive", example_id="a0"),
        absa_example("a noisy room", [(2, 3)], target=(2, 3), polarity="negative", example_id="a1"),
    ]


def test_train_task_epochs_zero_deterministic():
    instances = make_absa_instances(_tiny_absa(), LEX)
    source = ZeroSource(4)
    m1 = train_task("ae", (instances, []), source, epochs=0, learning_rate=0.01, seed=3,
                    token_dim=4, encoder_dim=6)
    m2 = train_task("ae", (instances, []), source, epochs=0, learning_rate=0.01, seed=3,
                    token_dim=4, encoder_dim=6)
    assert ae_predict(m1, instances[0], source) == ae_predict(m2, instances[0], source)
    for p1, p2 in zip(m1.parameters(), m2.parameters()):
        assert np.array_equal(p1.value, p2.value)


def test_train_task_mismatched_dataset():
    ex = qa_example("some review", "q ?", 0, 4)
    qa_instances = make_qa_instances([ex], LEX)
    with pytest.raises(ValueError, match="task"):
        train_task("ae", (qa_instances, []), ZeroSource(2), epochs=1, learning_rate=0.01, seed=0)


def test_train_task_empty_training_set():
    with pytest.raises(ValueError, match="empty"):
        train_task("ae", ([], []), ZeroSource(2), epochs=1, learning_rate=0.01, seed=0)


def test_train_task_learns_tiny_ae():
    examples = [
        absa_example("the clean bathroom", [(2, 3)], example_id="a0"),
        absa_example("a noisy room", [(2, 3)], example_id="a1"),
        absa_example("very average food", [(2, 3)], example_id="a2"),
    ]
    instances = make_absa_instances(examples, LEX)
    source = ZeroSource(4)
    model = train_task("ae", (instances, instances), source, epochs=30,
                       learning_rate=0.02, seed=0, token_dim=6, encoder_dim=8)
    assert ae_predict(model, instances[0], source) == [(2, 3)]


def test_zero_weight_independence_quick():
    ex = qa_example("The bathroom is very clean but the food is average.", "how ?", 0, 10)
    inst = make_qa_instances([ex], LEX)[0]
    model = build_qa_model([inst], seed=1, h=3)
    zero_commonsense_columns(model)
    sources = [
        ZeroSource(3),
        ConstantSource(np.array([5.0, -2.0, 7.0])),
        LookupSource({k.key: np.full(3, 3.3) for s in inst.extractions for k in s}, 3),
    ]
    prepared = prepare_qa(inst)
    outputs = [qa_logits(model, prepared, s) for s in sources]
    for starts, ends in outputs[1:]:
        assert np.array_equal(starts, outputs[0][0])
        assert np.array_equal(ends, outputs[0][1])
    spans = {qa_predict(model, inst, s) for s in sources}
    assert len(spans) == 1
