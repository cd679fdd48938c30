"""Review comprehension: encoder, commonsense augmentation, and task heads.

A bidirectional GRU plays the role of the large pretrained text encoder at
desk scale; the mechanism of interest is preserved exactly: every token of a
sentence is appended with the commonsense vector of the sentence's first
extracted opinion (all zeros when the sentence has none), and single dense
layers on top of the widened representations drive aspect extraction (AE),
aspect sentiment classification (ASC), and extractive QA.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CLS, SEP, AbsaExample, QAExample, Token, TokenSequence
from .distmult import DistMultModel, phrase_vector
from .errors import DataError, NumericalError
from .extraction import Lexicon, OpinionTuple, extract_rule_based, repair_bio
from .metrics import cls_scores, token_f1
from .neural import autodiff as ad
from .neural import (
    Adam,
    Dense,
    Embedding,
    GruCell,
    Param,
    ParamLeaves,
    load_checkpoint,
    save_checkpoint,
)
from .reasoner import Seq2SeqModel

TASKS = ("ae", "asc", "qa")
AE_LABELS = ("B", "I", "O")
POLARITIES = ("positive", "negative", "neutral")
UNK = "<unk>"

# sentence_map markers for tokens outside any review sentence
SENT_CLS = -2  # gets the first extraction of the entire input
SENT_NONE = -1  # gets the all-zeros vector

DEFAULT_MAX_ANSWER_TOKENS = 50


# ---------------------------------------------------------------------------
# Commonsense sources


class ZeroSource:
    """Width-H source that always returns zeros (the ablation baseline)."""

    def __init__(self, width: int):
        self.width = width

    def vector(self, phrase: str) -> np.ndarray:
        return np.zeros(self.width)


class ReasonerSource:
    def __init__(self, model: Seq2SeqModel):
        self.model = model
        self.width = model.hidden_dim
        self._cache: dict[str, np.ndarray] = {}

    def vector(self, phrase: str) -> np.ndarray:
        if phrase not in self._cache:
            self._cache[phrase] = self.model.encode(phrase)
        return self._cache[phrase]


class DistmultSource:
    def __init__(self, model: DistMultModel):
        self.model = model
        self.width = model.dim
        self._cache: dict[str, np.ndarray] = {}

    def vector(self, phrase: str) -> np.ndarray:
        if phrase not in self._cache:
            self._cache[phrase] = phrase_vector(self.model, phrase)
        return self._cache[phrase]


class ConstantSource:
    """Returns one fixed vector for every phrase; handy in ablation tests."""

    def __init__(self, vector: np.ndarray):
        self.vector_value = np.asarray(vector, dtype=np.float64)
        self.width = self.vector_value.shape[0]

    def vector(self, phrase: str) -> np.ndarray:
        return self.vector_value


# ---------------------------------------------------------------------------
# Inputs


@dataclass(frozen=True)
class QaInstance:
    example: QAExample
    extractions: tuple[tuple[OpinionTuple, ...], ...]  # per review sentence


@dataclass(frozen=True)
class AbsaInstance:
    example: AbsaExample
    extractions: tuple[OpinionTuple, ...]  # the single sentence's tuples


def make_qa_instances(examples: list[QAExample], lexicon: Lexicon) -> list[QaInstance]:
    out = []
    for ex in examples:
        per_sentence = tuple(
            tuple(extract_rule_based(s, lexicon, sentence_index=i))
            for i, s in enumerate(ex.review.sentences)
        )
        out.append(QaInstance(example=ex, extractions=per_sentence))
    return out


def make_absa_instances(examples: list[AbsaExample], lexicon: Lexicon) -> list[AbsaInstance]:
    return [
        AbsaInstance(example=ex, extractions=tuple(extract_rule_based(ex.sentence, lexicon)))
        for ex in examples
    ]


def _synthetic(surface: str) -> Token:
    return Token(surface, 0, 0, synthetic=True)


def build_input(task: str, parts: dict[str, TokenSequence]) -> TokenSequence:
    """Assemble the encoder input with CLS/SEP conventions.

    AE: ``[CLS] review``; ASC: ``[CLS] review [SEP] aspect``;
    QA: ``[CLS] question [SEP] review``.
    """
    if not parts:
        raise ValueError("parts must be nonempty")
    if task == "ae":
        return TokenSequence((_synthetic(CLS),) + parts["review"].tokens)
    if task == "asc":
        return TokenSequence(
            (_synthetic(CLS),) + parts["review"].tokens + (_synthetic(SEP),) + parts["aspect"].tokens
        )
    if task == "qa":
        return TokenSequence(
            (_synthetic(CLS),) + parts["question"].tokens + (_synthetic(SEP),) + parts["review"].tokens
        )
    raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class PreparedInput:
    tokens: TokenSequence
    sentence_map: tuple[int, ...]
    review_range: tuple[int, int]  # half-open input positions of review tokens
    extractions: tuple[tuple[OpinionTuple, ...], ...]


def prepare_qa(instance: QaInstance) -> PreparedInput:
    review = instance.example.review
    review_tokens = tuple(t for s in review.sentences for t in s.tokens)
    tokens = build_input(
        "qa",
        {"question": instance.example.question, "review": TokenSequence(review_tokens)},
    )
    n_question = len(instance.example.question)
    review_start = 1 + n_question + 1
    sentence_map = [SENT_CLS] + [SENT_NONE] * (n_question + 1)
    for si, sentence in enumerate(review.sentences):
        sentence_map.extend([si] * len(sentence))
    return PreparedInput(
        tokens=tokens,
        sentence_map=tuple(sentence_map),
        review_range=(review_start, review_start + len(review_tokens)),
        extractions=instance.extractions,
    )


def prepare_absa(instance: AbsaInstance, task: str) -> PreparedInput:
    ex = instance.example
    if task == "asc":
        if ex.target_aspect is None:
            raise DataError(f"example {ex.example_id} has no target aspect for ASC")
        s, e = ex.target_aspect
        aspect = TokenSequence(ex.sentence.tokens[s:e])
        tokens = build_input("asc", {"review": ex.sentence, "aspect": aspect})
        sentence_map = (
            (SENT_CLS,) + (0,) * len(ex.sentence) + (SENT_NONE,) * (1 + len(aspect))
        )
    else:
        tokens = build_input("ae", {"review": ex.sentence})
        sentence_map = (SENT_CLS,) + (0,) * len(ex.sentence)
    return PreparedInput(
        tokens=tokens,
        sentence_map=sentence_map,
        review_range=(1, 1 + len(ex.sentence)),
        extractions=(instance.extractions,),
    )


# ---------------------------------------------------------------------------
# Augmentation


def first_extraction(extractions: tuple[tuple[OpinionTuple, ...], ...]) -> OpinionTuple | None:
    for sentence_tuples in extractions:
        if sentence_tuples:
            return sentence_tuples[0]
    return None


def commonsense_matrix(
    n_tokens: int,
    sentence_map: tuple[int, ...],
    extractions: tuple[tuple[OpinionTuple, ...], ...],
    source,
) -> np.ndarray:
    """Per-token commonsense vectors: a sentence's tokens share the vector of
    its first extraction, CLS gets the whole input's first extraction, and
    everything else (including extraction-free sentences) gets zeros."""
    if len(sentence_map) != n_tokens:
        raise ValueError(f"sentence_map length {len(sentence_map)} != {n_tokens} tokens")
    by_sentence: dict[int, np.ndarray] = {}
    for si, sentence_tuples in enumerate(extractions):
        if sentence_tuples:
            by_sentence[si] = np.asarray(source.vector(sentence_tuples[0].key), dtype=np.float64)
    whole = first_extraction(extractions)
    whole_vec = (
        np.asarray(source.vector(whole.key), dtype=np.float64)
        if whole is not None
        else np.zeros(source.width)
    )
    zeros = np.zeros(source.width)
    out = np.empty((n_tokens, source.width))
    for i, si in enumerate(sentence_map):
        if si == SENT_CLS:
            out[i] = whole_vec
        elif si >= 0 and si in by_sentence:
            out[i] = by_sentence[si]
        else:
            out[i] = zeros
    return out


def augment(
    encoder_out: np.ndarray,
    sentence_map: tuple[int, ...],
    extractions: tuple[tuple[OpinionTuple, ...], ...],
    source,
) -> np.ndarray:
    """Widen (T, D) token representations to (T, D + H); never alters the
    first D entries."""
    cs = commonsense_matrix(encoder_out.shape[0], sentence_map, extractions, source)
    return np.concatenate([encoder_out, cs], axis=1)


# ---------------------------------------------------------------------------
# Encoder and task model


class EncoderModel:
    """Token embedding + bidirectional GRU; per-token width ``output_dim``."""

    def __init__(self, vocab: list[str], token_dim: int, output_dim: int, seed: int):
        if output_dim % 2 != 0:
            raise ValueError(f"encoder output_dim must be even, got {output_dim}")
        self.vocab = list(vocab)
        self.word_to_id = {w: i for i, w in enumerate(self.vocab)}
        self.token_dim = token_dim
        self.output_dim = output_dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        half = output_dim // 2
        self.embedding = Embedding(len(self.vocab), token_dim, rng, "encoder.embedding")
        self.fwd_cell = GruCell(token_dim, half, rng, "encoder.fwd")
        self.bwd_cell = GruCell(token_dim, half, rng, "encoder.bwd")

    def parameters(self) -> list[Param]:
        return (
            self.embedding.parameters()
            + self.fwd_cell.parameters()
            + self.bwd_cell.parameters()
        )

    def token_id(self, token: Token) -> int:
        key = token.surface if token.synthetic else token.surface.lower()
        return self.word_to_id.get(key, self.word_to_id[UNK])

    def encode(self, tokens: TokenSequence) -> np.ndarray:
        """(T, D) representations, graph-free."""
        ids = [self.token_id(t) for t in tokens.tokens]
        half = self.output_dim // 2
        n = len(ids)
        fwd = np.zeros((n, half))
        h = np.zeros(half)
        for i, tid in enumerate(ids):
            h = self.fwd_cell.step(self.embedding.row(tid), h)
            fwd[i] = h
        bwd = np.zeros((n, half))
        h = np.zeros(half)
        for i in range(n - 1, -1, -1):
            h = self.bwd_cell.step(self.embedding.row(ids[i]), h)
            bwd[i] = h
        return np.concatenate([fwd, bwd], axis=1)

    def graph_encode(self, leaves: ParamLeaves, tokens: TokenSequence) -> list[ad.Node]:
        ids = [self.token_id(t) for t in tokens.tokens]
        half = self.output_dim // 2
        embeds = [self.embedding.graph_row(leaves, tid) for tid in ids]
        fwd: list[ad.Node] = []
        h = ad.constant(np.zeros(half))
        for x in embeds:
            h = self.fwd_cell.graph_step(leaves, x, h)
            fwd.append(h)
        bwd: list[ad.Node] = [None] * len(ids)  # type: ignore[list-item]
        h = ad.constant(np.zeros(half))
        for i in range(len(ids) - 1, -1, -1):
            h = self.bwd_cell.graph_step(leaves, embeds[i], h)
            bwd[i] = h
        return [ad.concat(f, b) for f, b in zip(fwd, bwd)]


def build_encoder_vocab(prepared: list[PreparedInput]) -> list[str]:
    words: set[str] = set()
    for p in prepared:
        for t in p.tokens.tokens:
            if not t.synthetic:
                words.add(t.surface.lower())
    return [CLS, SEP, UNK] + sorted(words)


class TaskModel:
    """Encoder plus the dense head(s) for one task over D + H inputs."""

    def __init__(
        self,
        task: str,
        encoder: EncoderModel,
        commonsense_width: int,
        seed: int,
        max_answer_tokens: int = DEFAULT_MAX_ANSWER_TOKENS,
    ):
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}")
        self.task = task
        self.encoder = encoder
        self.commonsense_width = commonsense_width
        self.max_answer_tokens = max_answer_tokens
        self.seed = seed
        rng = np.random.default_rng(seed + 1)
        width = encoder.output_dim + commonsense_width
        if task == "ae":
            self.heads = {"ae": Dense(width, len(AE_LABELS), rng, "head.ae")}
        elif task == "asc":
            self.heads = {"asc": Dense(width, len(POLARITIES), rng, "head.asc")}
        else:
            self.heads = {
                "qa_start": Dense(width, 1, rng, "head.qa_start"),
                "qa_end": Dense(width, 1, rng, "head.qa_end"),
            }

    def parameters(self) -> list[Param]:
        params = self.encoder.parameters()
        for head in self.heads.values():
            params.extend(head.parameters())
        return params

    def augmented(self, prepared: PreparedInput, source) -> np.ndarray:
        reps = self.encoder.encode(prepared.tokens)
        return augment(reps, prepared.sentence_map, prepared.extractions, source)

    def save(self, prefix) -> None:
        save_checkpoint(
            prefix,
            {p.name: p.value for p in self.parameters()},
            {
                "kind": "task",
                "task": self.task,
                "vocab": self.encoder.vocab,
                "hyperparameters": {
                    "token_dim": self.encoder.token_dim,
                    "encoder_dim": self.encoder.output_dim,
                    "commonsense_width": self.commonsense_width,
                    "max_answer_tokens": self.max_answer_tokens,
                },
                "seed": self.seed,
            },
        )

    @classmethod
    def load(cls, prefix) -> "TaskModel":
        tensors, metadata = load_checkpoint(prefix)
        hp = metadata["hyperparameters"]
        encoder = EncoderModel(
            vocab=metadata["vocab"],
            token_dim=hp["token_dim"],
            output_dim=hp["encoder_dim"],
            seed=metadata.get("seed", 0),
        )
        model = cls(
            task=metadata["task"],
            encoder=encoder,
            commonsense_width=hp["commonsense_width"],
            seed=metadata.get("seed", 0),
            max_answer_tokens=hp["max_answer_tokens"],
        )
        for p in model.parameters():
            p.value[...] = tensors[p.name]
        return model


def zero_commonsense_columns(model: TaskModel) -> None:
    """Zero every head weight column over the appended H dimensions; after
    this, predictions cannot depend on the commonsense source."""
    d = model.encoder.output_dim
    for head in model.heads.values():
        head.w.value[:, d:] = 0.0


# ---------------------------------------------------------------------------
# Targets


def ae_gold_labels(instance: AbsaInstance) -> list[int]:
    """Per input token: AE label index, or -1 for masked synthetic tokens."""
    n = len(instance.example.sentence)
    labels = [AE_LABELS.index("O")] * n
    for s, e in instance.example.aspect_spans:
        labels[s] = AE_LABELS.index("B")
        for i in range(s + 1, e):
            labels[i] = AE_LABELS.index("I")
    return [-1] + labels  # CLS masked


def qa_gold_token_span(instance: QaInstance, prepared: PreparedInput) -> tuple[int, int]:
    """Inclusive (start, end) input positions of the answer's review tokens."""
    ex = instance.example
    lo, hi = prepared.review_range
    hits = [
        i
        for i in range(lo, hi)
        if prepared.tokens.tokens[i].start < ex.answer_char_end
        and prepared.tokens.tokens[i].end > ex.answer_char_start
    ]
    if not hits:
        raise DataError(f"answer span of {ex.example_id} covers no review tokens")
    return hits[0], hits[-1]


# ---------------------------------------------------------------------------
# Loss graphs and training


def _instance_loss(model: TaskModel, leaves: ParamLeaves, prepared: PreparedInput, target, source) -> ad.Node:
    reps = model.encoder.graph_encode(leaves, prepared.tokens)
    cs = commonsense_matrix(len(reps), prepared.sentence_map, prepared.extractions, source)
    wide = [ad.concat(rep, ad.constant(cs[i])) for i, rep in enumerate(reps)]
    if model.task == "ae":
        losses = [
            ad.softmax_xent(model.heads["ae"].graph_apply(leaves, wide[i]), label)
            for i, label in enumerate(target)
            if label >= 0
        ]
        return ad.scale(ad.add_all(losses), 1.0 / len(losses))
    if model.task == "asc":
        return ad.softmax_xent(model.heads["asc"].graph_apply(leaves, wide[0]), target)
    lo, hi = prepared.review_range
    start_tok, end_tok = target
    starts = ad.stack([model.heads["qa_start"].graph_apply(leaves, wide[i]) for i in range(lo, hi)])
    ends = ad.stack([model.heads["qa_end"].graph_apply(leaves, wide[i]) for i in range(lo, hi)])
    return ad.add(
        ad.softmax_xent(starts, start_tok - lo), ad.softmax_xent(ends, end_tok - lo)
    )


def loss_and_grad_fn(model: TaskModel, batch: list[tuple[PreparedInput, object]], source):
    """Mean loss over a fixed prepared batch; fills gradients (grad-checkable)."""

    def run() -> float:
        for p in model.parameters():
            p.zero_grad()
        leaves = ParamLeaves(model.parameters())
        losses = [
            _instance_loss(model, leaves, prepared, target, source)
            for prepared, target in batch
        ]
        loss = ad.scale(ad.add_all(losses), 1.0 / len(losses))
        ad.backward(loss)
        leaves.accumulate_grads()
        return float(loss.value)

    return run


def _prepare_dataset(task: str, instances: list) -> list[tuple[PreparedInput, object]]:
    batch: list[tuple[PreparedInput, object]] = []
    for inst in instances:
        if task == "qa":
            if not isinstance(inst, QaInstance):
                raise ValueError(f"task {task!r} got a {type(inst).__name__}")
            prepared = prepare_qa(inst)
            batch.append((prepared, qa_gold_token_span(inst, prepared)))
        elif task == "ae":
            if not isinstance(inst, AbsaInstance):
                raise ValueError(f"task {task!r} got a {type(inst).__name__}")
            batch.append((prepare_absa(inst, "ae"), ae_gold_labels(inst)))
        elif task == "asc":
            if not isinstance(inst, AbsaInstance):
                raise ValueError(f"task {task!r} got a {type(inst).__name__}")
            if inst.example.polarity is None:
                raise DataError(f"example {inst.example.example_id} lacks a polarity label")
            batch.append((prepare_absa(inst, "asc"), POLARITIES.index(inst.example.polarity)))
        else:
            raise ValueError(f"unknown task {task!r}")
    return batch


def train_task(
    task: str,
    dataset: tuple[list, list],
    source,
    epochs: int,
    learning_rate: float,
    seed: int,
    token_dim: int = 16,
    encoder_dim: int = 32,
    max_answer_tokens: int = DEFAULT_MAX_ANSWER_TOKENS,
) -> TaskModel:
    """Train one task head (and the encoder under it) with per-example Adam.

    ``dataset`` is a (train, validation) pair of task instances. After each
    epoch the validation metric (AE span F1, ASC macro-F1, QA token F1) is
    scored and the best-scoring parameters are kept; with an empty validation
    list the final-epoch parameters are returned.
    """
    train_instances, val_instances = dataset
    if not train_instances:
        raise ValueError("empty training set")
    train_batch = _prepare_dataset(task, train_instances)
    encoder = EncoderModel(
        vocab=build_encoder_vocab([p for p, _ in train_batch]),
        token_dim=token_dim,
        output_dim=encoder_dim,
        seed=seed,
    )
    model = TaskModel(
        task,
        encoder,
        commonsense_width=source.width,
        seed=seed,
        max_answer_tokens=max_answer_tokens,
    )
    opt = Adam(model.parameters(), learning_rate)
    rng = np.random.default_rng(seed)
    best_score = -np.inf
    best_values: dict[str, np.ndarray] | None = None
    for _ in range(epochs):
        for idx in rng.permutation(len(train_batch)):
            loss = loss_and_grad_fn(model, [train_batch[idx]], source)()
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite {task} loss {loss}")
            opt.step()
        if val_instances:
            score = validation_score(model, val_instances, source)
            if score > best_score:
                best_score = score
                best_values = {p.name: p.value.copy() for p in model.parameters()}
    if best_values is not None:
        for p in model.parameters():
            p.value[...] = best_values[p.name]
    return model


def validation_score(model: TaskModel, instances: list, source) -> float:
    if model.task == "ae":
        correct = n_pred = n_gold = 0
        for inst in instances:
            pred = set(ae_predict(model, inst, source))
            gold = set(inst.example.aspect_spans)
            correct += len(pred & gold)
            n_pred += len(pred)
            n_gold += len(gold)
        p = correct / n_pred if n_pred else 0.0
        r = correct / n_gold if n_gold else 0.0
        return 2 * p * r / (p + r) if p + r else 0.0
    if model.task == "asc":
        preds = [asc_predict(model, inst, source) for inst in instances]
        golds = [inst.example.polarity for inst in instances]
        return cls_scores(preds, golds).macro_f1
    scores = []
    for inst in instances:
        cs, ce = qa_predict(model, inst, source)
        scores.append(
            token_f1(inst.example.review.text[cs:ce], inst.example.answer_text).f1
        )
    return float(np.mean(scores))


# ---------------------------------------------------------------------------
# Prediction


def ae_decode(tags: list[str]) -> list[tuple[int, int]]:
    """Half-open spans from B/I/O tags, repairing orphan I like the extractor."""
    mapped = tuple({"B": "B-ASP", "I": "I-ASP", "O": "O"}[t] for t in tags)
    repaired = repair_bio(mapped)
    spans: list[tuple[int, int]] = []
    start = None
    for i, lab in enumerate(repaired + ("O",)):
        if lab == "B-ASP":
            if start is not None:
                spans.append((start, i))
            start = i
        elif lab != "I-ASP" and start is not None:
            spans.append((start, i))
            start = None
    return spans


def ae_predict(model: TaskModel, instance: AbsaInstance, source) -> list[tuple[int, int]]:
    """Predicted aspect spans in sentence token coordinates."""
    prepared = prepare_absa(instance, "ae")
    wide = model.augmented(prepared, source)
    head = model.heads["ae"]
    tags = [
        AE_LABELS[int(np.argmax(head.apply(wide[i])))]
        for i in range(1, len(prepared.tokens))  # skip CLS
    ]
    return ae_decode(tags)


def asc_predict(model: TaskModel, instance: AbsaInstance, source) -> str:
    prepared = prepare_absa(instance, "asc")
    wide = model.augmented(prepared, source)
    logits = model.heads["asc"].apply(wide[0])
    return POLARITIES[int(np.argmax(logits))]


def qa_logits(model: TaskModel, prepared: PreparedInput, source) -> tuple[np.ndarray, np.ndarray]:
    wide = model.augmented(prepared, source)
    lo, hi = prepared.review_range
    start = np.array([model.heads["qa_start"].apply(wide[i])[0] for i in range(lo, hi)])
    end = np.array([model.heads["qa_end"].apply(wide[i])[0] for i in range(lo, hi)])
    return start, end


def qa_predict(model: TaskModel, instance: QaInstance, source) -> tuple[int, int]:
    """Character span maximizing start + end logits over review token pairs
    (i <= j, j - i <= max_answer_tokens; ties to smaller i then smaller j)."""
    prepared = prepare_qa(instance)
    lo, hi = prepared.review_range
    if hi <= lo:
        raise DataError(f"review segment of {instance.example.example_id} is empty")
    start_logits, end_logits = qa_logits(model, prepared, source)
    n = hi - lo
    best = (-np.inf, -1, -1)
    for i in range(n):
        for j in range(i, min(n, i + model.max_answer_tokens + 1)):
            value = start_logits[i] + end_logits[j]
            if value > best[0]:
                best = (value, i, j)
    _, i, j = best
    return prepared.tokens.tokens[lo + i].start, prepared.tokens.tokens[lo + j].end
