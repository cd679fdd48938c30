"""Corpus ingestion: reviews, QA and ABSA datasets, word vectors, edge lists.

Tokenization is deterministic and dependency-free: split on whitespace, then
detach leading/trailing ASCII punctuation characters as single-char tokens.
Sentences split after ``. ! ?`` when followed by whitespace. Every token keeps
its character span in the original text, so joining surfaces with the original
inter-token characters reproduces the text exactly.

All token spans and character spans are half-open ``[start, end)``.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

_PUNCT = set(string.punctuation)
_SENT_END = {".", "!", "?"}

CLS = "[CLS]"
SEP = "[SEP]"


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int
    synthetic: bool = False  # CLS/SEP markers; excluded from span metrics


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


@dataclass(frozen=True)
class Review:
    id: str
    entity_id: str
    text: str
    sentences: tuple[TokenSequence, ...]

    def tokens(self) -> list[Token]:
        return [t for s in self.sentences for t in s.tokens]


@dataclass(frozen=True)
class QAExample:
    review: Review
    question: TokenSequence
    question_text: str
    answer_char_start: int
    answer_char_end: int
    example_id: str = ""

    @property
    def answer_text(self) -> str:
        return self.review.text[self.answer_char_start : self.answer_char_end]


@dataclass(frozen=True)
class AbsaExample:
    text: str
    sentence: TokenSequence
    aspect_spans: tuple[tuple[int, int], ...]
    target_aspect: tuple[int, int] | None = None
    polarity: str | None = None
    example_id: str = ""


@dataclass(frozen=True)
class WordVectors:
    dim: int
    table: dict[str, np.ndarray] = field(repr=False)

    def lookup(self, word: str) -> np.ndarray:
        """Vector for ``word``; unknown words map to the all-zeros vector."""
        vec = self.table.get(word)
        if vec is None:
            return np.zeros(self.dim)
        return vec


@dataclass(frozen=True)
class EdgeList:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]  # endpoints sorted within each pair

    def has_edge(self, a: str, b: str) -> bool:
        a, b = normalize_phrase(a), normalize_phrase(b)
        return ((a, b) if a <= b else (b, a)) in self.edges


def normalize_phrase(phrase: str) -> str:
    """Lowercase and collapse internal whitespace to single spaces."""
    return " ".join(phrase.lower().split())


def tokenize(text: str) -> list[Token]:
    """Tokenize ``text`` into surface tokens with character spans."""
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        tokens.extend(_split_chunk(text, i, j))
        i = j
    return tokens


def _split_chunk(text: str, start: int, end: int) -> list[Token]:
    # Peel leading then trailing ASCII punctuation, one char per token.
    lead: list[Token] = []
    while start < end and text[start] in _PUNCT:
        lead.append(Token(text[start], start, start + 1))
        start += 1
    trail: list[Token] = []
    while end > start and text[end - 1] in _PUNCT:
        trail.append(Token(text[end - 1], end - 1, end))
        end -= 1
    trail.reverse()
    core = [Token(text[start:end], start, end)] if end > start else []
    return lead + core + trail


def split_sentences(text: str) -> tuple[TokenSequence, ...]:
    """Tokenize and group into sentences.

    A sentence ends at a ``. ! ?`` token followed by whitespace (or end of
    text). Sentences partition the token stream in order.
    """
    tokens = tokenize(text)
    sentences: list[TokenSequence] = []
    current: list[Token] = []
    for tok in tokens:
        current.append(tok)
        at_break = tok.surface in _SENT_END and (
            tok.end >= len(text) or text[tok.end].isspace()
        )
        if at_break:
            sentences.append(TokenSequence(tuple(current)))
            current = []
    if current:
        sentences.append(TokenSequence(tuple(current)))
    return tuple(sentences)


def make_review(review_id: str, entity_id: str, text: str) -> Review:
    if not entity_id:
        raise DataError(f"review {review_id!r} has empty entity id")
    return Review(id=review_id, entity_id=entity_id, text=text, sentences=split_sentences(text))


def load_reviews(path: str | Path, format: str = "jsonl") -> list[Review]:
    """Load reviews from a JSONL file with keys ``id``, ``entity``, ``text``."""
    if format != "jsonl":
        raise DataError(f"unsupported review format {format!r}")
    reviews: list[Review] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed JSON at line {lineno}: {exc.msg}") from exc
            for key in ("id", "entity", "text"):
                if key not in obj:
                    raise DataError(f"missing key {key} at line {lineno}")
            reviews.append(make_review(str(obj["id"]), str(obj["entity"]), obj["text"]))
    return reviews


def load_qa_dataset(qa_path: str | Path, reviews: list[Review]) -> list[QAExample]:
    """Load QA examples: a JSON array of ``{review_id, question, answer_start,
    answer_end}`` resolved against a companion review list."""
    by_id = {r.id: r for r in reviews}
    with open(qa_path, encoding="utf-8") as fh:
        try:
            entries = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed QA JSON in {qa_path}: {exc.msg}") from exc
    if not isinstance(entries, list):
        raise DataError(f"QA dataset {qa_path} must be a JSON array")
    examples: list[QAExample] = []
    for i, entry in enumerate(entries):
        for key in ("review_id", "question", "answer_start", "answer_end"):
            if key not in entry:
                raise DataError(f"missing key {key} in QA entry {i}")
        review = by_id.get(entry["review_id"])
        if review is None:
            raise DataError(f"QA entry {i} references unknown review {entry['review_id']!r}")
        start, end = int(entry["answer_start"]), int(entry["answer_end"])
        if not (0 <= start < end <= len(review.text)):
            raise DataError(f"QA entry {i}: answer span [{start}, {end}) outside review text")
        examples.append(
            QAExample(
                review=review,
                question=TokenSequence(tuple(tokenize(entry["question"]))),
                question_text=entry["question"],
                answer_char_start=start,
                answer_char_end=end,
                example_id=str(entry.get("id", f"qa-{i}")),
            )
        )
    return examples


def load_absa_dataset(path: str | Path) -> list[AbsaExample]:
    """Load ABSA examples from JSONL: ``{text, aspects, target?, polarity?}``.

    Aspect/target spans are half-open token ranges into the tokenized text.
    """
    examples: list[AbsaExample] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed JSON at line {lineno}: {exc.msg}") from exc
            if "text" not in obj:
                raise DataError(f"missing key text at line {lineno}")
            sentence = TokenSequence(tuple(tokenize(obj["text"])))
            spans = tuple((int(a["start"]), int(a["end"])) for a in obj.get("aspects", []))
            for s, e in spans:
                if not (0 <= s < e <= len(sentence)):
                    raise DataError(f"aspect span [{s}, {e}) out of bounds at line {lineno}")
            target = obj.get("target")
            polarity = obj.get("polarity")
            if (target is None) != (polarity is None):
                raise DataError(f"target and polarity must appear together at line {lineno}")
            target_span = (int(target["start"]), int(target["end"])) if target else None
            if target_span is not None:
                s, e = target_span
                if not (0 <= s < e <= len(sentence)):
                    raise DataError(f"target span [{s}, {e}) out of bounds at line {lineno}")
            examples.append(
                AbsaExample(
                    text=obj["text"],
                    sentence=sentence,
                    aspect_spans=spans,
                    target_aspect=target_span,
                    polarity=polarity,
                    example_id=str(obj.get("id", f"absa-{lineno}")),
                )
            )
    return examples


def load_word_vectors(path: str | Path) -> WordVectors:
    """Parse ``word v1 ... vD`` lines; the first row fixes the dimension."""
    table: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise DataError(f"no vector values at row {lineno}")
            elif len(values) != dim:
                raise DataError(
                    f"inconsistent dimension at row {lineno}: expected {dim}, got {len(values)}"
                )
            try:
                table[word] = np.array([float(v) for v in values])
            except ValueError as exc:
                raise DataError(f"non-numeric vector value at row {lineno}") from exc
    if dim is None:
        raise DataError(f"empty word vector file {path}")
    return WordVectors(dim=dim, table=table)


def load_edge_list(path: str | Path) -> EdgeList:
    """Parse a TSV edge list ``phrase1<TAB>phrase2`` into normalized phrases."""
    nodes: set[str] = set()
    edges: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise DataError(f"expected two tab-separated phrases at line {lineno}")
            a, b = normalize_phrase(parts[0]), normalize_phrase(parts[1])
            if not a or not b:
                raise DataError(f"empty phrase at line {lineno}")
            nodes.update((a, b))
            edges.add((a, b) if a <= b else (b, a))
    return EdgeList(nodes=frozenset(nodes), edges=frozenset(edges))


def split(examples: list, train_fraction: float, seed: int) -> tuple[list, list]:
    """Deterministically shuffle and split: ``len(train) = floor(f * N)``."""
    if not examples:
        raise ValueError("cannot split an empty example list")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    order = np.random.default_rng(seed).permutation(len(examples))
    n_train = int(np.floor(train_fraction * len(examples)))
    train = [examples[i] for i in order[:n_train]]
    validation = [examples[i] for i in order[n_train:]]
    return train, validation


def dataset_stats(examples: list[QAExample]) -> dict[str, float]:
    """Average whitespace word counts over reviews, questions, and answers."""
    if not examples:
        raise ValueError("dataset_stats requires a nonempty example list")
    review_words = [len(ex.review.text.split()) for ex in examples]
    question_words = [len(ex.question_text.split()) for ex in examples]
    answer_words = [len(ex.answer_text.split()) for ex in examples]
    return {
        "avg_review_words": float(np.mean(review_words)),
        "avg_question_words": float(np.mean(question_words)),
        "avg_answer_words": float(np.mean(answer_words)),
    }
