"""Opinion tuple extraction from review sentences.

Two extraction paths produce the same (modifier, aspect) tuples:

* a deterministic rule-based extractor driven by a lexicon of adjectives and
  aspect nouns (the default), and
* a trainable averaged-perceptron BIO tagger with Viterbi decoding, plus a
  nearest-distance pairing step that combines tagged spans into tuples.

Token spans are half-open ``[start, end)`` over the sentence's tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Review, TokenSequence, Token, normalize_phrase
from .errors import DataError

LABELS = ("O", "B-ASP", "I-ASP", "B-MOD", "I-MOD")
START = "*"  # pseudo-label before the first token

_COPULA = {"is", "was", "are", "were"}
_CONNECTOR = {"but", "and", ","}


@dataclass(frozen=True)
class OpinionTuple:
    modifier: str
    aspect: str
    sentence_index: int
    modifier_span: tuple[int, int]
    aspect_span: tuple[int, int]

    @property
    def key(self) -> str:
        """Normalized ``modifier aspect`` string, the KB's opinion key."""
        return f"{self.modifier} {self.aspect}"


@dataclass(frozen=True)
class TagSequence:
    labels: tuple[str, ...]


@dataclass(frozen=True)
class Lexicon:
    adjectives: frozenset[str]
    aspect_nouns: frozenset[str]


def load_lexicon(path: str | Path) -> Lexicon:
    """Read ``{"adjectives": [...], "aspect_nouns": [...]}`` from JSON."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    for key in ("adjectives", "aspect_nouns"):
        if key not in obj:
            raise DataError(f"lexicon file {path} missing key {key}")
    return Lexicon(
        adjectives=frozenset(normalize_phrase(w) for w in obj["adjectives"]),
        aspect_nouns=frozenset(normalize_phrase(w) for w in obj["aspect_nouns"]),
    )


def _runs(classes: list[str], wanted: str) -> list[tuple[int, int]]:
    """Maximal runs of consecutive tokens classified as ``wanted``."""
    runs: list[tuple[int, int]] = []
    start = None
    for i, c in enumerate(classes + ["O"]):
        if c == wanted and start is None:
            start = i
        elif c != wanted and start is not None:
            runs.append((start, i))
            start = None
    return runs


def extract_rule_based(
    sentence: TokenSequence, lexicon: Lexicon, sentence_index: int = 0
) -> list[OpinionTuple]:
    """Extract (modifier, aspect) tuples by lexicon runs.

    A maximal adjective run links to an aspect-noun run when directly adjacent
    to it, or when it follows the aspect through a copula ("is/was/are/were"),
    optionally chained by "but"/"and"/",". A token found in both lexicon sets
    counts as an adjective.
    """
    if not lexicon.adjectives or not lexicon.aspect_nouns:
        raise ValueError("lexicon adjective and aspect-noun sets must be nonempty")
    lowers = [t.surface.lower() for t in sentence.tokens]
    classes = [
        "MOD" if w in lexicon.adjectives else "ASP" if w in lexicon.aspect_nouns else "O"
        for w in lowers
    ]
    mod_runs = _runs(classes, "MOD")
    asp_runs = _runs(classes, "ASP")
    mod_starts = {m[0]: m for m in mod_runs}

    results: list[tuple[tuple[int, int], tuple[int, int]]] = []
    for asp in asp_runs:
        linked: list[tuple[int, int]] = []
        for mod in mod_runs:
            if mod[1] == asp[0] or mod[0] == asp[1]:
                linked.append(mod)
        if asp[1] < len(lowers) and lowers[asp[1]] in _COPULA:
            i = asp[1] + 1
            while i < len(lowers):
                if i in mod_starts:
                    mod = mod_starts[i]
                    if mod not in linked:
                        linked.append(mod)
                    i = mod[1]
                elif lowers[i] in _CONNECTOR and (i + 1) in mod_starts:
                    i += 1
                else:
                    break
        for mod in sorted(linked):
            results.append((mod, asp))

    results.sort(key=lambda pair: (pair[1][0], pair[0][0]))
    return [_make_tuple(sentence, mod, asp, sentence_index) for mod, asp in results]


def _make_tuple(
    sentence: TokenSequence,
    mod_span: tuple[int, int],
    asp_span: tuple[int, int],
    sentence_index: int,
) -> OpinionTuple:
    phrase = lambda span: normalize_phrase(
        " ".join(t.surface for t in sentence.tokens[span[0] : span[1]])
    )
    return OpinionTuple(
        modifier=phrase(mod_span),
        aspect=phrase(asp_span),
        sentence_index=sentence_index,
        modifier_span=mod_span,
        aspect_span=asp_span,
    )


def extract_review(review: Review, lexicon: Lexicon) -> list[OpinionTuple]:
    """Rule-based extraction over every sentence of a review."""
    tuples: list[OpinionTuple] = []
    for si, sentence in enumerate(review.sentences):
        tuples.extend(extract_rule_based(sentence, lexicon, sentence_index=si))
    return tuples


# ---------------------------------------------------------------------------
# BIO utilities


def is_well_formed(labels: tuple[str, ...]) -> bool:
    prev = "O"
    for lab in labels:
        if lab not in LABELS:
            return False
        if lab.startswith("I-") and prev[2:] != lab[2:]:
            return False
        prev = lab
    return True


def repair_bio(labels: tuple[str, ...]) -> tuple[str, ...]:
    """Promote orphan I-x labels (after O or a different type) to B-x."""
    repaired: list[str] = []
    prev = "O"
    for lab in labels:
        if lab.startswith("I-") and prev[2:] != lab[2:]:
            lab = "B-" + lab[2:]
        repaired.append(lab)
        prev = lab
    return tuple(repaired)


def spans_from_labels(labels: tuple[str, ...], kind: str) -> list[tuple[int, int]]:
    """Half-open spans of type ``kind`` ("ASP" or "MOD") after BIO repair."""
    labels = repair_bio(labels)
    spans: list[tuple[int, int]] = []
    start = None
    for i, lab in enumerate(labels + ("O",)):
        if lab == f"B-{kind}":
            if start is not None:
                spans.append((start, i))
            start = i
        elif lab == f"I-{kind}":
            continue
        else:
            if start is not None:
                spans.append((start, i))
                start = None
    return spans


def tuples_to_tags(sentence: TokenSequence, tuples: list[OpinionTuple]) -> TagSequence:
    """Inverse of extraction: BIO labels marking the tuples' spans."""
    labels = ["O"] * len(sentence)
    for tup in tuples:
        for kind, (s, e) in (("ASP", tup.aspect_span), ("MOD", tup.modifier_span)):
            labels[s] = f"B-{kind}"
            for i in range(s + 1, e):
                labels[i] = f"I-{kind}"
    return TagSequence(tuple(labels))


# ---------------------------------------------------------------------------
# Averaged perceptron tagger


@dataclass
class TaggerModel:
    feature_weights: dict[tuple[str, str], float] = field(default_factory=dict)
    transition_weights: dict[tuple[str, str], float] = field(default_factory=dict)
    lexicon: Lexicon | None = None


def _features(sentence: TokenSequence, i: int, lexicon: Lexicon | None) -> list[str]:
    lowers = [t.surface.lower() for t in sentence.tokens]
    w = lowers[i]
    feats = [
        f"w={w}",
        f"prev={lowers[i - 1] if i > 0 else '<s>'}",
        f"next={lowers[i + 1] if i + 1 < len(lowers) else '</s>'}",
        f"suf3={w[-3:]}",
    ]
    if not any(ch.isalnum() for ch in w):
        feats.append("is_punct")
    if lexicon is not None:
        if w in lexicon.adjectives:
            feats.append("in_adj_lexicon")
        if w in lexicon.aspect_nouns:
            feats.append("in_noun_lexicon")
    return feats


def viterbi(model: TaggerModel, sentence: TokenSequence) -> TagSequence:
    """Max-scoring label sequence; ties resolve to the earliest label in
    ``LABELS`` (all-zero weights therefore decode to all-O)."""
    n = len(sentence)
    if n == 0:
        return TagSequence(())
    fw, tw = model.feature_weights, model.transition_weights
    feats = [_features(sentence, i, model.lexicon) for i in range(n)]

    score = {
        lab: tw.get((START, lab), 0.0) + sum(fw.get((f, lab), 0.0) for f in feats[0])
        for lab in LABELS
    }
    back: list[dict[str, str]] = []
    for i in range(1, n):
        new_score: dict[str, float] = {}
        pointers: dict[str, str] = {}
        for lab in LABELS:
            emit = sum(fw.get((f, lab), 0.0) for f in feats[i])
            best_prev, best_val = None, -np.inf
            for prev in LABELS:
                val = score[prev] + tw.get((prev, lab), 0.0)
                if val > best_val:
                    best_prev, best_val = prev, val
            new_score[lab] = best_val + emit
            pointers[lab] = best_prev
        score = new_score
        back.append(pointers)

    best_last, best_val = None, -np.inf
    for lab in LABELS:
        if score[lab] > best_val:
            best_last, best_val = lab, score[lab]
    labels = [best_last]
    for pointers in reversed(back):
        labels.append(pointers[labels[-1]])
    labels.reverse()
    return TagSequence(tuple(labels))


def train_tagger(
    labeled: list[tuple[TokenSequence, TagSequence]],
    epochs: int,
    seed: int,
    lexicon: Lexicon | None = None,
) -> TaggerModel:
    """Averaged-perceptron training over Viterbi-decoded sequences."""
    if not labeled:
        raise ValueError("empty training set")
    for _, tags in labeled:
        if not is_well_formed(tags.labels):
            raise DataError(f"ill-formed BIO labels: {tags.labels}")

    model = TaggerModel(lexicon=lexicon)
    fw, tw = model.feature_weights, model.transition_weights
    f_total: dict[tuple[str, str], float] = {}
    f_stamp: dict[tuple[str, str], int] = {}
    t_total: dict[tuple[str, str], float] = {}
    t_stamp: dict[tuple[str, str], int] = {}
    step = 0

    def bump(weights, totals, stamps, key, delta):
        totals[key] = totals.get(key, 0.0) + (step - stamps.get(key, 0)) * weights.get(key, 0.0)
        stamps[key] = step
        weights[key] = weights.get(key, 0.0) + delta

    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(len(labeled))
        for idx in order:
            sentence, gold = labeled[idx]
            step += 1
            pred = viterbi(model, sentence).labels
            if pred == gold.labels:
                continue
            prev_gold, prev_pred = START, START
            for i in range(len(sentence)):
                g, p = gold.labels[i], pred[i]
                if g != p:
                    for f in _features(sentence, i, lexicon):
                        bump(fw, f_total, f_stamp, (f, g), +1.0)
                        bump(fw, f_total, f_stamp, (f, p), -1.0)
                if (prev_gold, g) != (prev_pred, p):
                    bump(tw, t_total, t_stamp, (prev_gold, g), +1.0)
                    bump(tw, t_total, t_stamp, (prev_pred, p), -1.0)
                prev_gold, prev_pred = g, p

    if step > 0:
        for weights, totals, stamps in ((fw, f_total, f_stamp), (tw, t_total, t_stamp)):
            for key in list(weights):
                total = totals.get(key, 0.0) + (step - stamps.get(key, 0)) * weights[key]
                weights[key] = total / step
    return model


def tag(model: TaggerModel, sentence: TokenSequence) -> TagSequence:
    return viterbi(model, sentence)


def pair(tagged: TagSequence, sentence: TokenSequence, sentence_index: int = 0) -> list[OpinionTuple]:
    """Combine tagged spans into tuples by nearest token distance.

    Greedy one-to-one matching over (aspect, modifier) span pairs ordered by
    distance; on ties the modifier that precedes its aspect wins. Unpaired
    spans are dropped. Output is sorted by aspect span start.
    """
    if len(tagged.labels) != len(sentence):
        raise ValueError(
            f"label count {len(tagged.labels)} does not match token count {len(sentence)}"
        )
    aspects = spans_from_labels(tagged.labels, "ASP")
    modifiers = spans_from_labels(tagged.labels, "MOD")
    candidates = []
    for asp in aspects:
        for mod in modifiers:
            if mod[1] <= asp[0]:
                dist, follows = asp[0] - mod[1] + 1, 0
            else:
                dist, follows = mod[0] - asp[1] + 1, 1
            candidates.append((dist, follows, mod[0], asp[0], mod, asp))
    candidates.sort()

    used_asp: set[tuple[int, int]] = set()
    used_mod: set[tuple[int, int]] = set()
    matched: list[tuple[tuple[int, int], tuple[int, int]]] = []
    for _, _, _, _, mod, asp in candidates:
        if asp in used_asp or mod in used_mod:
            continue
        used_asp.add(asp)
        used_mod.add(mod)
        matched.append((mod, asp))

    matched.sort(key=lambda pair: pair[1][0])
    return [_make_tuple(sentence, mod, asp, sentence_index) for mod, asp in matched]


def load_labeled_tagging_data(path: str | Path) -> list[tuple[TokenSequence, TagSequence]]:
    """Read JSONL ``{tokens: [...], labels: [...]}`` training data."""
    data: list[tuple[TokenSequence, TagSequence]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed JSON at line {lineno}: {exc.msg}") from exc
            if "tokens" not in obj or "labels" not in obj:
                raise DataError(f"missing tokens/labels at line {lineno}")
            if len(obj["tokens"]) != len(obj["labels"]):
                raise DataError(f"tokens/labels length mismatch at line {lineno}")
            pos = 0
            toks = []
            for surface in obj["tokens"]:
                toks.append(Token(surface, pos, pos + len(surface)))
                pos += len(surface) + 1
            data.append((TokenSequence(tuple(toks)), TagSequence(tuple(obj["labels"]))))
    return data
