"""Evaluation metrics: token-level QA F1/EM, span PRF, classification scores.

Answer strings are normalized before comparison (lowercase, punctuation-only
tokens stripped, whitespace collapsed); no English article stripping, so the
numbers are reproducible from the tokenizer alone.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import tokenize

CLASSES = ("positive", "negative", "neutral")


@dataclass(frozen=True)
class QaScore:
    f1: float
    exact: int


@dataclass(frozen=True)
class ClsScore:
    accuracy: float
    macro_f1: float
    per_class: dict[str, dict[str, float]]


def normalize_answer(text: str) -> list[str]:
    """Lowercased word tokens with punctuation-only tokens removed."""
    return [
        t.surface.lower()
        for t in tokenize(text)
        if any(ch.isalnum() for ch in t.surface)
    ]


def token_f1(prediction: str, gold: str) -> QaScore:
    """Multiset token overlap F1 plus exact match on normalized strings."""
    pred_tokens = normalize_answer(prediction)
    gold_tokens = normalize_answer(gold)
    exact = int(pred_tokens == gold_tokens)
    if not pred_tokens and not gold_tokens:
        return QaScore(f1=1.0, exact=1)
    if not pred_tokens or not gold_tokens:
        return QaScore(f1=0.0, exact=0)
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return QaScore(f1=0.0, exact=exact)
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return QaScore(f1=2 * precision * recall / (precision + recall), exact=exact)


def span_prf(
    pred_spans: list[tuple[int, int]], gold_spans: list[tuple[int, int]]
) -> dict[str, float]:
    """Exact-boundary span matching; empty denominators score 0 by convention."""
    correct = sum((Counter(pred_spans) & Counter(gold_spans)).values())
    precision = correct / len(pred_spans) if pred_spans else 0.0
    recall = correct / len(gold_spans) if gold_spans else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def cls_scores(pred_labels: list[str], gold_labels: list[str]) -> ClsScore:
    """Accuracy and macro-F1 over the three fixed polarity classes."""
    if len(pred_labels) != len(gold_labels):
        raise ValueError(
            f"label count mismatch: {len(pred_labels)} predictions vs {len(gold_labels)} gold"
        )
    for lab in list(pred_labels) + list(gold_labels):
        if lab not in CLASSES:
            raise ValueError(f"unknown class label {lab!r}")
    per_class: dict[str, dict[str, float]] = {}
    f1s = []
    for cls in CLASSES:
        tp = sum(1 for p, g in zip(pred_labels, gold_labels) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(pred_labels, gold_labels) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(pred_labels, gold_labels) if p != cls and g == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {"precision": precision, "recall": recall, "f1": f1}
        f1s.append(f1)
    accuracy = (
        sum(1 for p, g in zip(pred_labels, gold_labels) if p == g) / len(gold_labels)
        if gold_labels
        else 0.0
    )
    return ClsScore(accuracy=accuracy, macro_f1=float(np.mean(f1s)), per_class=per_class)


def aggregate(runs: list[dict[str, float]]) -> dict[str, dict[str, float]]:
    """Per-metric mean and population standard deviation across repeated runs."""
    if not runs:
        raise ValueError("aggregate requires at least one run")
    metrics = list(runs[0])
    out: dict[str, dict[str, float]] = {}
    for metric in metrics:
        values = np.array([run[metric] for run in runs], dtype=np.float64)
        out[metric] = {"mean": float(values.mean()), "std": float(values.std())}
    return out
