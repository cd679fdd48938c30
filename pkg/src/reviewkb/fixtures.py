"""Deterministic desk-scale fixtures shared by the test suite and reports.

Everything here is synthetic but hand-checkable: a small opinion KB with
conclusion groups, a three-entity review corpus with known extraction counts,
a rule-generated symmetric triple KB for link prediction, and a two-sentence
disambiguation QA suite whose answers are decidable only through a KB fact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import QAExample, Review, TokenSequence, make_review, tokenize
from .extraction import Lexicon
from .kb import Fact, KnowledgeBase, make_kb
from .metrics import token_f1
from .reasoner import Seq2SeqModel, train_reasoner

# ---------------------------------------------------------------------------
# Opinion KB with conclusion groups (reasoner memorization / clustering)

CONCLUSION_GROUPS: dict[str, list[str]] = {
    "noisy room": [
        "thin walls", "loud neighbors", "creaky floors", "banging pipes",
        "rattling windows", "humming vents", "barking dogs", "slamming doors",
        "roaring traffic", "squeaky beds",
    ],
    "clean bathroom": [
        "spotless tiles", "polished mirrors", "fresh towels", "scrubbed tub",
        "gleaming sink", "sparkling shower", "bleached grout", "shiny faucets",
        "pristine counters", "washed mats",
    ],
    "friendly staff": [
        "smiling receptionist", "helpful porter", "warm greeting", "attentive concierge",
        "cheerful bartender", "welcoming manager", "kind housekeeper", "patient clerk",
        "gracious host", "courteous valet",
    ],
    "tasty breakfast": [
        "flaky pastries", "crispy bacon", "fluffy pancakes", "ripe melon",
        "golden waffles", "rich coffee", "creamy yogurt", "sweet jams",
        "hearty omelets", "juicy oranges",
    ],
    "convenient location": [
        "nearby subway", "short walk", "central plaza", "adjacent mall",
        "close airport", "easy parking", "quick transfers", "walkable streets",
        "connected terminals", "direct buses",
    ],
}


def fixture_opinion_kb(n_groups: int = 5, premises_per_group: int = 10) -> KnowledgeBase:
    """A KB of ``n_groups * premises_per_group`` facts with grouped conclusions."""
    groups = list(CONCLUSION_GROUPS.items())[:n_groups]
    opinions: list[str] = []
    facts: list[Fact] = []
    for conclusion, premises in groups:
        cm, ca = conclusion.split(" ", 1)
        for premise in premises[:premises_per_group]:
            pm, pa = premise.split(" ", 1)
            facts.append(Fact(pm, pa, cm, ca, 1.0))
            opinions.append(premise)
        opinions.append(conclusion)
    return make_kb(opinions, facts, "fixture-hospitality")


def conclusion_groups(kb: KnowledgeBase) -> dict[str, list[str]]:
    """Premises grouped by their conclusion phrase."""
    groups: dict[str, list[str]] = {}
    for fact in kb.facts:
        groups.setdefault(fact.conclusion, []).append(fact.premise)
    return groups


# ---------------------------------------------------------------------------
# Hand-countable review corpus (3 entities, 8 reviews)

KB_CORPUS_REVIEWS: list[tuple[str, str, str]] = [
    ("r1", "h1", "The walls are thin . The room was noisy ."),
    ("r2", "h1", "Thin walls again . The room is noisy ."),
    ("r3", "h1", "The bathroom is clean ."),
    ("r4", "h2", "The walls are thin and the room is noisy ."),
    ("r5", "h2", "The room was noisy ."),
    ("r6", "h2", "The bathroom is clean . The lobby is small ."),
    ("r7", "h3", "The bathroom was clean ."),
    ("r8", "h3", "The lobby is small . The bathroom is clean ."),
]

KB_CORPUS_LEXICON = Lexicon(
    adjectives=frozenset({"thin", "noisy", "clean", "small"}),
    aspect_nouns=frozenset({"walls", "room", "bathroom", "lobby"}),
)

# Edge fixture: the KB's rarest opinion appears verbatim as a node, the
# aspects connect only in the plural, and nothing links the modifiers.
KB_CORPUS_EDGES: list[tuple[str, str]] = [
    ("thin walls", "walls"),
    ("walls", "rooms"),
]


def fixture_kb_corpus() -> list[Review]:
    return [make_review(rid, eid, text) for rid, eid, text in KB_CORPUS_REVIEWS]


def write_kb_corpus_files(directory) -> dict[str, str]:
    """Write reviews.jsonl / lexicon.json / edges.tsv; returns the paths."""
    import json
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    reviews_path = directory / "reviews.jsonl"
    with open(reviews_path, "w", encoding="utf-8") as fh:
        for rid, eid, text in KB_CORPUS_REVIEWS:
            fh.write(json.dumps({"id": rid, "entity": eid, "text": text}) + "\n")
    lexicon_path = directory / "lexicon.json"
    lexicon_path.write_text(
        json.dumps(
            {
                "adjectives": sorted(KB_CORPUS_LEXICON.adjectives),
                "aspect_nouns": sorted(KB_CORPUS_LEXICON.aspect_nouns),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    edges_path = directory / "edges.tsv"
    edges_path.write_text(
        "".join(f"{a}\t{b}\n" for a, b in KB_CORPUS_EDGES), encoding="utf-8"
    )
    return {
        "reviews": str(reviews_path),
        "lexicon": str(lexicon_path),
        "edges": str(edges_path),
    }


# ---------------------------------------------------------------------------
# Rule-generated symmetric triple KB (20 entities, 3 relations)


def fixture_triples() -> tuple[list[tuple[str, str, str]], list[tuple[str, str, str]]]:
    """(train, test) triples over 20 entities and 3 symmetric relations.

    Relations are involutions or symmetrized offsets, so every held-out triple
    has its mirror image in the training set and is completable in principle.
    """
    n = 20
    name = [f"e{i:02d}" for i in range(n)]
    triples: list[tuple[str, str, str]] = []
    for i in range(n):
        triples.append((name[i], "paired_with", name[(i + 10) % n]))
        triples.append((name[i], "adjacent_to", name[i ^ 1]))
        triples.append((name[i], "linked_to", name[(i + 4) % n]))
        triples.append((name[i], "linked_to", name[(i - 4) % n]))
    held_out = set()
    for i in range(4):
        held_out.add((name[i], "paired_with", name[(i + 10) % n]))
        held_out.add((name[2 * i], "adjacent_to", name[2 * i + 1]))
        held_out.add((name[i], "linked_to", name[(i + 4) % n]))
        held_out.add((name[i + 8], "linked_to", name[(i + 12) % n]))
    train = [t for t in triples if t not in held_out]
    test = sorted(held_out)
    return train, test


# ---------------------------------------------------------------------------
# Disambiguation QA suite

_NOISE_PREMISES = {
    "train": [
        "thin walls", "loud neighbors", "creaky floors", "banging pipes",
        "rattling windows", "humming vents", "barking dogs", "slamming doors",
    ],
    "val": ["roaring traffic", "squeaky beds", "clanging radiators"],
    "eval": ["buzzing fridge", "whirring fans", "thumping music", "honking cars"],
}

_FOOD_PREMISES = {
    "train": [
        "flaky pastries", "crispy bacon", "fluffy pancakes", "ripe melon",
        "golden waffles", "rich coffee", "creamy yogurt", "sweet jams",
    ],
    "val": ["hearty omelets", "juicy oranges", "tangy marmalade"],
    "eval": ["toasted bagels", "smooth espresso", "buttery scones", "glazed donuts"],
}

_QUESTIONS = ["was it noisy ?", "how about noise ?", "any noise complaints ?"]

_SENTENCE_TEMPLATE = "The hotel had {premise} ."


@dataclass(frozen=True)
class DisambiguationSuite:
    """Two-sentence reviews where only a KB fact identifies the answer.

    Each review pairs one noise-implying premise with one food-implying
    premise in symmetric sentence frames; the question always asks about
    noise. Validation and evaluation premises never occur in the training
    split, so their words are unknown to a task encoder trained on it, but
    all premises carry facts in the KB.
    """

    kb: KnowledgeBase
    lexicon: Lexicon
    train: list[QAExample]
    validation: list[QAExample]
    evaluation: list[QAExample]


def _suite_example(
    index: int, noise_premise: str, food_premise: str, noise_first: bool, question: str
) -> QAExample:
    s_noise = _SENTENCE_TEMPLATE.format(premise=noise_premise)
    s_food = _SENTENCE_TEMPLATE.format(premise=food_premise)
    text = f"{s_noise} {s_food}" if noise_first else f"{s_food} {s_noise}"
    review = make_review(f"dr{index}", f"dhotel{index}", text)
    answer_sentence = review.sentences[0 if noise_first else 1]
    return QAExample(
        review=review,
        question=TokenSequence(tuple(tokenize(question))),
        question_text=question,
        answer_char_start=answer_sentence.tokens[0].start,
        answer_char_end=answer_sentence.tokens[-1].end,
        example_id=f"disamb-{index}",
    )


def fixture_disambiguation_suite(seed: int = 7) -> DisambiguationSuite:
    all_premises = []
    facts = []
    for premises, conclusion in ((_NOISE_PREMISES, "noisy room"), (_FOOD_PREMISES, "tasty breakfast")):
        cm, ca = conclusion.split(" ", 1)
        for split_premises in premises.values():
            for premise in split_premises:
                pm, pa = premise.split(" ", 1)
                facts.append(Fact(pm, pa, cm, ca, 1.0))
                all_premises.append(premise)
    kb = make_kb(all_premises + ["noisy room", "tasty breakfast"], facts, "fixture-disambiguation")
    lexicon = Lexicon(
        adjectives=frozenset(p.split()[0] for p in all_premises),
        aspect_nouns=frozenset(p.split()[1] for p in all_premises),
    )

    rng = np.random.default_rng(seed)
    examples: dict[str, list[QAExample]] = {"train": [], "val": [], "eval": []}
    index = 0

    combos = [
        (noise, food)
        for noise in _NOISE_PREMISES["train"]
        for food in _FOOD_PREMISES["train"]
    ]
    for k, combo_idx in enumerate(rng.permutation(len(combos))[:32]):
        noise, food = combos[combo_idx]
        examples["train"].append(
            _suite_example(index, noise, food, noise_first=(k % 2 == 0), question=_QUESTIONS[k % 3])
        )
        index += 1
    for split in ("val", "eval"):
        k = 0
        for noise in _NOISE_PREMISES[split]:
            for food in _FOOD_PREMISES[split]:
                question = _QUESTIONS[k % 3]  # shared by both orders of a combo
                k += 1
                for noise_first in (True, False):
                    examples[split].append(
                        _suite_example(index, noise, food, noise_first, question)
                    )
                    index += 1
    return DisambiguationSuite(
        kb=kb,
        lexicon=lexicon,
        train=examples["train"],
        validation=examples["val"],
        evaluation=examples["eval"],
    )


def train_suite_reasoner(
    suite: DisambiguationSuite,
    seed: int = 0,
    embedding_dim: int = 8,
    hidden_dim: int = 12,
    epochs: int = 120,
    learning_rate: float = 0.02,
) -> Seq2SeqModel:
    return train_reasoner(
        suite.kb,
        epochs=epochs,
        learning_rate=learning_rate,
        seed=seed,
        embedding_dim=embedding_dim,
        hidden_dim=hidden_dim,
    )


def disambiguation_run(
    suite: DisambiguationSuite,
    source,
    seed: int,
    epochs: int = 20,
    learning_rate: float = 0.01,
    token_dim: int = 12,
    encoder_dim: int = 16,
) -> dict[str, float]:
    """Train a QA model on the suite with one source and score the eval split."""
    from .comprehension import make_qa_instances, qa_predict, train_task

    train_instances = make_qa_instances(suite.train, suite.lexicon)
    val_instances = make_qa_instances(suite.validation, suite.lexicon)
    eval_instances = make_qa_instances(suite.evaluation, suite.lexicon)
    model = train_task(
        "qa",
        (train_instances, val_instances),
        source,
        epochs=epochs,
        learning_rate=learning_rate,
        seed=seed,
        token_dim=token_dim,
        encoder_dim=encoder_dim,
    )
    f1s, exacts = [], []
    for inst in eval_instances:
        cs, ce = qa_predict(model, inst, source)
        score = token_f1(inst.example.review.text[cs:ce], inst.example.answer_text)
        f1s.append(score.f1)
        exacts.append(score.exact)
    return {"f1": float(np.mean(f1s)), "exact": float(np.mean(exacts))}


# ---------------------------------------------------------------------------
# Small pretrained-style word vectors


def fixture_word_vectors_text(dim: int = 16, seed: int = 3) -> str:
    """Word-vector file contents covering the opinion KB vocabulary."""
    rng = np.random.default_rng(seed)
    words: set[str] = set()
    for conclusion, premises in CONCLUSION_GROUPS.items():
        for phrase in [conclusion] + premises:
            words.update(phrase.split())
    lines = []
    for word in sorted(words):
        values = rng.uniform(-0.5, 0.5, size=dim)
        lines.append(word + " " + " ".join(f"{v:.6f}" for v in values))
    return "\n".join(lines) + "\n"
