"""Opinion knowledge-base construction.

Builds the entity-by-opinion extraction matrix and the entity-by-modifier-by-
aspect tensor from review extractions, selects the most reviewed entities and
most frequent opinions, mines directed premise-conclusion facts by normalized
pointwise mutual information over entity-level co-occurrence, and measures
overlap against a reference edge list.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from itertools import combinations
from pathlib import Path

from .corpus import EdgeList, Review
from .errors import DataError
from .extraction import OpinionTuple


@dataclass
class ExtractionMatrix:
    """Sparse (entity_id, opinion_key) -> count, plus the key's phrase split."""

    counts: dict[tuple[str, str], int] = field(default_factory=dict)
    splits: dict[str, tuple[str, str]] = field(default_factory=dict)

    def entities(self) -> list[str]:
        return sorted({e for e, _ in self.counts})

    def opinion_keys(self) -> list[str]:
        return sorted({o for _, o in self.counts})

    def total(self) -> int:
        return sum(self.counts.values())

    def entity_totals(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for (entity, _), c in self.counts.items():
            totals[entity] = totals.get(entity, 0) + c
        return totals

    def opinion_totals(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for (_, key), c in self.counts.items():
            totals[key] = totals.get(key, 0) + c
        return totals

    def restrict(self, entities: list[str], opinion_keys: list[str]) -> "ExtractionMatrix":
        keep_e, keep_o = set(entities), set(opinion_keys)
        counts = {
            (e, o): c for (e, o), c in self.counts.items() if e in keep_e and o in keep_o
        }
        splits = {o: self.splits[o] for _, o in counts}
        return ExtractionMatrix(counts=counts, splits=splits)


@dataclass
class ModifierAspectTensor:
    counts: dict[tuple[str, str, str], int] = field(default_factory=dict)

    def marginal_matrix_counts(self) -> dict[tuple[str, str], int]:
        """Collapse (modifier, aspect) to the joint opinion key; must equal the
        extraction matrix exactly."""
        out: dict[tuple[str, str], int] = {}
        for (entity, modifier, aspect), c in self.counts.items():
            key = (entity, f"{modifier} {aspect}")
            out[key] = out.get(key, 0) + c
        return out


@dataclass(frozen=True)
class Fact:
    premise_modifier: str
    premise_aspect: str
    conclusion_modifier: str
    conclusion_aspect: str
    weight: float

    @property
    def premise(self) -> str:
        return f"{self.premise_modifier} {self.premise_aspect}"

    @property
    def conclusion(self) -> str:
        return f"{self.conclusion_modifier} {self.conclusion_aspect}"


@dataclass(frozen=True)
class KnowledgeBase:
    opinions: tuple[str, ...]
    facts: tuple[Fact, ...]
    domain_name: str


@dataclass(frozen=True)
class KbStats:
    domain_name: str
    n_entities: int
    n_extractions: int
    n_unique_opinions: int
    n_facts: int
    extraction_overlap: float
    relation_overlap: float

    def to_dict(self) -> dict:
        return asdict(self)


def build_matrix(
    reviews: list[Review], tuples: list[list[OpinionTuple]]
) -> tuple[ExtractionMatrix, ModifierAspectTensor]:
    """Count every tuple occurrence under its review's entity."""
    if len(reviews) != len(tuples):
        raise ValueError(f"{len(reviews)} reviews but {len(tuples)} tuple lists")
    matrix = ExtractionMatrix()
    tensor = ModifierAspectTensor()
    for review, review_tuples in zip(reviews, tuples):
        entity = review.entity_id
        for tup in review_tuples:
            key = tup.key
            matrix.counts[(entity, key)] = matrix.counts.get((entity, key), 0) + 1
            matrix.splits[key] = (tup.modifier, tup.aspect)
            tkey = (entity, tup.modifier, tup.aspect)
            tensor.counts[tkey] = tensor.counts.get(tkey, 0) + 1
    return matrix, tensor


def select(
    matrix: ExtractionMatrix, top_entities: int, top_extractions: int
) -> tuple[list[str], list[str]]:
    """Most reviewed entities and most frequent opinions, ties lexicographic."""
    if top_entities < 1 or top_extractions < 1:
        raise ValueError("selection sizes must be >= 1")
    entities = sorted(matrix.entity_totals().items(), key=lambda kv: (-kv[1], kv[0]))
    opinions = sorted(matrix.opinion_totals().items(), key=lambda kv: (-kv[1], kv[0]))
    return (
        [e for e, _ in entities[:top_entities]],
        [o for o, _ in opinions[:top_extractions]],
    )


def npmi(p_a: float, p_b: float, p_ab: float) -> float:
    """Normalized PMI; 1.0 at perfect co-occurrence, ~0 at independence."""
    if p_ab <= 0.0:
        return -1.0
    if p_ab >= 1.0:
        return 1.0
    return math.log(p_ab / (p_a * p_b)) / -math.log(p_ab)


def mine_facts(
    matrix: ExtractionMatrix, npmi_threshold: float = 0.3, min_support: int = 3
) -> list[Fact]:
    """Mine premise->conclusion facts from entity-level co-occurrence.

    For every opinion pair present together in at least ``min_support``
    entities, the normalized PMI of entity-presence probabilities becomes the
    fact weight when it reaches the threshold. The opinion with the lower
    corpus frequency (total occurrence count) is the premise and the more
    frequent one the conclusion; frequency ties make the lexicographically
    smaller key the premise.
    """
    if not 0.0 < npmi_threshold < 1.0:
        raise ValueError(f"npmi_threshold must be in (0, 1), got {npmi_threshold}")
    if min_support < 1:
        raise ValueError(f"min_support must be >= 1, got {min_support}")

    presence: dict[str, set[str]] = {}
    for entity, key in matrix.counts:
        presence.setdefault(key, set()).add(entity)
    n_entities = len({e for e, _ in matrix.counts})
    if n_entities == 0:
        return []
    frequency = matrix.opinion_totals()

    facts: list[Fact] = []
    for a, b in combinations(sorted(presence), 2):
        joint = len(presence[a] & presence[b])
        if joint < min_support:
            continue
        value = npmi(
            len(presence[a]) / n_entities,
            len(presence[b]) / n_entities,
            joint / n_entities,
        )
        if value < npmi_threshold:
            continue
        if (frequency[a], a) <= (frequency[b], b):
            premise, conclusion = a, b
        else:
            premise, conclusion = b, a
        pm, pa = matrix.splits[premise]
        cm, ca = matrix.splits[conclusion]
        facts.append(Fact(pm, pa, cm, ca, value))
    return facts


def make_kb(opinions: list[str], facts: list[Fact], domain_name: str) -> KnowledgeBase:
    seen: dict[str, None] = {}
    for key in opinions:
        seen.setdefault(key, None)
    for fact in facts:
        for endpoint in (fact.premise, fact.conclusion):
            if endpoint not in seen:
                raise ValueError(f"fact endpoint {endpoint!r} not in the opinion set")
        if fact.premise == fact.conclusion:
            raise ValueError(f"self-loop fact on {fact.premise!r}")
    return KnowledgeBase(opinions=tuple(seen), facts=tuple(facts), domain_name=domain_name)


def _connected(edge_list: EdgeList, a: str, b: str) -> bool:
    # Identical phrases are the same node and count as trivially connected.
    return a == b or edge_list.has_edge(a, b)


def extraction_overlap(kb: KnowledgeBase, edge_list: EdgeList) -> float:
    """Percentage of opinion keys found verbatim among the edge-list nodes."""
    if not kb.opinions:
        raise DataError("empty knowledge base")
    hits = sum(1 for key in kb.opinions if key in edge_list.nodes)
    return 100.0 * hits / len(kb.opinions)


def relation_overlap(kb: KnowledgeBase, edge_list: EdgeList) -> float:
    """Percentage of facts derivable from edges between constituent phrases.

    A fact is derivable when its aspects are connected and at least one of the
    modifier-modifier or cross modifier-aspect pairs is connected too.
    """
    if not kb.opinions:
        raise DataError("empty knowledge base")
    if not kb.facts:
        return 0.0
    derivable = 0
    for f in kb.facts:
        if _connected(edge_list, f.premise_aspect, f.conclusion_aspect) and (
            _connected(edge_list, f.premise_modifier, f.conclusion_modifier)
            or _connected(edge_list, f.premise_modifier, f.conclusion_aspect)
            or _connected(edge_list, f.conclusion_modifier, f.premise_aspect)
        ):
            derivable += 1
    return 100.0 * derivable / len(kb.facts)


def stats(kb: KnowledgeBase, matrix: ExtractionMatrix, edge_list: EdgeList) -> KbStats:
    return KbStats(
        domain_name=kb.domain_name,
        n_entities=len(matrix.entities()),
        n_extractions=matrix.total(),
        n_unique_opinions=len(kb.opinions),
        n_facts=len(kb.facts),
        extraction_overlap=extraction_overlap(kb, edge_list),
        relation_overlap=relation_overlap(kb, edge_list),
    )


_FACTS_HEADER = "premise_modifier\tpremise_aspect\tconclusion_modifier\tconclusion_aspect\tweight"


def save_kb(kb: KnowledgeBase, directory: str | Path) -> None:
    """Write ``facts.tsv``, ``opinions.txt``, and ``meta.json`` into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [_FACTS_HEADER]
    for f in kb.facts:
        lines.append(
            f"{f.premise_modifier}\t{f.premise_aspect}\t"
            f"{f.conclusion_modifier}\t{f.conclusion_aspect}\t{f.weight!r}"
        )
    (directory / "facts.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (directory / "opinions.txt").write_text(
        "".join(key + "\n" for key in kb.opinions), encoding="utf-8"
    )
    (directory / "meta.json").write_text(
        json.dumps({"domain_name": kb.domain_name}, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_kb(directory: str | Path) -> KnowledgeBase:
    directory = Path(directory)
    for name in ("facts.tsv", "opinions.txt", "meta.json"):
        if not (directory / name).exists():
            raise DataError(f"missing KB file {directory / name}")
    facts: list[Fact] = []
    lines = (directory / "facts.tsv").read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != _FACTS_HEADER:
        raise DataError(f"bad facts header in {directory / 'facts.tsv'}")
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 5:
            raise DataError(f"expected 5 fields at line {lineno} of {directory / 'facts.tsv'}")
        facts.append(Fact(parts[0], parts[1], parts[2], parts[3], float(parts[4])))
    opinions = [
        line for line in (directory / "opinions.txt").read_text(encoding="utf-8").splitlines()
    ]
    meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
    return make_kb(opinions, facts, meta["domain_name"])
