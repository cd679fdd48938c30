"""DistMult knowledge-graph embedding with negative sampling.

Scores a triple as the trilinear product of head entity, diagonal relation,
and tail entity vectors; trains with logistic loss over positives and
uniformly corrupted head-or-tail negatives; evaluates by filtered ranks.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import normalize_phrase
from .errors import DataError, NumericalError
from .neural import Adam, Param, load_checkpoint, save_checkpoint, xavier_uniform

Triple = tuple[str, str, str]


class DistMultModel:
    def __init__(self, entities: list[str], relations: list[str], dim: int, seed: int):
        if dim < 1:
            raise ValueError(f"embedding dim must be >= 1, got {dim}")
        self.entities = list(entities)
        self.relations = list(relations)
        self.entity_to_id = {e: i for i, e in enumerate(self.entities)}
        self.relation_to_id = {r: i for i, r in enumerate(self.relations)}
        self.dim = dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.entity_emb = Param("entity_emb", xavier_uniform((len(entities), dim), rng))
        self.relation_emb = Param("relation_emb", xavier_uniform((len(relations), dim), rng))

    def parameters(self) -> list[Param]:
        return [self.entity_emb, self.relation_emb]

    def ids(self, triple: Triple) -> tuple[int, int, int]:
        head, relation, tail = triple
        for name, table in ((head, self.entity_to_id), (relation, self.relation_to_id), (tail, self.entity_to_id)):
            if name not in table:
                raise ValueError(f"unknown id {name!r}")
        return self.entity_to_id[head], self.relation_to_id[relation], self.entity_to_id[tail]

    def save(self, prefix) -> None:
        save_checkpoint(
            prefix,
            {p.name: p.value for p in self.parameters()},
            {
                "kind": "distmult",
                "entities": self.entities,
                "relations": self.relations,
                "hyperparameters": {"dim": self.dim},
                "seed": self.seed,
            },
        )

    @classmethod
    def load(cls, prefix) -> "DistMultModel":
        tensors, metadata = load_checkpoint(prefix)
        model = cls(
            entities=metadata["entities"],
            relations=metadata["relations"],
            dim=metadata["hyperparameters"]["dim"],
            seed=metadata.get("seed", 0),
        )
        for p in model.parameters():
            p.value[...] = tensors[p.name]
        return model


def score(model: DistMultModel, triple: Triple) -> float:
    """Trilinear score; the entity product comes first so that swapping head
    and tail is bitwise exact."""
    h, r, t = model.ids(triple)
    return _score_ids(model, h, r, t)


def _score_ids(model: DistMultModel, h: int, r: int, t: int) -> float:
    e = model.entity_emb.value
    return float(np.sum((e[h] * e[t]) * model.relation_emb.value[r]))


def _accumulate_grad(model: DistMultModel, h: int, r: int, t: int, dscore: float) -> None:
    e, w = model.entity_emb, model.relation_emb
    eh, wr, et = e.value[h], w.value[r], e.value[t]
    e.grad[h] += dscore * wr * et
    e.grad[t] += dscore * wr * eh
    w.grad[r] += dscore * eh * et


def batch_loss_and_grad(
    model: DistMultModel,
    positives: list[tuple[int, int, int]],
    negatives: list[tuple[int, int, int]],
) -> float:
    """Logistic loss over fixed id batches; fills parameter gradients."""
    for p in model.parameters():
        p.zero_grad()
    loss = 0.0
    for h, r, t in positives:
        s = _score_ids(model, h, r, t)
        loss += float(np.logaddexp(0.0, -s))
        _accumulate_grad(model, h, r, t, -_sigmoid(-s))
    for h, r, t in negatives:
        s = _score_ids(model, h, r, t)
        loss += float(np.logaddexp(0.0, s))
        _accumulate_grad(model, h, r, t, _sigmoid(s))
    return loss


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def train_distmult(
    triples: list[Triple],
    dim: int = 16,
    epochs: int = 100,
    negatives_per_positive: int = 8,
    learning_rate: float = 0.05,
    seed: int = 0,
) -> DistMultModel:
    """Per-positive Adam updates with uniformly corrupted negatives."""
    if not triples:
        raise ValueError("cannot train on an empty triple list")
    entities = sorted({h for h, _, _ in triples} | {t for _, _, t in triples})
    relations = sorted({r for _, r, _ in triples})
    model = DistMultModel(entities, relations, dim=dim, seed=seed)
    id_triples = [model.ids(t) for t in triples]
    opt = Adam(model.parameters(), learning_rate)
    rng = np.random.default_rng(seed)
    n_ent = len(entities)
    for _ in range(epochs):
        for idx in rng.permutation(len(id_triples)):
            h, r, t = id_triples[idx]
            negatives = []
            for _ in range(negatives_per_positive):
                corrupt = int(rng.integers(n_ent))
                if rng.integers(2) == 0:
                    negatives.append((corrupt, r, t))
                else:
                    negatives.append((h, r, corrupt))
            loss = batch_loss_and_grad(model, [(h, r, t)], negatives)
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite DistMult loss {loss}")
            opt.step()
    return model


def rank_eval(
    model: DistMultModel, test_triples: list[Triple], all_triples: list[Triple]
) -> dict[str, float]:
    """Filtered tail ranking: MRR, hits@1, hits@10."""
    if not test_triples:
        raise ValueError("empty test set")
    known = {model.ids(t) for t in all_triples}
    e = model.entity_emb.value
    ranks = []
    for triple in test_triples:
        h, r, t = model.ids(triple)
        scores = e @ (model.relation_emb.value[r] * e[h])
        true_score = scores[t]
        better = 0
        for cand in range(len(model.entities)):
            if cand != t and (h, r, cand) in known:
                continue
            if scores[cand] > true_score:
                better += 1
        ranks.append(1 + better)
    ranks = np.array(ranks, dtype=np.float64)
    return {
        "mrr": float(np.mean(1.0 / ranks)),
        "hits_at_1": float(np.mean(ranks <= 1)),
        "hits_at_10": float(np.mean(ranks <= 10)),
    }


def phrase_vector(model: DistMultModel, phrase: str) -> np.ndarray:
    """Entity vector for a phrase: exact match, else word mean, else zeros."""
    key = normalize_phrase(phrase)
    if key in model.entity_to_id:
        return model.entity_emb.value[model.entity_to_id[key]].copy()
    rows = [
        model.entity_emb.value[model.entity_to_id[w]]
        for w in key.split()
        if w in model.entity_to_id
    ]
    if rows:
        return np.mean(rows, axis=0)
    return np.zeros(model.dim)


def load_triples(path: str | Path) -> list[Triple]:
    """Read ``head<TAB>relation<TAB>tail`` lines."""
    triples: list[Triple] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise DataError(f"expected 3 tab-separated fields at line {lineno}")
            triples.append((parts[0], parts[1], parts[2]))
    return triples


def save_triples(triples: list[Triple], path: str | Path) -> None:
    Path(path).write_text(
        "".join(f"{h}\t{r}\t{t}\n" for h, r, t in triples), encoding="utf-8"
    )
