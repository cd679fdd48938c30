"""GRU encoder-decoder that turns opinion phrases into commonsense vectors.

Trained on the KB's premise-conclusion pairs with teacher forcing; the encoder
final hidden state is the phrase embedding handed to downstream consumers, and
greedy decoding from that state predicts the conclusion phrase. Because the
inputs are word sequences rather than opaque graph nodes, phrases that never
appear in the KB still get useful vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import WordVectors, normalize_phrase
from .errors import NumericalError
from .kb import KnowledgeBase
from .neural import autodiff as ad
from .neural import (
    Dense,
    Embedding,
    GruCell,
    Param,
    ParamLeaves,
    from_word_vectors,
    load_checkpoint,
    make_optimizer,
    save_checkpoint,
)

BOS, EOS, UNK = "<bos>", "<eos>", "<unk>"

# Paper-scale defaults; tests and fixtures pass smaller dims explicitly.
DEFAULT_EMBEDDING_DIM = 50
DEFAULT_HIDDEN_DIM = 768


@dataclass(frozen=True)
class PremiseEmbedding:
    vector: np.ndarray
    phrase: str


class Seq2SeqModel:
    def __init__(
        self,
        vocab: list[str],
        embedding_dim: int,
        hidden_dim: int,
        seed: int,
        word_vectors: WordVectors | None = None,
    ):
        self.vocab = list(vocab)
        self.word_to_id = {w: i for i, w in enumerate(self.vocab)}
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.embedding = Embedding(len(self.vocab), embedding_dim, rng, "embedding")
        if word_vectors is not None:
            self.embedding.table.value[...] = from_word_vectors(
                self.vocab, word_vectors, embedding_dim
            )
        self.encoder = GruCell(embedding_dim, hidden_dim, rng, "encoder")
        self.decoder = GruCell(embedding_dim, hidden_dim, rng, "decoder")
        self.projection = Dense(hidden_dim, len(self.vocab), rng, "projection")

    def parameters(self) -> list[Param]:
        return (
            self.embedding.parameters()
            + self.encoder.parameters()
            + self.decoder.parameters()
            + self.projection.parameters()
        )

    def token_ids(self, phrase: str) -> list[int]:
        unk = self.word_to_id[UNK]
        return [self.word_to_id.get(w, unk) for w in normalize_phrase(phrase).split()]

    # -- graph construction ------------------------------------------------

    def _encode_graph(self, leaves: ParamLeaves, ids: list[int]) -> ad.Node:
        h = ad.constant(np.zeros(self.hidden_dim))
        for i in ids:
            x = self.embedding.graph_row(leaves, i)
            h = self.encoder.graph_step(leaves, x, h)
        return h

    def _pair_loss_graph(
        self, leaves: ParamLeaves, premise_ids: list[int], conclusion_ids: list[int]
    ) -> tuple[ad.Node, int]:
        """Teacher-forced decode loss; returns (total loss node, target count)."""
        h = self._encode_graph(leaves, premise_ids)
        inputs = [self.word_to_id[BOS]] + conclusion_ids
        targets = conclusion_ids + [self.word_to_id[EOS]]
        losses = []
        for input_id, target_id in zip(inputs, targets):
            x = self.embedding.graph_row(leaves, input_id)
            h = self.decoder.graph_step(leaves, x, h)
            logits = self.projection.graph_apply(leaves, h)
            losses.append(ad.softmax_xent(logits, target_id))
        return ad.add_all(losses), len(targets)

    def loss_and_grad_fn(self, pairs: list[tuple[list[int], list[int]]]):
        """Closure over a fixed batch for training steps and grad checking;
        returns the mean per-token loss after filling parameter gradients."""

        def run() -> float:
            for p in self.parameters():
                p.zero_grad()
            leaves = ParamLeaves(self.parameters())
            losses, total_targets = [], 0
            for premise_ids, conclusion_ids in pairs:
                node, n = self._pair_loss_graph(leaves, premise_ids, conclusion_ids)
                losses.append(node)
                total_targets += n
            loss = ad.scale(ad.add_all(losses), 1.0 / total_targets)
            ad.backward(loss)
            leaves.accumulate_grads()
            return float(loss.value)

        return run

    # -- inference ----------------------------------------------------------

    def encode(self, phrase: str) -> np.ndarray:
        h = np.zeros(self.hidden_dim)
        for i in self.token_ids(phrase):
            h = self.encoder.step(self.embedding.row(i), h)
        return h

    def save(self, prefix) -> None:
        tensors = {p.name: p.value for p in self.parameters()}
        metadata = {
            "kind": "reasoner",
            "vocab": self.vocab,
            "hyperparameters": {
                "embedding_dim": self.embedding_dim,
                "hidden_dim": self.hidden_dim,
            },
            "seed": self.seed,
        }
        save_checkpoint(prefix, tensors, metadata)

    @classmethod
    def load(cls, prefix) -> "Seq2SeqModel":
        tensors, metadata = load_checkpoint(prefix)
        hp = metadata["hyperparameters"]
        model = cls(
            vocab=metadata["vocab"],
            embedding_dim=hp["embedding_dim"],
            hidden_dim=hp["hidden_dim"],
            seed=metadata.get("seed", 0),
        )
        for p in model.parameters():
            p.value[...] = tensors[p.name]
        return model


def build_vocab(kb: KnowledgeBase) -> list[str]:
    words: set[str] = set()
    for fact in kb.facts:
        words.update(fact.premise.split())
        words.update(fact.conclusion.split())
    for key in kb.opinions:
        words.update(key.split())
    return [BOS, EOS, UNK] + sorted(words)


def train_reasoner(
    kb: KnowledgeBase,
    word_vectors: WordVectors | None = None,
    epochs: int = 200,
    learning_rate: float = 0.01,
    seed: int = 0,
    embedding_dim: int = DEFAULT_EMBEDDING_DIM,
    hidden_dim: int = DEFAULT_HIDDEN_DIM,
    optimizer: str = "adam",
) -> Seq2SeqModel:
    """Train on every fact as a premise->conclusion sequence pair."""
    if not kb.facts:
        raise ValueError("cannot train a reasoner on a KB with no facts")
    model = Seq2SeqModel(
        vocab=build_vocab(kb),
        embedding_dim=embedding_dim,
        hidden_dim=hidden_dim,
        seed=seed,
        word_vectors=word_vectors,
    )
    pairs = [
        (model.token_ids(f.premise), model.token_ids(f.conclusion)) for f in kb.facts
    ]
    opt = make_optimizer(optimizer, model.parameters(), learning_rate)
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        for idx in rng.permutation(len(pairs)):
            loss = model.loss_and_grad_fn([pairs[idx]])()
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite reasoner loss {loss}")
            opt.step()
    return model


def embed_premise(model: Seq2SeqModel, phrase: str) -> PremiseEmbedding:
    """Encoder final hidden state for an opinion phrase (OOV words -> UNK)."""
    if not normalize_phrase(phrase):
        raise ValueError("cannot embed an empty phrase")
    return PremiseEmbedding(vector=model.encode(phrase), phrase=phrase)


def decode(model: Seq2SeqModel, phrase: str, max_len: int = 8) -> str:
    """Greedy argmax decode of the conclusion for a premise phrase."""
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    h = model.encode(phrase)
    token = model.word_to_id[BOS]
    eos = model.word_to_id[EOS]
    words: list[str] = []
    for _ in range(max_len):
        h = model.decoder.step(model.embedding.row(token), h)
        logits = model.projection.apply(h)
        token = int(np.argmax(logits))
        if token == eos:
            break
        words.append(model.vocab[token])
    return " ".join(words)
