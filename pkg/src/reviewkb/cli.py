"""Command-line pipeline: extract, build-kb, train, evaluate, report.

Configuration comes from an optional JSON file (``--config``) with flag
overrides (flags win). Every stage validates its inputs up front, refuses to
overwrite outputs unless ``--overwrite`` is set, writes its artifacts plus a
manifest with content hashes, and logs to stderr only.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .comprehension import (
    DistmultSource,
    ReasonerSource,
    ZeroSource,
    ae_predict,
    asc_predict,
    make_absa_instances,
    make_qa_instances,
    qa_predict,
    train_task,
)
from .corpus import load_absa_dataset, load_edge_list, load_qa_dataset, load_reviews, load_word_vectors, split
from .distmult import DistMultModel, load_triples, phrase_vector, train_distmult
from .errors import ConfigError, DataError, NumericalError
from .extraction import OpinionTuple, extract_review, load_lexicon
from .kb import (
    build_matrix,
    extraction_overlap,
    load_kb,
    make_kb,
    mine_facts,
    relation_overlap,
    save_kb,
    select,
    stats,
)
from .metrics import cls_scores, token_f1
from .neural import load_checkpoint
from .reasoner import Seq2SeqModel, train_reasoner
from .reports import (
    kb_stats_report,
    repro_report,
    task_score_report,
    task_scores_figure,
    write_json,
)

log = logging.getLogger("reviewkb")


# ---------------------------------------------------------------------------
# Plumbing


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _merge_config(args: argparse.Namespace, parser_dests: set[str]) -> dict:
    """Config-file values overridden by explicitly set flags."""
    merged: dict = {}
    if args.config is not None:
        config_path = Path(args.config)
        if not config_path.exists():
            raise ConfigError(f"config file not found: {config_path}")
        try:
            file_cfg = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config JSON {config_path}: {exc.msg}") from exc
        for key, value in file_cfg.items():
            if key not in parser_dests:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
    for key in parser_dests:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _require(cfg: dict, *keys: str) -> None:
    for key in keys:
        if cfg.get(key) is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")


def _require_paths(cfg: dict, *keys: str) -> None:
    _require(cfg, *keys)
    for key in keys:
        if not Path(cfg[key]).exists():
            raise ConfigError(f"path for --{key.replace('_', '-')} does not exist: {cfg[key]}")


def _check_overwrite(paths: list[Path], overwrite: bool) -> None:
    for path in paths:
        if path.exists() and not overwrite:
            raise ConfigError(f"refusing to overwrite existing {path} (pass --overwrite)")


def _write_manifest(
    manifest_path: Path, subcommand: str, cfg: dict, inputs: dict[str, str], outputs: dict[str, str]
) -> None:
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "config": {k: cfg[k] for k in sorted(cfg) if k not in ("config", "overwrite")},
        "seed": cfg.get("seed"),
        "inputs": {
            name: {"path": str(path), "sha256": _sha256(Path(path))}
            for name, path in inputs.items()
        },
        "outputs": {
            name: {"path": str(path), "sha256": _sha256(Path(path))}
            for name, path in outputs.items()
        },
    }
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _checkpoint_outputs(prefix: Path) -> dict[str, str]:
    return {
        "manifest_json": str(prefix.with_suffix(".json")),
        "payload_bin": str(prefix.with_suffix(".bin")),
    }


# ---------------------------------------------------------------------------
# Subcommands


def cmd_extract(cfg: dict) -> None:
    _require_paths(cfg, "reviews", "lexicon")
    _require(cfg, "output")
    output = Path(cfg["output"])
    _check_overwrite([output], cfg.get("overwrite", False))
    reviews = load_reviews(cfg["reviews"])
    lexicon = load_lexicon(cfg["lexicon"])
    output.parent.mkdir(parents=True, exist_ok=True)
    n_tuples = 0
    with open(output, "w", encoding="utf-8") as fh:
        for review in reviews:
            for tup in extract_review(review, lexicon):
                record = {
                    "review_id": review.id,
                    "entity": review.entity_id,
                    "sentence_index": tup.sentence_index,
                    "modifier": tup.modifier,
                    "aspect": tup.aspect,
                    "modifier_span": list(tup.modifier_span),
                    "aspect_span": list(tup.aspect_span),
                    "opinion": tup.key,
                }
                fh.write(json.dumps(record, sort_keys=True) + "\n")
                n_tuples += 1
    log.info("extracted %d tuples from %d reviews", n_tuples, len(reviews))
    _write_manifest(
        Path(str(output) + ".manifest.json"),
        "extract",
        cfg,
        {"reviews": cfg["reviews"], "lexicon": cfg["lexicon"]},
        {"tuples": str(output)},
    )


def _load_tuple_records(path: str) -> dict[str, list[dict]]:
    by_review: dict[str, list[dict]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed tuple JSON at line {lineno}: {exc.msg}") from exc
            by_review.setdefault(rec["review_id"], []).append(rec)
    return by_review


def cmd_build_kb(cfg: dict) -> None:
    _require_paths(cfg, "tuples", "reviews")
    _require(cfg, "output_dir")
    out_dir = Path(cfg["output_dir"])
    stats_path = Path(cfg.get("stats_output") or out_dir / "stats.json")
    outputs = [out_dir / "facts.tsv", out_dir / "opinions.txt", out_dir / "meta.json", stats_path]
    _check_overwrite(outputs, cfg.get("overwrite", False))

    reviews = load_reviews(cfg["reviews"])
    records = _load_tuple_records(cfg["tuples"])
    tuples = []
    for review in reviews:
        tuples.append(
            [
                OpinionTuple(
                    modifier=rec["modifier"],
                    aspect=rec["aspect"],
                    sentence_index=rec["sentence_index"],
                    modifier_span=tuple(rec["modifier_span"]),
                    aspect_span=tuple(rec["aspect_span"]),
                )
                for rec in records.get(review.id, [])
            ]
        )
    matrix, tensor = build_matrix(reviews, tuples)
    entities, opinions = select(
        matrix, cfg.get("top_entities", 2000), cfg.get("top_extractions", 5000)
    )
    restricted = matrix.restrict(entities, opinions)
    facts = mine_facts(
        restricted,
        npmi_threshold=cfg.get("npmi_threshold", 0.3),
        min_support=cfg.get("min_support", 3),
    )
    kb = make_kb(opinions, facts, cfg.get("domain", "unnamed-domain"))
    save_kb(kb, out_dir)

    inputs = {"tuples": cfg["tuples"], "reviews": cfg["reviews"]}
    if cfg.get("edge_list"):
        _require_paths(cfg, "edge_list")
        edge_list = load_edge_list(cfg["edge_list"])
        report = kb_stats_report(stats(kb, restricted, edge_list))
        inputs["edge_list"] = cfg["edge_list"]
    else:
        report = {
            "schema": "kb-stats",
            "domain_name": kb.domain_name,
            "n_entities": len(restricted.entities()),
            "n_extractions": restricted.total(),
            "n_unique_opinions": len(kb.opinions),
            "n_facts": len(kb.facts),
            "extraction_overlap": None,
            "relation_overlap": None,
        }
    write_json(stats_path, report)
    log.info("built KB: %d opinions, %d facts", len(kb.opinions), len(kb.facts))
    _write_manifest(
        out_dir / "manifest.json",
        "build-kb",
        cfg,
        inputs,
        {
            "facts": str(out_dir / "facts.tsv"),
            "opinions": str(out_dir / "opinions.txt"),
            "meta": str(out_dir / "meta.json"),
            "stats": str(stats_path),
        },
    )


def cmd_train_reasoner(cfg: dict) -> None:
    _require_paths(cfg, "kb")
    _require(cfg, "output")
    prefix = Path(cfg["output"])
    _check_overwrite([prefix.with_suffix(".json"), prefix.with_suffix(".bin")], cfg.get("overwrite", False))
    kb = load_kb(cfg["kb"])
    word_vectors = None
    inputs = {"facts": str(Path(cfg["kb"]) / "facts.tsv")}
    if cfg.get("word_vectors"):
        _require_paths(cfg, "word_vectors")
        word_vectors = load_word_vectors(cfg["word_vectors"])
        inputs["word_vectors"] = cfg["word_vectors"]
    model = train_reasoner(
        kb,
        word_vectors=word_vectors,
        epochs=cfg.get("epochs", 200),
        learning_rate=cfg.get("learning_rate", 0.01),
        seed=cfg.get("seed", 0),
        embedding_dim=cfg.get("embedding_dim", 50),
        hidden_dim=cfg.get("hidden_dim", 768),
    )
    model.save(prefix)
    log.info("trained reasoner on %d facts", len(kb.facts))
    _write_manifest(
        Path(str(prefix) + ".manifest.json"), "train-reasoner", cfg, inputs, _checkpoint_outputs(prefix)
    )


def cmd_embed(cfg: dict) -> None:
    _require(cfg, "checkpoint", "phrases", "output")
    prefix = Path(cfg["checkpoint"])
    _require_paths(cfg, "phrases")
    if not prefix.with_suffix(".json").exists():
        raise ConfigError(f"checkpoint manifest not found: {prefix.with_suffix('.json')}")
    output = Path(cfg["output"])
    _check_overwrite([output], cfg.get("overwrite", False))
    _, metadata = load_checkpoint(prefix)
    kind = metadata.get("kind")
    if kind == "reasoner":
        model = Seq2SeqModel.load(prefix)
        vector_for = model.encode
    elif kind == "distmult":
        dm = DistMultModel.load(prefix)
        vector_for = lambda phrase: phrase_vector(dm, phrase)
    else:
        raise ConfigError(f"checkpoint kind {kind!r} cannot embed phrases")
    phrases = [
        line.strip()
        for line in Path(cfg["phrases"]).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, "w", encoding="utf-8") as fh:
        for phrase in phrases:
            vec = vector_for(phrase)
            fh.write(phrase + "\t" + " ".join(repr(float(v)) for v in vec) + "\n")
    log.info("embedded %d phrases (width %d)", len(phrases), len(vec) if phrases else 0)
    _write_manifest(
        Path(str(output) + ".manifest.json"),
        "embed",
        cfg,
        {"phrases": cfg["phrases"], "checkpoint": str(prefix.with_suffix(".bin"))},
        {"vectors": str(output)},
    )


def cmd_train_distmult(cfg: dict) -> None:
    _require_paths(cfg, "triples")
    _require(cfg, "output")
    prefix = Path(cfg["output"])
    _check_overwrite([prefix.with_suffix(".json"), prefix.with_suffix(".bin")], cfg.get("overwrite", False))
    triples = load_triples(cfg["triples"])
    model = train_distmult(
        triples,
        dim=cfg.get("dim", 16),
        epochs=cfg.get("epochs", 100),
        negatives_per_positive=cfg.get("negatives", 8),
        learning_rate=cfg.get("learning_rate", 0.05),
        seed=cfg.get("seed", 0),
    )
    model.save(prefix)
    log.info("trained DistMult on %d triples (%d entities)", len(triples), len(model.entities))
    _write_manifest(
        Path(str(prefix) + ".manifest.json"),
        "train-distmult",
        cfg,
        {"triples": cfg["triples"]},
        _checkpoint_outputs(prefix),
    )


def _make_source(cfg: dict):
    kind = cfg.get("source", "zero")
    if kind == "zero":
        return ZeroSource(cfg.get("zero_width", 16)), {}
    _require(cfg, "source_checkpoint")
    prefix = Path(cfg["source_checkpoint"])
    if not prefix.with_suffix(".json").exists():
        raise ConfigError(f"source checkpoint not found: {prefix.with_suffix('.json')}")
    inputs = {"source_checkpoint": str(prefix.with_suffix(".bin"))}
    if kind == "reasoner":
        return ReasonerSource(Seq2SeqModel.load(prefix)), inputs
    if kind == "distmult":
        return DistmultSource(DistMultModel.load(prefix)), inputs
    raise ConfigError(f"unknown source kind {kind!r}")


def cmd_train_task(cfg: dict) -> None:
    _require(cfg, "task", "output", "lexicon")
    task = cfg["task"]
    if task not in ("ae", "asc", "qa"):
        raise ConfigError(f"unknown task {task!r}")
    _require_paths(cfg, "lexicon")
    prefix = Path(cfg["output"])
    predictions_path = Path(cfg.get("predictions") or str(prefix) + ".predictions.jsonl")
    metrics_path = Path(cfg.get("metrics_output") or str(prefix) + ".metrics.json")
    _check_overwrite(
        [prefix.with_suffix(".json"), prefix.with_suffix(".bin"), predictions_path, metrics_path],
        cfg.get("overwrite", False),
    )
    lexicon = load_lexicon(cfg["lexicon"])
    seed = cfg.get("seed", 0)
    inputs = {"lexicon": cfg["lexicon"]}
    if task == "qa":
        _require_paths(cfg, "qa_data", "reviews")
        reviews = load_reviews(cfg["reviews"])
        examples = load_qa_dataset(cfg["qa_data"], reviews)
        inputs.update({"qa_data": cfg["qa_data"], "reviews": cfg["reviews"]})
        make_instances = lambda exs: make_qa_instances(exs, lexicon)
    else:
        _require_paths(cfg, "absa_data")
        examples = load_absa_dataset(cfg["absa_data"])
        inputs["absa_data"] = cfg["absa_data"]
        make_instances = lambda exs: make_absa_instances(exs, lexicon)
    train_examples, val_examples = split(
        examples, cfg.get("train_fraction", 0.9), cfg.get("split_seed", 0)
    )
    source, source_inputs = _make_source(cfg)
    inputs.update(source_inputs)
    model = train_task(
        task,
        (make_instances(train_examples), make_instances(val_examples)),
        source,
        epochs=cfg.get("epochs", 20),
        learning_rate=cfg.get("learning_rate", 0.01),
        seed=seed,
        token_dim=cfg.get("token_dim", 16),
        encoder_dim=cfg.get("encoder_dim", 32),
        max_answer_tokens=cfg.get("max_answer_tokens", 50),
    )
    model.save(prefix)

    val_instances = make_instances(val_examples)
    scores: dict[str, float]
    with open(predictions_path, "w", encoding="utf-8") as fh:
        if task == "qa":
            f1s, exacts = [], []
            for inst in val_instances:
                cs, ce = qa_predict(model, inst, source)
                text = inst.example.review.text[cs:ce]
                fh.write(
                    json.dumps(
                        {"id": inst.example.example_id, "char_start": cs, "char_end": ce, "text": text},
                        sort_keys=True,
                    )
                    + "\n"
                )
                qs = token_f1(text, inst.example.answer_text)
                f1s.append(qs.f1)
                exacts.append(qs.exact)
            scores = {"f1_score": float(np.mean(f1s)), "exact": float(np.mean(exacts))}
        elif task == "ae":
            correct = n_pred = n_gold = 0
            for inst in val_instances:
                spans = ae_predict(model, inst, source)
                fh.write(
                    json.dumps(
                        {"id": inst.example.example_id, "spans": [list(s) for s in spans]},
                        sort_keys=True,
                    )
                    + "\n"
                )
                pred, gold = set(spans), set(inst.example.aspect_spans)
                correct += len(pred & gold)
                n_pred += len(pred)
                n_gold += len(gold)
            p = correct / n_pred if n_pred else 0.0
            r = correct / n_gold if n_gold else 0.0
            scores = {
                "precision": p,
                "recall": r,
                "f1_score": 2 * p * r / (p + r) if p + r else 0.0,
            }
        else:
            preds, golds = [], []
            for inst in val_instances:
                polarity = asc_predict(model, inst, source)
                fh.write(
                    json.dumps({"id": inst.example.example_id, "polarity": polarity}, sort_keys=True)
                    + "\n"
                )
                preds.append(polarity)
                golds.append(inst.example.polarity)
            cs = cls_scores(preds, golds)
            scores = {"accuracy": cs.accuracy, "macro_f1": cs.macro_f1}
    report = task_score_report(task, {cfg.get("model_name", "model"): [scores]}, [seed])
    write_json(metrics_path, report)
    log.info("trained %s; validation scores %s", task, scores)
    outputs = _checkpoint_outputs(prefix)
    outputs.update({"predictions": str(predictions_path), "metrics": str(metrics_path)})
    _write_manifest(Path(str(prefix) + ".manifest.json"), "train-task", cfg, inputs, outputs)


def _load_predictions(path: str) -> dict[str, dict]:
    preds: dict[str, dict] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed prediction at line {lineno}: {exc.msg}") from exc
            if "id" not in rec:
                raise DataError(f"prediction missing id at line {lineno}")
            preds[rec["id"]] = rec
    return preds


def cmd_evaluate(cfg: dict) -> None:
    _require(cfg, "task", "predictions", "output")
    task = cfg["task"]
    prediction_paths = cfg["predictions"]
    if isinstance(prediction_paths, str):
        prediction_paths = [prediction_paths]
    for path in prediction_paths:
        if not Path(path).exists():
            raise ConfigError(f"predictions file does not exist: {path}")
    output = Path(cfg["output"])
    figure = Path(cfg["figure"]) if cfg.get("figure") else None
    _check_overwrite([output] + ([figure] if figure else []), cfg.get("overwrite", False))

    runs: list[dict[str, float]] = []
    inputs: dict[str, str] = {}
    if task == "qa":
        _require_paths(cfg, "qa_data", "reviews")
        gold = load_qa_dataset(cfg["qa_data"], load_reviews(cfg["reviews"]))
        inputs.update({"qa_data": cfg["qa_data"], "reviews": cfg["reviews"]})
        for path in prediction_paths:
            preds = _load_predictions(path)
            f1s, exacts = [], []
            for ex in gold:
                if ex.example_id not in preds:
                    raise DataError(f"no prediction for example {ex.example_id} in {path}")
                rec = preds[ex.example_id]
                text = ex.review.text[rec["char_start"] : rec["char_end"]]
                qs = token_f1(text, ex.answer_text)
                f1s.append(qs.f1)
                exacts.append(qs.exact)
            runs.append({"f1_score": float(np.mean(f1s)), "exact": float(np.mean(exacts))})
    elif task == "ae":
        _require_paths(cfg, "absa_data")
        gold = load_absa_dataset(cfg["absa_data"])
        inputs["absa_data"] = cfg["absa_data"]
        for path in prediction_paths:
            preds = _load_predictions(path)
            correct = n_pred = n_gold = 0
            for ex in gold:
                if ex.example_id not in preds:
                    raise DataError(f"no prediction for example {ex.example_id} in {path}")
                spans = {tuple(s) for s in preds[ex.example_id]["spans"]}
                gold_spans = set(ex.aspect_spans)
                correct += len(spans & gold_spans)
                n_pred += len(spans)
                n_gold += len(gold_spans)
            p = correct / n_pred if n_pred else 0.0
            r = correct / n_gold if n_gold else 0.0
            runs.append(
                {"precision": p, "recall": r, "f1_score": 2 * p * r / (p + r) if p + r else 0.0}
            )
    elif task == "asc":
        _require_paths(cfg, "absa_data")
        gold = load_absa_dataset(cfg["absa_data"])
        inputs["absa_data"] = cfg["absa_data"]
        for path in prediction_paths:
            preds = _load_predictions(path)
            pred_labels, gold_labels = [], []
            for ex in gold:
                if ex.example_id not in preds:
                    raise DataError(f"no prediction for example {ex.example_id} in {path}")
                pred_labels.append(preds[ex.example_id]["polarity"])
                gold_labels.append(ex.polarity)
            cs = cls_scores(pred_labels, gold_labels)
            runs.append({"accuracy": cs.accuracy, "macro_f1": cs.macro_f1})
    else:
        raise ConfigError(f"unknown task {task!r}")

    seeds = cfg.get("seed_list") or list(range(len(runs)))
    report = task_score_report(task, {cfg.get("model_name", "model"): runs}, seeds)
    write_json(output, report)
    if figure is not None:
        task_scores_figure(report, figure)
    log.info("evaluated %d run(s) on %s", len(runs), task)
    for i, path in enumerate(prediction_paths):
        inputs[f"predictions_{i}"] = path
    outputs = {"scores": str(output)}
    if figure is not None:
        outputs["figure"] = str(figure)
    _write_manifest(Path(str(output) + ".manifest.json"), "evaluate", cfg, inputs, outputs)


def cmd_overlap(cfg: dict) -> None:
    _require_paths(cfg, "kb", "edge_list")
    _require(cfg, "output")
    output = Path(cfg["output"])
    _check_overwrite([output], cfg.get("overwrite", False))
    kb = load_kb(cfg["kb"])
    edge_list = load_edge_list(cfg["edge_list"])
    report = {
        "schema": "kb-overlap",
        "domain_name": kb.domain_name,
        "extraction_overlap": extraction_overlap(kb, edge_list),
        "relation_overlap": relation_overlap(kb, edge_list),
    }
    write_json(output, report)
    log.info(
        "overlap: extraction %.1f%%, relation %.1f%%",
        report["extraction_overlap"],
        report["relation_overlap"],
    )
    _write_manifest(
        Path(str(output) + ".manifest.json"),
        "overlap",
        cfg,
        {"facts": str(Path(cfg["kb"]) / "facts.tsv"), "edge_list": cfg["edge_list"]},
        {"overlap": str(output)},
    )


def cmd_repro_report(cfg: dict) -> None:
    _require(cfg, "output_dir")
    out_dir = Path(cfg["output_dir"])
    expected = [
        out_dir / name
        for name in (
            "kb_stats.json", "kb_stats.tsv", "kb_stats.png",
            "qa_scores.json", "qa_scores.tsv", "qa_scores.png",
        )
    ]
    _check_overwrite(expected, cfg.get("overwrite", False))
    artifacts = repro_report(
        out_dir,
        n_seeds=cfg.get("seeds", 5),
        task_epochs=cfg.get("task_epochs", 20),
        reasoner_epochs=cfg.get("reasoner_epochs", 120),
    )
    log.info("wrote repro report to %s", out_dir)
    _write_manifest(out_dir / "manifest.json", "repro-report", cfg, {}, artifacts)


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reviewkb",
        description="Opinion knowledge bases from reviews, and models that use them.",
    )
    parser.add_argument("--version", action="version", version=f"reviewkb {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its keys")
        p.add_argument("--overwrite", action="store_true", default=None,
                       help="allow overwriting existing outputs")

    p = sub.add_parser("extract", help="reviews -> opinion tuples JSONL")
    common(p)
    p.add_argument("--reviews")
    p.add_argument("--lexicon")
    p.add_argument("--output")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("build-kb", help="tuples -> KB TSV + stats JSON")
    common(p)
    p.add_argument("--tuples")
    p.add_argument("--reviews")
    p.add_argument("--output-dir")
    p.add_argument("--stats-output")
    p.add_argument("--edge-list")
    p.add_argument("--domain")
    p.add_argument("--top-entities", type=int)
    p.add_argument("--top-extractions", type=int)
    p.add_argument("--npmi-threshold", type=float)
    p.add_argument("--min-support", type=int)
    p.set_defaults(func=cmd_build_kb)

    p = sub.add_parser("train-reasoner", help="KB -> seq2seq reasoner checkpoint")
    common(p)
    p.add_argument("--kb")
    p.add_argument("--output")
    p.add_argument("--word-vectors")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--embedding-dim", type=int)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_reasoner)

    p = sub.add_parser("embed", help="phrases -> commonsense vectors TSV")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--phrases")
    p.add_argument("--output")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train-distmult", help="triples -> DistMult checkpoint")
    common(p)
    p.add_argument("--triples")
    p.add_argument("--output")
    p.add_argument("--dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_distmult)

    p = sub.add_parser("train-task", help="train an AE/ASC/QA head with a commonsense source")
    common(p)
    p.add_argument("--task", choices=("ae", "asc", "qa"))
    p.add_argument("--qa-data")
    p.add_argument("--absa-data")
    p.add_argument("--reviews")
    p.add_argument("--lexicon")
    p.add_argument("--source", choices=("zero", "reasoner", "distmult"))
    p.add_argument("--source-checkpoint")
    p.add_argument("--zero-width", type=int)
    p.add_argument("--output")
    p.add_argument("--predictions")
    p.add_argument("--metrics-output")
    p.add_argument("--model-name")
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--split-seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--token-dim", type=int)
    p.add_argument("--encoder-dim", type=int)
    p.add_argument("--max-answer-tokens", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_task)

    p = sub.add_parser("evaluate", help="predictions -> score report (+ figure)")
    common(p)
    p.add_argument("--task", choices=("ae", "asc", "qa"))
    p.add_argument("--predictions", nargs="+")
    p.add_argument("--qa-data")
    p.add_argument("--absa-data")
    p.add_argument("--reviews")
    p.add_argument("--output")
    p.add_argument("--figure")
    p.add_argument("--model-name")
    p.add_argument("--seed-list", type=int, nargs="+")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("overlap", help="KB + edge list -> overlap JSON")
    common(p)
    p.add_argument("--kb")
    p.add_argument("--edge-list")
    p.add_argument("--output")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("repro-report", help="run the fixture suite; emit reports + figures")
    common(p)
    p.add_argument("--output-dir")
    p.add_argument("--seeds", type=int)
    p.add_argument("--task-epochs", type=int)
    p.add_argument("--reasoner-epochs", type=int)
    p.set_defaults(func=cmd_repro_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    dests = {
        action.dest
        for action in parser._subparsers._group_actions[0].choices[args.subcommand]._actions
        if action.dest not in ("help", "func")
    }
    try:
        cfg = _merge_config(args, dests)
        args.func(cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except DataError as exc:
        log.error("data error: %s", exc)
        return 3
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return 4
    except ValueError as exc:
        log.error("config error: %s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
