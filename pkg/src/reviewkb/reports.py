"""Report generation: JSON/TSV tables plus matplotlib figures.

Every report writer is deterministic (sorted keys, fixed figure metadata) so
repeated runs produce byte-identical artifacts.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .comprehension import ReasonerSource, ZeroSource
from .extraction import extract_review
from .fixtures import (
    disambiguation_run,
    fixture_disambiguation_suite,
    fixture_kb_corpus,
    KB_CORPUS_EDGES,
    KB_CORPUS_LEXICON,
    train_suite_reasoner,
)
from .corpus import EdgeList, normalize_phrase
from .kb import KbStats, build_matrix, make_kb, mine_facts, select, stats
from .metrics import aggregate

_PNG_METADATA = {"Software": "reviewkb"}


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def write_tsv(path: str | Path, header: list[str], rows: list[list]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _save_figure(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def kb_stats_report(kb_stats: KbStats) -> dict:
    report = {"schema": "kb-stats"}
    report.update(kb_stats.to_dict())
    return report


def task_score_report(task: str, model_runs: dict[str, list[dict[str, float]]], seeds: list[int]) -> dict:
    """Mean and population std per metric for each model variant.

    With a single variant the per-metric summary is also exposed at the top
    level under ``metrics``.
    """
    models = []
    for model_name in model_runs:
        summary = aggregate(model_runs[model_name])
        entry: dict = {"model": model_name}
        for metric, ms in summary.items():
            entry[metric] = ms
        models.append(entry)
    report = {
        "schema": f"{task}-scores",
        "task": task,
        "n_runs": len(seeds),
        "seed_list": list(seeds),
        "models": models,
    }
    if len(models) == 1:
        report["metrics"] = {k: v for k, v in models[0].items() if k != "model"}
    return report


def kb_stats_figure(kb_stats: KbStats, path: str | Path) -> None:
    fig, (ax_counts, ax_overlap) = plt.subplots(1, 2, figsize=(8, 3.2))
    counts = {
        "entities": kb_stats.n_entities,
        "extractions": kb_stats.n_extractions,
        "opinions": kb_stats.n_unique_opinions,
        "facts": kb_stats.n_facts,
    }
    ax_counts.bar(range(len(counts)), list(counts.values()), color="#4878b0")
    ax_counts.set_xticks(range(len(counts)), list(counts), rotation=20)
    ax_counts.set_title(f"KB size ({kb_stats.domain_name})", fontsize=10)
    overlaps = {
        "extraction": kb_stats.extraction_overlap,
        "relation": kb_stats.relation_overlap,
    }
    ax_overlap.bar(range(len(overlaps)), list(overlaps.values()), color="#d1955c")
    ax_overlap.set_xticks(range(len(overlaps)), list(overlaps))
    ax_overlap.set_ylim(0, 100)
    ax_overlap.set_ylabel("%")
    ax_overlap.set_title("reference-KB overlap", fontsize=10)
    fig.tight_layout()
    _save_figure(fig, Path(path))


def task_scores_figure(report: dict, path: str | Path) -> None:
    metrics = [k for k in report["models"][0] if k != "model"]
    models = [entry["model"] for entry in report["models"]]
    width = 0.8 / len(models)
    fig, ax = plt.subplots(figsize=(6, 3.2))
    x = np.arange(len(metrics))
    for mi, entry in enumerate(report["models"]):
        means = [entry[m]["mean"] for m in metrics]
        stds = [entry[m]["std"] for m in metrics]
        ax.bar(x + mi * width, means, width, yerr=stds, capsize=3, label=models[mi])
    ax.set_xticks(x + width * (len(models) - 1) / 2, metrics)
    ax.set_ylim(0, 1.05)
    ax.set_title(f"{report['task']} scores over {report['n_runs']} seeds", fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save_figure(fig, Path(path))


def fixture_kb_stats() -> KbStats:
    """Build the hand-countable fixture KB end to end and report its stats."""
    reviews = fixture_kb_corpus()
    tuples = [extract_review(r, KB_CORPUS_LEXICON) for r in reviews]
    matrix, _ = build_matrix(reviews, tuples)
    entities, opinions = select(matrix, top_entities=10, top_extractions=10)
    restricted = matrix.restrict(entities, opinions)
    facts = mine_facts(restricted, npmi_threshold=0.3, min_support=2)
    kb = make_kb(opinions, facts, "fixture-hospitality")
    nodes: set[str] = set()
    edges: set[tuple[str, str]] = set()
    for a, b in KB_CORPUS_EDGES:
        a, b = normalize_phrase(a), normalize_phrase(b)
        nodes.update((a, b))
        edges.add((a, b) if a <= b else (b, a))
    edge_list = EdgeList(nodes=frozenset(nodes), edges=frozenset(edges))
    return stats(kb, restricted, edge_list)


def repro_report(
    output_dir: str | Path,
    n_seeds: int = 5,
    task_epochs: int = 20,
    reasoner_epochs: int = 120,
) -> dict[str, str]:
    """Run the fixture pipeline and emit KB-stats and QA-score reports."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    kb_stats = fixture_kb_stats()
    table1 = kb_stats_report(kb_stats)
    write_json(output_dir / "kb_stats.json", table1)
    write_tsv(
        output_dir / "kb_stats.tsv",
        ["field", "value"],
        [[k, v] for k, v in table1.items() if k != "schema"],
    )
    kb_stats_figure(kb_stats, output_dir / "kb_stats.png")

    suite = fixture_disambiguation_suite()
    reasoner = train_suite_reasoner(suite, epochs=reasoner_epochs)
    seeds = list(range(n_seeds))
    runs: dict[str, list[dict[str, float]]] = {"zero-source": [], "reasoner-source": []}
    for seed in seeds:
        runs["zero-source"].append(
            disambiguation_run(suite, ZeroSource(reasoner.hidden_dim), seed=seed, epochs=task_epochs)
        )
        runs["reasoner-source"].append(
            disambiguation_run(suite, ReasonerSource(reasoner), seed=seed, epochs=task_epochs)
        )
    named = {
        name: [{"f1_score": run["f1"], "exact": run["exact"]} for run in model_runs]
        for name, model_runs in runs.items()
    }
    table3 = task_score_report("qa", named, seeds)
    write_json(output_dir / "qa_scores.json", table3)
    rows = []
    for entry in table3["models"]:
        rows.append(
            [
                entry["model"],
                f"{entry['f1_score']['mean']:.4f} ± {entry['f1_score']['std']:.4f}",
                f"{entry['exact']['mean']:.4f} ± {entry['exact']['std']:.4f}",
            ]
        )
    write_tsv(output_dir / "qa_scores.tsv", ["model", "f1_score", "exact"], rows)
    task_scores_figure(table3, output_dir / "qa_scores.png")

    return {
        "kb_stats_json": str(output_dir / "kb_stats.json"),
        "kb_stats_tsv": str(output_dir / "kb_stats.tsv"),
        "kb_stats_png": str(output_dir / "kb_stats.png"),
        "qa_scores_json": str(output_dir / "qa_scores.json"),
        "qa_scores_tsv": str(output_dir / "qa_scores.tsv"),
        "qa_scores_png": str(output_dir / "qa_scores.png"),
    }
