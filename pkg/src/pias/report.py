"""Report rendering: delimited results files, a human-readable report with
per-intervention predictions and summaries, and figures next to both.

Results files carry no timestamps so identical runs are byte-identical;
run metadata lives in the manifest instead.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from pathlib import Path

from .corpus import Label
from .experiments import ExperimentResult

# Scores reported for the reference configuration (fine-tuned transformer
# models over the full-scale corpus). Desk-scale runs are not expected to
# reproduce them; they are context for reading a report.
REFERENCE_POINTS = {
    "classification": {
        "bs": {"precision": 0.717, "recall": 0.706, "f1": 0.702},
        "bn": {"precision": 0.732, "recall": 0.731, "f1": 0.731},
        "pias-abs": {"precision": 0.781, "recall": 0.774, "f1": 0.773},
        "pias-ext": {"precision": 0.796, "recall": 0.793, "f1": 0.792},
    },
    "per_class_best": {
        "approved": {"precision": 0.808, "recall": 0.819, "f1": 0.815},
        "terminated": {"precision": 0.778, "recall": 0.765, "f1": 0.772},
    },
    "phase_to_approval": {
        "phase1-approval": {"precision": 0.39, "recall": 0.50, "f1": 0.44},
        "phase2-approval": {"precision": 0.78, "recall": 0.70, "f1": 0.72},
        "phase3-approval": {"precision": 0.81, "recall": 0.84, "f1": 0.82},
    },
    "phase_to_phase": {
        "phase1-phase2": {"precision": 0.77, "recall": 0.76, "f1": 0.77},
        "phase2-phase3": {"precision": 0.84, "recall": 0.82, "f1": 0.83},
    },
    "summarization_rouge": {
        "abstractive": {"rouge1": 39.38, "rouge2": 11.98, "rougeL": 20.13},
        "abstractive-generic": {"rouge1": 24.85, "rouge2": 4.34, "rougeL": 15.48},
        "extractive": {"rouge1": 19.24, "rouge2": 3.22, "rougeL": 13.19},
    },
    "evidence_scorer": {"precision": 0.931, "recall": 0.956, "f1": 0.943, "auc": 0.969},
}


def _result_lines(result) -> list:
    lines = []
    unit = "fold" if isinstance(result, ExperimentResult) else "run"
    parts = result.fold_reports if isinstance(result, ExperimentResult) else result.run_reports
    for fr in parts:
        lines.append({
            "experiment_id": result.experiment_id,
            "config": result.config.to_dict(),
            unit: fr.fold,
            "per_class": {k: v.to_dict() for k, v in fr.report.per_class.items()},
            "macro": fr.report.macro.to_dict(),
            "auc": fr.report.auc,
        })
    lines.append({
        "experiment_id": result.experiment_id,
        "config": result.config.to_dict(),
        unit: "aggregate",
        "per_class": {k: v.to_dict() for k, v in result.aggregate.per_class.items()},
        "macro": result.aggregate.macro.to_dict(),
        "auc": result.aggregate.auc,
        "skipped": list(result.skipped),
    })
    return lines


def write_results(path, results: Sequence) -> None:
    """Line-delimited metrics: one line per fold/run plus an aggregate line
    per experiment."""
    with open(path, "w", encoding="utf-8") as fh:
        for result in results:
            for line in _result_lines(result):
                fh.write(json.dumps(line, sort_keys=True))
                fh.write("\n")


def _fmt(value) -> str:
    return "-" if value is None else f"{value:.3f}"


def _metric_table(rows) -> list:
    lines = ["| experiment | precision | recall | f1 | auc |",
             "|---|---|---|---|---|"]
    for name, agg in rows:
        lines.append(
            f"| {name} | {_fmt(agg.macro.precision)} | {_fmt(agg.macro.recall)}"
            f" | {_fmt(agg.macro.f1)} | {_fmt(agg.auc)} |"
        )
    return lines


def _excerpt(text: str, max_words: int = 45) -> str:
    words = text.split()
    cut = " ".join(words[:max_words])
    if len(words) > max_words:
        cut += " ..."
    return cut.replace("|", "/")


def write_report(path, results: Sequence, title: str = "Evaluation report") -> None:
    """Markdown report: aggregate metrics, per-fold metrics, reference points,
    and per-intervention predictions with their summaries (side by side when
    several experiments share a split)."""
    lines = [f"# {title}", ""]
    lines.append("Aggregation: macro (unweighted class mean), averaged over folds/runs.")
    lines.append("")
    lines.append("## Aggregate metrics")
    lines.append("")
    lines.extend(_metric_table([(r.experiment_id, r.aggregate) for r in results]))
    lines.append("")

    lines.append("## Reference points")
    lines.append("")
    lines.append("Reference configuration (fine-tuned transformer models, full-scale"
                 " corpus); shown for context, not as a desk-scale target:")
    lines.append("")
    for mode, scores in REFERENCE_POINTS["classification"].items():
        lines.append(f"- {mode}: P={scores['precision']:.3f}"
                     f" R={scores['recall']:.3f} F1={scores['f1']:.3f}")
    lines.append("")

    for result in results:
        unit = "fold" if isinstance(result, ExperimentResult) else "run"
        parts = result.fold_reports if isinstance(result, ExperimentResult) else result.run_reports
        lines.append(f"## {result.experiment_id}")
        lines.append("")
        if result.skipped:
            lines.append(f"Skipped (no usable articles): {len(result.skipped)}"
                         f" ({', '.join(sorted(result.skipped)[:8])}"
                         f"{', ...' if len(result.skipped) > 8 else ''})")
            lines.append("")
        lines.append(f"| {unit} | macro P | macro R | macro F1 | auc |")
        lines.append("|---|---|---|---|---|")
        for fr in parts:
            lines.append(f"| {fr.fold} | {_fmt(fr.report.macro.precision)}"
                         f" | {_fmt(fr.report.macro.recall)} | {_fmt(fr.report.macro.f1)}"
                         f" | {_fmt(fr.report.auc)} |")
        lines.append("")

    # Per-intervention predictions with summary excerpts; experiments sharing
    # the same seed partition the corpus identically, so rows align by name.
    by_name: dict = {}
    for result in results:
        parts = result.fold_reports if isinstance(result, ExperimentResult) else result.run_reports
        for fr in parts:
            for p in fr.predictions:
                by_name.setdefault(p.name, {})[result.experiment_id] = p
    if by_name:
        ids = [r.experiment_id for r in results]
        lines.append("## Predictions and summaries")
        lines.append("")
        header = "| intervention | " + " | ".join(ids) + " |"
        lines.append(header)
        lines.append("|" + "---|" * (len(ids) + 1))
        for name in sorted(by_name):
            cells = []
            for eid in ids:
                p = by_name[name].get(eid)
                if p is None:
                    cells.append("-")
                else:
                    verdict = "approved" if p.label is Label.APPROVED else "terminated"
                    cells.append(f"{verdict} ({p.probability:.2f}): {_excerpt(p.summary.text)}")
            lines.append(f"| {name} | " + " | ".join(cells) + " |")
        lines.append("")

    Path(path).write_text("\n".join(lines), encoding="utf-8")


def render_figures(out_dir, results: Sequence) -> list:
    """Render metric figures next to the delimited output; returns the paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    ids = [r.experiment_id for r in results]
    metrics = ("precision", "recall", "f1")
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / len(metrics)
    for mi, metric in enumerate(metrics):
        values = [getattr(r.aggregate.macro, metric) for r in results]
        positions = [i + mi * width for i in range(len(results))]
        ax.bar(positions, values, width=width, label=metric)
    ax.set_xticks([i + width for i in range(len(results))])
    ax.set_xticklabels(ids, rotation=15, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("macro score")
    ax.set_title("Aggregate macro metrics")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "macro_metrics.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    for result in results:
        parts = result.fold_reports if isinstance(result, ExperimentResult) else result.run_reports
        ax.plot(
            [fr.fold for fr in parts],
            [fr.report.macro.f1 for fr in parts],
            marker="o", label=result.experiment_id,
        )
    ax.set_xlabel("fold / run")
    ax.set_ylabel("macro F1")
    ax.set_ylim(0, 1.05)
    ax.set_title("Per-fold macro F1")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "fold_f1.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)
    return written


def write_rouge_results(path, tables: dict) -> None:
    """Line-delimited mean ROUGE rows, one per summary mode."""
    with open(path, "w", encoding="utf-8") as fh:
        for mode in sorted(tables):
            table = tables[mode]
            fh.write(json.dumps({
                "mode": mode,
                "n_pairs": table["n_pairs"],
                "rouge1": table["rouge1"].to_dict(),
                "rouge2": table["rouge2"].to_dict(),
                "rougeL": table["rougeL"].to_dict(),
            }, sort_keys=True))
            fh.write("\n")


def render_rouge_figure(out_dir, tables: dict) -> list:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    modes = sorted(tables)
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / 3
    for mi, key in enumerate(("rouge1", "rouge2", "rougeL")):
        values = [tables[m][key].f1 for m in modes]
        ax.bar([i + mi * width for i in range(len(modes))], values, width=width, label=key)
    ax.set_xticks([i + width for i in range(len(modes))])
    ax.set_xticklabels(modes, fontsize=8)
    ax.set_ylabel("mean F1")
    ax.set_title("Summarization adequacy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "rouge.png"
    fig.savefig(path)
    plt.close(fig)
    return [path]
