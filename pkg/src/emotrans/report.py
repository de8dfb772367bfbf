"""Report rendering: delimited tables and matplotlib figures.

Every CLI report path writes machine-readable JSON plus, when an output
directory is given, CSV tables and PNG figures side by side. Rendering is
deterministic: fixed figure sizes, fixed dpi, no timestamps in metadata.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .affect import EMOTIONS
from .dataset import DispersionReport, StatsReport, TransitionMatrix
from .metrics import MetricsReport
from .training import TrainHistory

_DPI = 150
_SPLITS = ("train", "valid", "test", "total")


def _save(fig, path: str) -> None:
    fig.savefig(path, dpi=_DPI, metadata={"Software": "emotrans"})
    plt.close(fig)


# ---------------------------------------------------------------------------
# Figures


def save_stats_figure(stats: StatsReport, path: str) -> None:
    """Grouped bars of per-split emotion counts (all labeled slots)."""
    labels = [e.value for e in EMOTIONS]
    splits = ("train", "valid", "test")
    width = 0.8 / len(splits)
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(8, 4))
    for i, split in enumerate(splits):
        counts = [stats.emotion_counts[lab][split] for lab in labels]
        ax.bar(x + (i - 1) * width, counts, width, label=split)
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("labeled utterance slots")
    ax.set_title("Emotion counts per split")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def save_transition_figure(matrices: list[TransitionMatrix], path: str) -> None:
    """Heatmap grid of transition ratio matrices, one panel per source."""
    n = len(matrices)
    cols = min(3, n)
    rows = (n + cols - 1) // cols
    labels = [e.value for e in EMOTIONS]
    fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 3.8 * rows), squeeze=False)
    for k, m in enumerate(matrices):
        ax = axes[k // cols][k % cols]
        im = ax.imshow(m.ratios, vmin=0.0, vmax=1.0, cmap="Blues")
        ax.set_xticks(range(7))
        ax.set_yticks(range(7))
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
        ax.set_yticklabels(labels, fontsize=7)
        ax.set_title(m.role or "all roles", fontsize=9)
        ax.set_xlabel("response emotion", fontsize=7)
        ax.set_ylabel("preceding emotion", fontsize=7)
        for i in range(7):
            for j in range(7):
                if m.ratios[i, j] > 0:
                    ax.text(
                        j, i, f"{m.ratios[i, j]:.2f}",
                        ha="center", va="center", fontsize=5,
                        color="white" if m.ratios[i, j] > 0.5 else "black",
                    )
        fig.colorbar(im, ax=ax, fraction=0.046)
    for k in range(n, rows * cols):
        axes[k // cols][k % cols].axis("off")
    fig.tight_layout()
    _save(fig, path)


def save_dispersion_figure(report: DispersionReport, path: str) -> None:
    """Per-emotion dispersion bars: infinity-norm std in red, L2-norm std
    in blue (the two row-norm series)."""
    labels = [r.emotion for r in report.rows]
    inf_std = [r.inf_norm_std if r.inf_norm_std is not None else 0.0 for r in report.rows]
    l2_std = [r.l2_norm_std if r.l2_norm_std is not None else 0.0 for r in report.rows]
    x = np.arange(len(labels))
    width = 0.38
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(x - width / 2, inf_std, width, color="tab:red", label="std of row infinity norm")
    ax.bar(x + width / 2, l2_std, width, color="tab:blue", label="std of row L2 norm")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("population std across matrices")
    ax.set_title("Transition-row dispersion across roles")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def save_history_figure(history: TrainHistory, path: str) -> None:
    """Training loss and valid F1 curves with the selected epoch marked."""
    epochs = [r.epoch for r in history.records]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(epochs, [r.train_loss for r in history.records], color="tab:gray", label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("train loss")
    ax2 = ax.twinx()
    ax2.plot(epochs, [r.valid_macro_f1 for r in history.records], color="tab:red", label="valid m-avg F1")
    ax2.plot(epochs, [r.valid_weighted_f1 for r in history.records], color="tab:blue", label="valid w-avg F1")
    ax2.set_ylabel("valid F1")
    ax2.axvline(history.selected_epoch, color="tab:green", linestyle="--", label="selected epoch")
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax2.legend(lines + lines2, labels + labels2, loc="center right", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def save_confusion_figure(report: MetricsReport, path: str) -> None:
    k = len(report.labels)
    fig, ax = plt.subplots(figsize=(1.0 * k + 2, 0.9 * k + 1.5))
    im = ax.imshow(report.confusion, cmap="Blues")
    ax.set_xticks(range(k))
    ax.set_yticks(range(k))
    ax.set_xticklabels(report.labels, rotation=45, ha="right", fontsize=8)
    ax.set_yticklabels(report.labels, fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    vmax = report.confusion.max() or 1
    for i in range(k):
        for j in range(k):
            ax.text(
                j, i, str(int(report.confusion[i, j])),
                ha="center", va="center", fontsize=7,
                color="white" if report.confusion[i, j] > vmax / 2 else "black",
            )
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    _save(fig, path)


# ---------------------------------------------------------------------------
# Delimited output


def write_transition_csv(matrix: TransitionMatrix, path: str) -> None:
    """Ratio matrix with labeled rows/columns, then the raw counts block."""
    labels = [e.value for e in EMOTIONS]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ratios", *labels])
        for i, lab in enumerate(labels):
            w.writerow([lab, *[f"{x:.6f}" for x in matrix.ratios[i]]])
        w.writerow([])
        w.writerow(["counts", *labels])
        for i, lab in enumerate(labels):
            w.writerow([lab, *[int(x) for x in matrix.counts[i]]])


def write_dispersion_csv(report: DispersionReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["emotion", "contributing_matrices", "inf_norm_std", "l2_norm_std"])
        for r in report.rows:
            w.writerow(
                [
                    r.emotion,
                    r.contributing,
                    "" if r.inf_norm_std is None else f"{r.inf_norm_std:.6f}",
                    "" if r.l2_norm_std is None else f"{r.l2_norm_std:.6f}",
                ]
            )


def write_stats_csv(stats: StatsReport, path: str) -> None:
    """Long-format dump: section,key,split,value."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["section", "key", "split", "value"])
        for split in _SPLITS:
            w.writerow(["triples", "count", split, stats.triple_counts[split]])
        for split in _SPLITS:
            w.writerow(["unique_utterances", "count", split, stats.unique_utterances[split]])
        for split in _SPLITS:
            w.writerow(
                ["avg_utterance_length", "tokens", split,
                 f"{stats.avg_utterance_length[split]:.4f}"]
            )
        for section, table in (
            ("emotions", stats.emotion_counts),
            ("emotions_endpoints_only", stats.emotion_counts_endpoints),
            ("sentiments", stats.sentiment_counts),
            ("roles", stats.role_counts),
        ):
            for key, per_split in table.items():
                for split in _SPLITS:
                    w.writerow([section, key, split, per_split[split]])
        for pos, table in stats.position_emotions.items():
            for key, value in table.items():
                w.writerow(["triple_emotions", key, pos, value])
        for pos, table in stats.position_sentiments.items():
            for key, value in table.items():
                w.writerow(["triple_sentiments", key, pos, value])


def write_history_csv(history: TrainHistory, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "valid_macro_f1", "valid_weighted_f1", "selected"])
        for r in history.records:
            w.writerow(
                [
                    r.epoch,
                    format(r.train_loss, ".17g"),
                    format(r.valid_macro_f1, ".17g"),
                    format(r.valid_weighted_f1, ".17g"),
                    int(r.epoch == history.selected_epoch),
                ]
            )


def write_metrics_csv(report: MetricsReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class", "precision", "recall", "f1", "support"])
        for i, label in enumerate(report.labels):
            w.writerow(
                [
                    label,
                    f"{report.precision[i]:.6f}",
                    f"{report.recall[i]:.6f}",
                    f"{report.f1[i]:.6f}",
                    int(report.support[i]),
                ]
            )
        w.writerow(["m-avg", "", "", f"{report.macro_f1:.6f}", int(report.support.sum())])
        w.writerow(["w-avg", "", "", f"{report.weighted_f1:.6f}", int(report.support.sum())])
