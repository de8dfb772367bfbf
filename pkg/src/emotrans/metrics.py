"""Confusion-matrix classification metrics: per-class precision/recall/F1,
macro and support-weighted averages, plus a plain-text results table."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def confusion_matrix(
    true_idx: Sequence[int], pred_idx: Sequence[int], num_classes: int
) -> np.ndarray:
    """Count matrix with rows = true class, columns = predicted class."""
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    for t, p in zip(true_idx, pred_idx, strict=True):
        cm[t, p] += 1
    return cm


@dataclass(frozen=True)
class MetricsReport:
    """Evaluation summary for one model on one split.

    The zero-denominator convention is explicit: precision, recall, and F1
    are 0 whenever their denominator is 0, and the macro average runs over
    all classes including absent ones.
    """

    labels: tuple[str, ...]
    confusion: np.ndarray  # (K, K) int64, rows = truth
    precision: np.ndarray  # (K,)
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray  # (K,) true counts
    macro_f1: float
    weighted_f1: float

    @property
    def accuracy(self) -> float:
        total = int(self.confusion.sum())
        return float(np.trace(self.confusion) / total) if total else 0.0

    def to_json_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
            "per_class": {
                label: {
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "f1": float(self.f1[i]),
                    "support": int(self.support[i]),
                }
                for i, label in enumerate(self.labels)
            },
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "accuracy": self.accuracy,
            "samples": int(self.confusion.sum()),
        }


def metrics_from_confusion(cm: np.ndarray, labels: Sequence[str]) -> MetricsReport:
    """Derive all metrics from a (K, K) confusion matrix."""
    cm = np.asarray(cm, dtype=np.int64)
    k = cm.shape[0]
    if cm.shape != (k, k) or k != len(labels):
        raise ValueError(f"confusion shape {cm.shape} does not match {len(labels)} labels")
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)

    precision = np.divide(tp, predicted, out=np.zeros(k), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros(k), where=support > 0)
    pr_sum = precision + recall
    f1 = np.divide(2.0 * precision * recall, pr_sum, out=np.zeros(k), where=pr_sum > 0)

    macro = float(f1.mean())
    total = support.sum()
    weighted = float((f1 * support).sum() / total) if total else 0.0
    return MetricsReport(
        labels=tuple(labels),
        confusion=cm,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support.astype(np.int64),
        macro_f1=macro,
        weighted_f1=weighted,
    )


def evaluate_predictions(
    true_idx: Sequence[int], pred_idx: Sequence[int], labels: Sequence[str]
) -> MetricsReport:
    cm = confusion_matrix(true_idx, pred_idx, len(labels))
    return metrics_from_confusion(cm, labels)


def render_results_table(rows: Sequence[tuple[str, MetricsReport]]) -> str:
    """Side-by-side per-class F1 table: one line per method, one column per
    class plus the macro and weighted averages."""
    if not rows:
        return ""
    labels = rows[0][1].labels
    header = ["Method", *labels, "m-avg", "w-avg"]
    table = [header]
    for name, report in rows:
        if report.labels != labels:
            raise ValueError("all reports in one table must share labels")
        table.append(
            [name]
            + [f"{report.f1[i]:.3f}" for i in range(len(labels))]
            + [f"{report.macro_f1:.3f}", f"{report.weighted_f1:.3f}"]
        )
    widths = [max(len(r[c]) for r in table) for c in range(len(header))]
    lines = []
    for r_i, r in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(r)).rstrip())
        if r_i == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(lines)
