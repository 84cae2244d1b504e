"""Confusion matrices, per-class and macro metrics, and report files."""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyEval


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[t, p]``: samples of true class ``t`` predicted as ``p``."""

    counts: np.ndarray

    @property
    def num_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def tp(self):
        return np.diag(self.counts).astype(np.int64)

    @property
    def fp(self):
        return self.counts.sum(axis=0) - self.tp

    @property
    def fn(self):
        return self.counts.sum(axis=1) - self.tp

    @property
    def tn(self):
        return self.total - self.tp - self.fp - self.fn

    @property
    def support(self):
        return self.counts.sum(axis=1)


def confusion(labels, preds, num_classes):
    labels = np.asarray(labels, dtype=np.int64).ravel()
    preds = np.asarray(preds, dtype=np.int64).ravel()
    if labels.size == 0:
        raise EmptyEval("cannot evaluate an empty set")
    if labels.shape != preds.shape:
        raise ValueError(f"{labels.size} labels but {preds.size} predictions")
    for name, arr in (("label", labels), ("prediction", preds)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise ValueError(f"{name} outside [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(counts)


def _ratio(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    accuracy: float
    balanced_accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    labels: tuple

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1},
            "micro": {"precision": self.micro_precision, "recall": self.micro_recall},
            "per_class": [
                {"label": lab, "precision": float(p), "recall": float(r), "f1": float(f), "support": int(s)}
                for lab, p, r, f, s in zip(self.labels, self.precision, self.recall, self.f1, self.support)
            ],
            "confusion": self.confusion.counts.tolist(),
        }


def derive(cm, labels=None):
    """All report metrics from a confusion matrix; zero denominators give 0."""
    if cm.total <= 0:
        raise EmptyEval("confusion matrix is empty")
    k = cm.num_classes
    labels = tuple(str(x) for x in labels) if labels is not None else tuple(str(i) for i in range(k))
    tp, fp, fn, tn = cm.tp, cm.fp, cm.fn, cm.tn
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return EvalReport(
        confusion=cm,
        accuracy=float(tp.sum() / cm.total),
        balanced_accuracy=float(np.mean((tp + tn) / cm.total)),
        precision=precision, recall=recall, f1=f1, support=cm.support,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        micro_precision=float(_ratio(tp.sum(), tp.sum() + fp.sum())),
        micro_recall=float(_ratio(tp.sum(), tp.sum() + fn.sum())),
        labels=labels,
    )


def evaluate(labels, preds, num_classes, label_names=None):
    return derive(confusion(labels, preds, num_classes), label_names)


def emit(report, path, format="json"):
    """Write a report as JSON or as a per-class CSV table.

    The CSV has one row per true class: its metrics followed by its row of the
    confusion matrix (``pred_<label>`` columns).
    """
    path = Path(path)
    if format == "json":
        path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    elif format == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "precision", "recall", "f1", "support"] + [f"pred_{lab}" for lab in report.labels])
            for i, lab in enumerate(report.labels):
                w.writerow([lab, repr(float(report.precision[i])), repr(float(report.recall[i])),
                            repr(float(report.f1[i])), int(report.support[i])]
                           + [int(c) for c in report.confusion.counts[i]])
    else:
        raise ValueError(f"unknown report format {format!r}")
    return path


def read_confusion_csv(path):
    """Return ``(labels, counts)`` from a CSV written by :func:`emit`."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    k = len(body)
    labels = [r[0] for r in body]
    counts = np.array([[int(v) for v in r[5:5 + k]] for r in body], dtype=np.int64)
    if header[5:] != [f"pred_{lab}" for lab in labels]:
        raise ValueError(f"{path}: unexpected confusion header")
    return labels, counts
