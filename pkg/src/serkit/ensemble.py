"""Weighted-average fusion of three classifiers with grid-searched weights."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .errors import EmptyEval
from .metrics import evaluate


@dataclass(frozen=True)
class EnsembleWeights:
    w: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in self.w)
        if len(w) != 3:
            raise ValueError("ensemble weights need exactly 3 entries")
        if min(w) < 0 or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"weights must be non-negative and sum to 1, got {w}")
        object.__setattr__(self, "w", w)

    def to_dict(self):
        return dict(zip("ABC", self.w))


def simplex_lattice(step=0.1):
    """All ``(w1, w2, w3)`` on the grid of spacing ``step`` with ``sum == 1``, lexicographic order."""
    n = int(round(1.0 / step))
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} does not divide 1 evenly")
    return [(i / n, j / n, (n - i - j) / n) for i in range(n + 1) for j in range(n + 1 - i)]


def _stack(probs):
    arrays = [np.asarray(p, dtype=np.float64) for p in probs]
    if len(arrays) != 3:
        raise ValueError("exactly three probability arrays are required")
    if len({a.shape for a in arrays}) != 1:
        raise ValueError(f"probability arrays differ in shape: {[a.shape for a in arrays]}")
    return np.stack(arrays)


def fuse(probs_a, probs_b, probs_c, weights):
    """Weighted sum of three probability arrays and its argmax (lowest index on ties)."""
    w = weights.w if isinstance(weights, EnsembleWeights) else EnsembleWeights(weights).w
    p = np.tensordot(np.asarray(w), _stack([probs_a, probs_b, probs_c]), axes=1)
    return p, np.argmax(p, axis=-1)


def grid_search(val_probs, val_labels, step=0.1):
    """Exhaustive lattice search for the weights maximizing validation accuracy.

    Returns ``(weights, scores)`` where ``scores`` lists ``(w, accuracy)`` for
    every evaluated lattice point.  Ties go to the lexicographically smallest
    ``w``.
    """
    stacked = _stack(val_probs)
    y = np.asarray(val_labels)
    if y.size == 0 or stacked.shape[1] == 0:
        raise EmptyEval("validation set is empty")
    if stacked.shape[1] != y.size:
        raise ValueError(f"{stacked.shape[1]} predictions but {y.size} labels")
    scores = []
    for w in simplex_lattice(step):
        pred = np.argmax(np.tensordot(np.asarray(w), stacked, axes=1), axis=-1)
        scores.append((w, float(np.mean(pred == y))))
    best = max(s for _, s in scores)
    winner = min(w for w, s in scores if s == best)
    return EnsembleWeights(winner), scores


def evaluate_ensemble(test_probs, test_labels, weights, label_names=None):
    a, b, c = test_probs
    fused, pred = fuse(a, b, c, weights)
    y = np.asarray(test_labels)
    if y.size != pred.size:
        raise ValueError(f"{pred.size} predictions but {y.size} labels")
    return evaluate(y, pred, fused.shape[-1], label_names)


def save_weights(weights, path, checkpoints=(), step=None):
    record = {"weights": weights.to_dict(), "checkpoints": [str(c) for c in checkpoints]}
    if step is not None:
        record["step"] = step
    Path(path).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")


def load_weights(path):
    record = json.loads(Path(path).read_text(encoding="utf-8"))
    w = record["weights"]
    return EnsembleWeights((w["A"], w["B"], w["C"])), record.get("checkpoints", [])


class WeightedAverageEnsemble(ClassifierMixin, BaseEstimator):
    """Fuse three fitted probabilistic classifiers.

    ``fit`` does not retrain the members; it grid-searches the fusion weights
    on the data it is given (meant to be a validation split).
    """

    def __init__(self, estimators, step=0.1, weights=None):
        self.estimators = estimators
        self.step = step
        self.weights = weights

    def fit(self, X, y):
        if len(self.estimators) != 3:
            raise ValueError("exactly three estimators are required")
        self.classes_ = np.asarray(self.estimators[0].classes_)
        for est in self.estimators[1:]:
            if not np.array_equal(est.classes_, self.classes_):
                raise ValueError("all estimators must share the same classes_")
        y_enc = np.searchsorted(self.classes_, y)
        probs = [est.predict_proba(X) for est in self.estimators]
        if self.weights is not None:
            self.weights_ = EnsembleWeights(self.weights)
            self.grid_scores_ = []
        else:
            self.weights_, self.grid_scores_ = grid_search(probs, y_enc, self.step)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "weights_")
        return fuse(*(est.predict_proba(X) for est in self.estimators), self.weights_)[0]

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
