"""Builders for the three classifiers, the training loop and checkpoints.

* model A: seven conv blocks (LFABs) followed by two fully connected layers.
* model B: model A with a 512-unit LSTM after the last block.
* model C: model A with a 512-unit GRU after the last block.

``width`` scales every filter/unit count, which gives the narrow variants used
for gradient checks and quick experiments.
"""

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .errors import BlobLength, CheckpointError, NumericError, VersionMismatch
from .features import N_FEATURES, Normalizer
from .nn.network import LayerSpec, Sequential
from .nn.optim import Adam

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MODEL_IDS = ("A", "B", "C")
# LFAB1 uses the first entry for both convs; LFAB2..7 use the rest
BLOCK_FILTERS = (256, 256, 128, 128, 128, 256, 64)
FCN_UNITS = (128, 64)
RECURRENT_UNITS = 512
KERNEL = 8


def _scaled(n, width):
    return max(1, int(round(n * width)))


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    num_classes: int
    layers: tuple
    input_dim: int = N_FEATURES
    width: float = 1.0

    @property
    def input_shape(self):
        return (self.input_dim, 1)

    def network(self, seed=0, dtype=np.float32):
        return Sequential(self.layers, self.input_shape, seed=seed, dtype=dtype)

    def shapes(self):
        """Per-layer output shapes (validated by construction)."""
        return self.network(dtype=np.float32).shapes

    def to_dict(self):
        return {
            "id": self.model_id, "num_classes": self.num_classes, "input_dim": self.input_dim,
            "width": self.width, "layers": [s.to_dict() for s in self.layers],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["id"], int(d["num_classes"]), tuple(LayerSpec.from_dict(x) for x in d["layers"]),
                   int(d["input_dim"]), float(d["width"]))


def build(model_id, num_classes, width=1.0, input_dim=N_FEATURES, dilation=1):
    """Layer stack for model ``A``, ``B`` or ``C``; ``width`` scales every hidden layer."""
    model_id = str(model_id).upper()
    if model_id not in MODEL_IDS:
        raise ValueError(f"model id must be one of {MODEL_IDS}")
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    conv = lambda f: LayerSpec("conv1d", {"filters": _scaled(f, width), "kernel": KERNEL, "dilation": dilation})
    bn, relu = LayerSpec("batchnorm"), LayerSpec("relu")
    pool = LayerSpec("maxpool1d", {"window": 2})
    drop = lambda r: LayerSpec("dropout", {"rate": r})

    layers = [conv(BLOCK_FILTERS[0]), bn, relu, conv(BLOCK_FILTERS[0]), relu, drop(0.25), bn, pool]
    for f in BLOCK_FILTERS[1:]:
        layers += [conv(f), bn, relu, drop(0.25), pool]
    if model_id != "A":
        kind = "lstm" if model_id == "B" else "gru"
        layers += [LayerSpec(kind, {"units": _scaled(RECURRENT_UNITS, width)}), drop(0.5)]
    layers += [LayerSpec("flatten"), drop(0.5)]
    for units in FCN_UNITS:
        layers += [LayerSpec("dense", {"units": _scaled(units, width)}), relu, drop(0.5)]
    layers += [LayerSpec("dense", {"units": num_classes}), LayerSpec("softmax")]
    spec = ModelSpec(model_id, int(num_classes), tuple(layers), int(input_dim), float(width))
    spec.shapes()
    return spec


def param_count(spec):
    return spec.network().param_count()


@dataclass
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 32
    learning_rate: float = 1e-3
    l2: float = 0.01
    l1: float = 0.0
    seed: int = 0


@dataclass
class Checkpoint:
    spec: ModelSpec
    weights: np.ndarray
    label_names: tuple = ()
    mean: np.ndarray = None
    std: np.ndarray = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float32)
        n = param_count(self.spec)
        if self.weights.size != n:
            raise BlobLength(f"weight blob holds {self.weights.size} values, model needs {n}")
        if self.label_names and len(self.label_names) != self.spec.num_classes:
            raise CheckpointError("label count does not match the model's class count")

    @property
    def normalizer(self):
        if self.mean is None:
            return None
        return Normalizer.from_stats(self.mean, self.std)

    def network(self):
        net = self.spec.network(seed=self.seed)
        net.set_weights(self.weights)
        return net

    def manifest(self):
        return {
            "format_version": FORMAT_VERSION,
            "model": self.spec.to_dict(),
            "labels": list(self.label_names),
            "normalizer": None if self.mean is None else {
                "mean": [float(v) for v in self.mean], "std": [float(v) for v in self.std]},
            "seed": int(self.seed),
            "param_count": int(self.weights.size),
            "extra": self.extra,
        }


def _iterate_batches(n, batch_size, rng):
    order = rng.permutation(n)
    for i in range(0, n, batch_size):
        yield order[i:i + batch_size]


def _evaluate(net, X, y, l2, l1):
    from .nn.losses import cross_entropy, one_hot, penalty
    probs = net.predict_proba(X)
    loss = cross_entropy(probs, one_hot(y, probs.shape[1], probs.dtype)) + penalty(net.params, l2, l1)
    return loss, float(np.mean(probs.argmax(axis=1) == y))


def fit(spec, X_train, y_train, X_val=None, y_val=None, config=TrainConfig(), label_names=(),
        normalizer=None, callback=None):
    """Train ``spec`` with Adam on cross-entropy plus weight penalty.

    Inputs are expected already normalized (``normalizer`` is only recorded in
    the checkpoint).  The weights with the best validation accuracy are kept,
    ties going to the lower validation loss; without validation data the final weights are kept.  Returns
    ``(checkpoint, history)`` where history holds one dict per epoch.
    """
    X_train = np.asarray(X_train, dtype=np.float32).reshape(len(X_train), spec.input_dim, 1)
    y_train = np.asarray(y_train, dtype=np.int64)
    has_val = X_val is not None and len(X_val) > 0
    if has_val:
        X_val = np.asarray(X_val, dtype=np.float32).reshape(len(X_val), spec.input_dim, 1)
        y_val = np.asarray(y_val, dtype=np.int64)
    for y in (y_train, y_val if has_val else y_train):
        if y.size and (y.min() < 0 or y.max() >= spec.num_classes):
            raise ValueError(f"labels must lie in [0, {spec.num_classes})")

    net = spec.network(seed=config.seed)
    opt = Adam(net.params, lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    best, best_weights = (-1.0, 0.0), net.get_weights()
    history = []
    for epoch in range(1, config.epochs + 1):
        total, correct, seen = 0.0, 0, 0
        for idx in _iterate_batches(len(X_train), config.batch_size, rng):
            try:
                loss, probs = net.loss_and_grad(X_train[idx], y_train[idx], config.l2, config.l1)
                opt.step()
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}: {exc}", layer=exc.layer, epoch=epoch) from exc
            total += loss * len(idx)
            correct += int((probs.argmax(axis=1) == y_train[idx]).sum())
            seen += len(idx)
        record = {"epoch": epoch, "loss": total / seen, "accuracy": correct / seen}
        if has_val:
            record["val_loss"], record["val_accuracy"] = _evaluate(net, X_val, y_val, config.l2, config.l1)
            score = (record["val_accuracy"], -record["val_loss"])
            if score > best:
                best, best_weights = score, net.get_weights()
        else:
            best_weights = net.get_weights()
        history.append(record)
        log.info("epoch %d %s", epoch, record)
        if callback is not None:
            callback(record)

    mean = std = None
    if normalizer is not None:
        mean, std = normalizer.mean_, normalizer.std_
    ck = Checkpoint(spec, best_weights, tuple(label_names), mean, std, config.seed)
    return ck, history


def predict(checkpoint, vectors):
    """Class probabilities for raw (un-normalized) feature vectors."""
    X = np.asarray(vectors, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != checkpoint.spec.input_dim:
        raise ValueError(f"expected {checkpoint.spec.input_dim} features, got {X.shape[1]}")
    if checkpoint.mean is not None:
        X = checkpoint.normalizer.transform(X)
    net = checkpoint.network()
    probs = net.predict_proba(X.reshape(len(X), checkpoint.spec.input_dim, 1))
    return probs[0] if single else probs


def save(checkpoint, path):
    """Write ``manifest.json`` and ``weights.bin`` (little-endian float32) into directory ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "manifest.json").write_text(json.dumps(checkpoint.manifest(), indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")
    (path / "weights.bin").write_bytes(checkpoint.weights.astype("<f4").tobytes())
    return path


def load(path):
    path = Path(path)
    try:
        meta = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
        blob = (path / "weights.bin").read_bytes()
    except FileNotFoundError as exc:
        raise CheckpointError(f"incomplete checkpoint at {path}: {exc.filename} missing") from None
    if meta.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(f"checkpoint format {meta.get('format_version')!r}, expected {FORMAT_VERSION}")
    if len(blob) % 4:
        raise BlobLength(f"weights.bin has {len(blob)} bytes, not a whole number of float32 values")
    weights = np.frombuffer(blob, dtype="<f4").astype(np.float32)
    if weights.size != meta["param_count"]:
        raise BlobLength(f"weights.bin holds {weights.size} values, manifest declares {meta['param_count']}")
    norm = meta.get("normalizer")
    return Checkpoint(
        ModelSpec.from_dict(meta["model"]), weights, tuple(meta.get("labels", ())),
        None if norm is None else np.array(norm["mean"]), None if norm is None else np.array(norm["std"]),
        int(meta.get("seed", 0)), meta.get("extra", {}),
    )


class SERClassifier(ClassifierMixin, BaseEstimator):
    """scikit-learn wrapper around one of the three network variants.

    ``fit`` z-scores the features itself (statistics from the training set
    only) and keeps the best-validation-accuracy weights when
    ``validation_data`` is given.
    """

    def __init__(self, model_id="A", width=1.0, epochs=1000, batch_size=32, learning_rate=1e-3,
                 l2=0.01, l1=0.0, normalize=True, seed=0):
        self.model_id = model_id
        self.width = width
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.l2 = l2
        self.l1 = l1
        self.normalize = normalize
        self.seed = seed

    def _config(self):
        return TrainConfig(self.epochs, self.batch_size, self.learning_rate, self.l2, self.l1, self.seed)

    def fit(self, X, y, validation_data=None):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes")
        index = {c: i for i, c in enumerate(self.classes_)}
        y_enc = np.array([index[v] for v in y])
        self.normalizer_ = Normalizer().fit(X) if self.normalize else None
        Xn = self.normalizer_.transform(X) if self.normalize else X
        X_val = y_val = None
        if validation_data is not None:
            X_val = check_array(validation_data[0], dtype=np.float64)
            y_val = np.array([index[v] for v in validation_data[1]])
            if self.normalize:
                X_val = self.normalizer_.transform(X_val)
        spec = build(self.model_id, len(self.classes_), self.width, X.shape[1])
        self.checkpoint_, self.history_ = fit(spec, Xn, y_enc, X_val, y_val, self._config(),
                                              [str(c) for c in self.classes_], self.normalizer_)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "checkpoint_")
        X = check_array(X, dtype=np.float64)
        return predict(self.checkpoint_, X)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    @classmethod
    def from_checkpoint(cls, checkpoint):
        """Wrap a loaded checkpoint; ``classes_`` are its label names."""
        spec = checkpoint.spec
        est = cls(model_id=spec.model_id, width=spec.width, seed=checkpoint.seed,
                  normalize=checkpoint.mean is not None)
        est.checkpoint_ = copy.deepcopy(checkpoint)
        est.classes_ = np.array(checkpoint.label_names or range(spec.num_classes))
        est.n_features_in_ = spec.input_dim
        est.history_ = []
        return est
