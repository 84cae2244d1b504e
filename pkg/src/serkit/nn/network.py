"""Declarative layer specs and the sequential network built from them."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import BlobLength, NumericError
from . import layers as L
from .losses import add_penalty_grad, cross_entropy, cross_entropy_grad, one_hot, penalty

KINDS = ("conv1d", "batchnorm", "relu", "maxpool1d", "dropout", "flatten", "dense",
         "lstm", "gru", "softmax")

DEFAULTS = {
    "conv1d": {"kernel": 8, "dilation": 1, "padding": "same", "stride": 1},
    "maxpool1d": {"window": 2},
    "batchnorm": {"momentum": 0.9, "eps": 1e-5},
}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        merged = dict(DEFAULTS.get(self.kind, {}))
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        p = merged
        if self.kind == "conv1d":
            if p["padding"] != "same" or p["stride"] != 1:
                raise ValueError("conv1d supports padding='same' and stride=1 only")
            if p["filters"] < 1 or p["kernel"] < 1 or p["dilation"] < 1:
                raise ValueError("conv1d filters, kernel and dilation must be >= 1")
        elif self.kind == "dropout" and not 0 <= p["rate"] < 1:
            raise ValueError("dropout rate must be in [0, 1)")
        elif self.kind in ("dense", "lstm", "gru") and p["units"] < 1:
            raise ValueError(f"{self.kind} units must be >= 1")
        elif self.kind == "maxpool1d" and p["window"] < 1:
            raise ValueError("pool window must be >= 1")

    def to_dict(self):
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        return cls(d.pop("kind"), d)


def _make_layer(spec, shape, rng, seed, dtype, name):
    k, p = spec.kind, spec.params
    if k == "conv1d":
        return L.Conv1D(shape[-1], p["filters"], p["kernel"], p["dilation"], rng, dtype, name)
    if k == "dense":
        return L.Dense(shape[-1], p["units"], rng, dtype, name)
    if k == "batchnorm":
        return L.BatchNorm(shape[-1], p["momentum"], p["eps"], dtype, name)
    if k == "lstm":
        return L.LSTM(shape[-1], p["units"], rng, dtype, name)
    if k == "gru":
        return L.GRU(shape[-1], p["units"], rng, dtype, name)
    if k == "maxpool1d":
        return L.MaxPool1D(p["window"], name)
    if k == "dropout":
        return L.Dropout(p["rate"], seed, name)
    return {"relu": L.ReLU, "flatten": L.Flatten, "softmax": L.Softmax}[k](name)


class Sequential:
    """A chain of layers; the last one is expected to be a softmax."""

    def __init__(self, specs, input_shape, seed=0, dtype=np.float32):
        self.specs = list(specs)
        self.input_shape = tuple(input_shape)
        self.dtype = np.dtype(dtype)
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.layers, self.shapes = [], [self.input_shape]
        shape = self.input_shape
        for i, spec in enumerate(self.specs):
            layer = _make_layer(spec, shape, rng, self._dropout_seed(i), self.dtype, f"{i:02d}_{spec.kind}")
            shape = layer.output_shape(shape)
            self.layers.append(layer)
            self.shapes.append(shape)

    def _dropout_seed(self, index, base=None):
        return int(np.random.SeedSequence([self.seed if base is None else base, index]).generate_state(1)[0])

    def reseed(self, seed):
        """Reset every dropout generator; identical seeds give identical masks."""
        for i, layer in enumerate(self.layers):
            if isinstance(layer, L.Dropout):
                layer.reseed(self._dropout_seed(i, seed))

    @property
    def output_shape(self):
        return self.shapes[-1]

    @property
    def params(self):
        return [p for layer in self.layers for p in layer.params]

    @property
    def trainable(self):
        return [p for p in self.params if p.trainable]

    def param_count(self):
        return sum(p.value.size for p in self.params)

    def forward(self, x, training=False):
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[1:] != self.input_shape:
            raise ValueError(f"expected input shape (batch, {self.input_shape}), got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x, training)
            if not np.all(np.isfinite(x)):
                raise NumericError(f"non-finite output in layer {layer.name}", layer=layer.name)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def loss_and_grad(self, x, y, l2=0.0, l1=0.0):
        """Training-mode loss (cross-entropy + penalty) with gradients accumulated."""
        self.zero_grad()
        probs = self.forward(x, training=True)
        target = one_hot(y, probs.shape[1], probs.dtype)
        loss = cross_entropy(probs, target) + penalty(self.params, l2, l1)
        self.backward(cross_entropy_grad(probs, target))
        add_penalty_grad(self.params, l2, l1)
        if not np.isfinite(loss):
            raise NumericError("non-finite loss")
        return loss, probs

    def predict_proba(self, x, batch_size=256):
        x = np.asarray(x, dtype=self.dtype)
        out = [self.forward(x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
        return np.concatenate(out) if out else np.empty((0,) + self.output_shape, self.dtype)

    def get_weights(self):
        """Flat float32 vector of every parameter, in layer order, row-major."""
        if not self.params:
            return np.empty(0, np.float32)
        return np.concatenate([p.value.astype(np.float32).ravel() for p in self.params])

    def set_weights(self, flat):
        flat = np.asarray(flat)
        if flat.size != self.param_count():
            raise BlobLength(f"weight blob holds {flat.size} values, network needs {self.param_count()}")
        pos = 0
        for p in self.params:
            n = p.value.size
            p.value[...] = flat[pos:pos + n].reshape(p.value.shape)
            pos += n
