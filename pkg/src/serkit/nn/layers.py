"""Layers with explicit forward and backward passes.

Activations are channels-last: sequences are ``(batch, length, channels)``,
vectors ``(batch, features)``.  Each layer caches what its backward pass needs
during ``forward`` and accumulates parameter gradients into ``Param.grad``.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import BackwardBeforeForward
from .functional import GruCell, LstmCell, gru_step, lstm_step, softmax


@dataclass
class Param:
    name: str
    value: np.ndarray
    trainable: bool = True
    regularize: bool = False
    grad: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)

    def zero_grad(self):
        self.grad[...] = 0


def glorot_uniform(rng, shape, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    kind = "layer"

    def __init__(self, name=None):
        self.name = name or self.kind
        self.params = []
        self._cache = None

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def output_shape(self, input_shape):
        return input_shape

    def _cached(self):
        if self._cache is None:
            raise BackwardBeforeForward(f"{self.name}: backward called before forward")
        return self._cache

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class Conv1D(Layer):
    """Same-padded, stride-1 cross-correlation along the length axis.

    Kernel layout is ``(kernel_size, in_channels, filters)``.  Padding puts
    ``(k_eff - 1) // 2`` zeros on the left and the rest on the right.
    """

    kind = "conv1d"

    def __init__(self, in_channels, filters, kernel_size=8, dilation=1, rng=None,
                 dtype=np.float32, name=None):
        super().__init__(name)
        self.in_channels, self.filters = in_channels, filters
        self.kernel_size, self.dilation = kernel_size, dilation
        self.span = dilation * (kernel_size - 1) + 1
        self.pad_left = (self.span - 1) // 2
        self.pad_right = self.span - 1 - self.pad_left
        rng = rng or np.random.default_rng(0)
        shape = (kernel_size, in_channels, filters)
        self.kernel = Param("kernel", glorot_uniform(rng, shape, kernel_size * in_channels,
                                                     kernel_size * filters, dtype), regularize=True)
        self.bias = Param("bias", np.zeros(filters, dtype), regularize=True)
        self.params = [self.kernel, self.bias]

    def output_shape(self, input_shape):
        length, channels = input_shape
        if channels != self.in_channels:
            raise ValueError(f"{self.name}: expected {self.in_channels} channels, got {channels}")
        return (length, self.filters)

    def _columns(self, x):
        n, length, c = x.shape
        xp = np.pad(x, ((0, 0), (self.pad_left, self.pad_right), (0, 0)))
        win = np.lib.stride_tricks.sliding_window_view(xp, self.span, axis=1)
        win = win[..., ::self.dilation]                      # (n, L, c, k)
        return win.transpose(0, 1, 3, 2).reshape(n * length, self.kernel_size * c)

    def forward(self, x, training=False):
        n, length, c = x.shape
        if c != self.in_channels:
            raise ValueError(f"{self.name}: expected {self.in_channels} channels, got {c}")
        cols = self._columns(x)
        w = self.kernel.value.reshape(-1, self.filters)
        out = cols @ w + self.bias.value
        self._cache = (cols, x.shape)
        return out.reshape(n, length, self.filters)

    def backward(self, grad):
        cols, (n, length, c) = self._cached()
        g = grad.reshape(n * length, self.filters)
        self.kernel.grad += (cols.T @ g).reshape(self.kernel.value.shape)
        self.bias.grad += g.sum(axis=0)
        dcols = (g @ self.kernel.value.reshape(-1, self.filters).T).reshape(n, length, self.kernel_size, c)
        dxp = np.zeros((n, length + self.span - 1, c), dtype=grad.dtype)
        for j in range(self.kernel_size):
            o = j * self.dilation
            dxp[:, o:o + length] += dcols[:, :, j]
        return dxp[:, self.pad_left:self.pad_left + length]


class Dense(Layer):
    kind = "dense"

    def __init__(self, in_features, units, rng=None, dtype=np.float32, name=None):
        super().__init__(name)
        self.in_features, self.units = in_features, units
        rng = rng or np.random.default_rng(0)
        self.kernel = Param("kernel", glorot_uniform(rng, (in_features, units), in_features, units, dtype),
                            regularize=True)
        self.bias = Param("bias", np.zeros(units, dtype), regularize=True)
        self.params = [self.kernel, self.bias]

    def output_shape(self, input_shape):
        if input_shape != (self.in_features,):
            raise ValueError(f"{self.name}: expected ({self.in_features},), got {input_shape}")
        return (self.units,)

    def forward(self, x, training=False):
        self._cache = x
        return x @ self.kernel.value + self.bias.value

    def backward(self, grad):
        x = self._cached()
        self.kernel.grad += x.T @ grad
        self.bias.grad += grad.sum(axis=0)
        return grad @ self.kernel.value.T


class BatchNorm(Layer):
    """Per-channel batch normalization over every axis but the last."""

    kind = "batchnorm"

    def __init__(self, channels, momentum=0.9, eps=1e-5, dtype=np.float32, name=None):
        super().__init__(name)
        self.channels, self.momentum, self.eps = channels, momentum, eps
        self.gamma = Param("gamma", np.ones(channels, dtype))
        self.beta = Param("beta", np.zeros(channels, dtype))
        self.moving_mean = Param("moving_mean", np.zeros(channels, dtype), trainable=False)
        self.moving_var = Param("moving_variance", np.ones(channels, dtype), trainable=False)
        self.params = [self.gamma, self.beta, self.moving_mean, self.moving_var]

    def output_shape(self, input_shape):
        if input_shape[-1] != self.channels:
            raise ValueError(f"{self.name}: expected {self.channels} channels, got {input_shape[-1]}")
        return input_shape

    def forward(self, x, training=False):
        shape = x.shape
        flat = x.reshape(-1, self.channels)
        if training:
            mean = flat.mean(axis=0, dtype=np.float64)
            var = flat.var(axis=0, dtype=np.float64)
            m = self.momentum
            self.moving_mean.value[...] = m * self.moving_mean.value + (1 - m) * mean
            self.moving_var.value[...] = m * self.moving_var.value + (1 - m) * var
        else:
            mean = self.moving_mean.value.astype(np.float64)
            var = self.moving_var.value.astype(np.float64)
        inv_std = (1.0 / np.sqrt(var + self.eps)).astype(x.dtype)
        xhat = (flat - mean.astype(x.dtype)) * inv_std
        self._cache = (xhat, inv_std, training)
        return (xhat * self.gamma.value + self.beta.value).reshape(shape)

    def backward(self, grad):
        xhat, inv_std, training = self._cached()
        g = grad.reshape(-1, self.channels)
        self.gamma.grad += (g * xhat).sum(axis=0)
        self.beta.grad += g.sum(axis=0)
        dxhat = g * self.gamma.value
        if not training:
            return (dxhat * inv_std).reshape(grad.shape)
        m = g.shape[0]
        dx = inv_std / m * (m * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        return dx.reshape(grad.shape)


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, training=False):
        mask = x > 0
        self._cache = mask
        return x * mask

    def backward(self, grad):
        return grad * self._cached()


class MaxPool1D(Layer):
    """Non-overlapping max pooling along the length axis; a trailing remainder is dropped."""

    kind = "maxpool1d"

    def __init__(self, pool_size=2, name=None):
        super().__init__(name)
        self.pool_size = pool_size

    def output_shape(self, input_shape):
        length, channels = input_shape
        if length // self.pool_size < 1:
            raise ValueError(f"{self.name}: length {length} too short to pool")
        return (length // self.pool_size, channels)

    def forward(self, x, training=False):
        n, length, c = x.shape
        p = self.pool_size
        lo = length // p
        win = x[:, :lo * p].reshape(n, lo, p, c)
        arg = win.argmax(axis=2)
        self._cache = (arg, x.shape)
        return np.take_along_axis(win, arg[:, :, None], axis=2)[:, :, 0]

    def backward(self, grad):
        arg, (n, length, c) = self._cached()
        p = self.pool_size
        lo = length // p
        dwin = np.zeros((n, lo, p, c), dtype=grad.dtype)
        np.put_along_axis(dwin, arg[:, :, None], grad[:, :, None], axis=2)
        dx = np.zeros((n, length, c), dtype=grad.dtype)
        dx[:, :lo * p] = dwin.reshape(n, lo * p, c)
        return dx


class Dropout(Layer):
    """Inverted dropout: survivors are scaled by ``1 / (1 - rate)`` at train time."""

    kind = "dropout"

    def __init__(self, rate, seed=0, name=None):
        super().__init__(name)
        if not 0 <= rate < 1:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.reseed(seed)

    def reseed(self, seed):
        self.rng = np.random.default_rng(seed)

    def forward(self, x, training=False):
        if not training or self.rate == 0:
            self._cache = None
            self._passthrough = True
            return x
        self._passthrough = False
        keep = self.rng.random(x.shape) >= self.rate
        mask = keep.astype(x.dtype) / x.dtype.type(1 - self.rate)
        self._cache = mask
        return x * mask

    def backward(self, grad):
        if getattr(self, "_passthrough", None) is None:
            raise BackwardBeforeForward(f"{self.name}: backward called before forward")
        if self._passthrough:
            return grad
        return grad * self._cache


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, input_shape):
        return (int(np.prod(input_shape)),)

    def forward(self, x, training=False):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._cached())


class Softmax(Layer):
    kind = "softmax"

    def forward(self, x, training=False):
        p = softmax(x, axis=-1)
        self._cache = p
        return p

    def backward(self, grad):
        p = self._cached()
        return p * (grad - (grad * p).sum(axis=-1, keepdims=True))


class _Recurrent(Layer):
    gate_names = ()

    def __init__(self, input_dim, units, rng=None, dtype=np.float32, name=None):
        super().__init__(name)
        self.input_dim, self.units = input_dim, units
        rng = rng or np.random.default_rng(0)
        width = units + input_dim
        weights = [Param(f"W_{g}", glorot_uniform(rng, (units, width), width, units, dtype))
                   for g in self.gate_names]
        biases = [Param(f"b_{g}", np.zeros(units, dtype)) for g in self.gate_names]
        self.params = weights + biases

    def output_shape(self, input_shape):
        length, channels = input_shape
        if channels != self.input_dim:
            raise ValueError(f"{self.name}: expected {self.input_dim} input channels, got {channels}")
        return (self.units,)

    def cell(self):
        return self.cell_type(*(p.value for p in self.params))


class LSTM(_Recurrent):
    """LSTM over the length axis returning the last hidden state."""

    kind = "lstm"
    gate_names = ("f", "i", "C", "o")
    cell_type = LstmCell

    def forward(self, x, training=False):
        n, steps, _ = x.shape
        cell = self.cell()
        h = np.zeros((n, self.units), x.dtype)
        c = np.zeros_like(h)
        cache = []
        for t in range(steps):
            h_prev, c_prev = h, c
            h, c, gates = lstm_step(cell, h_prev, c_prev, x[:, t])
            cache.append((h_prev, c_prev, x[:, t], c, gates))
        self._cache = (cache, x.shape)
        return h

    def backward(self, grad):
        cache, shape = self._cached()
        Ws = self.params[:4]
        bs = self.params[4:]
        dx = np.zeros(shape, dtype=grad.dtype)
        dh = grad
        dc = np.zeros_like(grad)
        for t in reversed(range(shape[1])):
            h_prev, c_prev, x_t, c, (f, i, g, o) = cache[t]
            tc = np.tanh(c)
            do = dh * tc
            dc = dc + dh * o * (1 - tc * tc)
            da = (dc * c_prev * f * (1 - f), dc * g * i * (1 - i), dc * i * (1 - g * g), do * o * (1 - o))
            z = np.concatenate([h_prev, x_t], axis=-1)
            dz = np.zeros_like(z)
            for W, b, d in zip(Ws, bs, da):
                W.grad += d.T @ z
                b.grad += d.sum(axis=0)
                dz += d @ W.value
            dc = dc * f
            dh = dz[:, :self.units]
            dx[:, t] = dz[:, self.units:]
        return dx


class GRU(_Recurrent):
    """GRU over the length axis returning the last hidden state."""

    kind = "gru"
    gate_names = ("reset", "update", "h")
    cell_type = GruCell

    def forward(self, x, training=False):
        n, steps, _ = x.shape
        cell = self.cell()
        h = np.zeros((n, self.units), x.dtype)
        cache = []
        for t in range(steps):
            h_prev = h
            h, gates = gru_step(cell, h_prev, x[:, t])
            cache.append((h_prev, x[:, t], gates))
        self._cache = (cache, x.shape)
        return h

    def backward(self, grad):
        cache, shape = self._cached()
        W_r, W_u, W_h, b_r, b_u, b_h = self.params
        u_ = self.units
        dx = np.zeros(shape, dtype=grad.dtype)
        dh = grad
        for t in reversed(range(shape[1])):
            h_prev, x_t, (r, u, hc) = cache[t]
            dhc = dh * u
            du = dh * (hc - h_prev)
            dh_prev = dh * (1 - u)
            da_h = dhc * (1 - hc * hc)
            zr = np.concatenate([r * h_prev, x_t], axis=-1)
            W_h.grad += da_h.T @ zr
            b_h.grad += da_h.sum(axis=0)
            dzr = da_h @ W_h.value
            drh = dzr[:, :u_]
            dx_t = dzr[:, u_:]
            dr = drh * h_prev
            dh_prev = dh_prev + drh * r
            da_r = dr * r * (1 - r)
            da_u = du * u * (1 - u)
            z = np.concatenate([h_prev, x_t], axis=-1)
            dz = np.zeros_like(z)
            for W, b, d in ((W_r, b_r, da_r), (W_u, b_u, da_u)):
                W.grad += d.T @ z
                b.grad += d.sum(axis=0)
                dz += d @ W.value
            dh = dh_prev + dz[:, :u_]
            dx[:, t] = dx_t + dz[:, u_:]
        return dx


__all__ = [
    "Param", "Layer", "Conv1D", "Dense", "BatchNorm", "ReLU", "MaxPool1D", "Dropout",
    "Flatten", "Softmax", "LSTM", "GRU", "glorot_uniform",
]
