"""Activations and single-step recurrent cells.

Cells operate on row vectors, so ``h`` may be ``(units,)`` or ``(batch, units)``.
Every gate matrix has shape ``(units, units + input_dim)`` and multiplies the
concatenation ``[h_prev, x_t]``.
"""

from dataclasses import dataclass

import numpy as np


def sigmoid(x):
    x = np.asarray(x)
    # split by sign so exp never overflows
    flat = np.atleast_1d(x)
    out = np.empty_like(flat, dtype=np.result_type(flat, np.float32))
    pos = flat >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    ex = np.exp(flat[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out.reshape(x.shape)


def tanh(x):
    return np.tanh(x)


def relu(x):
    return np.maximum(x, 0)


def softmax(logits, axis=-1):
    z = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class LstmCell:
    W_f: np.ndarray
    W_i: np.ndarray
    W_C: np.ndarray
    W_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_C: np.ndarray
    b_o: np.ndarray

    @property
    def units(self):
        return self.W_f.shape[0]

    @classmethod
    def zeros(cls, units, input_dim, dtype=np.float64):
        W = lambda: np.zeros((units, units + input_dim), dtype)
        b = lambda: np.zeros(units, dtype)
        return cls(W(), W(), W(), W(), b(), b(), b(), b())


@dataclass
class GruCell:
    W_reset: np.ndarray
    W_update: np.ndarray
    W_h: np.ndarray
    b_reset: np.ndarray
    b_update: np.ndarray
    b_h: np.ndarray

    @property
    def units(self):
        return self.W_reset.shape[0]

    @classmethod
    def zeros(cls, units, input_dim, dtype=np.float64):
        W = lambda: np.zeros((units, units + input_dim), dtype)
        b = lambda: np.zeros(units, dtype)
        return cls(W(), W(), W(), b(), b(), b())


def _check(cell, h, x):
    units = cell.units
    if h.shape[-1] != units:
        raise ValueError(f"hidden state has {h.shape[-1]} units, cell has {units}")
    w = cell.W_f if isinstance(cell, LstmCell) else cell.W_reset
    if w.shape[1] != units + x.shape[-1]:
        raise ValueError("input width does not match the cell's weight matrices")


def lstm_step(cell, h_prev, c_prev, x_t):
    """One LSTM step; returns ``(h_t, C_t, gates)`` with gates ``(f, i, C', o)``."""
    _check(cell, h_prev, x_t)
    z = np.concatenate([h_prev, x_t], axis=-1)
    f = sigmoid(z @ cell.W_f.T + cell.b_f)
    i = sigmoid(z @ cell.W_i.T + cell.b_i)
    g = np.tanh(z @ cell.W_C.T + cell.b_C)
    o = sigmoid(z @ cell.W_o.T + cell.b_o)
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, (f, i, g, o)


def lstm_cell_step(cell, h_prev, c_prev, x_t):
    h, c, _ = lstm_step(cell, h_prev, c_prev, x_t)
    return h, c


def gru_step(cell, h_prev, x_t):
    """One GRU step; returns ``(h_t, gates)`` with gates ``(reset, update, h')``."""
    _check(cell, h_prev, x_t)
    z = np.concatenate([h_prev, x_t], axis=-1)
    r = sigmoid(z @ cell.W_reset.T + cell.b_reset)
    u = sigmoid(z @ cell.W_update.T + cell.b_update)
    zr = np.concatenate([r * h_prev, x_t], axis=-1)
    hc = np.tanh(zr @ cell.W_h.T + cell.b_h)
    h = (1 - u) * h_prev + u * hc
    return h, (r, u, hc)


def gru_cell_step(cell, h_prev, x_t):
    return gru_step(cell, h_prev, x_t)[0]
