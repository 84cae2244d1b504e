import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from serkit.errors import BackwardBeforeForward, NumericError
from serkit.nn import functional as F
from serkit.nn.gradcheck import check_layer, relative_error
from serkit.nn.layers import (
    GRU, LSTM, BatchNorm, Conv1D, Dense, Dropout, Flatten, MaxPool1D, Param, ReLU, Softmax,
)
from serkit.nn.losses import cross_entropy, one_hot, penalty
from serkit.nn.optim import Adam

from oracles import conv1d_same, gru_scalar, lstm_scalar

TOL = 1e-4


def _lstm_cell(p):
    # oracle layout p[gate] = (w_h, w_x, b)
    W = lambda g: np.array([[p[g][0], p[g][1]]])
    b = lambda g: np.array([p[g][2]])
    return F.LstmCell(W("f"), W("i"), W("c"), W("o"), b("f"), b("i"), b("c"), b("o"))


def _gru_cell(p):
    W = lambda g: np.array([[p[g][0], p[g][1]]])
    b = lambda g: np.array([p[g][2]])
    return F.GruCell(W("r"), W("u"), W("h"), b("r"), b("u"), b("h"))


class TestLstmCell:
    def test_zero_weights(self):
        cell = F.LstmCell.zeros(1, 1)
        c_prev = 0.8
        h, c, (f, i, g, o) = F.lstm_step(cell, np.array([0.3]), np.array([c_prev]), np.array([1.7]))
        assert (f[0], i[0], g[0], o[0]) == (0.5, 0.5, 0.0, 0.5)
        assert c[0] == 0.5 * c_prev
        assert h[0] == pytest.approx(0.5 * math.tanh(0.5 * c_prev), abs=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-2, 2), min_size=15, max_size=15))
    def test_scalar_oracle(self, v):
        p = {g: tuple(v[3 * k:3 * k + 3]) for k, g in enumerate("fico")}
        h_prev, c_prev, x = v[12:15]
        h, c = F.lstm_cell_step(_lstm_cell(p), np.array([h_prev]), np.array([c_prev]), np.array([x]))
        h_ref, c_ref = lstm_scalar(p, h_prev, c_prev, x)
        assert abs(h[0] - h_ref) <= 1e-10 and abs(c[0] - c_ref) <= 1e-10

    def test_saturation(self):
        p = {g: (0.0, 50.0, 0.0) for g in "fio"}
        p["c"] = (0.0, 1.0, 0.0)
        h, c, (f, i, g, o) = F.lstm_step(_lstm_cell(p), np.array([0.0]), np.array([0.4]), np.array([1.0]))
        assert f[0] == pytest.approx(1.0) and o[0] == pytest.approx(1.0)
        assert c[0] == pytest.approx(0.4 + math.tanh(1.0))


class TestGruCell:
    def test_zero_weights(self):
        h, (r, u, hc) = F.gru_step(F.GruCell.zeros(1, 1), np.array([0.6]), np.array([-2.0]))
        assert u[0] == 0.5 and hc[0] == 0.0 and h[0] == 0.3

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-2, 2), min_size=11, max_size=11))
    def test_scalar_oracle(self, v):
        p = {g: tuple(v[3 * k:3 * k + 3]) for k, g in enumerate("ruh")}
        h_prev, x = v[9:11]
        h = F.gru_cell_step(_gru_cell(p), np.array([h_prev]), np.array([x]))
        assert abs(h[0] - gru_scalar(p, h_prev, x)) <= 1e-10

    def test_update_closed(self):
        p = {"r": (0.3, 0.2, 0.0), "u": (0.0, 0.0, -60.0), "h": (1.0, 1.0, 0.0)}
        h = F.gru_cell_step(_gru_cell(p), np.array([0.7]), np.array([0.5]))
        assert h[0] == pytest.approx(0.7, abs=1e-12)


class TestActivations:
    def test_sigmoid_stable(self):
        s = F.sigmoid(np.array([-1000.0, 0.0, 1000.0]))
        assert np.all(np.isfinite(s)) and s.tolist() == [0.0, 0.5, 1.0]

    def test_softmax_rows(self, rng):
        p = F.softmax(rng.standard_normal((5, 4)) * 100)
        assert np.allclose(p.sum(axis=1), 1)


class TestLayerOracles:
    def test_identity_kernel(self, rng):
        conv = Conv1D(1, 1, kernel_size=1, dtype=np.float64)
        conv.kernel.value[...] = 1.0
        x = rng.standard_normal((2, 9, 1))
        assert np.array_equal(conv.forward(x), x)

    @pytest.mark.parametrize("dilation", [1, 2])
    def test_conv_naive(self, rng, dilation):
        conv = Conv1D(3, 4, kernel_size=8, dilation=dilation, rng=rng, dtype=np.float64)
        conv.bias.value[...] = rng.standard_normal(4)
        x = rng.standard_normal((2, 21, 3))
        out = conv.forward(x)
        for n in range(2):
            ref = conv1d_same(x[n], conv.kernel.value, conv.bias.value, dilation)
            assert np.allclose(out[n], ref, rtol=1e-6, atol=1e-12)

    def test_batchnorm_hand(self):
        bn = BatchNorm(1, dtype=np.float64)
        out = bn.forward(np.array([[[1.0]], [[2.0]], [[3.0]]]), training=True)
        assert np.allclose(out.ravel(), [-1.2247, 0, 1.2247], atol=1e-4)
        assert np.allclose(bn.moving_mean.value, 0.1 * 2.0)

    def test_relu_negative_grad(self):
        relu = ReLU()
        relu.forward(np.array([[-1.0, -0.5, 2.0]]))
        assert relu.backward(np.ones((1, 3))).tolist() == [[0.0, 0.0, 1.0]]

    def test_dropout_infer_passthrough(self, rng):
        drop = Dropout(0.5)
        x = rng.standard_normal((3, 4))
        assert np.array_equal(drop.forward(x), x)
        g = rng.standard_normal((3, 4))
        assert np.array_equal(drop.backward(g), g)

    def test_dropout_inverted_scale(self):
        drop = Dropout(0.25, seed=0)
        out = drop.forward(np.ones((200, 100)), training=True)
        kept = out[out != 0]
        assert np.allclose(kept, 1 / 0.75)
        assert abs(kept.size / out.size - 0.75) < 0.01

    def test_backward_before_forward(self):
        for layer in (Dense(2, 2), Conv1D(1, 2), BatchNorm(2), ReLU(), MaxPool1D(), Dropout(0.5),
                      Flatten(), Softmax(), LSTM(1, 2), GRU(1, 2)):
            with pytest.raises(BackwardBeforeForward):
                layer.backward(np.ones((1, 2)))


def _layers(rng):
    f64 = np.float64
    return [
        (Conv1D(2, 3, kernel_size=8, rng=rng, dtype=f64), rng.standard_normal((2, 10, 2))),
        (Conv1D(2, 3, kernel_size=4, dilation=2, rng=rng, dtype=f64), rng.standard_normal((2, 9, 2))),
        (Dense(5, 3, rng=rng, dtype=f64), rng.standard_normal((4, 5))),
        (BatchNorm(3, dtype=f64), rng.standard_normal((4, 5, 3))),
        (ReLU(), rng.standard_normal((3, 7)) + 0.05),
        (MaxPool1D(2), rng.standard_normal((2, 9, 3))),
        (Dropout(0.5, seed=4), rng.standard_normal((4, 6))),
        (Flatten(), rng.standard_normal((2, 3, 4))),
        (Softmax(), rng.standard_normal((3, 5))),
        (LSTM(3, 4, rng=rng, dtype=f64), rng.standard_normal((2, 5, 3))),
        (GRU(3, 4, rng=rng, dtype=f64), rng.standard_normal((2, 5, 3))),
    ]


class TestGradients:
    @pytest.mark.parametrize("idx", range(11))
    def test_layer(self, idx):
        rng = np.random.default_rng(idx)
        layer, x = _layers(rng)[idx]
        for p in layer.params:
            if p.name.startswith("b") and p.trainable:
                p.value[...] = rng.uniform(-0.2, 0.2, p.value.shape)
        errors = check_layer(layer, x)
        assert max(errors.values()) <= TOL, errors

    def test_batchnorm_inference_mode(self, rng):
        bn = BatchNorm(3, dtype=np.float64)
        bn.moving_mean.value[...] = rng.standard_normal(3)
        assert max(check_layer(bn, rng.standard_normal((4, 3)), training=False).values()) <= TOL


class TestLoss:
    def test_perfect(self):
        y = one_hot([0, 2], 3, np.float64)
        assert cross_entropy(y, y) <= 1e-6

    def test_uniform(self):
        for k in (2, 5, 7):
            p = np.full((4, k), 1 / k)
            assert cross_entropy(p, one_hot([0, 1, 1, 0], k, np.float64)) == pytest.approx(math.log(k))

    def test_scalar_oracle(self, rng):
        p = rng.dirichlet(np.ones(4), size=6)
        y = rng.integers(0, 4, 6)
        ref = -sum(math.log(p[n, y[n]] + 1e-7) for n in range(6)) / 6
        assert abs(cross_entropy(p, one_hot(y, 4, np.float64)) - ref) <= 1e-10

    def test_penalty(self):
        params = [Param("w", np.array([1.0, -2.0]), regularize=True), Param("g", np.array([5.0]))]
        assert penalty(params, l2=0.01) == pytest.approx(0.05)
        assert penalty(params, l1=0.1) == pytest.approx(0.3)


class TestAdam:
    def test_first_step(self):
        p = Param("w", np.array([0.0]))
        p.grad[...] = 1.0
        Adam([p], lr=1e-3).step()
        assert p.value[0] == pytest.approx(-1e-3 / (1 + 1e-8), rel=1e-12)

    def test_zero_grad(self):
        p = Param("w", np.array([1.5]))
        opt = Adam([p])
        p.grad[...] = 1.0
        opt.step()
        before, m = p.value.copy(), opt.m[0].copy()
        p.grad[...] = 0.0
        opt.step()
        assert np.allclose(opt.m[0], 0.9 * m)
        assert p.value[0] < before[0]  # momentum still moves the parameter
        p2 = Param("w", np.array([1.5]))
        opt2 = Adam([p2])
        opt2.step()
        assert p2.value[0] == 1.5

    def test_non_finite(self):
        p = Param("w", np.array([0.0]))
        p.grad[...] = np.nan
        with pytest.raises(NumericError):
            Adam([p]).step()

    def test_quadratic_descends(self):
        p = Param("w", np.array([3.0, -2.0]))
        opt = Adam([p], lr=0.01)
        losses = []
        for _ in range(200):
            p.grad[...] = 2 * p.value
            losses.append(float(np.sum(p.value ** 2)))
            opt.step()
        assert all(b <= a for a, b in zip(losses, losses[1:]))
        assert losses[-1] < 0.25 * losses[0]


def test_relative_error_definition():
    assert relative_error([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert relative_error([2.0], [1.0]) == pytest.approx(0.5)
