"""Independent slow reference implementations.

Nothing here imports serkit; every routine is written from the defining
formula with plain loops so it can stand as a check on the vectorized code.
"""

import cmath
import math

import numpy as np


def naive_dft_magnitude(frame, n_fft):
    """|X_k| for k = 0..n_fft/2 by direct summation over the zero-padded frame."""
    x = list(frame) + [0.0] * (n_fft - len(frame))
    out = []
    for k in range(n_fft // 2 + 1):
        acc = 0j
        for n, v in enumerate(x):
            acc += v * cmath.exp(-2j * math.pi * k * n / n_fft)
        out.append(abs(acc))
    return np.array(out)


def naive_dft_matrix_magnitude(frame, n_fft):
    """Same sum as ``naive_dft_magnitude`` but with an explicit DFT matrix (for long frames)."""
    x = np.zeros(n_fft)
    x[:len(frame)] = frame
    k = np.arange(n_fft // 2 + 1)[:, None]
    n = np.arange(n_fft)[None, :]
    basis = np.exp(-2j * np.pi * k * n / n_fft)
    return np.abs(basis @ x)


def hamming_loop(n):
    if n == 1:
        return [1.0]
    return [0.54 - 0.46 * math.cos(2 * math.pi * i / (n - 1)) for i in range(n)]


def mel(f):
    return 2595.0 * math.log10(1.0 + f / 700.0)


def inv_mel(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def triangle_filters(n_filters, n_fft, rate):
    """Explicit triangles between mel-spaced edges, scaled to a peak of 1."""
    top = mel(rate / 2.0)
    edges = [inv_mel(top * i / (n_filters + 1)) for i in range(n_filters + 2)]
    freqs = [k * rate / n_fft for k in range(n_fft // 2 + 1)]
    bank = []
    for j in range(n_filters):
        lo, mid, hi = edges[j], edges[j + 1], edges[j + 2]
        row = []
        for f in freqs:
            if lo <= f <= mid:
                row.append((f - lo) / (mid - lo))
            elif mid < f <= hi:
                row.append((hi - f) / (hi - mid))
            else:
                row.append(0.0)
        peak = max(row)
        bank.append([v / peak for v in row])
    return np.array(bank)


def dct_ii_ortho(v):
    n = len(v)
    out = []
    for k in range(n):
        s = sum(v[i] * math.cos(math.pi * k * (2 * i + 1) / (2 * n)) for i in range(n))
        scale = math.sqrt(1.0 / n) if k == 0 else math.sqrt(2.0 / n)
        out.append(scale * s)
    return out


def brute_mfcc_mean(samples, rate, win_ms=25.0, hop_ms=10.0, n_filters=26, n_keep=13, floor=1e-10):
    win = int(round(win_ms * rate / 1000.0))
    hop = int(round(hop_ms * rate / 1000.0))
    n_fft = 1
    while n_fft < win:
        n_fft *= 2
    h = hamming_loop(win)
    bank = triangle_filters(n_filters, n_fft, rate)
    coeffs = []
    start = 0
    while start + win <= len(samples):
        frame = [samples[start + i] * h[i] for i in range(win)]
        power = naive_dft_matrix_magnitude(frame, n_fft) ** 2
        energies = [math.log(max(float(np.dot(row, power)), floor)) for row in bank]
        coeffs.append(dct_ii_ortho(energies)[:n_keep])
        start += hop
    return np.mean(np.array(coeffs), axis=0)


def count_sign_changes(frame):
    changes = 0
    for a, b in zip(frame[:-1], frame[1:]):
        if (a > 0 and b < 0) or (a < 0 and b > 0):
            changes += 1
    return changes


def zcr_frame(frame):
    return count_sign_changes(frame) / (len(frame) - 1)


def rms_frame(frame):
    return math.sqrt(sum(v * v for v in frame) / len(frame))


def sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def lstm_scalar(p, h_prev, c_prev, x):
    """One step of a 1-unit LSTM with scalar weights ``p[gate] = (w_h, w_x, b)``."""
    f = sig(p["f"][0] * h_prev + p["f"][1] * x + p["f"][2])
    i = sig(p["i"][0] * h_prev + p["i"][1] * x + p["i"][2])
    g = math.tanh(p["c"][0] * h_prev + p["c"][1] * x + p["c"][2])
    c = f * c_prev + i * g
    o = sig(p["o"][0] * h_prev + p["o"][1] * x + p["o"][2])
    return o * math.tanh(c), c


def gru_scalar(p, h_prev, x):
    r = sig(p["r"][0] * h_prev + p["r"][1] * x + p["r"][2])
    u = sig(p["u"][0] * h_prev + p["u"][1] * x + p["u"][2])
    cand = math.tanh(p["h"][0] * r * h_prev + p["h"][1] * x + p["h"][2])
    return (1 - u) * h_prev + u * cand


def conv1d_same(x, kernel, bias, dilation=1):
    """Naive channels-last 1-D convolution with zero 'same' padding.

    ``x`` is (L, Cin), ``kernel`` is (k, Cin, Cout).
    """
    length, cin = x.shape
    k, _, cout = kernel.shape
    span = (k - 1) * dilation
    left = span // 2
    out = np.zeros((length, cout))
    for t in range(length):
        for o in range(cout):
            acc = bias[o]
            for j in range(k):
                src = t - left + j * dilation
                if 0 <= src < length:
                    for c in range(cin):
                        acc += x[src, c] * kernel[j, c, o]
            out[t, o] = acc
    return out


def metrics_oracle(labels, preds, k):
    """Per-sample recount of the confusion matrix and the derived scores."""
    cm = [[0] * k for _ in range(k)]
    for a, b in zip(labels, preds):
        cm[a][b] += 1
    prec, rec, f1 = [], [], []
    for c in range(k):
        tp = sum(1 for a, b in zip(labels, preds) if a == c and b == c)
        fp = sum(1 for a, b in zip(labels, preds) if a != c and b == c)
        fn = sum(1 for a, b in zip(labels, preds) if a == c and b != c)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        prec.append(p)
        rec.append(r)
        f1.append(2 * p * r / (p + r) if p + r else 0.0)
    acc = sum(1 for a, b in zip(labels, preds) if a == b) / len(labels)
    return {
        "confusion": cm, "precision": prec, "recall": rec, "f1": f1, "accuracy": acc,
        "macro_precision": sum(prec) / k, "macro_recall": sum(rec) / k, "macro_f1": sum(f1) / k,
    }


def dominant_frequency(samples, rate, n_fft):
    """Peak frequency of the Hann-windowed middle segment via a naive-DFT-equivalent FFT grid."""
    mid = len(samples) // 2
    seg = np.asarray(samples[max(0, mid - n_fft // 2):mid + n_fft // 2], dtype=np.float64)
    seg = seg * np.hanning(len(seg))
    mag = np.abs(np.fft.rfft(seg, n_fft))
    return int(np.argmax(mag)) * rate / n_fft


def snr_db(clean, noisy):
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noisy, dtype=np.float64) - clean
    return 10 * math.log10(np.sum(clean ** 2) / np.sum(noise ** 2))
