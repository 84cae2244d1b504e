"""Frame-averaged acoustic features: 13 MFCC, 12 chroma, 128 log-mel, ZCR, RMS.

All per-frame quantities share one framing (``FrameParams``) and are averaged
over frames, giving a fixed 155-element vector per clip.  ``Normalizer`` is the
dataset-level z-score transform fitted on training vectors only.
"""

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.fft import dct
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .audio import AudioClip
from .errors import TooShort

N_MFCC = 13
N_MFCC_FILTERS = 26
N_CHROMA = 12
N_MELS = 128
N_FEATURES = N_MFCC + N_CHROMA + N_MELS + 2
LOG_FLOOR = 1e-10
MEL_SCALE = 2595.0
NORM_EPS = 1e-8

FEATURE_NAMES = (
    [f"mfcc{i}" for i in range(N_MFCC)]
    + [f"chroma{i}" for i in range(N_CHROMA)]
    + [f"lms{i}" for i in range(N_MELS)]
    + ["zcr", "rms"]
)
SLICES = {
    "mfcc": slice(0, 13),
    "chroma": slice(13, 25),
    "lms": slice(25, 153),
    "zcr": slice(153, 154),
    "rms": slice(154, 155),
}


@dataclass(frozen=True)
class FrameParams:
    win_ms: float = 25.0
    hop_ms: float = 10.0
    window: str = "hamming"
    fft_size: int = None

    def __post_init__(self):
        if not 20 <= self.win_ms <= 30:
            raise ValueError("win_ms must lie in [20, 30]")
        if not 0 < self.hop_ms <= self.win_ms:
            raise ValueError("hop_ms must be in (0, win_ms]")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {sorted(WINDOWS)}")

    def resolve(self, sample_rate):
        """Return ``(win, hop, n_fft)`` in samples for ``sample_rate``."""
        win = int(round(self.win_ms * sample_rate / 1000.0))
        hop = max(1, int(round(self.hop_ms * sample_rate / 1000.0)))
        n_fft = self.fft_size or 1 << (win - 1).bit_length()
        if n_fft < win:
            raise ValueError("fft_size must be at least the window length")
        return win, hop, n_fft


def hamming(n):
    if n == 1:
        return np.ones(1)
    return 0.54 - 0.46 * np.cos(2 * np.pi * np.arange(n) / (n - 1))


WINDOWS = {"hamming": hamming, "rectangular": np.ones}


def hz_to_mel(f, scale=MEL_SCALE):
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    return scale * np.log10(1.0 + f / 700.0)


def mel_to_hz(m, scale=MEL_SCALE):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / scale) - 1.0)


@lru_cache(maxsize=32)
def _mel_filterbank(n_filters, n_fft, sample_rate, f_min, f_max):
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_filters + 2))
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lower) / (center - lower)
    falling = (upper - freqs) / (upper - center)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    peak = fb.max(axis=1)
    if np.any(peak <= 0):
        raise ValueError(f"{n_filters} mel filters are too narrow for a {n_fft}-point FFT at {sample_rate} Hz")
    fb /= peak[:, None]
    fb.setflags(write=False)
    return fb


def mel_filterbank(n_filters, n_fft, sample_rate, f_min=0.0, f_max=None):
    """Triangular mel filters over rfft bins, each row scaled to peak at 1."""
    f_max = sample_rate / 2.0 if f_max is None else f_max
    return _mel_filterbank(int(n_filters), int(n_fft), float(sample_rate), float(f_min), float(f_max))


def frame_signal(samples, win, hop):
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size < win:
        raise TooShort(f"clip of {samples.size} samples is shorter than one {win}-sample window")
    n_frames = 1 + (samples.size - win) // hop
    return np.lib.stride_tricks.sliding_window_view(samples, win)[::hop][:n_frames]


def stft_frames(samples, win, hop, n_fft, window="hamming"):
    """Magnitude spectra ``|rfft(frame * h, n_fft)|`` of frames starting at ``t * hop``."""
    frames = frame_signal(samples, win, hop) * WINDOWS[window](win)
    return np.abs(np.fft.rfft(frames, n=n_fft, axis=1))


def stft_magnitude(clip, params=FrameParams()):
    win, hop, n_fft = params.resolve(clip.sample_rate)
    return stft_frames(clip.samples, win, hop, n_fft, params.window)


def _log(x):
    return np.log(np.maximum(x, LOG_FLOOR))


def mfcc_frames(power, n_fft, sample_rate):
    fb = mel_filterbank(N_MFCC_FILTERS, n_fft, sample_rate)
    return dct(_log(power @ fb.T), type=2, norm="ortho", axis=1)[:, :N_MFCC]


def logmel_frames(power, n_fft, sample_rate):
    return _log(power @ mel_filterbank(N_MELS, n_fft, sample_rate).T)


@lru_cache(maxsize=32)
def chroma_map(n_fft, sample_rate):
    """Binary (n_bins x 12) matrix assigning each rfft bin >= 27.5 Hz to its pitch class."""
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    m = np.zeros((freqs.size, N_CHROMA))
    keep = freqs >= 27.5
    pc = (np.round(12 * np.log2(freqs[keep] / 440.0)).astype(int) + 9) % 12
    m[np.flatnonzero(keep), pc] = 1.0
    m.setflags(write=False)
    return m


def chroma_frames(power, n_fft, sample_rate):
    c = power @ chroma_map(n_fft, sample_rate)
    return c / np.maximum(c.max(axis=1, keepdims=True), LOG_FLOOR)


def zcr_frames(frames):
    s = frames
    return np.count_nonzero(s[:, 1:] * s[:, :-1] < 0, axis=1) / (s.shape[1] - 1)


def rms_frames(frames):
    return np.sqrt(np.mean(frames ** 2, axis=1))


class _Analysis:
    """Shared framing and power spectrum of one clip."""

    def __init__(self, clip, params):
        self.rate = clip.sample_rate
        self.win, self.hop, self.n_fft = params.resolve(clip.sample_rate)
        self.frames = frame_signal(clip.samples, self.win, self.hop)
        windowed = self.frames * WINDOWS[params.window](self.win)
        self.power = np.abs(np.fft.rfft(windowed, n=self.n_fft, axis=1)) ** 2


def mfcc_mean(clip, params=FrameParams()):
    a = _Analysis(clip, params)
    return mfcc_frames(a.power, a.n_fft, a.rate).mean(axis=0)


def logmel_mean(clip, params=FrameParams()):
    a = _Analysis(clip, params)
    return logmel_frames(a.power, a.n_fft, a.rate).mean(axis=0)


def chroma_mean(clip, params=FrameParams()):
    a = _Analysis(clip, params)
    return chroma_frames(a.power, a.n_fft, a.rate).mean(axis=0)


def zcr_mean(clip, params=FrameParams()):
    win, hop, _ = params.resolve(clip.sample_rate)
    return float(zcr_frames(frame_signal(clip.samples, win, hop)).mean())


def rms_mean(clip, params=FrameParams()):
    win, hop, _ = params.resolve(clip.sample_rate)
    return float(rms_frames(frame_signal(clip.samples, win, hop)).mean())


def extract(clip, params=FrameParams()):
    """155-element vector ``[mfcc(13), chroma(12), lms(128), zcr, rms]``."""
    a = _Analysis(clip, params)
    return np.concatenate([
        mfcc_frames(a.power, a.n_fft, a.rate).mean(axis=0),
        chroma_frames(a.power, a.n_fft, a.rate).mean(axis=0),
        logmel_frames(a.power, a.n_fft, a.rate).mean(axis=0),
        [zcr_frames(a.frames).mean(), rms_frames(a.frames).mean()],
    ])


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Stateless transformer from clips (or raw sample arrays) to feature rows."""

    def __init__(self, sample_rate=44100, win_ms=25.0, hop_ms=10.0):
        self.sample_rate = sample_rate
        self.win_ms = win_ms
        self.hop_ms = hop_ms

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        params = FrameParams(self.win_ms, self.hop_ms)
        rows = []
        for item in X:
            clip = item if isinstance(item, AudioClip) else AudioClip(item, self.sample_rate)
            rows.append(extract(clip, params))
        return np.vstack(rows) if rows else np.empty((0, N_FEATURES))

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)


class Normalizer(TransformerMixin, BaseEstimator):
    """Per-dimension z-score with population std floored at ``eps``."""

    def __init__(self, eps=NORM_EPS):
        self.eps = eps

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise ValueError("Normalizer needs at least 2 training vectors")
        self.mean_ = X.mean(axis=0)
        self.std_ = np.maximum(X.std(axis=0), self.eps)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.mean_.size:
            raise ValueError(f"expected {self.mean_.size} features, got {X.shape[1]}")
        return (X - self.mean_) / self.std_

    @classmethod
    def from_stats(cls, mean, std, eps=NORM_EPS):
        norm = cls(eps)
        norm.mean_ = np.asarray(mean, dtype=np.float64)
        norm.std_ = np.asarray(std, dtype=np.float64)
        norm.n_features_in_ = norm.mean_.size
        return norm


def fit_normalizer(train_vectors):
    return Normalizer().fit(train_vectors)


def apply(normalizer, vector):
    vector = np.asarray(vector, dtype=np.float64)
    return normalizer.transform(vector.reshape(1, -1))[0] if vector.ndim == 1 else normalizer.transform(vector)


def write_features(path, origins, labels, X):
    """Feature cache CSV: ``origin,label,f0..f154``.  Values use ``repr`` so they reload exactly."""
    X = np.asarray(X, dtype=np.float64)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin", "label"] + [f"f{i}" for i in range(X.shape[1])])
        for origin, label, row in zip(origins, labels, X):
            w.writerow([origin, label] + [repr(float(v)) for v in row])


def read_features(path):
    """Return ``(origins, labels, X)`` from a feature cache CSV."""
    origins, labels, rows = [], [], []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or header[:2] != ["origin", "label"]:
            raise ValueError(f"{path}: not a feature cache (header must start with origin,label)")
        width = len(header) - 2
        for row in r:
            if len(row) != width + 2:
                raise ValueError(f"{path}: row with {len(row) - 2} features, expected {width}")
            origins.append(row[0])
            labels.append(row[1])
            rows.append([float(v) for v in row[2:]])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{path}: non-finite feature values")
    return origins, labels, X


def log_floor_mfcc0():
    """Coefficient 0 of a silent clip under the orthonormal DCT."""
    return math.sqrt(N_MFCC_FILTERS) * math.log(LOG_FLOOR)
