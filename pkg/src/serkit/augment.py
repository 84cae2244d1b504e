"""Training-data augmentation: additive noise, time stretching, pitch shifting."""

import math
import zlib
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import correlate

from .audio import fit_samples, resample_linear
from .dataset import Manifest
from .errors import EmptySpecs

KINDS = ("awgn", "stretch", "pitch")

# (kind, param) pairs used when no augmentation list is configured.
DEFAULT_AUGMENTATIONS = (
    ("awgn", 0.020), ("awgn", 0.025),
    ("stretch", 0.7), ("stretch", 0.8),
    ("pitch", 0.6), ("pitch", 0.7),
)

STRETCH_WIN_S = 0.025


@dataclass(frozen=True)
class AugmentSpec:
    kind: str
    param: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown augmentation kind {self.kind!r}")
        param = float(self.param)
        if not math.isfinite(param):
            raise ValueError("augmentation parameter must be finite")
        if self.kind == "awgn" and param <= 0:
            raise ValueError("awgn rate must be > 0")
        if self.kind == "stretch" and not 0 < param <= 4:
            raise ValueError("stretch factor must be in (0, 4]")
        object.__setattr__(self, "param", param)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def tag(self):
        return f"{self.kind}:{self.param!r}:{self.seed}"

    @classmethod
    def from_tag(cls, tag):
        kind, param, seed = tag.split(":")
        return cls(kind, float(param), int(seed))

    def to_dict(self):
        return {"kind": self.kind, "param": self.param, "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d["param"], d.get("seed", 0))


def default_specs(seed=0):
    return [AugmentSpec(kind, param, seed) for kind, param in DEFAULT_AUGMENTATIONS]


def add_awgn(clip, rate, seed):
    """Add white Gaussian noise scaled by ``rate * u * max|x|``.

    ``u`` is one uniform draw per clip; output is clamped to [-1, 1].
    """
    if rate <= 0:
        raise ValueError("rate must be > 0")
    rng = np.random.default_rng(seed)
    x = clip.samples
    u = rng.uniform()
    noise = rng.standard_normal(x.size)
    y = x + rate * u * np.max(np.abs(x)) * noise
    return clip.replace(np.clip(y, -1.0, 1.0))


def _wsola(x, factor, win):
    """Hann overlap-add time-scale modification with waveform-similarity alignment.

    Synthesis hop is ``win // 2``; the nominal analysis hop is ``factor`` times
    that.  Each analysis frame may slide by up to half a window so that it
    lines up with the natural continuation of the previous frame, which keeps
    periodic components at their original frequency.
    """
    n_out = max(1, int(math.floor(x.size / factor + 0.5)))
    hop_s = max(1, win // 2)
    hop_a = hop_s * factor
    tol = hop_s
    window = np.hanning(win + 1)[:-1]

    n_frames = n_out // hop_s + 2
    last_start = int(round((n_frames - 1) * hop_a))
    pad_end = max(0, last_start + 2 * tol + 2 * win - x.size)
    xp = np.concatenate([np.zeros(tol), x, np.zeros(pad_end)])

    y = np.zeros(n_frames * hop_s + win)
    wsum = np.zeros_like(y)
    prev = tol
    for m in range(n_frames):
        nominal = int(round(m * hop_a)) + tol
        if m == 0:
            start = nominal
        else:
            natural = xp[prev + hop_s:prev + hop_s + win]
            region = xp[nominal - tol:nominal + tol + win]
            if np.any(natural):
                corr = correlate(region, natural, mode="valid", method="fft")
                start = nominal - tol + int(np.argmax(corr))
            else:
                start = nominal
        out = m * hop_s
        y[out:out + win] += window * xp[start:start + win]
        wsum[out:out + win] += window
        prev = start
    y = np.divide(y, wsum, out=np.zeros_like(y), where=wsum > 1e-12)
    return y[:n_out]


def time_stretch(clip, factor):
    """Change duration by ``1/factor`` keeping pitch; factor < 1 slows down."""
    if not 0 < factor <= 4:
        raise ValueError("factor must be in (0, 4]")
    win = int(round(STRETCH_WIN_S * clip.sample_rate))
    return clip.replace(_wsola(clip.samples, factor, win))


def pitch_shift(clip, steps):
    """Shift pitch by ``steps`` semitones keeping the clip length."""
    if not math.isfinite(steps):
        raise ValueError("steps must be finite")
    ratio = 2.0 ** (steps / 12.0)
    stretched = time_stretch(clip, 1.0 / ratio).samples
    shifted = resample_linear(stretched, 1.0 / ratio)
    return clip.replace(fit_samples(shifted, len(clip)))


def clip_seed(seed, key):
    """Stable per-clip seed derived from an augmentation seed and a file key."""
    return int(np.random.SeedSequence([seed, zlib.crc32(str(key).encode())]).generate_state(1)[0])


def apply_augment(clip, spec, key=""):
    if spec.kind == "awgn":
        return add_awgn(clip, spec.param, clip_seed(spec.seed, key))
    if spec.kind == "stretch":
        return time_stretch(clip, spec.param)
    return pitch_shift(clip, spec.param)


def expand(manifest, specs, augment_all=False):
    """Add one augmented entry per spec for every eligible entry.

    Eligible entries are those in the train split, or all entries when
    ``augment_all`` is set.  Augmented entries inherit the split tag.
    """
    specs = list(specs)
    if not specs:
        raise EmptySpecs("at least one augmentation spec is required")
    if not augment_all and not manifest.has_splits:
        raise ValueError("manifest has no split tags; assign splits first or pass augment_all")
    originals = [e for e in manifest if e.augment is None]
    extra = [replace(e, augment=spec)
             for spec in specs
             for e in originals
             if augment_all or e.split == "train"]
    return Manifest(originals + extra)
