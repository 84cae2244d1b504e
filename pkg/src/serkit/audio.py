"""WAV decoding, linear-interpolation resampling and fixed-length framing."""

import struct
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import MalformedWav, UnsupportedEncoding

DEFAULT_RATE = 44100
DEFAULT_DURATION = 3.0

_PCM = 0x0001
_FLOAT = 0x0003
_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True)
class AudioClip:
    """Mono sample buffer in [-1, 1] plus its sample rate."""

    samples: np.ndarray
    sample_rate: int
    source: Optional[str] = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioClip samples must be one-dimensional (mono)")
        if samples.size == 0:
            raise ValueError("AudioClip must be non-empty")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioClip samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    def replace(self, samples, sample_rate=None):
        return AudioClip(samples, self.sample_rate if sample_rate is None else sample_rate, self.source)


def _read_chunks(data):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWav("not a RIFF/WAVE file")
    pos = 12
    chunks = {}
    while pos + 8 <= len(data):
        cid, size = struct.unpack("<4sI", data[pos:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        chunks.setdefault(cid, body)
        pos += 8 + size + (size & 1)
    return chunks


def decode_wav(path):
    """Decode a PCM16 or float32 RIFF/WAVE file into a mono :class:`AudioClip`.

    Stereo input is averaged to mono.  Integer samples are scaled by 1/32768.
    """
    path = Path(path)
    data = path.read_bytes()
    chunks = _read_chunks(data)
    fmt = chunks.get(b"fmt ")
    if fmt is None or len(fmt) < 16:
        raise MalformedWav(f"{path}: missing or short fmt chunk")
    if b"data" not in chunks:
        raise MalformedWav(f"{path}: missing data chunk")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", fmt[:16])
    if tag == _EXTENSIBLE:
        if len(fmt) < 26:
            raise MalformedWav(f"{path}: short extensible fmt chunk")
        tag = struct.unpack("<H", fmt[24:26])[0]
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{path}: {channels} channels")
    if rate == 0:
        raise MalformedWav(f"{path}: zero sample rate")
    if tag == _PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), 1.0 / 32768.0
    elif tag == _FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedEncoding(f"{path}: format tag {tag:#06x}, {bits} bits")
    if block_align != channels * dtype.itemsize:
        raise MalformedWav(f"{path}: block align {block_align} inconsistent with format")

    raw = chunks[b"data"]
    frames = len(raw) // block_align
    if frames == 0:
        raise MalformedWav(f"{path}: zero frames")
    samples = np.frombuffer(raw[:frames * block_align], dtype=dtype).astype(np.float64) * scale
    samples = samples.reshape(frames, channels).mean(axis=1)
    if not np.all(np.isfinite(samples)):
        raise MalformedWav(f"{path}: non-finite samples")
    return AudioClip(np.clip(samples, -1.0, 1.0), rate, str(path))


def write_wav(clip, path):
    """Write ``clip`` as 16-bit PCM mono."""
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(clip.sample_rate)
        fh.writeframes(pcm.tobytes())


def resample_linear(samples, ratio):
    """Resample to ``round(len * ratio)`` samples by linear interpolation."""
    samples = np.asarray(samples, dtype=np.float64)
    n_out = max(1, int(np.floor(samples.size * ratio + 0.5)))
    if n_out == samples.size and ratio == 1.0:
        return samples.copy()
    positions = np.arange(n_out) / ratio
    return np.interp(positions, np.arange(samples.size), samples)


def resample(clip, target_rate):
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return clip
    return clip.replace(resample_linear(clip.samples, target_rate / clip.sample_rate), target_rate)


def fix_length(clip, duration_s):
    """Zero-pad or truncate at the tail to ``round(duration_s * rate)`` samples."""
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    n = int(np.floor(duration_s * clip.sample_rate + 0.5))
    return clip.replace(fit_samples(clip.samples, n))


def fit_samples(samples, n):
    if samples.size == n:
        return samples
    if samples.size > n:
        return samples[:n].copy()
    out = np.zeros(n)
    out[:samples.size] = samples
    return out


def load_clip(path, sample_rate=DEFAULT_RATE):
    return resample(decode_wav(path), sample_rate)
