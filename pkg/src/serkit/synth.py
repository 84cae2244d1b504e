"""Synthetic tone corpus: one carrier band per class plus noise.

Used by the test suite and the end-to-end demo; the classes are separable by
spectral content alone, so a working pipeline should classify them almost
perfectly.
"""

from pathlib import Path

import numpy as np

from .audio import AudioClip, write_wav
from .dataset import Entry, Manifest, write_manifest

BANDS = {"high": (2000.0, 3000.0), "low": (150.0, 350.0), "mid": (700.0, 1100.0)}


def tone_clip(band, rng, sample_rate=16000, duration=None):
    duration = rng.uniform(2.0, 3.5) if duration is None else duration
    t = np.arange(int(duration * sample_rate)) / sample_rate
    y = np.zeros_like(t)
    for _ in range(rng.integers(2, 4)):
        f = rng.uniform(*band)
        y += rng.uniform(0.3, 1.0) * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    attack = rng.uniform(0.02, 0.2)
    env = np.minimum(1.0, t / attack) * np.exp(-t * rng.uniform(0.0, 0.8))
    y *= env / max(np.max(np.abs(y)), 1e-9)
    y += rng.uniform(0.01, 0.05) * rng.standard_normal(t.size)
    y *= rng.uniform(0.2, 0.8) / np.max(np.abs(y))
    return AudioClip(y, sample_rate)


def make_tone_corpus(root, n_clips=300, seed=0, sample_rate=16000, bands=None):
    """Write ``n_clips`` WAV files (classes round-robin) and ``manifest.csv`` under ``root``."""
    bands = BANDS if bands is None else bands
    root = Path(root)
    (root / "wav").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    names = sorted(bands)
    entries = []
    for i in range(n_clips):
        label = names[i % len(names)]
        clip = tone_clip(bands[label], rng, sample_rate)
        rel = f"wav/{label}_{i:04d}.wav"
        write_wav(clip, root / rel)
        entries.append(Entry(rel, label))
    manifest = Manifest(entries)
    write_manifest(manifest, root / "manifest.csv")
    return root / "manifest.csv"
