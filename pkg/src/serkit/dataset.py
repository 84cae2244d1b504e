"""Manifests, label encoding and stratified train/val/test splits."""

import csv
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DuplicatePath, EmptyManifest, ManifestError, TooFewPerClass, UnknownSplit

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
AUDIO_SUFFIXES = (".wav",)

RAVDESS_CODES = {
    "01": "neutral", "02": "calm", "03": "happy", "04": "sad",
    "05": "angry", "06": "fearful", "07": "disgust", "08": "surprised",
}
SAVEE_CODES = {
    "a": "anger", "d": "disgust", "f": "fear", "h": "happiness",
    "n": "neutral", "sa": "sadness", "su": "surprise",
}
EMODB_CODES = {
    "W": "anger", "L": "boredom", "E": "disgust", "A": "fear",
    "F": "happiness", "T": "sadness", "N": "neutral",
}
CREMAD_CODES = {
    "ANG": "anger", "DIS": "disgust", "FEA": "fear",
    "HAP": "happiness", "NEU": "neutral", "SAD": "sadness",
}


@dataclass(frozen=True)
class Entry:
    path: str
    label: str
    split: Optional[str] = None
    # AugmentSpec for derived entries; None for original recordings.
    augment: Optional[object] = None

    @property
    def origin(self):
        if self.augment is None:
            return self.path
        return f"{self.path}#{self.augment.tag}"


@dataclass(frozen=True)
class LabelMap:
    names: tuple

    def __post_init__(self):
        names = tuple(self.names)
        if len(names) < 2:
            raise ValueError("LabelMap needs at least 2 classes")
        if len(set(names)) != len(names):
            raise ValueError("LabelMap names must be unique")
        if list(names) != sorted(names):
            raise ValueError("LabelMap names must be sorted")
        object.__setattr__(self, "names", names)

    @classmethod
    def from_labels(cls, labels):
        return cls(tuple(sorted(set(labels))))

    def __len__(self):
        return len(self.names)

    def encode(self, labels):
        index = {name: i for i, name in enumerate(self.names)}
        try:
            return np.array([index[label] for label in labels], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} not in LabelMap") from None

    def decode(self, ids):
        return [self.names[int(i)] for i in ids]


@dataclass
class Manifest:
    entries: list = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            key = entry.origin
            if key in seen:
                raise DuplicatePath(f"duplicate path {key}")
            seen.add(key)
        tagged = [e.split is not None for e in self.entries]
        if any(tagged) and not all(tagged):
            raise ManifestError("either every entry carries a split tag or none does")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def labels(self):
        return [e.label for e in self.entries]

    @property
    def label_map(self):
        return LabelMap.from_labels(self.labels)

    @property
    def has_splits(self):
        return bool(self.entries) and self.entries[0].split is not None

    def subset(self, split):
        return Manifest([e for e in self.entries if e.split == split])

    def with_splits(self, plan):
        tags = [None] * len(self.entries)
        for name, idx in (("train", plan.train_idx), ("val", plan.val_idx), ("test", plan.test_idx)):
            for i in idx:
                tags[i] = name
        return Manifest([replace(e, split=t) for e, t in zip(self.entries, tags)])


@dataclass(frozen=True)
class SplitPlan:
    train_idx: tuple
    val_idx: tuple
    test_idx: tuple
    seed: int

    def __post_init__(self):
        for name in ("train_idx", "val_idx", "test_idx"):
            object.__setattr__(self, name, tuple(int(i) for i in getattr(self, name)))


def load_manifest(path):
    """Read a ``path,label[,split[,augment]]`` CSV; relative paths resolve
    against the manifest's directory."""
    from .augment import AugmentSpec

    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    base = path.parent
    entries = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"path", "label"} <= set(reader.fieldnames):
            raise ManifestError(f"{path}: header must start with path,label")
        for row in reader:
            split = (row.get("split") or "").strip() or None
            if split is not None and split not in SPLITS:
                raise UnknownSplit(f"{path}: unknown split {split!r}")
            p = Path(row["path"].strip())
            if not p.is_absolute():
                p = base / p
            aug = (row.get("augment") or "").strip()
            entries.append(Entry(str(p), row["label"].strip(), split,
                                 AugmentSpec.from_tag(aug) if aug else None))
    if not entries:
        raise EmptyManifest(f"{path}: no entries")
    return Manifest(entries)


def write_manifest(manifest, path):
    path = Path(path)
    header = ["path", "label"]
    if manifest.has_splits:
        header.append("split")
    with_aug = any(e.augment is not None for e in manifest)
    if with_aug:
        header.append("augment")
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for e in manifest:
            row = [e.path, e.label]
            if manifest.has_splits:
                row.append(e.split)
            if with_aug:
                row.append(e.augment.tag if e.augment is not None else "")
            writer.writerow(row)


def _ravdess(p):
    parts = p.stem.split("-")
    return RAVDESS_CODES.get(parts[2]) if len(parts) == 7 else None


def _savee(p):
    m = re.match(r"(sa|su|[adfhn])\d+$", p.stem)
    return SAVEE_CODES[m.group(1)] if m else None


def _emodb(p):
    stem = p.stem
    if len(stem) < 6 or not stem[:2].isdigit():
        return None
    return EMODB_CODES.get(stem[5])


def _cremad(p):
    parts = p.stem.split("_")
    return CREMAD_CODES.get(parts[2]) if len(parts) >= 3 else None


def _tess(p):
    # OAF_back_angry.wav; folder names like OAF_angry serve as fallback
    for text in (p.stem, p.parent.name):
        word = text.rsplit("_", 1)[-1].lower()
        if "_" in text and word.isalpha():
            return "surprise" if word == "ps" else word
    return None


CONVENTIONS = {
    "tess": _tess, "ravdess": _ravdess, "savee": _savee,
    "emodb": _emodb, "cremad": _cremad,
}


def decode_label(path, convention):
    try:
        decoder = CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown convention {convention!r}; choose from {sorted(CONVENTIONS)}") from None
    return decoder(Path(path))


def scan_dataset(root, convention):
    """Walk ``root`` and decode each audio file's label from its name.

    Returns ``(manifest, skipped)`` where ``skipped`` counts unparseable files.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root not found: {root}")
    entries, skipped = [], 0
    for p in sorted(root.rglob("*")):
        if not p.is_file() or p.suffix.lower() not in AUDIO_SUFFIXES:
            continue
        label = decode_label(p, convention)
        if label is None:
            log.warning("skipping %s: filename does not follow the %s convention", p, convention)
            skipped += 1
            continue
        entries.append(Entry(str(p), label))
    if not entries:
        raise EmptyManifest(f"{root}: no files matched the {convention} convention")
    return Manifest(entries), skipped


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def _allocate(counts, total):
    """Largest-remainder apportionment of ``total`` proportional to ``counts``."""
    n = sum(counts)
    quotas = [total * c / n for c in counts]
    alloc = [int(math.floor(q)) for q in quotas]
    order = sorted(range(len(counts)), key=lambda i: (-(quotas[i] - alloc[i]), i))
    for i in order[:total - sum(alloc)]:
        alloc[i] += 1
    return alloc


def make_split(manifest, seed, test_fraction=0.2, val_fraction=0.2):
    """Stratified shuffle split: ``round(0.2 N)`` test, then ``round(0.2 (N - test))`` val."""
    n = len(manifest)
    if n < 5:
        raise TooFewPerClass(f"need at least 5 entries to split, got {n}")
    labels = manifest.labels
    classes = sorted(set(labels))
    by_class = {c: [i for i, lab in enumerate(labels) if lab == c] for c in classes}
    small = [c for c in classes if len(by_class[c]) < 3]
    if small:
        raise TooFewPerClass(f"classes with fewer than 3 samples: {small}")

    rng = np.random.default_rng(seed)
    pools = {c: list(rng.permutation(by_class[c])) for c in classes}

    n_test = _round_half_up(test_fraction * n)
    test_alloc = _allocate([len(pools[c]) for c in classes], n_test)
    rest = [len(pools[c]) - k for c, k in zip(classes, test_alloc)]
    val_alloc = _allocate(rest, _round_half_up(val_fraction * (n - n_test)))

    train, val, test = [], [], []
    for c, nt, nv in zip(classes, test_alloc, val_alloc):
        pool = pools[c]
        test += pool[:nt]
        val += pool[nt:nt + nv]
        train += pool[nt + nv:]
    return SplitPlan(sorted(train), sorted(val), sorted(test), seed)


def plan_from_tags(manifest):
    idx = {s: [i for i, e in enumerate(manifest) if e.split == s] for s in SPLITS}
    return SplitPlan(idx["train"], idx["val"], idx["test"], seed=-1)
