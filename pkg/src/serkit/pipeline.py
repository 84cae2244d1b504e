"""File-level glue between the stages: clips to feature caches, caches to models."""

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import models
from .audio import decode_wav, fix_length, resample, write_wav
from .augment import apply_augment, expand
from .dataset import SPLITS, LabelMap
from .errors import TooShort, WavError
from .features import FrameParams, Normalizer, extract, read_features, write_features

log = logging.getLogger(__name__)

META_FILE = "meta.json"


def feature_settings(config):
    return {"sample_rate": config.sample_rate, "duration_s": config.duration_s,
            "win_ms": config.frame.win_ms, "hop_ms": config.frame.hop_ms}


def clip_features(path, settings, augment=None, dump_dir=None):
    """decode -> resample -> augment -> fix length -> 155 features."""
    clip = resample(decode_wav(path), settings["sample_rate"])
    if augment is not None:
        # key on folder/name so the noise does not depend on where the corpus lives
        clip = apply_augment(clip, augment, key="/".join(Path(path).parts[-2:]))
    clip = fix_length(clip, settings["duration_s"])
    if dump_dir is not None:
        tag = "orig" if augment is None else augment.tag.replace(":", "_")
        write_wav(clip, Path(dump_dir) / f"{Path(path).stem}__{tag}.wav")
    return extract(clip, FrameParams(settings["win_ms"], settings["hop_ms"]))


def _work(args):
    path, settings, augment, dump_dir = args
    try:
        return clip_features(path, settings, augment, dump_dir), None
    except (WavError, TooShort, OSError) as exc:
        return None, f"{path}: {exc}"


def extract_manifest(manifest, config, out_dir, jobs=1, dump_dir=None):
    """Write one feature cache per split (``train.csv`` ...; ``all.csv`` if untagged).

    Augmentations from ``config`` are applied to training entries (or to all
    entries with ``augment_all``).  Returns the list of per-file warnings.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if dump_dir is not None:
        Path(dump_dir).mkdir(parents=True, exist_ok=True)
    labels = LabelMap.from_labels(manifest.labels)
    specs = config.augment_specs()
    if specs and (manifest.has_splits or config.augment_all):
        manifest = expand(manifest, specs, augment_all=config.augment_all)
    settings = feature_settings(config)
    tasks = [(e.path, settings, e.augment, dump_dir) for e in manifest]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_work, tasks, chunksize=8))
    else:
        results = [_work(t) for t in tasks]

    warnings = [w for _, w in results if w is not None]
    for w in warnings:
        log.warning("skipped %s", w)
    groups = SPLITS if manifest.has_splits else ("all",)
    for split in groups:
        rows = [(e, vec) for e, (vec, _) in zip(manifest, results)
                if vec is not None and (split == "all" or e.split == split)]
        write_features(out_dir / f"{split}.csv", [e.origin for e, _ in rows], [e.label for e, _ in rows],
                       np.array([v for _, v in rows]).reshape(len(rows), -1) if rows else np.empty((0, 155)))
    meta = {"labels": list(labels.names), "features": settings, "splits": list(groups),
            "augment": [s.to_dict() for s in specs], "augment_all": config.augment_all}
    (out_dir / META_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return warnings


def load_meta(features_dir):
    path = Path(features_dir) / META_FILE
    if not path.is_file():
        raise FileNotFoundError(f"{path} missing; run extract first")
    return json.loads(path.read_text(encoding="utf-8"))


def load_split(features_dir, split, labels=None):
    """``(X, y, origins)`` for one split, labels encoded with the directory's LabelMap."""
    meta = load_meta(features_dir)
    label_map = LabelMap(tuple(labels or meta["labels"]))
    origins, names, X = read_features(Path(features_dir) / f"{split}.csv")
    return X, label_map.encode(names), origins


def train_model(features_dir, model_id, config, out_dir):
    """Fit one model on ``train.csv`` (validated on ``val.csv``) and save it with its history."""
    meta = load_meta(features_dir)
    labels = meta["labels"]
    X, y, _ = load_split(features_dir, "train")
    X_val, y_val, _ = load_split(features_dir, "val") if "val" in meta["splits"] else (None, None, None)
    norm = Normalizer().fit(X)
    spec = models.build(model_id, len(labels), width=config.train.width)
    tc = models.TrainConfig(config.train.epochs, config.train.batch, config.train.lr,
                            config.train.l2, config.train.l1, config.train.seed)
    ck, history = models.fit(spec, norm.transform(X), y,
                             None if X_val is None else norm.transform(X_val), y_val,
                             tc, labels, norm)
    ck.extra = {"features": meta["features"]}
    out_dir = models.save(ck, out_dir)
    write_history(history, out_dir / "history.csv")
    return ck, history


def write_history(history, path):
    cols = ["epoch", "loss", "accuracy", "val_loss", "val_accuracy"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec in history:
            w.writerow([rec["epoch"]] + [repr(rec[c]) if c in rec else "" for c in cols[1:]])


def checkpoint_probs(checkpoints, features_dir, split):
    """Per-checkpoint probabilities on one split, after checking label agreement."""
    meta = load_meta(features_dir)
    X, y, _ = load_split(features_dir, split)
    probs = []
    for ck in checkpoints:
        if list(ck.label_names) != meta["labels"]:
            raise ValueError(f"checkpoint labels {list(ck.label_names)} differ from features {meta['labels']}")
        probs.append(models.predict(ck, X))
    return probs, y, meta["labels"]
