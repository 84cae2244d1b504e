"""Command line front end: ``serkit <command> ...``.

Failures exit with status 2 and print a single ``error: <Code>: <message>`` line
on stderr.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import models, pipeline
from .config import load_config
from .dataset import load_manifest, make_split, scan_dataset, write_manifest
from .ensemble import evaluate_ensemble, grid_search, load_weights, save_weights
from .errors import SerError
from .metrics import emit, evaluate

log = logging.getLogger("serkit")


def _config(args):
    return load_config(args.config, args.set or ())


def cmd_scan(args):
    cfg = _config(args)
    if args.manifest:
        manifest, skipped = load_manifest(args.manifest), 0
    else:
        manifest, skipped = scan_dataset(args.root, args.convention)
    if not args.no_split and not manifest.has_splits:
        seed = cfg.split_seed if args.seed is None else args.seed
        manifest = manifest.with_splits(make_split(manifest, seed))
    write_manifest(manifest, args.out)
    print(json.dumps({"entries": len(manifest), "skipped": skipped, "labels": list(manifest.label_map.names)}))


def cmd_extract(args):
    cfg = _config(args)
    manifest = load_manifest(args.manifest)
    warnings = pipeline.extract_manifest(manifest, cfg, args.out, jobs=args.jobs, dump_dir=args.dump_wav)
    print(json.dumps({"out": str(args.out), "warnings": len(warnings)}))


def cmd_train(args):
    cfg = _config(args)
    if args.epochs is not None:
        cfg.train.epochs = args.epochs
        cfg.validate()
    _, history = pipeline.train_model(args.features, args.model, cfg, args.out)
    last = history[-1] if history else {}
    print(json.dumps({"checkpoint": str(args.out), "epochs": len(history), "last": last}))


def _load_checkpoints(paths):
    if len(paths) != 3:
        raise SerError("exactly three checkpoints (A, B, C) are required")
    return [models.load(p) for p in paths]


def cmd_ensemble_search(args):
    cfg = _config(args)
    step = cfg.ensemble.step if args.step is None else args.step
    cks = _load_checkpoints(args.checkpoints)
    probs, y, _ = pipeline.checkpoint_probs(cks, args.features, "val")
    weights, scores = grid_search(probs, y, step)
    save_weights(weights, args.out, [str(Path(p).resolve()) for p in args.checkpoints], step)
    best = max(s for _, s in scores)
    print(json.dumps({"weights": weights.to_dict(), "val_accuracy": best, "candidates": len(scores)}))


def _resolve_ensemble(args):
    if args.checkpoint:
        return [models.load(args.checkpoint)], None
    if not args.weights:
        raise SerError("give --checkpoint, or --weights (optionally with --checkpoints)")
    weights, stored = load_weights(args.weights)
    return _load_checkpoints(args.checkpoints or stored), weights


def cmd_evaluate(args):
    cks, weights = _resolve_ensemble(args)
    probs, y, labels = pipeline.checkpoint_probs(cks, args.features, args.split)
    if weights is None:
        report = evaluate(y, np.argmax(probs[0], axis=1), len(labels), labels)
    else:
        report = evaluate_ensemble(probs, y, weights, labels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit(report, out / "report.json", "json")
    emit(report, out / "confusion.csv", "csv")
    print(json.dumps({"accuracy": report.accuracy, "macro_f1": report.macro_f1, "out": str(out)}))


def cmd_predict(args):
    from .ensemble import fuse

    cks, weights = _resolve_ensemble(args)
    settings = cks[0].extra.get("features")
    if settings is None:
        raise SerError("checkpoint lacks feature settings; retrain with this version")
    vec = pipeline.clip_features(args.wav, settings)
    probs = [models.predict(ck, vec) for ck in cks]
    p = probs[0] if weights is None else fuse(*probs, weights)[0]
    labels = list(cks[0].label_names)
    k = int(np.argmax(p))
    print(json.dumps({"label": labels[k], "probs": {lab: float(v) for lab, v in zip(labels, p)}}))


def cmd_synth(args):
    from .synth import make_tone_corpus

    path = make_tone_corpus(args.out, args.clips, args.seed)
    print(json.dumps({"manifest": str(path)}))


def build_parser():
    parser = argparse.ArgumentParser(prog="serkit", description="Speech emotion recognition toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
        return p

    p = add("scan", cmd_scan, "build a manifest from a dataset folder or an existing manifest")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--root")
    src.add_argument("--manifest")
    p.add_argument("--convention", choices=["tess", "ravdess", "savee", "emodb", "cremad"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-split", action="store_true", help="do not assign train/val/test tags")

    p = add("extract", cmd_extract, "augment and extract 155-dim feature caches")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory for <split>.csv files")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--dump-wav", help="also write every processed clip to this directory")

    p = add("train", cmd_train, "train model a, b or c")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True, type=str.upper, choices=list(models.MODEL_IDS))
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, help="override train.epochs (the default of 1000 is slow on CPU)")

    p = add("ensemble-search", cmd_ensemble_search, "grid-search ensemble weights on the val split")
    p.add_argument("--checkpoints", nargs=3, required=True, metavar=("A", "B", "C"))
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--step", type=float)

    for name, func, help in (("evaluate", cmd_evaluate, "evaluate a model or the ensemble"),
                             ("predict", cmd_predict, "classify one WAV file")):
        p = add(name, func, help)
        p.add_argument("--checkpoint")
        p.add_argument("--checkpoints", nargs=3, metavar=("A", "B", "C"))
        p.add_argument("--weights")
        if name == "evaluate":
            p.add_argument("--features", required=True)
            p.add_argument("--split", default="test")
            p.add_argument("--out", required=True)
        else:
            p.add_argument("--wav", required=True)

    p = add("synth", cmd_synth, "write a synthetic 3-class tone corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--clips", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except SerError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
