"""Run configuration: JSON file plus ``key=value`` overrides."""

import json
import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from .augment import AugmentSpec, DEFAULT_AUGMENTATIONS
from .errors import ConfigError

SEED_ENV = "SER_SEED"


@dataclass
class FrameConfig:
    win_ms: float = 25.0
    hop_ms: float = 10.0


@dataclass
class TrainSection:
    epochs: int = 1000
    batch: int = 32
    lr: float = 1e-3
    l2: float = 0.01
    l1: float = 0.0
    seed: int = 0
    width: float = 1.0


@dataclass
class EnsembleSection:
    step: float = 0.1


def _default_augment():
    return [{"kind": k, "param": p, "seed": 0} for k, p in DEFAULT_AUGMENTATIONS]


@dataclass
class RunConfig:
    sample_rate: int = 44100
    duration_s: float = 3.0
    split_seed: int = 0
    augment_all: bool = False
    frame: FrameConfig = field(default_factory=FrameConfig)
    augment: list = field(default_factory=_default_augment)
    train: TrainSection = field(default_factory=TrainSection)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)

    def validate(self):
        checks = [
            ("sample_rate", self.sample_rate > 0, "must be > 0"),
            ("duration_s", self.duration_s > 0, "must be > 0"),
            ("frame.win_ms", 20 <= self.frame.win_ms <= 30, "must lie in [20, 30]"),
            ("frame.hop_ms", 0 < self.frame.hop_ms <= self.frame.win_ms, "must be in (0, win_ms]"),
            ("train.epochs", self.train.epochs >= 0, "must be >= 0"),
            ("train.batch", self.train.batch >= 1, "must be >= 1"),
            ("train.lr", self.train.lr > 0, "must be > 0"),
            ("train.l2", self.train.l2 >= 0, "must be >= 0"),
            ("train.l1", self.train.l1 >= 0, "must be >= 0"),
            ("train.width", self.train.width > 0, "must be > 0"),
            ("ensemble.step", 0 < self.ensemble.step <= 1
             and abs(round(1 / self.ensemble.step) * self.ensemble.step - 1) < 1e-9, "must divide 1 evenly"),
        ]
        for path, ok, msg in checks:
            if not ok:
                raise ConfigError(f"{path}: {msg}")
        for i, spec in enumerate(self.augment):
            try:
                AugmentSpec.from_dict(spec)
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"augment[{i}]: {exc}") from None
        return self

    def augment_specs(self):
        return [AugmentSpec.from_dict(d) for d in self.augment]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data, "")

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _build(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"{prefix}{sorted(unknown)[0]}: unknown field")
    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name)
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{prefix}{name}.")
        else:
            kwargs[name] = _coerce(value, default, f"{prefix}{name}")
    return cls(**kwargs)


def _coerce(value, default, path):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if isinstance(default, list) and not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list")
    return value


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path=None, overrides=(), env=None):
    """Defaults, then the JSON file at ``path``, then ``key=value`` overrides, then ``SER_SEED``."""
    data = RunConfig().to_dict()
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        _merge(data, loaded, "")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, text = item.split("=", 1)
        _set(data, key.strip(), _parse_value(text))
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            data["train"]["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    return RunConfig.from_dict(data).validate()


def _merge(base, new, prefix):
    if not isinstance(new, dict):
        raise ConfigError(f"{prefix or 'config'}: expected an object")
    for key, value in new.items():
        if key not in base:
            raise ConfigError(f"{prefix}{key}: unknown field")
        if isinstance(base[key], dict):
            _merge(base[key], value, f"{prefix}{key}.")
        else:
            base[key] = value


def _set(data, dotted, value):
    parts = dotted.split(".")
    node = data
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node.get(part), dict):
            raise ConfigError(f"{'.'.join(parts[:i + 1])}: unknown section")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"{dotted}: unknown field")
    node[parts[-1]] = value
