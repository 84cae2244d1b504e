import json

import pytest

from serkit.config import RunConfig, load_config
from serkit.errors import ConfigError


class TestLoad:
    def test_defaults(self):
        cfg = load_config(env={})
        assert cfg.sample_rate == 44100 and cfg.duration_s == 3.0
        assert cfg.train.epochs == 1000 and cfg.train.batch == 32 and cfg.train.l2 == 0.01
        assert len(cfg.augment_specs()) == 6

    def test_file_then_overrides_then_env(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"train": {"epochs": 5, "seed": 1}, "frame": {"win_ms": 20}}))
        cfg = load_config(p, ["train.epochs=7", "augment=[]"], env={"SER_SEED": "42"})
        assert cfg.train.epochs == 7 and cfg.train.seed == 42 and cfg.frame.win_ms == 20.0
        assert cfg.augment == []

    def test_round_trip(self):
        cfg = load_config(overrides=["ensemble.step=0.25"], env={})
        assert RunConfig.from_dict(json.loads(cfg.dumps())) == cfg

    @pytest.mark.parametrize("override, field", [
        ("train.epochs=-1", "train.epochs"),
        ("frame.win_ms=50", "frame.win_ms"),
        ("ensemble.step=0.3", "ensemble.step"),
        ("train.bogus=1", "train.bogus"),
        ("train.lr=\"fast\"", "train.lr"),
    ])
    def test_errors_name_the_field(self, override, field):
        with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
            load_config(overrides=[override], env={})

    def test_bad_seed_env(self):
        with pytest.raises(ConfigError):
            load_config(env={"SER_SEED": "abc"})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")
