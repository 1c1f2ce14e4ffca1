from pathlib import Path

import pytest

from hotadc.bench import ExperimentPlan
from hotadc.config import ResolvedConfig, load_config, parse_override, to_toml
from hotadc.errors import ConfigurationError

DEFAULT_TOML = Path(__file__).resolve().parents[1] / "configs" / "default.toml"


def test_shipped_default_matches_dataclasses():
    assert load_config(DEFAULT_TOML) == ResolvedConfig()


def test_default_plan_matches_experiment_plan_defaults():
    assert ResolvedConfig().plan() == ExperimentPlan()


def test_toml_round_trip(tmp_path):
    cfg = load_config(overrides=["environment.seed=9", "sweep.temperatures=[25, 250]",
                                 "analog.collapse_temperature=255"])
    path = tmp_path / "c.toml"
    path.write_text(to_toml(cfg))
    assert load_config(path) == cfg


def test_overrides_apply_after_file(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[environment]\nseed = 3\ntemperature = 100\n")
    cfg = load_config(path, ["environment.seed=5", "stimulus.kind=dc"])
    assert cfg.environment.seed == 5
    assert cfg.environment.temperature == 100.0
    assert isinstance(cfg.environment.temperature, float)
    assert cfg.stimulus.kind == "dc"


@pytest.mark.parametrize("text, key", [("[modulator]\nfoo = 1\n", "modulator.foo"),
                                       ("[bogus]\nx = 1\n", "bogus"),
                                       ("top = 1\n", "top")])
def test_unknown_keys_are_named(tmp_path, text, key):
    path = tmp_path / "bad.toml"
    path.write_text(text)
    with pytest.raises(ConfigurationError, match=key):
        load_config(path)


def test_unknown_override_named():
    with pytest.raises(ConfigurationError, match="leakage.t_half"):
        load_config(overrides=["leakage.t_half=3"])


@pytest.mark.parametrize("text", ["noequals", "a.b.c=1", "flat=1"])
def test_malformed_override(text):
    with pytest.raises(ConfigurationError):
        parse_override(text)


def test_invalid_value_fails_fast():
    with pytest.raises(ConfigurationError):
        load_config(overrides=["modulator.osr=500"])
    with pytest.raises(ConfigurationError):
        load_config(overrides=["environment.ideal=1"])


def test_modulator_rate_propagates_to_decimator():
    cfg = load_config(overrides=["modulator.osr=256"])
    assert cfg.decimator.osr == 256
    assert cfg.plan().modulator.bandwidth == pytest.approx(150e3 / 512)
