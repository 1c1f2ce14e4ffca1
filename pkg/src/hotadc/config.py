"""TOML configuration: one table per component, strict key checking.

Sections and their target types::

    [modulator]    ModulatorConfig        [stimulus]   StimulusSpec
    [environment]  Environment            [decimator]  DecimatorConfig
    [leakage]      LeakageParams          [sweep]      plan-level settings
    [analog]       AnalogParams

Overrides use dotted keys, ``section.key=value``, with the value parsed as a
TOML literal (bare words fall back to strings).
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .bench import DEFAULT_TEMPERATURES, ExperimentPlan
from .decimator import DecimatorConfig
from .errors import ConfigurationError
from .modulator import ModulatorConfig, StimulusSpec
from .thermal import AnalogParams, Environment, LeakageParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class SweepSettings:
    temperatures: tuple = DEFAULT_TEMPERATURES
    n_chips: int = 5
    n_samples: int = 2 ** 19
    dc_points: int = 33
    dc_samples: int = 2 ** 15
    dc_span: float = 0.8
    window: str = "hann"
    outputs: tuple = ("snr_vs_t", "sinad_vs_t", "inl_vs_t", "supply_vs_t")
    spectrum_temperatures: tuple = ()
    workers: int = 1


SECTIONS = {
    "modulator": ModulatorConfig,
    "stimulus": StimulusSpec,
    "environment": Environment,
    "leakage": LeakageParams,
    "analog": AnalogParams,
    "decimator": DecimatorConfig,
    "sweep": SweepSettings,
}


@dataclass(frozen=True)
class ResolvedConfig:
    modulator: ModulatorConfig = ModulatorConfig()
    stimulus: StimulusSpec = StimulusSpec()
    environment: Environment = Environment()
    leakage: LeakageParams = LeakageParams()
    analog: AnalogParams = AnalogParams()
    decimator: DecimatorConfig = DecimatorConfig()
    sweep: SweepSettings = field(default_factory=SweepSettings)

    def to_dict(self) -> dict:
        out = {}
        for name in SECTIONS:
            d = dataclasses.asdict(getattr(self, name))
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
        return out

    def plan(self) -> ExperimentPlan:
        s = self.sweep
        return ExperimentPlan(
            temperatures=tuple(s.temperatures), n_chips=s.n_chips,
            stimulus=self.stimulus, modulator=self.modulator, leakage=self.leakage,
            analog=self.analog, decimator=self.decimator, environment=self.environment,
            outputs=tuple(s.outputs), n_samples=s.n_samples, dc_points=s.dc_points,
            dc_samples=s.dc_samples, dc_span=s.dc_span, window=s.window,
            spectrum_temperatures=tuple(s.spectrum_temperatures))


def _coerce(cls, key: str, value):
    ftype = {f.name: f for f in fields(cls)}[key]
    default = ftype.default
    if isinstance(default, tuple) or isinstance(value, list):
        return tuple(value) if isinstance(value, (list, tuple)) else (value,)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key} expects true/false, got {value!r}")
        return value
    if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def _apply(cfg: ResolvedConfig, section: str, values: dict) -> ResolvedConfig:
    if section not in SECTIONS:
        raise ConfigurationError(f"unknown config section [{section}]")
    cls = SECTIONS[section]
    known = {f.name for f in fields(cls)}
    changes = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigurationError(f"unknown config key {section}.{key}")
        changes[key] = _coerce(cls, key, value)
    current = getattr(cfg, section)
    try:
        updated = replace(current, **changes)
    except TypeError as exc:
        raise ConfigurationError(f"[{section}]: {exc}") from None
    # keep the decimator locked to the modulator rate unless set explicitly
    out = replace(cfg, **{section: updated})
    if section == "modulator":
        dec = out.decimator
        if "osr" not in values and "f_s" not in values:
            return out
        out = replace(out, decimator=replace(dec, osr=updated.osr, f_s=updated.f_s))
    return out


def parse_override(text: str):
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} is not of the form section.key=value")
    key, _, raw = text.partition("=")
    key = key.strip()
    if key.count(".") != 1:
        raise ConfigurationError(f"override key {key!r} must be section.key")
    section, name = key.split(".")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return section, name, value


def load_config(path=None, overrides=()) -> ResolvedConfig:
    """Defaults, then the TOML file, then ``section.key=value`` overrides."""
    cfg = ResolvedConfig()
    if path is not None:
        try:
            data = tomllib.loads(Path(path).read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from None
        for section, values in data.items():
            if not isinstance(values, dict):
                raise ConfigurationError(f"unknown top-level config key {section}")
            cfg = _apply(cfg, section, values)
    for text in overrides:
        section, name, value = parse_override(text)
        cfg = _apply(cfg, section, {name: value})
    return cfg


def to_toml(cfg: ResolvedConfig) -> str:
    """Serialise a configuration (None values are omitted)."""
    lines = []
    for section, values in cfg.to_dict().items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            if value is None:
                continue
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)
