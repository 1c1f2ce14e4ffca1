"""Temperature-dependent non-ideality models.

Leakage physics (junction and subthreshold channel leakage), dummy-device
compensation residuals, sampled thermal noise, the CMFB disturbance, a
supply-current estimate and the static electromigration sizing check. The
per-(chip, temperature) results are bundled into a :class:`NonidealitySet`
that the modulator consumes.

Temperatures are in degrees Celsius at the API boundary and converted to
kelvin internally.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from scipy.constants import Boltzmann, elementary_charge, zero_Celsius

from .errors import ConfigurationError

if TYPE_CHECKING:
    from .modulator import ModulatorConfig

T_MIN = -55.0
T_MAX = 350.0
V_BOOST_MAX = 0.3


def kelvin(t_celsius: float) -> float:
    return t_celsius + zero_Celsius


@dataclass(frozen=True)
class Environment:
    """Operating point of one virtual chip.

    ``chip`` selects the per-chip process draws; ``n_chips`` is the size of
    the Monte-Carlo population the chip belongs to. ``ideal`` switches every
    non-ideality off.
    """

    temperature: float = 25.0
    seed: int = 0
    sigma_mismatch: float = 2e-5
    sigma_mirror: float = 0.01
    v_boost: float = 0.2
    n_chips: int = 5
    chip: int = 0
    ideal: bool = False

    def __post_init__(self):
        if not T_MIN <= self.temperature <= T_MAX:
            raise ConfigurationError(
                f"temperature {self.temperature} degC outside [{T_MIN}, {T_MAX}]")
        if self.sigma_mismatch < 0 or self.sigma_mirror < 0:
            raise ConfigurationError("mismatch sigmas must be >= 0")
        if not 0.0 <= self.v_boost <= V_BOOST_MAX:
            raise ConfigurationError(
                f"v_boost {self.v_boost} V outside [0, {V_BOOST_MAX}] (gate rating)")
        if self.n_chips < 1:
            raise ConfigurationError("n_chips must be >= 1")
        if not 0 <= self.chip:
            raise ConfigurationError("chip index must be >= 0")
        if self.seed < 0:
            raise ConfigurationError("seed must be >= 0")


@dataclass(frozen=True)
class LeakageParams:
    """Leakage model parameters (calibrated, not measured values)."""

    i_ref: float = 1e-14          # A, junction leakage per node at t_ref
    t_ref: float = 25.0           # degC
    t_double: float = 12.0        # K per doubling of junction leakage
    i0_ch: float = 1e-7           # A, channel current at v_gs = v_th
    n_sub: float = 1.4
    v_th0: float = 0.5            # V at t_ref
    tc_vth: float = 1e-3          # V/K, threshold decrease per kelvin

    def __post_init__(self):
        for name in ("i_ref", "t_double", "i0_ch", "v_th0", "tc_vth"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"leakage.{name} must be positive")
        if not 1.0 <= self.n_sub <= 2.0:
            raise ConfigurationError("leakage.n_sub must lie in [1, 2]")


@dataclass(frozen=True)
class AnalogParams:
    """Calibrated behavioural parameters for noise, distortion and supply.

    None of these come from a datasheet; they are tuned so that one parameter
    set reproduces the measured SNR/SINAD levels and trends (see
    ``scripts/calibrate.py``).
    """

    excess_noise_rms: float = 2.80e-4     # V, input-referred broadband noise
    hd3_base: float = 4.24e-4             # V/step cubic droop at t_ref, full scale
    hd3_tempexp: float = 1.5              # exponent on absolute-temperature ratio
    hd3_chip_sigma: float = 0.05          # relative chip-to-chip spread
    signal_leak_fraction: float = 0.368   # junction leakage not tracked by dummies
    n_junction_nodes: int = 4             # compensated junctions per integrator node
    pair_leak_scale: float = 20.0         # input-pair junction size vs. a switch
    n_switches: int = 16                  # boosted pass-gates contributing to supply
    i_static: float = 24.4e-6             # A, bias current of the converter
    comparator_offset_sigma: float = 1e-3
    comparator_noise_rms: float = 1e-4
    cmfb_divider: int = 512               # CMFB clock = f_s / divider
    cmfb_amplitude: float = 0.0           # V, carrier at f_cmfb
    cmfb_sideband: float = 5e-5           # V, each sideband at f_cmfb +/- f_in
    collapse_temperature: float | None = None

    def __post_init__(self):
        for name in ("excess_noise_rms", "hd3_base", "hd3_chip_sigma",
                     "signal_leak_fraction", "pair_leak_scale", "i_static",
                     "comparator_offset_sigma", "comparator_noise_rms",
                     "cmfb_amplitude", "cmfb_sideband"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"analog.{name} must be >= 0")
        if self.cmfb_divider < 1:
            raise ConfigurationError("analog.cmfb_divider must be >= 1")


@dataclass(frozen=True)
class NonidealitySet:
    """Evaluated non-idealities for one (chip, temperature) point.

    Droops are volts lost per hold phase on each integrator; ``cubic1`` is the
    signal-dependent droop on the first integrator at full-scale input (it
    scales with ``(u / v_ref)**3``). Noise sigmas are per-sample rms values.
    """

    droop1: float = 0.0
    droop2: float = 0.0
    cubic1: float = 0.0
    sigma_kTC_1: float = 0.0
    sigma_kTC_2: float = 0.0
    sigma_input: float = 0.0
    comparator_offset: float = 0.0
    sigma_comparator: float = 0.0
    cmfb_frequency: float = 0.0
    cmfb_amplitude: float = 0.0
    cmfb_sideband: float = 0.0
    supply_current: float = 0.0
    temperature: float = 25.0

    @classmethod
    def ideal(cls, temperature: float = 25.0) -> NonidealitySet:
        return cls(temperature=temperature)

    @property
    def is_ideal(self) -> bool:
        return self == NonidealitySet.ideal(self.temperature)

    def as_dict(self) -> dict:
        return asdict(self)


class ChipDraws(NamedTuple):
    delta_junction: float
    delta_mirror: float
    comparator_offset: float
    hd3_scale: float


@dataclass(frozen=True)
class EmRule:
    layer: str = "internal"
    threshold: float = 45.0       # uA/um
    margin_required: float = 10.0

    def __post_init__(self):
        if self.threshold <= 0 or self.margin_required <= 0:
            raise ConfigurationError("EM threshold and margin must be positive")


EM_RULES = {
    "internal": EmRule("internal", 45.0, 10.0),
    "top": EmRule("top", 75.0, 10.0),
}


class EmResult(NamedTuple):
    density: float   # uA/um
    margin: float
    passed: bool


# --------------------------------------------------------------------------
# Leakage physics


def junction_leakage(t: float, p: LeakageParams = LeakageParams()) -> float:
    """Reverse junction leakage, doubling every ``p.t_double`` kelvin."""
    return p.i_ref * 2.0 ** ((t - p.t_ref) / p.t_double)


def compensated_leakage(i_leak: float, delta: float) -> float:
    """Signed residual after dummy-device cancellation with relative mismatch ``delta``."""
    return i_leak * delta


def input_pair_residual(i_leak: float, delta_mirror: float) -> float:
    """Residual at the input-pair common node compensated through a 4:1 mirror.

    The single dummy's current is mirrored four times, so a mirror gain error
    ``delta_mirror`` leaves ``4 * i_leak * delta_mirror`` uncancelled.
    """
    return 4.0 * i_leak * delta_mirror


def subthreshold_swing(t: float, n_sub: float) -> float:
    """Subthreshold swing in volts per decade."""
    t_k = kelvin(t)
    if t_k <= 0:
        raise ConfigurationError("temperature below absolute zero")
    return n_sub * Boltzmann * t_k / elementary_charge * math.log(10.0)


def threshold_voltage(t: float, p: LeakageParams = LeakageParams()) -> float:
    return p.v_th0 - p.tc_vth * (t - p.t_ref)


def channel_leakage(v_gs_off: float, t: float, p: LeakageParams = LeakageParams()) -> float:
    """Subthreshold channel current of an off switch.

    A clock boost of ``v_boost`` drives the off-state gate to ``-v_boost``.
    """
    s = subthreshold_swing(t, p.n_sub)
    return p.i0_ch * 10.0 ** ((v_gs_off - threshold_voltage(t, p)) / s)


def boost_factor(v_boost: float, t: float, p: LeakageParams = LeakageParams()) -> float:
    """Channel-leakage reduction obtained by a gate boost of ``v_boost``."""
    return channel_leakage(0.0, t, p) / channel_leakage(-v_boost, t, p)


def ktc_sigma(t: float, c: float) -> float:
    """rms kT/C noise voltage sampled on capacitance ``c``."""
    if c <= 0:
        raise ConfigurationError("capacitance must be positive")
    return math.sqrt(Boltzmann * kelvin(t) / c)


# --------------------------------------------------------------------------
# Electromigration


def em_check(current: float, width: float, rule: EmRule = EM_RULES["internal"]) -> EmResult:
    """Static current-density margin of a wire of ``width`` um carrying ``current`` A."""
    if not width > 0:
        raise ConfigurationError(f"wire width must be positive, got {width}")
    density = abs(current) * 1e6 / width
    margin = math.inf if density == 0 else rule.threshold / density
    return EmResult(density, margin, margin >= rule.margin_required)


# --------------------------------------------------------------------------
# Composition


def rng_for(seed: int, chip: int, *stream: int) -> np.random.Generator:
    """Independent generator for (seed, chip, stream...) so that serial and
    parallel evaluation draw identical numbers."""
    return np.random.default_rng(np.random.SeedSequence([seed, chip, *stream]))


def temperature_key(t: float) -> int:
    return int(round(kelvin(t) * 1000))


def chip_draws(env: Environment, analog: AnalogParams = AnalogParams()) -> ChipDraws:
    """Static process draws of chip ``env.chip``; independent of temperature."""
    rng = rng_for(env.seed, env.chip, 0)
    z = rng.standard_normal(4)
    return ChipDraws(
        delta_junction=env.sigma_mismatch * z[0],
        delta_mirror=env.sigma_mirror * z[1],
        comparator_offset=analog.comparator_offset_sigma * z[2],
        hd3_scale=max(0.0, 1.0 + analog.hd3_chip_sigma * z[3]),
    )


def build_nonidealities(cfg: ModulatorConfig, env: Environment,
                        leakage: LeakageParams = LeakageParams(),
                        analog: AnalogParams = AnalogParams()) -> NonidealitySet:
    """Evaluate every non-ideality for one chip at ``env.temperature``.

    Leakage discharges the integrating capacitors during the hold phase of
    length ``1 / (2 f_s)``; the mismatch residual gives a static droop while
    the fraction of junction leakage the fixed-bias dummies cannot follow
    produces a signal-dependent (odd, differential) droop. Above
    ``analog.collapse_temperature`` the compensation is switched off as a
    phenomenological stand-in for the measured collapse.
    """
    t = env.temperature
    if env.ideal:
        return NonidealitySet.ideal(t)

    draws = chip_draws(env, analog)
    delta_j, delta_m = draws.delta_junction, draws.delta_mirror
    signal_fraction = analog.signal_leak_fraction
    if analog.collapse_temperature is not None and t >= analog.collapse_temperature:
        delta_j, delta_m, signal_fraction = 1.0, 1.0, 1.0

    t_hold = 1.0 / (2.0 * cfg.f_s)
    i_junction = junction_leakage(t, leakage)
    i_node = analog.n_junction_nodes * compensated_leakage(i_junction, delta_j)
    i_channel = channel_leakage(-env.v_boost, t, leakage)
    i_static_droop = i_node + i_channel

    t_ratio = kelvin(t) / kelvin(leakage.t_ref)
    cubic_amp = analog.hd3_base * draws.hd3_scale * t_ratio ** analog.hd3_tempexp
    cubic_leak = signal_fraction * i_junction * t_hold / cfg.c1

    pair = input_pair_residual(analog.pair_leak_scale * i_junction, delta_m)
    supply = (analog.i_static + 2 * abs(i_node) + abs(pair)
              + analog.n_switches * i_channel)

    return NonidealitySet(
        droop1=i_static_droop * t_hold / cfg.c1,
        droop2=i_static_droop * t_hold / cfg.c2,
        cubic1=cubic_amp + cubic_leak,
        sigma_kTC_1=ktc_sigma(t, cfg.c1),
        sigma_kTC_2=ktc_sigma(t, cfg.c2),
        sigma_input=analog.excess_noise_rms,
        comparator_offset=draws.comparator_offset,
        sigma_comparator=analog.comparator_noise_rms,
        cmfb_frequency=cfg.f_s / analog.cmfb_divider,
        cmfb_amplitude=analog.cmfb_amplitude,
        cmfb_sideband=analog.cmfb_sideband,
        supply_current=supply,
        temperature=t,
    )
