"""Second-order single-bit CIFB delta-sigma modulator.

Single-ended equivalent of the fully differential two-phase switched-capacitor
loop. Per clock, with ``v`` the previous decision (one-sample DAC delay)::

    i1' = clip(i1 + a1*(u - v*v_ref) - droop1(u) + n1)
    i2' = clip(i2 + a2*(g12*i1' - v*v_ref) - droop2 + n2)
    v'  = quantize(i2')

``clip`` saturates at +/-v_dd. ``g12`` is the interstage gain; ``g12 = 1``
gives the textbook form, and any ``(a1, g12)`` pair with the same product
yields the same bitstream with the first integrator swing scaled by
``1 / g12``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .bitstream import Bitstream
from .errors import ConfigurationError, SimulationError
from .thermal import (AnalogParams, Environment, LeakageParams, NonidealitySet,
                      build_nonidealities, rng_for, temperature_key)


@dataclass(frozen=True)
class ModulatorConfig:
    f_s: float = 150e3
    osr: int = 512
    v_ref: float = 1.8
    v_ic: float = 0.9
    v_dd: float = 1.8
    a1: float = 0.25
    a2: float = 0.3
    g12: float = 2.0
    c1: float = 10e-12
    c2: float = 1e-12

    def __post_init__(self):
        if not self.f_s > 0:
            raise ConfigurationError("f_s must be positive")
        if self.osr < 2 or self.osr & (self.osr - 1):
            raise ConfigurationError(f"osr must be a power of two >= 2, got {self.osr}")
        if not 0 < self.v_ref <= self.v_dd:
            raise ConfigurationError("require 0 < v_ref <= v_dd")
        if not 0 <= self.v_ic <= self.v_dd:
            raise ConfigurationError("require 0 <= v_ic <= v_dd")
        if not (self.a1 > 0 and self.a2 > 0 and self.g12 > 0):
            raise ConfigurationError("loop coefficients must be positive")
        if not (self.c1 > 0 and self.c2 > 0):
            raise ConfigurationError("capacitances must be positive")

    @property
    def bandwidth(self) -> float:
        return self.f_s / (2 * self.osr)


@dataclass(frozen=True)
class ModulatorState:
    i1: float = 0.0
    i2: float = 0.0
    v_prev: int = 1


@dataclass(frozen=True)
class StimulusSpec:
    """Input waveform: ``dc_level + amplitude * sin(2 pi frequency t + phase)``.

    ``amplitude`` is the peak of the differential input in volts.
    """

    kind: str = "sine"
    amplitude: float = 0.85
    frequency: float = 25.177
    dc_level: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dc", "sine"):
            raise ConfigurationError(f"unknown stimulus kind {self.kind!r}")

    def validate(self, cfg: ModulatorConfig, in_band: bool = False):
        peak = abs(self.dc_level) + (abs(self.amplitude) if self.kind == "sine" else 0.0)
        if peak > cfg.v_ref:
            raise ConfigurationError(
                f"stimulus peak {peak:.4g} V exceeds v_ref {cfg.v_ref} V")
        if self.kind == "sine":
            limit = cfg.bandwidth if in_band else cfg.f_s / 2
            if not 0 < self.frequency < limit:
                raise ConfigurationError(
                    f"stimulus frequency {self.frequency} Hz outside (0, {limit}) Hz")

    def waveform(self, n: int, f_s: float) -> np.ndarray:
        u = np.full(n, float(self.dc_level))
        if self.kind == "sine":
            t = np.arange(n) / f_s
            u += self.amplitude * np.sin(2 * np.pi * self.frequency * t + self.phase)
        return u


def coherent_frequency(f: float, f_s: float, n: int) -> float:
    """Nearest frequency with an odd number of cycles in an ``n``-sample record."""
    df = f_s / n
    k = max(1, int(round((f / df - 1) / 2)) * 2 + 1)
    return k * df


def quantize(y: float, offset: float = 0.0, noise: float = 0.0) -> int:
    """Comparator decision; an exact zero resolves to +1."""
    return 1 if y + offset + noise >= 0.0 else -1


def _clip(x: float, rail: float) -> float:
    if x > rail:
        return rail
    if x < -rail:
        return -rail
    return x


def step(state: ModulatorState, u: float, cfg: ModulatorConfig,
         nid: NonidealitySet | None = None,
         n1: float = 0.0, n2: float = 0.0, n_cmp: float = 0.0):
    """Advance the loop by one clock; returns ``(new_state, bit)``.

    ``n1``, ``n2`` and ``n_cmp`` are the noise samples for this clock (drawn
    by the caller from the sigmas in ``nid``).
    """
    if nid is None:
        nid = NonidealitySet.ideal()
    values = (state.i1, state.i2, u, n1, n2, n_cmp)
    if not all(math.isfinite(x) for x in values):
        raise SimulationError(f"non-finite modulator input or state: {values}")
    x = u / cfg.v_ref
    d1 = nid.droop1 + nid.cubic1 * (x * x * x)
    i1 = state.i1 + cfg.a1 * (u - state.v_prev * cfg.v_ref) - d1 + n1
    i1 = _clip(i1, cfg.v_dd)
    i2 = state.i2 + cfg.a2 * (cfg.g12 * i1 - state.v_prev * cfg.v_ref) - nid.droop2 + n2
    if not (math.isfinite(i1) and math.isfinite(i2)):
        raise SimulationError("modulator state became non-finite")
    i2 = _clip(i2, cfg.v_dd)
    bit = quantize(i2, nid.comparator_offset, n_cmp)
    return ModulatorState(i1, i2, bit), bit


@numba.njit(cache=True)
def _loop(u, n1, n2, nc, a1, a2, g12, v_ref, v_dd, droop1, cubic1, droop2,
          offset, i1, i2, v, bits, trace1, trace2):
    tracing = trace1.size > 0
    for k in range(u.size):
        uk = u[k]
        x = uk / v_ref
        d1 = droop1 + cubic1 * (x * x * x)
        i1 = i1 + a1 * (uk - v * v_ref) - d1 + n1[k]
        if not np.isfinite(i1):
            return k, i1, i2, v
        if i1 > v_dd:
            i1 = v_dd
        elif i1 < -v_dd:
            i1 = -v_dd
        i2 = i2 + a2 * (g12 * i1 - v * v_ref) - droop2 + n2[k]
        if not np.isfinite(i2):
            return k, i1, i2, v
        if i2 > v_dd:
            i2 = v_dd
        elif i2 < -v_dd:
            i2 = -v_dd
        if i2 + offset + nc[k] >= 0.0:
            v = 1.0
        else:
            v = -1.0
        bits[k] = v
        if tracing:
            trace1[k] = i1
            trace2[k] = i2
    return -1, i1, i2, v


class SimulationResult(NamedTuple):
    bitstream: Bitstream
    state: ModulatorState
    nid: NonidealitySet
    i1: np.ndarray | None
    i2: np.ndarray | None


def drive_signals(cfg: ModulatorConfig, env: Environment, stim: StimulusSpec,
                  n_samples: int, nid: NonidealitySet):
    """Input and noise sequences for a run: ``(u, n1, n2, n_cmp)``.

    ``u`` holds the stimulus plus input-referred noise and the CMFB
    disturbance. kT/C noise enters each integrator scaled by its gain, with
    two sampling phases per clock.
    """
    clean = stim.waveform(n_samples, cfg.f_s)
    if nid.is_ideal:
        zeros = np.zeros(n_samples)
        return clean, zeros, zeros, zeros
    rng = rng_for(env.seed, env.chip, temperature_key(env.temperature), 1)
    z = rng.standard_normal((4, n_samples))
    u = clean + nid.sigma_input * z[0]
    if nid.cmfb_amplitude or nid.cmfb_sideband:
        carrier = np.cos(2 * np.pi * nid.cmfb_frequency * np.arange(n_samples) / cfg.f_s)
        u += nid.cmfb_amplitude * carrier
        if stim.kind == "sine" and stim.amplitude:
            tone = (clean - stim.dc_level) / stim.amplitude
            u += 2.0 * nid.cmfb_sideband * carrier * tone
    n1 = cfg.a1 * math.sqrt(2.0) * nid.sigma_kTC_1 * z[1]
    n2 = cfg.a2 * math.sqrt(2.0) * nid.sigma_kTC_2 * z[2]
    nc = nid.sigma_comparator * z[3]
    return u, n1, n2, nc


def simulate(cfg: ModulatorConfig, env: Environment, stim: StimulusSpec,
             n_samples: int, nid: NonidealitySet | None = None,
             leakage: LeakageParams = LeakageParams(),
             analog: AnalogParams = AnalogParams(),
             state: ModulatorState = ModulatorState(),
             trace: bool = False) -> SimulationResult:
    """Run the modulator; optionally record both integrator trajectories."""
    if n_samples < 2 * cfg.osr:
        raise ConfigurationError(f"n_samples must be >= 2*osr = {2 * cfg.osr}")
    stim.validate(cfg)
    if nid is None:
        nid = build_nonidealities(cfg, env, leakage, analog)
    u, n1, n2, nc = drive_signals(cfg, env, stim, n_samples, nid)

    bits = np.empty(n_samples, dtype=np.float64)
    t1 = np.empty(n_samples if trace else 0)
    t2 = np.empty(n_samples if trace else 0)
    err, i1, i2, v = _loop(u, n1, n2, nc, cfg.a1, cfg.a2, cfg.g12, cfg.v_ref,
                           cfg.v_dd, nid.droop1, nid.cubic1, nid.droop2,
                           nid.comparator_offset, float(state.i1),
                           float(state.i2), float(state.v_prev), bits, t1, t2)
    if err >= 0:
        raise SimulationError(f"modulator state became non-finite at sample {err}")
    meta = {"seed": env.seed, "chip": env.chip, "temperature": env.temperature}
    bs = Bitstream(bits.astype(np.int8), cfg.f_s, cfg.v_ref, meta)
    return SimulationResult(bs, ModulatorState(i1, i2, int(v)), nid,
                            t1 if trace else None, t2 if trace else None)


def run(cfg: ModulatorConfig, env: Environment, stim: StimulusSpec,
        n_samples: int, nid: NonidealitySet | None = None,
        leakage: LeakageParams = LeakageParams(),
        analog: AnalogParams = AnalogParams()) -> Bitstream:
    """Simulate ``n_samples`` clocks from the reset state and return the bits."""
    return simulate(cfg, env, stim, n_samples, nid, leakage, analog).bitstream
