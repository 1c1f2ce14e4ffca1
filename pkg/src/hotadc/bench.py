"""Experiment orchestration: temperature sweeps over virtual chip populations,
single-point spectra, DC transfer sweeps and capture ingestion."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import bitstream as bsio
from .bitstream import Bitstream
from .decimator import DecimatorConfig, decimate, settled
from .errors import ConfigurationError, InputError
from .metrics import MetricsReport, Spectrum, inl_from_sweep, psd, snr_sinad
from .modulator import ModulatorConfig, StimulusSpec, coherent_frequency, run
from .thermal import (AnalogParams, Environment, LeakageParams, NonidealitySet,
                      build_nonidealities)

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
OUTPUTS = ("snr_vs_t", "sinad_vs_t", "inl_vs_t", "supply_vs_t", "spectrum_at")
METRIC_OF = {"snr_vs_t": "snr", "sinad_vs_t": "sinad",
             "inl_vs_t": "inl_worst", "supply_vs_t": "supply_current"}
DEFAULT_TEMPERATURES = tuple(float(t) for t in range(-40, 261, 10))


@dataclass(frozen=True)
class ExperimentPlan:
    temperatures: tuple = DEFAULT_TEMPERATURES
    n_chips: int = 5
    stimulus: StimulusSpec = StimulusSpec()
    modulator: ModulatorConfig = ModulatorConfig()
    leakage: LeakageParams = LeakageParams()
    analog: AnalogParams = AnalogParams()
    decimator: DecimatorConfig = DecimatorConfig()
    environment: Environment = Environment()
    outputs: tuple = ("snr_vs_t", "sinad_vs_t", "inl_vs_t", "supply_vs_t")
    n_samples: int = 2 ** 19
    dc_points: int = 33
    dc_samples: int = 2 ** 15
    dc_span: float = 0.8
    window: str = "hann"
    spectrum_temperatures: tuple = ()

    def __post_init__(self):
        temps = tuple(float(t) for t in self.temperatures)
        object.__setattr__(self, "temperatures", temps)
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "spectrum_temperatures",
                           tuple(float(t) for t in self.spectrum_temperatures))
        if not temps:
            raise ConfigurationError("plan needs at least one temperature")
        if list(temps) != sorted(temps):
            raise ConfigurationError("plan temperatures must be sorted ascending")
        if self.n_chips < 1:
            raise ConfigurationError("n_chips must be >= 1")
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise ConfigurationError(f"unknown plan outputs: {sorted(unknown)}")
        if self.decimator.osr != self.modulator.osr:
            raise ConfigurationError("decimator osr must match modulator osr")
        if self.decimator.f_s != self.modulator.f_s:
            raise ConfigurationError("decimator f_s must match modulator f_s")
        n = self.n_samples
        if n & (n - 1) or n < 8 * self.modulator.osr:
            raise ConfigurationError("n_samples must be a power of two >= 8*osr")
        if self.dc_samples < 8 * self.modulator.osr:
            raise ConfigurationError("dc_samples must be >= 8*osr")
        if self.dc_points < 33:
            raise ConfigurationError("dc_points must be >= 33")
        if not 0 < self.dc_span <= 1:
            raise ConfigurationError("dc_span must lie in (0, 1]")
        missing = set(self.spectrum_temperatures) - set(temps)
        if missing:
            raise ConfigurationError(f"spectrum temperatures not in plan: {sorted(missing)}")
        self.stimulus.validate(self.modulator, in_band=self.stimulus.kind == "sine")

    def tone(self) -> StimulusSpec:
        """Stimulus with its frequency snapped to a coherent bin of the record."""
        if self.stimulus.kind != "sine":
            return self.stimulus
        f = coherent_frequency(self.stimulus.frequency, self.modulator.f_s, self.n_samples)
        return replace(self.stimulus, frequency=f)

    def env(self, temperature: float, chip: int) -> Environment:
        return replace(self.environment, temperature=float(temperature), chip=chip,
                       n_chips=self.n_chips)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["temperatures"] = list(self.temperatures)
        return d


def nonidealities(plan: ExperimentPlan, temperature: float, chip: int) -> NonidealitySet:
    return build_nonidealities(plan.modulator, plan.env(temperature, chip),
                               plan.leakage, plan.analog)


def dc_sweep(plan: ExperimentPlan, temperature: float, chip: int):
    """Settled decimated mean output for ``plan.dc_points`` DC inputs spanning
    ``+/- dc_span * v_ref``. Returns ``(levels, codes)`` in volts."""
    cfg = plan.modulator
    env = plan.env(temperature, chip)
    nid = build_nonidealities(cfg, env, plan.leakage, plan.analog)
    levels = np.linspace(-plan.dc_span, plan.dc_span, plan.dc_points) * cfg.v_ref
    codes = np.empty_like(levels)
    for i, level in enumerate(levels):
        stim = StimulusSpec(kind="dc", amplitude=0.0, dc_level=float(level))
        bs = run(cfg, env, stim, plan.dc_samples, nid=nid)
        codes[i] = settled(decimate(bs, plan.decimator), plan.decimator).mean()
    return levels, codes


def spectrum_for(plan: ExperimentPlan, temperature: float, chip: int,
                 nid: NonidealitySet | None = None) -> Spectrum:
    env = plan.env(temperature, chip)
    if nid is None:
        nid = build_nonidealities(plan.modulator, env, plan.leakage, plan.analog)
    bs = run(plan.modulator, env, plan.tone(), plan.n_samples, nid=nid)
    return psd(bs, window=plan.window, n_fft=plan.n_samples)


def run_point(plan: ExperimentPlan, temperature: float, chip: int,
              keep_spectrum: bool = False) -> MetricsReport:
    """All metrics of one (temperature, chip) point."""
    cfg = plan.modulator
    nid = nonidealities(plan, temperature, chip)
    spec = spectrum_for(plan, temperature, chip, nid)
    tone = plan.tone()
    tm = snr_sinad(spec, tone.frequency if tone.kind == "sine" else None, cfg.bandwidth)
    inl = math.nan
    if "inl_vs_t" in plan.outputs:
        levels, codes = dc_sweep(plan, temperature, chip)
        inl = inl_from_sweep(levels, codes, full_scale=cfg.v_ref).inl_worst
    supply = plan.analog.i_static if nid.is_ideal else nid.supply_current
    return MetricsReport.from_tone(
        tm, cfg.bandwidth, supply * cfg.v_dd, inl_worst=inl, supply_current=supply,
        temperature=float(temperature), chip=chip,
        spectrum=spec if keep_spectrum else None)


def spectrum_at(plan: ExperimentPlan, temperature: float, chip: int = 0) -> Spectrum:
    if float(temperature) not in plan.temperatures:
        raise InputError(f"temperature {temperature} degC is not in the plan")
    if not 0 <= chip < plan.n_chips:
        raise InputError(f"chip {chip} outside plan population of {plan.n_chips}")
    return spectrum_for(plan, temperature, chip)


def _point_task(args):
    plan, temperature, chip = args
    try:
        return temperature, chip, run_point(plan, temperature, chip), None
    except Exception as exc:  # noqa: BLE001 - isolate each point
        return temperature, chip, None, f"{type(exc).__name__}: {exc}"


@dataclass
class SweepResult:
    plan: ExperimentPlan
    points: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def values(self, metric: str, temperature: float) -> np.ndarray:
        return np.array([getattr(self.points[(temperature, c)], metric)
                         for c in range(self.plan.n_chips)
                         if (temperature, c) in self.points])

    def aggregate(self, metric: str):
        """Rows ``(temperature, mean, mean - 3 sigma, mean + 3 sigma, count)``."""
        rows = []
        for t in self.plan.temperatures:
            v = self.values(metric, t)
            if v.size == 0:
                rows.append((t, math.nan, math.nan, math.nan, 0))
                continue
            mean = float(v.mean())
            sigma = float(v.std(ddof=1)) if v.size > 1 else 0.0
            rows.append((t, mean, mean - 3 * sigma, mean + 3 * sigma, int(v.size)))
        return rows

    def mean(self, metric: str) -> np.ndarray:
        return np.array([r[1] for r in self.aggregate(metric)])


def run_sweep(plan: ExperimentPlan, workers: int = 1, out_dir=None) -> SweepResult:
    """Evaluate every (temperature, chip) point; failures are recorded per point."""
    tasks = [(plan, t, c) for t in plan.temperatures for c in range(plan.n_chips)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_point_task, tasks))
    else:
        outcomes = [_point_task(task) for task in tasks]
    result = SweepResult(plan)
    for t, c, report, err in outcomes:
        if err is None:
            result.points[(t, c)] = report
        else:
            log.warning("point T=%s chip=%s failed: %s", t, c, err)
            result.failures[(t, c)] = err
    if out_dir is not None:
        write_sweep(result, out_dir)
    return result


# --------------------------------------------------------------------------
# Output files


def provenance(config: dict) -> dict:
    return {"schema": f"hotadc-csv v{CSV_SCHEMA_VERSION}",
            "seed": config.get("environment", {}).get("seed"),
            "config": json.dumps(config, sort_keys=True, default=str)}


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_rows(path: Path, header: dict, columns, rows):
    with open(path, "w", newline="") as fh:
        for key, value in header.items():
            fh.write(f"# {key} = {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_sweep(result: SweepResult, out_dir, config: dict | None = None) -> list:
    """One CSV per requested output plus its aggregate, and a gnuplot script."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = provenance(config if config is not None else result.plan.to_dict())
    plan = result.plan
    written = []
    for name in plan.outputs:
        if name == "spectrum_at":
            for t in plan.spectrum_temperatures:
                spec = spectrum_at(plan, t, 0)
                path = out / f"spectrum_at_{t:g}C.csv"
                written.append(spec.to_csv(path, header))
            continue
        metric = METRIC_OF[name]
        rows = [(t, c, getattr(result.points[(t, c)], metric))
                for t in plan.temperatures for c in range(plan.n_chips)
                if (t, c) in result.points]
        written.append(_write_rows(out / f"{name}.csv", header,
                                   ["temperature", "chip", "value"], rows))
        agg = [r[:4] for r in result.aggregate(metric)]
        written.append(_write_rows(out / f"{name}_aggregate.csv", header,
                                   ["temperature", "mean", "lo3sigma", "hi3sigma"], agg))
    if result.failures:
        rows = [(t, c, msg) for (t, c), msg in sorted(result.failures.items())]
        written.append(_write_rows(out / "failures.csv", header,
                                   ["temperature", "chip", "error"], rows))
    written.append(write_gnuplot(plan, out))
    return written


_GNUPLOT_PANEL = """\
set title "{title}"
set xlabel "Temperature [degC]"
set ylabel "{ylabel}"
plot "{name}.csv" using 1:3 with points pt 6 title "chips", \\
     "{name}_aggregate.csv" using 1:2 with lines lw 2 title "mean", \\
     "" using 1:3 with lines dt 2 title "-3 sigma", \\
     "" using 1:4 with lines dt 2 title "+3 sigma"
"""


def write_gnuplot(plan: ExperimentPlan, out: Path) -> Path:
    labels = {"snr_vs_t": ("SNR", "SNR [dB]"), "sinad_vs_t": ("SINAD", "SINAD [dB]"),
              "inl_vs_t": ("Worst INL", "INL [V]"),
              "supply_vs_t": ("Supply current", "I_DD [A]")}
    parts = ["set datafile separator ','", "set datafile commentschars '#'",
             "set key autotitle columnhead", "set terminal pngcairo size 800,500"]
    for name in plan.outputs:
        if name in labels:
            title, ylabel = labels[name]
            parts.append(f'set output "{name}.png"')
            parts.append(_GNUPLOT_PANEL.format(title=title, ylabel=ylabel, name=name))
    for t in plan.spectrum_temperatures:
        parts.append(f'set output "spectrum_at_{t:g}C.png"')
        parts.append("set logscale x\nset xlabel \"Frequency [Hz]\"\nset ylabel \"dBFS\"")
        parts.append(f'plot "spectrum_at_{t:g}C.csv" using 1:2 with lines title "{t:g} degC"')
        parts.append("unset logscale x")
    path = out / "plots.gp"
    path.write_text("\n".join(parts) + "\n")
    return path


# --------------------------------------------------------------------------
# Captures


def _threshold(values: np.ndarray, threshold: float | None) -> np.ndarray:
    if threshold is None:
        lo, hi = float(values.min()), float(values.max())
        threshold = 0.5 * (lo + hi) if hi > lo else (0.0 if lo != 0 else -1.0)
    return np.where(values >= threshold, 1, -1).astype(np.int8)


def ingest_capture(path, fmt: str = "auto", f_s: float | None = None,
                   v_ref: float | None = None, threshold: float | None = None) -> Bitstream:
    """Load an acquired or exported bitstream.

    ``fmt`` is ``"csv"`` (two columns: time or index, level), ``"bits"`` (one
    level per line, or a file written by :func:`hotadc.bitstream.save`) or
    ``"auto"``. Levels are thresholded at mid-scale unless ``threshold`` is
    given. The sample rate comes from a ``# f_s = ...`` header line or the
    ``f_s`` argument (the argument wins).
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    with open(path, "rb") as fh:
        if fh.read(len(bsio.BINARY_MAGIC)) == bsio.BINARY_MAGIC:
            bs = bsio.load(path)
            return replace(bs, f_s=f_s or bs.f_s, v_ref=v_ref or bs.v_ref)

    header, data = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                header.append(s)
            else:
                data.append((lineno, s))
    meta = bsio.parse_header(header)
    if fmt == "auto":
        fmt = "csv" if data and "," in data[0][1] else "bits"
    if fmt not in ("csv", "bits"):
        raise ConfigurationError(f"unknown capture format {fmt!r}")

    values = []
    for i, (lineno, s) in enumerate(data):
        cells = [c.strip() for c in s.split(",")] if fmt == "csv" else [s]
        if fmt == "csv" and len(cells) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
        try:
            values.append(float(cells[-1]))
        except ValueError:
            if i == 0 and fmt == "csv":
                continue  # column titles
            raise InputError(f"{path}:{lineno}: malformed value {cells[-1]!r}") from None
    if not values:
        raise InputError(f"{path}: no samples")
    arr = np.asarray(values)
    if not np.all(np.isfinite(arr)):
        bad = data[int(np.flatnonzero(~np.isfinite(arr))[0])][0]
        raise InputError(f"{path}:{bad}: non-finite value")
    if meta.get("format") == "01" and threshold is None:
        threshold = 0.5

    rate = f_s if f_s is not None else meta.get("f_s")
    if rate is None:
        raise ConfigurationError(f"{path}: sample rate missing (no f_s header or flag)")
    ref = v_ref if v_ref is not None else float(meta.get("v_ref", 1.0))
    return Bitstream(_threshold(arr, threshold), float(rate), ref)
