"""Spectral and static converter metrics.

Spectra are power per bin (V^2), normalised so that the bins of a tone sum
to its mean-square value and the whole one-sided spectrum sums to the
record's mean-square value. ``Spectrum.db`` expresses bins relative to a
full-scale sine of amplitude ``full_scale``.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.signal import get_window, welch

from .bitstream import Bitstream
from .errors import InputError, NoSignalToneError

log = logging.getLogger(__name__)

WINDOWS = {"hann": "hann", "blackman": "blackman", "blackmanharris": "blackmanharris",
           "rect": "boxcar", "boxcar": "boxcar"}


@dataclass(frozen=True, eq=False)
class Spectrum:
    freqs: np.ndarray
    power: np.ndarray
    window: str
    n_fft: int
    enbw: float
    f_s: float
    full_scale: float = 1.0
    n_avg: int = 1

    @property
    def df(self) -> float:
        return self.f_s / self.n_fft

    @property
    def db(self) -> np.ndarray:
        """Bins in dB relative to a full-scale sine (dBFS)."""
        ref = self.full_scale ** 2 / 2.0
        return 10.0 * np.log10(np.maximum(self.power, 1e-300) / ref)

    @property
    def bins(self):
        return list(zip(self.freqs.tolist(), self.db.tolist()))

    def total_power(self) -> float:
        return float(self.power.sum())

    def scaled(self, gain: np.ndarray | float) -> Spectrum:
        return Spectrum(self.freqs, self.power * gain, self.window, self.n_fft,
                        self.enbw, self.f_s, self.full_scale, self.n_avg)

    def to_csv(self, path, header: dict | None = None) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            for key, value in (header or {}).items():
                fh.write(f"# {key} = {value}\n")
            writer = csv.writer(fh)
            writer.writerow(["frequency_hz", "power_dbfs"])
            for f, p in zip(self.freqs, self.db):
                writer.writerow([repr(float(f)), f"{p:.4f}"])
        return path


def psd(data, f_s: float | None = None, window: str = "hann", n_fft: int | None = None,
        full_scale: float | None = None) -> Spectrum:
    """Windowed, averaged (50 % overlap) periodogram.

    ``data`` may be a :class:`Bitstream` (converted to DAC volts, sample rate
    and full scale taken from it) or any real sequence. ``n_fft`` defaults to
    the largest power of two not exceeding the record length.
    """
    if isinstance(data, Bitstream):
        x = data.volts()
        f_s = data.f_s if f_s is None else f_s
        full_scale = data.v_ref if full_scale is None else full_scale
    else:
        x = np.asarray(data, dtype=float)
    if f_s is None:
        raise InputError("sample rate required for a plain sequence")
    full_scale = 1.0 if full_scale is None else full_scale
    if n_fft is None:
        n_fft = 1 << (x.size.bit_length() - 1) if x.size else 0
    if n_fft < 2 or n_fft & (n_fft - 1):
        raise InputError(f"n_fft must be a power of two >= 2, got {n_fft}")
    if x.size < n_fft:
        raise InputError(f"record of {x.size} samples shorter than n_fft={n_fft}")
    try:
        win_name = WINDOWS[window]
    except KeyError:
        raise InputError(f"unknown window {window!r}") from None
    w = get_window(win_name, n_fft)
    freqs, dens = welch(x, fs=f_s, window=w, nperseg=n_fft, noverlap=n_fft // 2,
                        detrend=False, scaling="density")
    n_avg = 1 + (x.size - n_fft) // (n_fft - n_fft // 2)
    enbw = n_fft * float(np.sum(w ** 2)) / float(np.sum(w)) ** 2
    return Spectrum(freqs, dens * (f_s / n_fft), window, n_fft, enbw, f_s, full_scale, n_avg)


class ToneMetrics(NamedTuple):
    snr: float
    sinad: float
    thd: float
    sfdr: float
    signal_power: float
    noise_power: float
    distortion_power: float
    f_tone: float


def _span(k: int, span: int, lo: int, hi: int):
    return max(k - span, lo), min(k + span, hi)


def alias(f: float, f_s: float) -> float:
    f = math.fmod(f, f_s)
    return f_s - f if f > f_s / 2 else f


def snr_sinad(spec: Spectrum, f_tone: float | None = None, bw: float | None = None,
              n_harmonics: int = 9, span: int = 3, dc_guard: int = 1) -> ToneMetrics:
    """SNR, SINAD, THD (dBc) and SFDR (dB) of a single-tone record.

    The in-band region runs from bin ``dc_guard + 1`` to ``bw``. The signal is
    the peak within ``span`` bins of ``f_tone`` (largest in-band bin when
    ``f_tone`` is None) plus ``span`` bins either side. Harmonics 2 to
    ``n_harmonics`` (aliased) that fall in band are integrated the same way;
    the noise expected under them is subtracted from the harmonic power and
    credited to the noise.
    """
    df = spec.df
    bw = spec.f_s / 2 if bw is None else bw
    k_lo = dc_guard + 1
    k_hi = min(int(math.floor(bw / df + 1e-9)), spec.power.size - 1)
    if k_hi <= k_lo:
        raise InputError("analysis band contains no bins")
    p = spec.power
    inband = np.zeros(p.size, dtype=bool)
    inband[k_lo:k_hi + 1] = True

    if f_tone is None:
        k0 = k_lo + int(np.argmax(p[k_lo:k_hi + 1]))
    else:
        k0 = int(round(f_tone / df))
        if not k_lo <= k0 <= k_hi:
            raise NoSignalToneError(f"tone at {f_tone} Hz outside analysis band")
        a, b = _span(k0, span, k_lo, k_hi)
        k0 = a + int(np.argmax(p[a:b + 1]))
    floor = float(np.median(p[inband]))
    if not p[k0] >= 10 ** 0.6 * floor:
        raise NoSignalToneError(
            f"no tone: peak bin {10 * math.log10(max(p[k0], 1e-300) / max(floor, 1e-300)):.1f} dB "
            "above the in-band median (need 6 dB)")

    sig_mask = np.zeros(p.size, dtype=bool)
    a, b = _span(k0, span, k_lo, k_hi)
    sig_mask[a:b + 1] = True
    p_sig = float(p[sig_mask].sum())
    f0 = k0 * df

    harm_mask = np.zeros(p.size, dtype=bool)
    for h in range(2, n_harmonics + 1):
        kh = int(round(alias(h * f0, spec.f_s) / df))
        if k_lo <= kh <= k_hi:
            a, b = _span(kh, span, k_lo, k_hi)
            harm_mask[a:b + 1] = True
    harm_mask &= ~sig_mask

    noise_mask = inband & ~sig_mask & ~harm_mask
    p_noise_bins = float(p[noise_mask].sum())
    p_harm_raw = float(p[harm_mask].sum())
    n_noise = int(noise_mask.sum())
    if n_noise == 0:
        raise InputError("no noise bins left in band: record too short for this bandwidth")
    density = p_noise_bins / n_noise
    noise_under_harm = min(density * int(harm_mask.sum()), p_harm_raw)
    p_noise = p_noise_bins + noise_under_harm
    p_dist = p_harm_raw - noise_under_harm

    spur_mask = inband & ~sig_mask
    if spur_mask.any():
        idx = np.flatnonzero(spur_mask)
        ks = int(idx[np.argmax(p[idx])])
        a, b = _span(ks, span, k_lo, k_hi)
        spur = float(p[a:b + 1][spur_mask[a:b + 1]].sum())
    else:
        spur = 0.0

    def ratio_db(num, den):
        if den <= 0:
            return math.inf
        if num <= 0:
            return -math.inf
        return 10.0 * math.log10(num / den)

    return ToneMetrics(
        snr=ratio_db(p_sig, p_noise),
        sinad=ratio_db(p_sig, p_noise + p_dist),
        thd=ratio_db(p_dist, p_sig),
        sfdr=ratio_db(p_sig, spur),
        signal_power=p_sig,
        noise_power=p_noise,
        distortion_power=p_dist,
        f_tone=f0,
    )


def enob(sinad: float) -> float:
    return (sinad - 1.76) / 6.02


def schreier_fom(sinad: float, bw: float, power: float) -> float:
    """SINAD + 10 log10(BW / P), BW in Hz and P in W."""
    if not (bw > 0 and power > 0):
        raise InputError("bandwidth and power must be positive")
    return sinad + 10.0 * math.log10(bw / power)


class InlResult(NamedTuple):
    inl_worst: float
    curve: np.ndarray
    gain: float
    offset: float
    monotonic: bool


def inl_from_sweep(dc_levels, codes, fit: str = "least-squares",
                   full_scale: float | None = None, min_points: int = 33,
                   monotonic_tol: float = 0.0) -> InlResult:
    """Integral non-linearity of a DC transfer curve, in volts.

    ``codes`` are the settled mean outputs at each ``dc_levels`` input. The
    reference line is a least-squares fit or the line through the end
    points. Non-monotone transfers are flagged (and logged), not rejected.
    """
    x = np.asarray(dc_levels, dtype=float)
    y = np.asarray(codes, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InputError("dc_levels and codes must be 1-D and equally long")
    if x.size < min_points:
        raise InputError(f"INL needs at least {min_points} sweep points, got {x.size}")
    if full_scale is not None and np.ptp(x) < 0.8 * 2 * full_scale:
        raise InputError("sweep must span at least 80 % of the input range")
    order = np.argsort(x)
    x, y = x[order], y[order]
    if fit == "least-squares":
        gain, offset = np.polyfit(x, y, 1)
    elif fit == "endpoint":
        gain = (y[-1] - y[0]) / (x[-1] - x[0])
        offset = y[0] - gain * x[0]
    else:
        raise InputError(f"unknown INL fit {fit!r}")
    curve = y - (gain * x + offset)
    monotonic = bool(np.all(np.diff(y) >= -monotonic_tol))
    if not monotonic:
        log.warning("non-monotone DC transfer: gross linearity failure")
    return InlResult(float(np.max(np.abs(curve))), curve, float(gain), float(offset), monotonic)


@dataclass
class MetricsReport:
    snr: float
    sinad: float
    thd: float
    sfdr: float
    enob: float
    inl_worst: float
    fom_schreier: float
    bw: float
    power: float
    supply_current: float = float("nan")
    temperature: float = float("nan")
    chip: int = 0
    spectrum: Spectrum | None = field(default=None, repr=False, compare=False)

    FIELDS = ("temperature", "chip", "snr", "sinad", "thd", "sfdr", "enob",
              "inl_worst", "fom_schreier", "bw", "power", "supply_current")

    @classmethod
    def from_tone(cls, tm: ToneMetrics, bw: float, power: float,
                  inl_worst: float = float("nan"), **extra) -> MetricsReport:
        fom = schreier_fom(tm.sinad, bw, power) if power > 0 else float("nan")
        return cls(tm.snr, tm.sinad, tm.thd, tm.sfdr, enob(tm.sinad), inl_worst,
                   fom, bw, power, **extra)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("spectrum")
        return {k: d[k] for k in self.FIELDS}

    def to_text(self) -> str:
        units = {"snr": "dB", "sinad": "dB", "thd": "dBc", "sfdr": "dB", "enob": "bit",
                 "inl_worst": "V", "fom_schreier": "dB", "bw": "Hz", "power": "W",
                 "supply_current": "A", "temperature": "degC", "chip": ""}
        lines = [f"{k:>14s} = {v:.6g} {units[k]}".rstrip() for k, v in self.as_dict().items()]
        return "\n".join(lines)

    def write_csv(self, path, header: dict | None = None) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            for key, value in (header or {}).items():
                fh.write(f"# {key} = {value}\n")
            writer = csv.writer(fh)
            row = self.as_dict()
            writer.writerow(list(row))
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row.values()])
        return path
