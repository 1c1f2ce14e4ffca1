"""sinc^N (CIC) decimation of the modulator bitstream to Nyquist-rate codes."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import upfirdn

from .bitstream import Bitstream
from .errors import ConfigurationError, InputError


@dataclass(frozen=True)
class DecimatorConfig:
    order: int = 3
    osr: int = 512
    normalize: bool = True
    f_s: float = 150e3
    modulator_order: int = 2

    def __post_init__(self):
        if self.order < self.modulator_order + 1:
            raise ConfigurationError(
                f"CIC order {self.order} must exceed modulator order {self.modulator_order}")
        if self.osr < 2:
            raise ConfigurationError("decimation ratio must be >= 2")

    @property
    def f_out(self) -> float:
        return self.f_s / self.osr

    @property
    def gain(self) -> int:
        return self.osr ** self.order


def cic_impulse_response(osr: int, order: int) -> np.ndarray:
    """Integer taps of ``order`` cascaded length-``osr`` box-cars."""
    h = np.ones(1, dtype=np.int64)
    box = np.ones(osr, dtype=np.int64)
    for _ in range(order):
        h = np.convolve(h, box)
    return h


def _cic_integer(x: np.ndarray, osr: int, order: int) -> np.ndarray:
    # Integrators at the input rate, combs at the output rate. int64 wraps
    # modulo 2**64; the comb differences undo the wrap because the true output
    # never exceeds osr**order in magnitude.
    acc = x.astype(np.int64)
    for _ in range(order):
        acc = np.cumsum(acc, dtype=np.int64)
    n_out = x.size // osr
    y = acc[osr - 1: n_out * osr: osr]
    for _ in range(order):
        y = np.diff(y, prepend=np.int64(0))
    return y


def _cic_fir(x: np.ndarray, osr: int, order: int) -> np.ndarray:
    h = cic_impulse_response(osr, order).astype(float)
    n_out = x.size // osr
    z = upfirdn(h, np.concatenate(([0.0], x)), down=osr)
    return z[1: n_out + 1]


def decimate(data, cfg: DecimatorConfig = DecimatorConfig(), scale: float | None = None) -> np.ndarray:
    """Filter and downsample by ``cfg.osr``.

    Output ``m`` is the full-rate filter output at input index
    ``m*osr + osr - 1``; the first ``order - 1`` outputs see a partially
    filled filter. A :class:`Bitstream` is processed with exact integer
    arithmetic and scaled to volts by its ``v_ref``; other sequences go through
    the equivalent polyphase FIR.
    """
    if isinstance(data, Bitstream):
        x = data.bits
        scale = data.v_ref if scale is None else scale
    else:
        x = np.asarray(data)
        scale = 1.0 if scale is None else scale
    if x.size < 8 * cfg.osr:
        raise InputError(f"need at least {8 * cfg.osr} samples, got {x.size}")
    if np.issubdtype(x.dtype, np.integer):
        y = _cic_integer(x, cfg.osr, cfg.order).astype(float)
    else:
        y = _cic_fir(x.astype(float), cfg.osr, cfg.order)
    if cfg.normalize:
        y = y / cfg.gain
    return y * scale


def passband_droop(f, cfg: DecimatorConfig = DecimatorConfig()):
    """Magnitude response of the sinc^order filter at ``f`` in dB (<= 0)."""
    f = np.asarray(f, dtype=float)
    x = np.pi * f / cfg.f_s
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sin(cfg.osr * x) / (cfg.osr * np.sin(x))
    ratio = np.where(x == 0, 1.0, np.abs(ratio))
    out = 20.0 * cfg.order * np.log10(ratio)
    return float(out) if out.ndim == 0 else out


def settled(codes: np.ndarray, cfg: DecimatorConfig = DecimatorConfig()) -> np.ndarray:
    """Drop the outputs produced before the filter memory is full."""
    return codes[cfg.order - 1:]


def export_csv(codes, path, cfg: DecimatorConfig = DecimatorConfig(), header: dict | None = None) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key} = {value}\n")
        fh.write(f"# f_out = {cfg.f_out!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["index", "volts"])
        for i, v in enumerate(np.asarray(codes, dtype=float)):
            writer.writerow([i, repr(float(v))])
    return path
