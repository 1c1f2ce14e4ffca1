"""Ideal-modulator output spectrum and its out-of-band noise-shaping slope.

    python scripts/noise_shaping.py [--out noise_shaping.csv] [--n-fft 16384]

Averages Welch segments of an ideal 2^19-sample run, fits dB against
log10(f) over the decade starting at twice the signal band and writes the
spectrum as CSV. A second-order loop should show about 40 dB/decade.
"""
import argparse
from pathlib import Path

import numpy as np

from hotadc.bench import ExperimentPlan
from hotadc.metrics import psd, snr_sinad
from hotadc.modulator import run
from hotadc.thermal import Environment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("noise_shaping.csv"))
    ap.add_argument("--n-fft", type=int, default=2 ** 14)
    args = ap.parse_args(argv)

    plan = ExperimentPlan()
    cfg, tone = plan.modulator, plan.tone()
    bs = run(cfg, Environment(ideal=True), tone, plan.n_samples)
    full = snr_sinad(psd(bs, n_fft=plan.n_samples), tone.frequency, cfg.bandwidth)
    spec = psd(bs, n_fft=args.n_fft)
    f_lo = 2 * cfg.bandwidth
    sel = (spec.freqs >= f_lo) & (spec.freqs <= 10 * f_lo)
    slope = np.polyfit(np.log10(spec.freqs[sel]), spec.db[sel], 1)[0]
    spec.to_csv(args.out, {"n_samples": plan.n_samples, "slope_db_per_decade": f"{slope:.2f}"})
    print(f"SQNR {full.snr:.2f} dB in {cfg.bandwidth:.2f} Hz")
    print(f"slope {slope:.2f} dB/decade over {f_lo:.0f}-{10 * f_lo:.0f} Hz")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
