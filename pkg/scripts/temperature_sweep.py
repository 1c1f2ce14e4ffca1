"""Full temperature sweep over the chip population, written as CSV plus gnuplot.

    python scripts/temperature_sweep.py --out results/sweep [--config F] [--workers 4]

Runs the default plan (-40 to 260 degC in 10 degC steps, 5 chips, SNR, SINAD,
worst INL and supply current) and also writes spectra at the grid points nearest 25 and 250 degC.
Render the figures with ``cd results/sweep && gnuplot plots.gp``.
"""
import argparse
import os
import time
from dataclasses import replace
from pathlib import Path

from hotadc.bench import run_sweep, write_sweep
from hotadc.config import load_config


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/sweep"))
    ap.add_argument("--config", type=Path)
    ap.add_argument("--set", dest="overrides", action="append", default=[])
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args(argv)

    cfg = load_config(args.config, args.overrides)
    plan = cfg.plan()
    nearest = {min(plan.temperatures, key=lambda t: abs(t - target)) for target in (25.0, 250.0)}
    spectra = tuple(sorted(nearest))
    plan = replace(plan, outputs=plan.outputs + ("spectrum_at",), spectrum_temperatures=spectra)
    t0 = time.perf_counter()
    result = run_sweep(plan, workers=args.workers)
    written = write_sweep(result, args.out, cfg.to_dict())
    print(f"{len(result.points)} points in {time.perf_counter() - t0:.1f} s, "
          f"{len(result.failures)} failed")
    print(f"{'T':>6s} {'SNR':>8s} {'SINAD':>8s} {'INL mV':>8s} {'I_DD uA':>8s}")
    rows = zip(*(result.aggregate(m) for m in ("snr", "sinad", "inl_worst", "supply_current")))
    for snr, sinad, inl, supply in rows:
        print(f"{snr[0]:6.0f} {snr[1]:8.2f} {sinad[1]:8.2f} {inl[1] * 1e3:8.3f} "
              f"{supply[1] * 1e6:8.2f}")
    print(f"wrote {len(written)} files to {args.out}")
    return 2 if result.failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
