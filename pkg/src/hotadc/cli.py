"""Command line entry point.

    hotadc simulate  [--config F] [--set sec.key=val ...] [--ideal] [-T 250] [--chip 0]
                     [--bitstream out.bits] [--report out.csv] [--spectrum out.csv]
    hotadc sweep     [--config F] [--plan default|quick] --out DIR [--workers N]
    hotadc analyze   CAPTURE [--fs HZ] [--v-ref V] [--osr 512 | --bw HZ] [--power W]
    hotadc emcheck   WIRES.csv | --current A --width UM --layer internal|top
    hotadc fom       --sinad DB --bw HZ --power W

Exit codes: 0 success, 1 input or configuration error, 2 partial sweep failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import bitstream as bsio
from .bench import METRIC_OF, dc_sweep, ingest_capture, nonidealities, provenance, run_sweep, write_sweep
from .config import load_config
from .errors import HotAdcError
from .metrics import MetricsReport, enob, inl_from_sweep, psd, schreier_fom, snr_sinad
from .modulator import run
from .thermal import EM_RULES, em_check

log = logging.getLogger("hotadc")

QUICK_PLAN = {"temperatures": (25.0, 150.0, 250.0), "n_chips": 2,
              "n_samples": 2 ** 17, "dc_samples": 2 ** 13}


def _config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="TOML configuration file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="SECTION.KEY=VALUE", help="override one config value (repeatable)")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hotadc", description="High-temperature delta-sigma ADC model")
    ap.add_argument("--version", action="version", version=f"hotadc {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one modulator run: bitstream and metrics")
    _config_args(p)
    p.add_argument("--ideal", action="store_true", help="disable every non-ideality")
    p.add_argument("-T", "--temperature", type=float)
    p.add_argument("--chip", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, help="record length (power of two)")
    p.add_argument("--bitstream", type=Path, help="write the bitstream here")
    p.add_argument("--format", choices=("text", "binary"), default="text")
    p.add_argument("--report", type=Path, help="write metrics CSV")
    p.add_argument("--spectrum", type=Path, help="write spectrum CSV")
    p.add_argument("--inl", action="store_true", help="also run the DC sweep for INL")

    p = sub.add_parser("sweep", help="temperature sweep over a chip population")
    _config_args(p)
    p.add_argument("--plan", choices=("default", "quick"), default="default")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("analyze", help="metrics of a captured or exported bitstream")
    p.add_argument("capture", type=Path)
    p.add_argument("--input-format", choices=("auto", "csv", "bits"), default="auto")
    p.add_argument("--fs", type=float, help="sample rate if not in the file header")
    p.add_argument("--v-ref", type=float)
    p.add_argument("--threshold", type=float)
    band = p.add_mutually_exclusive_group()
    band.add_argument("--osr", type=int, default=512)
    band.add_argument("--bw", type=float)
    p.add_argument("--tone", type=float, help="tone frequency (default: largest in-band bin)")
    p.add_argument("--window", default="hann")
    p.add_argument("--power", type=float, default=math.nan, help="power in W, for the FoM")
    p.add_argument("--report", type=Path)
    p.add_argument("--spectrum", type=Path)

    p = sub.add_parser("emcheck", help="electromigration margins of a wire table")
    p.add_argument("table", type=Path, nargs="?",
                   help="CSV with columns name,current_a,width_um,layer")
    p.add_argument("--current", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--layer", choices=sorted(EM_RULES), default="internal")

    p = sub.add_parser("fom", help="Schreier figure of merit")
    p.add_argument("--sinad", type=float, required=True, help="dB")
    p.add_argument("--bw", type=float, required=True, help="Hz")
    p.add_argument("--power", type=float, required=True, help="W")
    return ap


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.overrides)
    env = cfg.environment
    changes = {k: v for k, v in (("temperature", args.temperature), ("chip", args.chip),
                                  ("seed", args.seed)) if v is not None}
    if args.ideal:
        changes["ideal"] = True
    env = replace(env, **changes)
    sweep = cfg.sweep if args.samples is None else replace(cfg.sweep, n_samples=args.samples)
    cfg = replace(cfg, environment=env, sweep=sweep)
    plan = replace(cfg.plan(), temperatures=(env.temperature,), n_chips=max(env.n_chips, env.chip + 1))

    nid = nonidealities(plan, env.temperature, env.chip)
    tone = plan.tone()
    resolved = cfg.to_dict()
    resolved["stimulus"]["frequency"] = tone.frequency
    bs = run(plan.modulator, plan.env(env.temperature, env.chip), tone, plan.n_samples, nid=nid)
    bs = replace(bs, meta={**bs.meta, "config": resolved})
    spec = psd(bs, window=plan.window, n_fft=plan.n_samples)
    tm = snr_sinad(spec, tone.frequency, plan.modulator.bandwidth)
    inl = math.nan
    if args.inl:
        levels, codes = dc_sweep(plan, env.temperature, env.chip)
        inl = inl_from_sweep(levels, codes, full_scale=plan.modulator.v_ref).inl_worst
    supply = plan.analog.i_static if nid.is_ideal else nid.supply_current
    report = MetricsReport.from_tone(tm, plan.modulator.bandwidth, supply * plan.modulator.v_dd,
                                     inl_worst=inl, supply_current=supply,
                                     temperature=env.temperature, chip=env.chip)
    header = provenance(resolved)
    if args.bitstream:
        bsio.save(bs, args.bitstream, fmt=args.format)
    if args.report:
        report.write_csv(args.report, header)
    if args.spectrum:
        spec.to_csv(args.spectrum, header)
    print(f"# seed = {env.seed}")
    print(f"# config = {json.dumps(resolved, sort_keys=True)}")
    print(report.to_text())
    return 0


def _cmd_sweep(args) -> int:
    # file < quick plan < --set
    quick = [f"sweep.{k}={list(v) if isinstance(v, tuple) else v}" for k, v in QUICK_PLAN.items()]
    cfg = load_config(args.config, (quick if args.plan == "quick" else []) + args.overrides)
    plan = cfg.plan()
    workers = args.workers if args.workers is not None else cfg.sweep.workers
    result = run_sweep(plan, workers=workers)
    resolved = cfg.to_dict()
    written = write_sweep(result, args.out, resolved)
    for name in plan.outputs:
        if name not in METRIC_OF:
            continue
        print(f"{name}: temperature, mean, lo3sigma, hi3sigma")
        for t, mean, lo, hi, _ in result.aggregate(METRIC_OF[name]):
            print(f"  {t:7.1f} {mean:12.6g} {lo:12.6g} {hi:12.6g}")
    print(f"wrote {len(written)} files to {args.out}")
    if result.failures:
        print(f"{len(result.failures)} point(s) failed, see failures.csv", file=sys.stderr)
        return 2
    return 0


def _cmd_analyze(args) -> int:
    bs = ingest_capture(args.capture, fmt=args.input_format, f_s=args.fs,
                        v_ref=args.v_ref, threshold=args.threshold)
    bw = args.bw if args.bw is not None else bs.f_s / (2 * args.osr)
    spec = psd(bs, window=args.window)
    tm = snr_sinad(spec, args.tone, bw)
    report = MetricsReport.from_tone(tm, bw, args.power)
    header = {"source": str(args.capture), "f_s": bs.f_s, "v_ref": bs.v_ref, "bw": bw,
              "window": args.window, "n_fft": spec.n_fft}
    if args.report:
        report.write_csv(args.report, header)
    if args.spectrum:
        spec.to_csv(args.spectrum, header)
    for key, value in header.items():
        print(f"# {key} = {value}")
    print(f"{'f_tone':>14s} = {tm.f_tone:.6g} Hz")
    print(report.to_text())
    return 0


def _read_wire_table(path: Path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise HotAdcError(f"{path}: empty wire table")
    head = [c.strip().lower() for c in rows[0]]
    need = ("name", "current_a", "width_um", "layer")
    if tuple(head) != need:
        raise HotAdcError(f"{path}: header must be {','.join(need)}, got {','.join(head)}")
    wires = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise HotAdcError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
        name, current, width, layer = (c.strip() for c in row)
        if layer not in EM_RULES:
            raise HotAdcError(f"{path}:{lineno}: unknown layer {layer!r}")
        try:
            wires.append((name, float(current), float(width), layer))
        except ValueError:
            raise HotAdcError(f"{path}:{lineno}: malformed number") from None
    return wires


def _cmd_emcheck(args) -> int:
    if args.table is not None:
        wires = _read_wire_table(args.table)
    elif args.current is not None and args.width is not None:
        wires = [("wire", args.current, args.width, args.layer)]
    else:
        raise HotAdcError("give a wire table or --current and --width")
    print("name,layer,current_a,width_um,density_ua_per_um,margin,result")
    for name, current, width, layer in wires:
        res = em_check(current, width, EM_RULES[layer])
        print(f"{name},{layer},{current:g},{width:g},{res.density:.4g},"
              f"{res.margin:.4g},{'pass' if res.passed else 'FAIL'}")
    return 0


def _cmd_fom(args) -> int:
    fom = schreier_fom(args.sinad, args.bw, args.power)
    print(f"FoM = {fom:.1f} dB  (ENOB {enob(args.sinad):.2f} bit)")
    return 0


COMMANDS = {"simulate": _cmd_simulate, "sweep": _cmd_sweep, "analyze": _cmd_analyze,
            "emcheck": _cmd_emcheck, "fom": _cmd_fom}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (HotAdcError, OSError) as exc:
        print(f"hotadc {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
