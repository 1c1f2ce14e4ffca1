import json
import re

import pytest

from hotadc.bitstream import load
from hotadc.cli import main


def run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return rc, out, err


def value(text, key):
    return float(re.search(rf"^\s*{key} = (\S+)", text, re.M).group(1))


def test_fom(capsys):
    rc, out, _ = run(capsys, "fom", "--sinad", 74.5, "--bw", 146.48, "--power", 44e-6)
    assert rc == 0
    assert "FoM = 139.7 dB" in out and "ENOB 12.08" in out


def test_fom_rejects_zero_power(capsys):
    rc, _, err = run(capsys, "fom", "--sinad", 74.5, "--bw", 146.48, "--power", 0)
    assert rc == 1 and "error" in err


def test_emcheck_flags(capsys):
    rc, out, _ = run(capsys, "emcheck", "--current", 1e-6, "--width", 0.8, "--layer", "top")
    assert rc == 0 and out.splitlines()[1].endswith(",60,pass")
    rc, out, _ = run(capsys, "emcheck", "--current", 4e-6, "--width", 0.8)
    assert out.splitlines()[1].endswith(",9,FAIL")


def test_emcheck_table(capsys, tmp_path):
    table = tmp_path / "wires.csv"
    table.write_text("name,current_a,width_um,layer\n# comment\nvdd,1e-6,0.8,top\n"
                     "bias,4e-6,0.8,internal\n")
    rc, out, _ = run(capsys, "emcheck", table)
    lines = out.splitlines()
    assert rc == 0 and len(lines) == 3
    assert lines[1].startswith("vdd,top") and lines[2].startswith("bias,internal")
    table.write_text("name,current_a,width_um,layer\nx,1e-6,0.8,bottom\n")
    rc, _, err = run(capsys, "emcheck", table)
    assert rc == 1 and ":2:" in err


def test_simulate_then_analyze_agree(capsys, tmp_path):
    bits = tmp_path / "ideal.bits"
    rc, sim, _ = run(capsys, "simulate", "--ideal", "--samples", 2 ** 17, "--bitstream", bits,
                     "--format", "binary")
    assert rc == 0
    rc, ana, _ = run(capsys, "analyze", bits)
    assert rc == 0
    assert value(ana, "sinad") == pytest.approx(value(sim, "sinad"), abs=0.01)
    assert value(ana, "snr") == pytest.approx(value(sim, "snr"), abs=0.01)
    assert value(sim, "sinad") > 100


def test_simulate_outputs_embed_config_and_seed(capsys, tmp_path):
    bits, report, spec = tmp_path / "b.txt", tmp_path / "r.csv", tmp_path / "s.csv"
    rc, out, _ = run(capsys, "simulate", "--samples", 2 ** 16, "--seed", 11, "-T", 200,
                     "--set", "analog.cmfb_sideband=0", "--bitstream", bits,
                     "--report", report, "--spectrum", spec)
    assert rc == 0
    assert "# seed = 11" in out
    meta = load(bits).meta
    assert meta["config"]["environment"]["seed"] == 11
    assert meta["config"]["analog"]["cmfb_sideband"] == 0.0
    for path in (report, spec):
        head = path.read_text().splitlines()[:3]
        assert "# seed = 11" in head
        cfg = json.loads(head[2].split(" = ", 1)[1])
        assert cfg["environment"]["temperature"] == 200.0


def test_simulate_is_reproducible(capsys, tmp_path):
    outs = []
    for name in ("a", "b"):
        path = tmp_path / name
        rc, _, _ = run(capsys, "simulate", "--samples", 2 ** 16, "--bitstream", path)
        assert rc == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_unknown_key_rejected(capsys):
    rc, _, err = run(capsys, "simulate", "--set", "modulator.foo=1")
    assert rc == 1 and "modulator.foo" in err


def test_unknown_key_in_file(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[leakage]\nt_half = 10\n")
    rc, _, err = run(capsys, "sweep", "--config", cfg, "--out", tmp_path / "o")
    assert rc == 1 and "leakage.t_half" in err


def test_analyze_missing_rate(capsys, tmp_path):
    cap = tmp_path / "cap.csv"
    cap.write_text("0,0\n1,3.3\n")
    rc, _, err = run(capsys, "analyze", cap)
    assert rc == 1 and "sample rate" in err


QUICK = ["--set", "sweep.temperatures=[25, 250]", "--set", "sweep.n_chips=1",
         "--set", "sweep.n_samples=65536", "--set", "sweep.dc_samples=4096"]


def test_quick_sweep_writes_csvs(capsys, tmp_path):
    out = tmp_path / "sweep"
    rc, text, _ = run(capsys, "sweep", "--plan", "quick", "--out", out, *QUICK)
    assert rc == 0
    assert (out / "sinad_vs_t_aggregate.csv").exists() and (out / "plots.gp").exists()
    assert "sinad_vs_t" in text
    rows = [r for r in (out / "snr_vs_t.csv").read_text().splitlines() if not r.startswith("#")]
    assert rows[0] == "temperature,chip,value" and len(rows) == 3


def test_sweep_partial_failure_exit_code(capsys, tmp_path, monkeypatch):
    from hotadc import bench

    real = bench.run_point

    def flaky(plan, t, chip, keep_spectrum=False):
        if t == 250.0:
            raise RuntimeError("boom")
        return real(plan, t, chip, keep_spectrum)

    monkeypatch.setattr(bench, "run_point", flaky)
    rc, _, err = run(capsys, "sweep", "--plan", "quick", "--out", tmp_path, *QUICK)
    assert rc == 2 and "failed" in err
    assert "RuntimeError: boom" in (tmp_path / "failures.csv").read_text()
