import csv
import json
import math
from pathlib import Path

import pytest

from nvsqueeze import cli
from nvsqueeze.cli import main

GOLDEN = Path(__file__).parent / "golden"

REFERENCE_CONFIG = """
units = "hz"
[system]
omega_m = 2e9
g_collective = {g}
v = 1e6
omega_over_v = {ratio}
[run]
horizon = {horizon}
samples = {samples}
model = "{model}"
[sweep]
axes = [{{ name = "omega_over_v", values = [1.5, 2.0, 3.0] }}]
[oracle]
cutoffs = [12, 12]
samples = 101
"""


def write_config(tmp_path, name="run.toml", ratio=2.0, g=40e3, horizon=1e-3, samples=401, model="effective", extra=""):
    path = tmp_path / name
    path.write_text(REFERENCE_CONFIG.format(ratio=ratio, g=g, horizon=horizon, samples=samples, model=model) + extra)
    return path


def run(cmd, cfg, out, *flags):
    return main([cmd, "--config", str(cfg), "--out", str(out), *flags])


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_golden_simulate(tmp_path):
    assert run("simulate", GOLDEN / "reference_effective.toml", tmp_path) == 0
    for name in ("trace.csv", "summary.json", "plot_manifest.json"):
        assert (tmp_path / name).read_bytes() == (GOLDEN / "reference_effective" / name).read_bytes(), name


def test_simulate_outputs(tmp_path):
    assert run("simulate", write_config(tmp_path), tmp_path / "o") == 0
    rows = read_rows(tmp_path / "o" / "trace.csv")
    assert list(rows[0]) == cli.TRACE_HEADER
    assert len(rows) == 401
    assert rows[0]["occ_a"] == "" and rows[0]["hp_valid"] == "true"
    assert all(len(r["variance_opt"].replace(".", "").replace("-", "").split("e")[0].lstrip("0")) <= 12 for r in rows)
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["v_min"] == pytest.approx(1 / 12, abs=1e-6)
    assert summary["t_min"] == pytest.approx(2.71e-4, rel=0.01)
    assert summary["regime"] == "oscillatory"
    assert summary["version"] == "0.1.0"
    assert summary["v_min_db"] == pytest.approx(10 * math.log10(4 / 12))
    raw = (tmp_path / "o" / "trace.csv").read_bytes()
    assert raw.endswith(b"\r\n")


def test_full_model_close_to_effective(tmp_path):
    cfg = write_config(tmp_path, samples=4001)
    assert run("simulate", cfg, tmp_path / "e") == 0
    assert run("simulate", cfg, tmp_path / "f", "--model", "full") == 0
    ve = json.loads((tmp_path / "e" / "summary.json").read_text())["v_min"]
    vf = json.loads((tmp_path / "f" / "summary.json").read_text())["v_min"]
    assert abs(ve - vf) <= 0.02
    rows = read_rows(tmp_path / "f" / "trace.csv")
    assert rows[5]["occ_a"] != ""


def test_zero_horizon(tmp_path):
    assert run("simulate", write_config(tmp_path, horizon=0.0), tmp_path / "o") == 0
    rows = read_rows(tmp_path / "o" / "trace.csv")
    assert len(rows) == 1
    assert float(rows[0]["t_s"]) == 0.0 and float(rows[0]["variance_theta"]) == 0.25


def test_repeat_runs_byte_identical(tmp_path):
    cfg = write_config(tmp_path, samples=51)
    for cmd in ("simulate", "compare", "sweep", "device"):
        assert run(cmd, cfg, tmp_path / "a") == 0
        assert run(cmd, cfg, tmp_path / "b") == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_json_format(tmp_path):
    assert run("simulate", write_config(tmp_path, samples=5), tmp_path / "o", "--format", "json") == 0
    data = json.loads((tmp_path / "o" / "trace.json").read_text())
    assert set(data) == set(cli.TRACE_HEADER) and len(data["t_s"]) == 5
    assert not (tmp_path / "o" / "trace.csv").exists()


def test_multiple_thetas(tmp_path):
    cfg = write_config(tmp_path, samples=5)
    cfg.write_text(cfg.read_text().replace('model = "effective"', 'model = "effective"\ntheta = [0.0, 1.0]'))
    assert run("simulate", cfg, tmp_path / "o") == 0
    assert (tmp_path / "o" / "trace_theta1.csv").exists()


def test_compare(tmp_path):
    assert run("compare", write_config(tmp_path, samples=4001), tmp_path / "o") == 0
    rep = json.loads((tmp_path / "o" / "compare.json").read_text())
    assert rep["max_abs_deviation"] <= 0.02 and not rep["flagged"]
    assert run("compare", write_config(tmp_path, ratio=1.05, samples=4001), tmp_path / "n") == 0
    assert json.loads((tmp_path / "n" / "compare.json").read_text())["flagged"]
    assert run("compare", write_config(tmp_path, g=0.0, samples=11), tmp_path / "z") == 0
    assert json.loads((tmp_path / "z" / "compare.json").read_text())["max_abs_deviation"] == 0.0


def test_sweep_table(tmp_path):
    assert run("sweep", write_config(tmp_path), tmp_path / "o") == 0
    rows = read_rows(tmp_path / "o" / "sweep.csv")
    assert [r["omega_over_v"] for r in rows] == ["1.5", "2", "3"]
    v = [float(r["v_min"]) for r in rows]
    assert v == sorted(v)


def test_optimize(tmp_path):
    assert run("optimize", write_config(tmp_path, horizon=3e-3, samples=401), tmp_path / "o") == 0
    best = json.loads((tmp_path / "o" / "optimum.json").read_text())
    assert best["v_min"] < 1 / 12
    assert best["active_constraint"] in {"hp", "horizon", "bounds", "none"}


def test_device_table(tmp_path, capsys):
    assert main(["device", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    for key in ("g_single_hz", "f1_hz", "kappa_hz", "n_th"):
        assert key in text
    rows = {r["quantity"]: r for r in read_rows(tmp_path / "device.csv")}
    assert 2e3 <= float(rows["g_single_hz"]["value"]) <= 8e3


def test_oracle_adjudicate(tmp_path, capsys):
    assert run("oracle", write_config(tmp_path), tmp_path / "o", "--adjudicate") == 0
    assert "convention: lambda_t" in capsys.readouterr().out
    rep = json.loads((tmp_path / "o" / "oracle.json").read_text())
    assert rep["max_abs_deviation_gaussian_vs_fock"] < 2e-3


def test_unknown_key_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, extra="\n[output]\ndirectry = 'x'\n")
    assert run("simulate", cfg, tmp_path / "o") == 2
    assert "output.directry" in capsys.readouterr().err


def test_config_errors(tmp_path):
    assert run("simulate", tmp_path / "missing.toml", tmp_path) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("units = \n")
    assert run("simulate", bad, tmp_path) == 2
    bad.write_text('units = "rad"\n[system]\ng_collective = 1.0\nv = 1.0\nomega_over_v = 2.0\n')
    assert run("simulate", bad, tmp_path) == 2
    bad.write_text("[system]\ng_collective = 1.0\nv = 1.0\n")
    assert run("simulate", bad, tmp_path) == 2
    assert run("simulate", write_config(tmp_path, ratio=1.0), tmp_path) == 2


def test_numeric_error_exit(tmp_path):
    cfg = write_config(tmp_path, extra="")
    cfg.write_text(cfg.read_text().replace("cutoffs = [12, 12]", "cutoffs = [3, 3]\nboundary_tol = 1e-12"))
    assert run("oracle", cfg, tmp_path / "o") == 3


def test_hp_invalid_exit(tmp_path, monkeypatch):
    from nvsqueeze import simulate as sim_mod

    real = sim_mod.simulate

    def no_valid(*a, **kw):
        res = real(*a, **kw)
        return type(res)(**{**res.__dict__, "minimum": None, "error": "forced"})

    monkeypatch.setattr(cli, "simulate", no_valid)
    assert run("simulate", write_config(tmp_path, samples=5), tmp_path / "o") == 4
