"""Command line entry point: ``nvsqueeze <command> --config run.toml``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .builder import adiabaticity_report, build_model
from .config import ConfigError, RunConfig, load_config
from .device import BeamGeometry, device_report, params_from_device
from .dynamics import NumericalError, propagate_trace, vacuum_state
from .fock import BudgetError, CutoffOverflowError, InconclusiveError, adjudicate_oscillation, observed_first_minimum
from .model import ResonanceError, validate
from .observables import squeezing_trace, to_db
from .simulate import simulate
from .sweep import InfeasibleError, SweepSpec, optimize_min_squeezing, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_HP = 0, 2, 3, 4
COMPARE_THRESHOLD = 0.02
TRACE_HEADER = ["t_s", "variance_theta", "variance_opt", "theta_opt", "exc_c1", "exc_c2", "occ_a", "occ_b", "hp_valid"]


class HPInvalidEverywhere(RuntimeError):
    pass


def fmt(x) -> str:
    """12 significant digits; None and NaN become empty fields."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    return "" if math.isnan(x) else f"{x:.12g}"


def write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _trace_rows(trace):
    n = len(trace)
    empty = [None] * n
    exc = [trace.excitations.get(m, empty) for m in ("c1", "c2")]
    occ = [trace.phonon_occupations.get(m, empty) for m in ("a", "b")]
    for i in range(n):
        yield [trace.times[i], trace.variance_theta[i], trace.variance_opt[i], trace.theta_opt[i],
               exc[0][i], exc[1][i], occ[0][i], occ[1][i], bool(trace.hp_valid[i])]


def _write_trace(out: Path, stem: str, trace, formats) -> list[str]:
    written = []
    if "csv" in formats:
        write_csv(out / f"{stem}.csv", TRACE_HEADER, _trace_rows(trace))
        written.append(f"{stem}.csv")
    if "json" in formats:
        cols = list(zip(*_trace_rows(trace))) if len(trace) else [[] for _ in TRACE_HEADER]
        write_json(out / f"{stem}.json", {h: list(c) for h, c in zip(TRACE_HEADER, cols)})
        written.append(f"{stem}.json")
    return written


def _manifest(out: Path, plots: list[dict]) -> None:
    write_json(out / "plot_manifest.json", {"version": __version__, "plots": plots})


def _outdir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_options(args, cfg: RunConfig) -> dict:
    run = cfg.run
    return {
        "engine": args.engine or run.engine,
        "model": args.model or run.model,
        "horizon": run.horizon,
        "n_samples": run.samples,
        "hp_fraction": run.hp_fraction,
        "cutoffs": tuple(run.cutoffs) if run.cutoffs else None,
        "boundary_tol": run.boundary_tol,
    }


def cmd_simulate(args, cfg: RunConfig) -> int:
    p = cfg.params()
    opts = _run_options(args, cfg)
    formats = [args.format] if args.format else cfg.output.formats
    out = _outdir(args, cfg)
    thetas = cfg.run.theta or [0.0]
    plots, per_theta, first = [], [], None
    for k, theta in enumerate(thetas):
        res = simulate(p, theta=theta, **opts)
        if res.minimum is None:
            raise HPInvalidEverywhere(res.error or "no HP-valid samples")
        stem = "trace" if len(thetas) == 1 else f"trace_theta{k}"
        for name in _write_trace(out, stem, res.trace, formats):
            plots.append({"file": name, "x": "t_s", "y": ["variance_theta", "variance_opt"], "theta": theta,
                          "x_label": "time (s)", "y_label": "joint quadrature variance (vacuum = 0.25)"})
        per_theta.append({"theta": theta, "min_variance_theta": float(np.min(res.trace.variance_theta))})
        first = first or res
    m = first.minimum
    summary = {
        "version": __version__,
        "command": "simulate",
        "engine": first.engine,
        "model": first.model,
        "v_min": m.v_min,
        "v_min_db": to_db(m.v_min),
        "t_min": m.t_min,
        "theta_opt": m.theta_opt,
        "regime": first.regime,
        "peak_excitation": first.trace.peak_excitation,
        "hp_first_violation": first.trace.first_violation,
        "truncated": first.trace.truncated,
        "n_samples": len(first.trace),
        "horizon": opts["horizon"],
        "parameters": p.to_hz_dict(),
        "adiabaticity": first.adiabaticity,
        "warnings": validate(p),
        "theta_runs": per_theta,
    }
    write_json(out / "summary.json", summary)
    _manifest(out, plots)
    print(f"v_min = {m.v_min:.6g} ({to_db(m.v_min):.3f} dB) at t = {m.t_min:.6g} s, theta = {m.theta_opt:.6g}")
    return EXIT_OK


def compare_traces(p, horizon: float, n_samples: int, hp_fraction: float = 0.1, theta: float = 0.0):
    """Full vs effective V(X(theta)) on one time grid (Gaussian engine)."""
    traces = {}
    for kind in ("full", "effective"):
        lin = build_model(p, kind)
        traj = propagate_trace(lin, vacuum_state(lin.layout), horizon, n_samples)
        traces[kind] = squeezing_trace(traj, theta, n_spins=p.n_spins, hp_fraction=hp_fraction)
    n = min(len(traces["full"]), len(traces["effective"]))
    dev = np.abs(traces["full"].variance_theta[:n] - traces["effective"].variance_theta[:n])
    return traces, dev


def cmd_compare(args, cfg: RunConfig) -> int:
    p = cfg.params()
    out = _outdir(args, cfg)
    theta = cfg.run.theta[0] if cfg.run.theta else 0.0
    traces, dev = compare_traces(p, cfg.run.horizon, cfg.run.samples, cfg.run.hp_fraction, theta)
    full, eff = traces["full"], traces["effective"]
    n = len(dev)
    write_csv(out / "compare.csv", ["t_s", "variance_full", "variance_effective", "abs_deviation"],
              ([full.times[i], full.variance_theta[i], eff.variance_theta[i], dev[i]] for i in range(n)))
    report = {
        "version": __version__,
        "command": "compare",
        "max_abs_deviation": float(dev.max()),
        "mean_abs_deviation": float(dev.mean()),
        "threshold": COMPARE_THRESHOLD,
        "flagged": bool(dev.max() > COMPARE_THRESHOLD),
        "max_phonon_occupation": float(max(v.max() for v in full.phonon_occupations.values())),
        "parameters": p.to_hz_dict(),
        "adiabaticity": adiabaticity_report(p),
        "theta": theta,
    }
    write_json(out / "compare.json", report)
    _manifest(out, [{"file": "compare.csv", "x": "t_s", "y": ["variance_full", "variance_effective"],
                     "x_label": "time (s)", "y_label": "V(X(0))"}])
    flag = "FLAGGED" if report["flagged"] else "ok"
    print(f"max |dV| = {report['max_abs_deviation']:.3e}, mean = {report['mean_abs_deviation']:.3e} [{flag}]")
    return EXIT_OK


SWEEP_FIELDS = ["regime", "v_min", "t_min", "theta_opt", "peak_excitation", "hp_valid", "first_violation",
                "adiabatic", "error"]


def cmd_sweep(args, cfg: RunConfig) -> int:
    p = cfg.params()
    out = _outdir(args, cfg)
    axes = [(a.name, a.values) for a in cfg.sweep.axes]
    spec = SweepSpec(p, axes, horizon=cfg.run.horizon, samples_per_run=cfg.run.samples,
                     hp_fraction=cfg.run.hp_fraction, engine=args.engine or cfg.run.engine,
                     model=args.model or cfg.run.model)
    rows = run_sweep(spec, workers=cfg.sweep.workers)
    names = [n for n, _ in axes]
    write_csv(out / "sweep.csv", ["index", *names, *SWEEP_FIELDS],
              ([r["index"], *(r["axes"][n] for n in names), *(r[f] for f in SWEEP_FIELDS)] for r in rows))
    write_json(out / "sweep.json", {"version": __version__, "command": "sweep", "axes": axes, "rows": rows,
                                     "parameters": p.to_hz_dict()})
    print(f"{len(rows)} rows written to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_optimize(args, cfg: RunConfig) -> int:
    p = cfg.params()
    out = _outdir(args, cfg)
    o = cfg.optimize
    best = optimize_min_squeezing(p, o.omega_over_v, o.delta_over_a, cfg.run.horizon, n_samples=cfg.run.samples,
                                  hp_fraction=cfg.run.hp_fraction, grid=o.grid, xtol=o.xtol)
    result = {"version": __version__, "command": "optimize", **best.__dict__, "v_min_db": to_db(best.v_min),
              "bounds": {"omega_over_v": o.omega_over_v, "delta_over_a": o.delta_over_a}}
    write_json(out / "optimum.json", result)
    print(f"v_min = {best.v_min:.6g} at omega/v = {best.omega_over_v:.6g}, Delta/A = {best.delta_over_a:.6g} "
          f"(active constraint: {best.active_constraint})")
    return EXIT_OK


def cmd_device(args, cfg: RunConfig) -> int:
    out = _outdir(args, cfg)
    if cfg.geometry is None:
        geom, n_spins = BeamGeometry.reference(), 100
    else:
        geom, n_spins = cfg.geometry.to_geometry(), cfg.geometry.n_spins
    rep = device_report(geom, n_spins)
    p = params_from_device(geom, n_spins=n_spins)
    rep["validation_warnings"] = validate(p)
    units = {"g_single_hz": "Hz", "g_collective_hz": "Hz", "f1_hz": "Hz", "kappa_hz": "Hz",
             "kappa_quoted_hz": "Hz", "n_th": "", "n_spins": "", "temperature_k": "K", "quality_factor": ""}
    write_csv(out / "device.csv", ["quantity", "value", "unit"], ([k, rep[k], units[k]] for k in units))
    write_json(out / "device.json", {"version": __version__, "command": "device", **rep})
    width = max(len(k) for k in units)
    for k in units:
        print(f"{k:<{width}}  {fmt(rep[k])} {units[k]}".rstrip())
    return EXIT_OK


def cmd_oracle(args, cfg: RunConfig) -> int:
    p = cfg.params()
    out = _outdir(args, cfg)
    oc = cfg.oracle
    report = {"version": __version__, "command": "oracle", "parameters": p.to_hz_dict(), "cutoffs": oc.cutoffs}
    if args.adjudicate:
        conv = adjudicate_oscillation(p, tuple(oc.cutoffs), n_samples=oc.samples, boundary_tol=oc.boundary_tol)
        report["convention"] = conv
        report["observed_first_minimum_s"] = observed_first_minimum(p, tuple(oc.cutoffs), n_samples=oc.samples,
                                                                   boundary_tol=oc.boundary_tol)
        print(f"convention: {conv.value}")
    gauss = simulate(p, model="effective", engine="gaussian", horizon=cfg.run.horizon, n_samples=oc.samples,
                     hp_fraction=cfg.run.hp_fraction, refine=False)
    fock = simulate(p, model="effective", engine="fock", horizon=cfg.run.horizon, n_samples=oc.samples,
                    hp_fraction=cfg.run.hp_fraction, cutoffs=tuple(oc.cutoffs), boundary_tol=oc.boundary_tol)
    n = min(len(gauss.trace), len(fock.trace))
    dev = np.abs(gauss.trace.variance_opt[:n] - fock.trace.variance_opt[:n])
    report["max_abs_deviation_gaussian_vs_fock"] = float(dev.max())
    write_csv(out / "oracle.csv", ["t_s", "variance_gaussian", "variance_fock"],
              ([gauss.trace.times[i], gauss.trace.variance_opt[i], fock.trace.variance_opt[i]] for i in range(n)))
    write_json(out / "oracle.json", report)
    print(f"max |V_gauss - V_fock| = {dev.max():.3e}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "device": cmd_device,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nvsqueeze", description="Two-mode squeezing of coupled NV ensembles.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "device", help="TOML run configuration")
        sp.add_argument("--out", help="output directory (overrides [output].directory)")
        sp.add_argument("--engine", choices=["gaussian", "fock"])
        sp.add_argument("--model", choices=["full", "effective", "squeeze-special"])
        sp.add_argument("--format", choices=["csv", "json"])
        sp.add_argument("--seed", type=int, default=0, help="reserved; every algorithm is deterministic")
        if name == "oracle":
            sp.add_argument("--adjudicate", action="store_true",
                            help="decide between the sin^2(lambda t) and sin^2(2 lambda t) forms")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ResonanceError, BudgetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HPInvalidEverywhere as exc:
        print(f"Holstein-Primakoff bound violated at every sample: {exc}", file=sys.stderr)
        return EXIT_HP
    except (NumericalError, CutoffOverflowError, InconclusiveError, InfeasibleError, ArithmeticError) as exc:
        print(f"numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
