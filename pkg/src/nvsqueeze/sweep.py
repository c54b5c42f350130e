"""Parameter sweeps and constrained search for the deepest HP-valid squeezing."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .model import SystemParams, effective_params, to_hz
from .observables import HP_FRACTION
from .simulate import ENGINES, MODELS, simulate

#: axes are applied in this order; delta_over_a last so A sees the final omega, g, v
AXES = ("g_hz", "v_hz", "kappa_hz", "n_th", "omega_over_v", "delta_over_a")
MAX_AXES = 3
MAX_RUNS = 10_000


class InfeasibleError(RuntimeError):
    """No point satisfies the HP and adiabaticity constraints."""


def ratio_coordinates(p: SystemParams) -> dict:
    """The from_ratios keyword arguments that reproduce ``p``."""
    omega_over_v = p.detuning / p.v
    try:
        a = effective_params(p).a_coef
        delta_over_a = p.zeeman_offset / a if a != 0 else 0.0
    except ValueError:
        delta_over_a = 0.0
    return {
        "omega_over_v": omega_over_v,
        "delta_over_a": delta_over_a,
        "g_hz": to_hz(p.g_collective),
        "v_hz": to_hz(p.v),
        "omega_m_hz": to_hz(p.omega_m),
        "n_spins": p.n_spins,
        "kappa_hz": to_hz(p.kappa),
        "n_th": p.n_th,
    }


def apply_axes(base: SystemParams, values: dict) -> SystemParams:
    unknown = set(values) - set(AXES)
    if unknown:
        raise ValueError(f"unknown sweep axes {sorted(unknown)}; allowed {AXES}")
    coords = ratio_coordinates(base)
    for name in AXES:
        if name in values:
            coords[name] = float(values[name])
    return SystemParams.from_ratios(**coords)


@dataclass(frozen=True)
class SweepSpec:
    base: SystemParams
    axes: list = field(default_factory=list)
    horizon: float = 1e-3
    samples_per_run: int = 401
    hp_fraction: float = HP_FRACTION
    engine: str = "gaussian"
    model: str = "effective"
    max_runs: int = MAX_RUNS

    def __post_init__(self):
        axes = [(str(name), tuple(float(x) for x in grid)) for name, grid in self.axes]
        object.__setattr__(self, "axes", axes)
        if len(axes) > MAX_AXES:
            raise ValueError(f"at most {MAX_AXES} sweep axes")
        names = [n for n, _ in axes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate sweep axis")
        for name, grid in axes:
            if name not in AXES:
                raise ValueError(f"unknown sweep axis {name!r}; allowed {AXES}")
            if not grid:
                raise ValueError(f"axis {name!r} has an empty grid")
        if self.n_runs > self.max_runs:
            raise ValueError(f"sweep needs {self.n_runs} runs; budget is {self.max_runs}")
        if self.engine not in ENGINES or self.model not in MODELS:
            raise ValueError(f"bad engine/model {self.engine!r}/{self.model!r}")
        if self.horizon < 0 or self.samples_per_run < 1:
            raise ValueError("horizon must be >= 0 and samples_per_run >= 1")

    @property
    def n_runs(self) -> int:
        return math.prod(len(g) for _, g in self.axes)

    def points(self) -> list[dict]:
        names = [n for n, _ in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*(g for _, g in self.axes))]


def evaluate_point(base: SystemParams, values: dict, horizon: float, n_samples: int, hp_fraction: float,
                   engine: str = "gaussian", model: str = "effective") -> dict:
    """One sweep row; failures are caught and stored under ``error``."""
    row = {"axes": dict(values), "regime": None, "v_min": None, "t_min": None, "theta_opt": None,
           "peak_excitation": None, "hp_valid": None, "first_violation": None, "adiabatic": None,
           "adiabaticity": None, "error": None}
    try:
        p = apply_axes(base, values)
        res = simulate(p, model=model, engine=engine, horizon=horizon, n_samples=n_samples, hp_fraction=hp_fraction)
    except Exception as exc:  # recorded in-row; a sweep never aborts on one point
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    tr = res.trace
    row.update(
        regime=res.regime.value if res.regime is not None else None,
        peak_excitation=tr.peak_excitation,
        hp_valid=bool(tr.hp_valid.all()) and not tr.truncated,
        first_violation=tr.first_violation,
        adiabatic=res.adiabaticity["adiabatic"],
        adiabaticity={k: v for k, v in res.adiabaticity.items() if k != "adiabatic"},
        error=res.error,
        n_samples=len(tr),
        horizon_reached=bool(len(tr) and tr.times[-1] >= horizon * (1 - 1e-12)),
    )
    if res.minimum is not None:
        row.update(v_min=res.minimum.v_min, t_min=res.minimum.t_min, theta_opt=res.minimum.theta_opt)
    return row


def _row_task(args):
    return evaluate_point(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    """Rows in grid order (last axis fastest); parallel and serial runs give the same table."""
    tasks = [(spec.base, pt, spec.horizon, spec.samples_per_run, spec.hp_fraction, spec.engine, spec.model)
             for pt in spec.points()]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row_task, tasks))
    else:
        rows = [_row_task(t) for t in tasks]
    for i, row in enumerate(rows):
        row["index"] = i
    return rows


@dataclass(frozen=True)
class OptimumResult:
    omega_over_v: float
    delta_over_a: float
    v_min: float
    t_min: float
    theta_opt: float
    peak_excitation: float
    active_constraint: str
    evaluations: int
    regime: str | None


def _linspace(lo, hi, n):
    return [lo] if hi == lo else [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def optimize_min_squeezing(
    base: SystemParams,
    omega_over_v: tuple[float, float],
    delta_over_a: tuple[float, float],
    horizon: float,
    *,
    n_samples: int = 801,
    hp_fraction: float = HP_FRACTION,
    grid: int = 9,
    xtol: float = 1e-3,
) -> OptimumResult:
    """Coarse grid then compass search over (omega/v, Delta/A).

    Non-adiabatic points and points whose minimum is not HP-valid are treated
    as infeasible. The reported ``active_constraint`` is "hp" when the best
    sample is the last one before the HP bound was crossed, "horizon" when it
    is the last sample of the run, "bounds" when the search sits on a bound
    and "none" otherwise.
    """
    (w_lo, w_hi), (d_lo, d_hi) = sorted(omega_over_v), sorted(delta_over_a)
    cache: dict = {}

    def objective(w, d):
        key = (round(w, 12), round(d, 12))
        if key not in cache:
            row = evaluate_point(base, {"omega_over_v": w, "delta_over_a": d}, horizon, n_samples, hp_fraction)
            ok = row["error"] is None and row["adiabatic"] and row["v_min"] is not None
            cache[key] = (row["v_min"] if ok else math.inf, row)
        return cache[key]

    best = None
    for w in _linspace(w_lo, w_hi, grid):
        for d in _linspace(d_lo, d_hi, grid):
            val, _ = objective(w, d)
            if best is None or val < best[0]:
                best = (val, w, d)
    if best is None or not math.isfinite(best[0]):
        raise InfeasibleError("no HP-valid, adiabatic point inside the bounds")

    _, w, d = best
    steps = [(w_hi - w_lo) / (2 * (grid - 1)) if w_hi > w_lo else 0.0,
             (d_hi - d_lo) / (2 * (grid - 1)) if d_hi > d_lo else 0.0]
    while max(steps) > xtol:
        improved = False
        for axis, sign in ((0, 1), (0, -1), (1, 1), (1, -1)):
            if steps[axis] == 0:
                continue
            cand = [w, d]
            cand[axis] += sign * steps[axis]
            cand[0] = min(max(cand[0], w_lo), w_hi)
            cand[1] = min(max(cand[1], d_lo), d_hi)
            val, _ = objective(*cand)
            if val < best[0] - 1e-15:
                best = (val, *cand)
                w, d = cand
                improved = True
                break
        if not improved:
            steps = [s / 2 for s in steps]

    val, row = objective(w, d)
    t_min = row["t_min"]
    fv = row["first_violation"]
    dt = horizon / max(n_samples - 1, 1)
    if fv is not None and t_min >= fv - 1.5 * dt:
        active = "hp"
    elif t_min >= horizon - 1.5 * dt:
        active = "horizon"
    elif (w_hi > w_lo and w in (w_lo, w_hi)) or (d_hi > d_lo and d in (d_lo, d_hi)):
        active = "bounds"
    else:
        active = "none"
    return OptimumResult(
        omega_over_v=w,
        delta_over_a=d,
        v_min=val,
        t_min=t_min,
        theta_opt=row["theta_opt"],
        peak_excitation=row["peak_excitation"],
        active_constraint=active,
        evaluations=len(cache),
        regime=row["regime"],
    )
