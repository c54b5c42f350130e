"""One-call simulation of a parameter point with either engine."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .analytic import Regime, classify_regime
from .builder import adiabaticity_report, build_model
from .dynamics import Trajectory, propagate_exact, propagate_trace, vacuum_state
from .fock import FockConfig, FockModel, CutoffWarning, evolve_fock
from .model import ResonanceError, SystemParams
from .observables import HP_FRACTION, MinimumResult, SqueezingTrace, find_min_variance, optimal_angle, squeezing_trace

MODELS = ("full", "effective", "squeeze-special")
ENGINES = ("gaussian", "fock")

_FOCK_SOURCES = {
    ("full", True): FockModel.FULL,
    ("full", False): FockModel.FULL_ZEEMAN,
    ("effective", True): FockModel.EFFECTIVE,
    ("effective", False): FockModel.EFFECTIVE_ZEEMAN,
    ("squeeze-special", True): FockModel.SQUEEZE,
    ("squeeze-special", False): FockModel.SQUEEZE,
}


@dataclass(frozen=True)
class SimulationResult:
    params: SystemParams
    model: str
    engine: str
    trajectory: Trajectory
    trace: SqueezingTrace
    minimum: MinimumResult | None
    regime: Regime | None
    adiabaticity: dict
    error: str | None = None


def regime_or_none(p: SystemParams) -> Regime | None:
    try:
        return classify_regime(p)
    except ResonanceError:
        return None


def simulate(
    p: SystemParams,
    *,
    model: str = "effective",
    engine: str = "gaussian",
    horizon: float = 1e-3,
    n_samples: int = 401,
    theta: float = 0.0,
    hp_fraction: float = HP_FRACTION,
    cutoffs: tuple[int, ...] | None = None,
    boundary_tol: float | None = None,
    refine: bool = True,
) -> SimulationResult:
    """Propagate the vacuum, build the squeezing trace and locate its minimum.

    The Gaussian engine stops sampling once a spin excitation exceeds
    ``n_spins`` (the Holstein-Primakoff mapping has broken down by then).
    ``minimum`` is None when no sample is HP-valid.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    n_samples = 1 if horizon == 0 else n_samples

    if engine == "gaussian":
        lin = build_model(p, model)
        s0 = vacuum_state(lin.layout)
        traj = propagate_trace(lin, s0, horizon, n_samples, n_spins=p.n_spins)

        def evaluate(t):
            return optimal_angle(propagate_exact(lin, s0, t), "c1", "c2")

    else:
        source = _FOCK_SOURCES[(model, p.zeeman_offset == 0.0)]
        if cutoffs is None:
            cutoffs = (12, 12) if not source.is_full else (8, 8, 4, 4)
        cfg = FockConfig(tuple(cutoffs), source, dissipation=source.is_full and p.kappa > 0)
        kwargs = {} if boundary_tol is None else {"boundary_tol": boundary_tol}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CutoffWarning)
            run = evolve_fock(p, cfg, horizon, max(n_samples, 2) if horizon > 0 else 1, theta=theta, **kwargs)
        traj = run.trajectory
        evaluate = None

    trace = squeezing_trace(traj, theta, n_spins=p.n_spins, hp_fraction=hp_fraction)
    minimum = None
    error = None
    if trace.hp_valid.any():
        minimum = find_min_variance(trace, evaluate if refine else None)
    else:
        error = "no Holstein-Primakoff-valid samples"
    return SimulationResult(
        params=p,
        model=model,
        engine=engine,
        trajectory=traj,
        trace=trace,
        minimum=minimum,
        regime=regime_or_none(p),
        adiabaticity=adiabaticity_report(p),
        error=error,
    )


def squeeze_theta_rotated(theta_rotated: float) -> float:
    """Angle on the original modes for a quadrature angle on c' = e^{i pi/4} c."""
    return theta_rotated + math.pi / 4
