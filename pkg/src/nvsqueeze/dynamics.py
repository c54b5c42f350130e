"""Exact and time-stepped propagation of first and second moments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .builder import LinearModel, symplectic_form
from .model import ModeLayout


class NumericalError(ArithmeticError):
    """Propagation produced non-finite moments."""


@dataclass(frozen=True)
class MomentState:
    """Mean <r> and covariance sigma_ij = <{dr_i, dr_j}>/2 at one time (s)."""

    time: float
    mean: np.ndarray
    cov: np.ndarray
    layout: ModeLayout

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def uncertainty_margin(self) -> float:
        """Smallest eigenvalue of sigma + i Omega/2 (>= 0 for physical states)."""
        omega = symplectic_form(self.layout.n_modes)
        return float(np.linalg.eigvalsh(self.cov + 0.5j * omega).min())

    def symplectic_eigenvalues(self) -> np.ndarray:
        omega = symplectic_form(self.layout.n_modes)
        ev = np.abs(np.linalg.eigvals(1j * omega @ self.cov))
        return np.sort(ev)[::2]

    def purity(self) -> float:
        """1/sqrt(det 2 sigma); 1 for pure Gaussian states."""
        return float(1.0 / math.sqrt(np.linalg.det(2.0 * self.cov)))


@dataclass(frozen=True)
class Trajectory:
    states: tuple[MomentState, ...]
    provenance: dict = field(default_factory=dict)
    truncated: bool = False

    def __post_init__(self):
        times = [s.time for s in self.states]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    @property
    def layout(self) -> ModeLayout:
        return self.states[0].layout

    def __len__(self):
        return len(self.states)


def vacuum_state(layout: ModeLayout) -> MomentState:
    return MomentState(time=0.0, mean=np.zeros(layout.dim), cov=0.5 * np.eye(layout.dim), layout=layout)


def step_operators(model: LinearModel, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Propagator E = exp(F dt) and accumulated noise Q = int_0^dt e^{Fs} D e^{F^T s} ds.

    Both come from one exponential of the block matrix [[F, D], [0, -F^T]] dt,
    whose upper blocks are E and G with Q = G E^T.
    """
    n = model.layout.dim
    if dt == 0.0:
        return np.eye(n), np.zeros((n, n))
    if model.is_closed:
        with np.errstate(over="ignore", invalid="ignore"):
            e = expm(model.drift * dt)
        q = np.zeros((n, n))
    else:
        # the -F^T block grows like exp(kappa dt / 2) and the noise integral then
        # drowns in cancellation; keep that factor O(1) and double back up
        rate = np.linalg.norm(0.5 * (model.drift + model.drift.T), 2) * dt
        halvings = math.ceil(math.log2(rate)) if rate > 1 else 0
        block = np.zeros((2 * n, 2 * n))
        block[:n, :n] = model.drift
        block[:n, n:] = model.diffusion
        block[n:, n:] = -model.drift.T
        with np.errstate(over="ignore", invalid="ignore"):
            big = expm(block * (dt / 2**halvings))
        e = big[:n, :n]
        q = big[:n, n:] @ e.T
        for _ in range(halvings):
            q = e @ q @ e.T + q
            e = e @ e
        q = 0.5 * (q + q.T)
    if not (np.all(np.isfinite(e)) and np.all(np.isfinite(q))):
        raise NumericalError(f"propagator overflow at dt = {dt:g} s")
    return e, q


def _advance(state: MomentState, e: np.ndarray, q: np.ndarray, t: float) -> MomentState:
    mean = e @ state.mean
    cov = e @ state.cov @ e.T + q
    cov = 0.5 * (cov + cov.T)
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise NumericalError(f"moments diverged at t = {t:g} s")
    return MomentState(time=t, mean=mean, cov=cov, layout=state.layout)


def propagate_exact(model: LinearModel, s0: MomentState, t: float) -> MomentState:
    """Moments after evolving ``s0`` for a duration ``t`` under ``model``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if s0.layout != model.layout:
        raise ValueError("state and model layouts differ")
    e, q = step_operators(model, t)
    return _advance(s0, e, q, s0.time + t)


def _spin_excitations(state: MomentState) -> float:
    worst = 0.0
    for m in state.layout.spin_modes:
        i, j = state.layout.quadratures(m)
        n = 0.5 * (state.cov[i, i] + state.cov[j, j] - 1.0) + 0.5 * (state.mean[i] ** 2 + state.mean[j] ** 2)
        worst = max(worst, n)
    return worst


def rk4_step_size(model: LinearModel, t_end: float, n_samples: int, steps_per_period: int = 200) -> float:
    top = np.abs(np.linalg.eigvals(model.drift)).max()
    spacing = t_end / max(n_samples - 1, 1)
    if top == 0.0:
        return spacing
    return min(2.0 * math.pi / (steps_per_period * top), spacing)


def _rk4_advance(model: LinearModel, mean, cov, dt, n_steps):
    f, d = model.drift, model.diffusion

    def rhs(m, s):
        fs = f @ s
        return f @ m, fs + fs.T + d

    for _ in range(n_steps):
        k1m, k1s = rhs(mean, cov)
        k2m, k2s = rhs(mean + 0.5 * dt * k1m, cov + 0.5 * dt * k1s)
        k3m, k3s = rhs(mean + 0.5 * dt * k2m, cov + 0.5 * dt * k2s)
        k4m, k4s = rhs(mean + dt * k3m, cov + dt * k3s)
        mean = mean + dt / 6.0 * (k1m + 2 * k2m + 2 * k3m + k4m)
        cov = cov + dt / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s)
    return mean, cov


def propagate_trace(
    model: LinearModel,
    s0: MomentState,
    t_end: float,
    n_samples: int,
    *,
    method: str = "expm",
    n_spins: int | None = None,
) -> Trajectory:
    """Sample the moments on a uniform grid of ``n_samples`` points over [0, t_end].

    ``method="expm"`` reuses the exact one-step propagator; ``"rk4"`` integrates
    the moment equations with fixed-step RK4 as an independent check.

    If ``n_spins`` is given, sampling stops before the first sample at which a
    spin-mode excitation exceeds it and the trajectory is marked truncated.
    """
    if s0.layout != model.layout:
        raise ValueError("state and model layouts differ")
    if t_end == 0:
        return Trajectory((s0,), {"model": model.description, "integrator": method})
    if t_end < 0 or n_samples < 2:
        raise ValueError("need t_end > 0 and n_samples >= 2")
    times = s0.time + np.linspace(0.0, t_end, n_samples)
    dt = t_end / (n_samples - 1)
    provenance = {"model": model.description, "integrator": method, "dt": dt, "n_samples": n_samples}
    states = [s0]
    truncated = False

    if method == "expm":
        e, q = step_operators(model, dt)

        def advance(s, t):
            return _advance(s, e, q, t)

    elif method == "rk4":
        h = rk4_step_size(model, t_end, n_samples)
        n_steps = max(1, math.ceil(dt / h - 1e-12))
        provenance.update(step=dt / n_steps, substeps=n_steps)

        def advance(s, t):
            mean, cov = _rk4_advance(model, s.mean, s.cov, dt / n_steps, n_steps)
            if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
                raise NumericalError(f"moments diverged at t = {t:g} s")
            return MomentState(time=t, mean=mean, cov=0.5 * (cov + cov.T), layout=s.layout)

    else:
        raise ValueError(f"unknown method {method!r}")

    for t in times[1:]:
        nxt = advance(states[-1], float(t))
        if n_spins is not None and _spin_excitations(nxt) > n_spins:
            truncated = True
            provenance["truncated_at"] = float(t)
            break
        states.append(nxt)
    return Trajectory(tuple(states), provenance, truncated)
