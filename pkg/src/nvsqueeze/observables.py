"""Squeezing and excitation observables extracted from moment states."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import MomentState, Trajectory

HP_FRACTION = 0.1
VACUUM_VARIANCE = 0.25


class EmptyTraceError(ValueError):
    pass


class HPInvalidError(ValueError):
    """No sample of the trace satisfies the Holstein-Primakoff bound."""


def _pair_matrix(layout, mode_i: str, mode_j: str) -> np.ndarray:
    if mode_i == mode_j:
        raise ValueError("joint quadrature needs two distinct modes")
    xi, pi_ = layout.quadratures(mode_i)
    xj, pj = layout.quadratures(mode_j)
    m = np.zeros((2, layout.dim))
    m[0, [xi, xj]] = 1.0
    m[1, [pi_, pj]] = 1.0
    return m


def _pair_forms(covs: np.ndarray, layout, mode_i: str, mode_j: str) -> np.ndarray:
    """Covariance of (x_i + x_j, p_i + p_j) for a stack of covariance matrices."""
    m = _pair_matrix(layout, mode_i, mode_j)
    return np.einsum("ak,tkl,bl->tab", m, covs, m)


def _variance_at(forms: np.ndarray, theta: float) -> np.ndarray:
    u = np.array([math.cos(theta), -math.sin(theta)])
    return np.einsum("a,tab,b->t", u, forms, u) / 4.0


def _optimum(forms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form minimum of u^T S u / 4 over u = (cos theta, -sin theta)."""
    a, b, c = forms[:, 0, 0], forms[:, 0, 1], forms[:, 1, 1]
    half = 0.5 * (a - c)
    radius = np.hypot(half, b)
    v_min = (0.5 * (a + c) - radius) / 4.0
    flat = radius <= 1e-12 * np.maximum(np.abs(a + c), 1.0)
    theta = np.where(flat, 0.0, np.mod(-0.5 * np.arctan2(-b, -half), math.pi))
    # theta and theta + pi give the same variance; report angles just below pi as 0
    theta = np.where(theta > math.pi - 1e-7, 0.0, theta)
    return theta, v_min


def joint_quadrature_variance(s: MomentState, mode_i: str, mode_j: str, theta: float) -> float:
    """Variance of [cos(theta)(x_i + x_j) - sin(theta)(p_i + p_j)]/2; vacuum gives 1/4.

    This is X(theta) = (e^{i theta}(c_i + c_j) + h.c.)/(2 sqrt2). For modes
    rotated as c' = e^{i phi} c, pass theta' + phi.
    """
    return float(_variance_at(_pair_forms(s.cov[None], s.layout, mode_i, mode_j), theta)[0])


def optimal_angle(s: MomentState, mode_i: str, mode_j: str) -> tuple[float, float]:
    """(theta in [0, pi), minimum variance) over all quadrature angles; theta = 0 if degenerate."""
    theta, v_min = _optimum(_pair_forms(s.cov[None], s.layout, mode_i, mode_j))
    return float(theta[0]), float(v_min[0])


def duan_sum(s: MomentState, mode_i: str, mode_j: str, theta: float) -> float:
    """V(X_+(theta)) + V(P_-(theta)); at least 1/2 for separable states."""
    xi, pi_ = s.layout.quadratures(mode_i)
    xj, pj = s.layout.quadratures(mode_j)
    c, sn = math.cos(theta), math.sin(theta)
    plus = np.zeros(s.layout.dim)
    plus[[xi, xj]] = c / 2
    plus[[pi_, pj]] = -sn / 2
    minus = np.zeros(s.layout.dim)
    minus[xi], minus[pi_] = sn / 2, c / 2
    minus[xj], minus[pj] = -sn / 2, -c / 2
    return float(plus @ s.cov @ plus + minus @ s.cov @ minus)


def mode_excitation(s: MomentState, mode: str) -> float:
    """<c^dag c> = (sigma_xx + sigma_pp - 1)/2 + (<x>^2 + <p>^2)/2."""
    i, j = s.layout.quadratures(mode)
    return float(0.5 * (s.cov[i, i] + s.cov[j, j] - 1.0) + 0.5 * (s.mean[i] ** 2 + s.mean[j] ** 2))


@dataclass(frozen=True)
class SqueezingTrace:
    """Per-sample squeezing and excitation record.

    ``excitations`` holds the spin modes, ``phonon_occupations`` the mechanical
    ones (empty for eliminated models).
    """

    times: np.ndarray
    theta: float
    variance_theta: np.ndarray
    variance_opt: np.ndarray
    theta_opt: np.ndarray
    excitations: dict
    phonon_occupations: dict
    hp_valid: np.ndarray
    n_spins: float
    hp_fraction: float
    pair: tuple[str, str] = ("c1", "c2")
    truncated: bool = False

    def __len__(self):
        return len(self.times)

    @property
    def max_spin_excitation(self) -> np.ndarray:
        if not self.excitations:
            return np.zeros(len(self.times))
        return np.max(np.vstack(list(self.excitations.values())), axis=0)

    @property
    def first_violation(self) -> float | None:
        bad = np.flatnonzero(~self.hp_valid)
        return float(self.times[bad[0]]) if bad.size else None

    @property
    def peak_excitation(self) -> float:
        return float(self.max_spin_excitation.max()) if len(self.times) else 0.0


def squeezing_trace(
    states,
    theta: float = 0.0,
    *,
    pair: tuple[str, str] = ("c1", "c2"),
    n_spins: float = math.inf,
    hp_fraction: float = HP_FRACTION,
) -> SqueezingTrace:
    """Evaluate every observable along a trajectory (or a sequence of states)."""
    truncated = bool(getattr(states, "truncated", False))
    states = list(states.states if isinstance(states, Trajectory) else states)
    if not states:
        raise EmptyTraceError("no states to evaluate")
    layout = states[0].layout
    covs = np.array([s.cov for s in states])
    means = np.array([s.mean for s in states])
    forms = _pair_forms(covs, layout, *pair)
    v_theta = _variance_at(forms, theta)
    theta_opt, v_opt = _optimum(forms)

    def excitation(m):
        i, j = layout.quadratures(m)
        return 0.5 * (covs[:, i, i] + covs[:, j, j] - 1.0) + 0.5 * (means[:, i] ** 2 + means[:, j] ** 2)

    exc = {m: excitation(m) for m in layout.spin_modes}
    occ = {m: excitation(m) for m in layout.mechanical_modes}
    trace = SqueezingTrace(
        times=np.array([s.time for s in states]),
        theta=theta,
        variance_theta=v_theta,
        variance_opt=v_opt,
        theta_opt=theta_opt,
        excitations=exc,
        phonon_occupations=occ,
        hp_valid=np.ones(len(states), dtype=bool),
        n_spins=n_spins,
        hp_fraction=hp_fraction,
        pair=pair,
        truncated=truncated,
    )
    return hp_check(trace, n_spins, hp_fraction)


def hp_check(trace: SqueezingTrace, n_spins: float, hp_fraction: float = HP_FRACTION) -> SqueezingTrace:
    """Flag samples whose spin excitation exceeds ``hp_fraction * n_spins``."""
    valid = trace.max_spin_excitation <= hp_fraction * n_spins
    return replace(trace, hp_valid=valid, n_spins=n_spins, hp_fraction=hp_fraction)


@dataclass(frozen=True)
class MinimumResult:
    t_min: float
    v_min: float
    theta_opt: float
    refined: bool = False


def find_min_variance(
    trace: SqueezingTrace,
    evaluate: Callable[[float], tuple[float, float]] | None = None,
    *,
    rtol: float = 1e-6,
    tie_atol: float = 1e-9,
    max_candidates: int = 16,
) -> MinimumResult:
    """Global minimum of the optimal-angle variance over HP-valid samples.

    ``evaluate(t) -> (theta_opt, v_min)`` re-propagates to arbitrary times; when
    given, each candidate grid minimum is refined by bounded scalar search to a
    relative time tolerance ``rtol``. Equal minima (within ``tie_atol``) resolve
    to the earliest.
    """
    if len(trace) == 0:
        raise EmptyTraceError("empty trace")
    valid = np.asarray(trace.hp_valid, dtype=bool)
    if not valid.any():
        raise HPInvalidError("no Holstein-Primakoff-valid samples in trace")
    v = np.where(valid, trace.variance_opt, np.inf)
    t = trace.times
    finite = v[valid]
    lo, hi = finite.min(), finite.max()
    if hi - lo <= 1e-14 or len(trace) < 3 or evaluate is None:
        best = int(np.flatnonzero(v <= lo + tie_atol)[0])
        return MinimumResult(float(t[best]), float(v[best]), float(trace.theta_opt[best]))

    left = np.concatenate(([np.inf], v[:-1]))
    right = np.concatenate((v[1:], [np.inf]))
    local = np.flatnonzero(valid & (v <= left) & (v <= right) & (v <= lo + 0.01 * (hi - lo)))
    local = sorted(local, key=lambda i: (v[i], i))[:max_candidates]

    results = []
    for i in sorted(local):
        a = t[max(i - 1, 0)] if valid[max(i - 1, 0)] else t[i]
        b = t[min(i + 1, len(t) - 1)] if valid[min(i + 1, len(t) - 1)] else t[i]
        best = MinimumResult(float(t[i]), float(v[i]), float(trace.theta_opt[i]))
        if b > a:
            xatol = rtol * max(abs(t[i]), b - a)
            res = minimize_scalar(lambda x: evaluate(x)[1], bounds=(a, b), method="bounded", options={"xatol": xatol})
            theta, vv = evaluate(float(res.x))
            if vv < best.v_min:
                best = MinimumResult(float(res.x), float(vv), float(theta), refined=True)
        results.append(best)
    top = min(r.v_min for r in results)
    return min((r for r in results if r.v_min <= top + tie_atol), key=lambda r: r.t_min)


def to_db(variance: float) -> float:
    """Squeezing relative to vacuum in dB (negative = squeezed)."""
    return 10.0 * math.log10(variance / VACUUM_VARIANCE)
