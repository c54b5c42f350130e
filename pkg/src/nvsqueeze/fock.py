"""Brute-force truncated-Fock evolution, used to check the Gaussian engine.

Hamiltonians are written directly from ladder operators in the
Holstein-Primakoff boson picture and never go through the drift matrices of
:mod:`nvsqueeze.builder`. States are evolved by fixed-step RK4, either as a
state vector (Schrodinger) or as a density matrix under the mechanical
Lindblad dissipators.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .dynamics import MomentState, Trajectory
from .model import FULL_LAYOUT, SPIN_LAYOUT, SystemParams, effective_params
from .observables import HP_FRACTION, SqueezingTrace, squeezing_trace

STATE_BUDGET = 4_000_000
DENSITY_BUDGET = 40_000
BOUNDARY_TOL = 1e-6
#: RK4 step is 1/(STEP_FACTOR * spectral bound of the generator)
STEP_FACTOR = 50.0
DENSE_DIM = 256


class FockModel(str, enum.Enum):
    FULL = "full"
    FULL_ZEEMAN = "full_zeeman"
    EFFECTIVE = "effective"
    EFFECTIVE_ZEEMAN = "effective_zeeman"
    SQUEEZE = "squeeze"

    @property
    def is_full(self) -> bool:
        return self in (FockModel.FULL, FockModel.FULL_ZEEMAN)


class CutoffOverflowError(ArithmeticError):
    """Population on the highest retained Fock level exceeded the tolerance."""


class BudgetError(ValueError):
    pass


class InconclusiveError(RuntimeError):
    pass


class CutoffWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FockConfig:
    """Truncation and integration settings.

    ``cutoffs`` are the number of retained levels per mode, in layout order
    ([c1, c2] or [c1, c2, a, b]). ``integrator_step`` of None picks
    1/(50 x spectral bound).
    """

    cutoffs: tuple[int, ...]
    hamiltonian_source: FockModel = FockModel.EFFECTIVE
    dissipation: bool = False
    integrator_step: float | None = None

    def __post_init__(self):
        source = FockModel(self.hamiltonian_source)
        object.__setattr__(self, "hamiltonian_source", source)
        cutoffs = tuple(int(c) for c in self.cutoffs)
        object.__setattr__(self, "cutoffs", cutoffs)
        n_modes = 4 if source.is_full else 2
        if len(cutoffs) != n_modes:
            raise ValueError(f"{source.value} needs {n_modes} cutoffs, got {len(cutoffs)}")
        if min(cutoffs) < 2:
            raise ValueError("every cutoff must be >= 2")
        if self.dissipation and not source.is_full:
            raise ValueError("dissipation acts on the mechanical modes; use a full model")
        dim = math.prod(cutoffs)
        if self.dissipation:
            if dim * dim > DENSITY_BUDGET:
                raise BudgetError(f"density matrix of dimension {dim} exceeds {DENSITY_BUDGET} amplitudes")
        elif dim > STATE_BUDGET:
            raise BudgetError(f"state dimension {dim} exceeds {STATE_BUDGET} amplitudes")

    @property
    def dim(self) -> int:
        return math.prod(self.cutoffs)


def _destroy(n: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr", dtype=complex)


def mode_operators(cutoffs) -> list[sp.csr_matrix]:
    """Annihilation operator of each mode embedded in the tensor product."""
    eyes = [sp.identity(n, format="csr", dtype=complex) for n in cutoffs]
    ops = []
    for k, n in enumerate(cutoffs):
        factors = list(eyes)
        factors[k] = _destroy(n)
        ops.append(reduce(lambda x, y: sp.kron(x, y, format="csr"), factors))
    return ops


def hamiltonian(p: SystemParams, source: FockModel, ops) -> sp.csr_matrix:
    """Rotating-frame Hamiltonian (rad/s) on the truncated space."""
    source = FockModel(source)
    dag = [o.conj().T.tocsr() for o in ops]
    if source.is_full:
        c1, c2, a, b = ops
        c1d, c2d, ad, bd = dag
        omega, g, v = p.detuning, p.g_collective, p.v
        delta = p.zeeman_offset if source is FockModel.FULL_ZEEMAN else 0.0
        h = (
            -omega * (ad @ a + bd @ b)
            + delta * (c2d @ c2)
            + g * (ad @ c1 + a @ c1d + bd @ c2d + b @ c2)
            + v * (ad @ b + a @ bd)
        )
        return h.tocsr()
    c1, c2 = ops
    c1d, c2d = dag
    e = effective_params(p)
    pair = e.b_coef * (c1 @ c2 + c1d @ c2d)
    if source is FockModel.SQUEEZE:
        return pair.tocsr()
    delta = e.delta if source is FockModel.EFFECTIVE_ZEEMAN else 0.0
    return (e.a_coef * (c1d @ c1) + (e.a_coef + delta) * (c2d @ c2) + pair).tocsr()


def predicted_peak_excitation(p: SystemParams, source: FockModel, t_end: float) -> float:
    """Heuristic spin-excitation ceiling over [0, t_end] used to vet cutoffs.

    Uses the eliminated pair dynamics: n(t) = B^2 sin^2(W t)/W^2 with
    W = sqrt((Delta + 2A)^2 - 4B^2)/2, continued to sinh when W is imaginary.
    """
    source = FockModel(source)
    e = effective_params(p)
    b = abs(e.b_coef)
    if b == 0.0:
        return 0.0
    if source is FockModel.SQUEEZE:
        return math.sinh(b * t_end) ** 2
    delta = e.delta if source in (FockModel.EFFECTIVE_ZEEMAN, FockModel.FULL_ZEEMAN) else 0.0
    disc = (delta + 2.0 * e.a_coef) ** 2 - 4.0 * b * b
    if disc > 0:
        w = math.sqrt(disc) / 2.0
        return (b / w) ** 2 * (1.0 if w * t_end >= math.pi / 2 else math.sin(w * t_end) ** 2)
    if disc == 0:
        return (b * t_end) ** 2
    w = math.sqrt(-disc) / 2.0
    return (b / w) ** 2 * math.sinh(w * t_end) ** 2


def _sparse_one_norm(m) -> float:
    return float(abs(m).sum(axis=0).max())


def _vacuum_vector(dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return psi


class _Moments:
    """Exact <z_a z_b> for z = (c_1, c_1^dag, c_2, ...) turned into a MomentState."""

    def __init__(self, ops, layout):
        self.layout = layout
        self.z = []
        for o in ops:
            self.z += [o, o.conj().T.tocsr()]
        n = len(ops)
        w1 = np.array([[1.0, 1.0], [-1j, 1j]]) / math.sqrt(2.0)
        self.w = np.kron(np.eye(n), w1)

    def _state(self, first, second, t):
        m = self.w @ first
        r = self.w @ second @ self.w.T
        mean = m.real
        cov = 0.5 * (r + r.T).real - np.outer(mean, mean)
        return MomentState(time=t, mean=mean, cov=cov, layout=self.layout)

    def from_vector(self, psi, t):
        u = [z @ psi for z in self.z]
        first = np.array([np.vdot(psi, x) for x in u])
        nz = len(u)
        second = np.empty((nz, nz), dtype=complex)
        for a in range(nz):
            adag = a + 1 if a % 2 == 0 else a - 1
            for b in range(nz):
                second[a, b] = np.vdot(u[adag], u[b])
        return self._state(first, second, t)

    def from_density(self, rho, t):
        zr = [z @ rho for z in self.z]
        first = np.array([np.trace(x) for x in zr])
        nz = len(zr)
        second = np.empty((nz, nz), dtype=complex)
        for a in range(nz):
            for b in range(nz):
                second[a, b] = (self.z[a] @ zr[b]).diagonal().sum()
        return self._state(first, second, t)


def _boundary_population(ops, cutoffs, state, density: bool) -> float:
    worst = 0.0
    for o, n in zip(ops, cutoffs):
        number = (o.conj().T @ o).diagonal().real
        top = np.isclose(number, n - 1)
        if density:
            pop = float(np.real(np.diagonal(state))[top].sum())
        else:
            pop = float((np.abs(state[top]) ** 2).sum())
        worst = max(worst, pop)
    return worst


@dataclass(frozen=True)
class FockRun:
    """Output of :func:`evolve_fock`.

    ``norm_error`` is the largest |<psi|psi> - 1| (or |Tr rho - 1|) seen;
    ``richardson_error`` the largest variance change when halving the step.
    """

    trace: SqueezingTrace
    trajectory: Trajectory
    norm_error: float
    boundary_population: float
    step: float
    richardson_error: float | None = None
    ns_drift: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def _compact(op):
    # small generators: dense products beat scipy.sparse call overhead
    return op.toarray() if op.shape[0] <= DENSE_DIM else op


def _integrate(p, cfg, ops, times, step_scale=1.0):
    """Yield (time, state) pairs on ``times`` by fixed-step RK4 from vacuum."""
    h_op = hamiltonian(p, cfg.hamiltonian_source, ops)
    dim = cfg.dim
    if not cfg.dissipation:
        gen = _compact((-1j * h_op).tocsr())
        bound = _sparse_one_norm(h_op)

        def rhs(x):
            return gen @ x

        state = _vacuum_vector(dim)
    else:
        a, b = ops[2], ops[3]
        jumps = []
        if p.kappa > 0:
            for c in (a, b):
                jumps.append(math.sqrt(p.kappa * (p.n_th + 1.0)) * c)
                if p.n_th > 0:
                    jumps.append(math.sqrt(p.kappa * p.n_th) * c.conj().T.tocsr())
        pairs = [(j.tocsr(), j.conj().T.tocsr()) for j in jumps]
        eff = (-1j * h_op - 0.5 * sum((jd @ j for j, jd in pairs), sp.csr_matrix((dim, dim)))).tocsr()
        bound = 2.0 * _sparse_one_norm(h_op) + sum(2.0 * _sparse_one_norm(j) ** 2 for j, _ in pairs)
        # j r j^dagger as (conj(j) (j r)^T)^T keeps both products sparse @ dense
        sandwiches = [(j, jd.T.tocsr()) for j, jd in pairs]

        def rhs(r):
            out = eff @ r
            out = out + out.conj().T
            for j, jdt in sandwiches:
                out += (jdt @ (j @ r).T).T
            return out

        state = np.zeros((dim, dim), dtype=complex)
        state[0, 0] = 1.0

    h_max = cfg.integrator_step or (1.0 / (STEP_FACTOR * bound) if bound > 0 else math.inf)
    h_max *= step_scale
    t_prev = 0.0
    yield 0.0, state, h_max
    for t in times[1:]:
        span = t - t_prev
        n_steps = max(1, math.ceil(span / h_max - 1e-12)) if math.isfinite(h_max) else 1
        h = span / n_steps
        for _ in range(n_steps):
            k1 = rhs(state)
            k2 = rhs(state + 0.5 * h * k1)
            k3 = rhs(state + 0.5 * h * k2)
            k4 = rhs(state + h * k3)
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t_prev = t
        yield float(t), state, h


def _run(p, cfg, t_end, n_samples, boundary_tol, step_scale=1.0):
    ops = mode_operators(cfg.cutoffs)
    layout = FULL_LAYOUT if cfg.hamiltonian_source.is_full else SPIN_LAYOUT
    moments = _Moments(ops, layout)
    times = np.linspace(0.0, t_end, n_samples) if t_end > 0 else np.array([0.0])
    n_s = None
    if cfg.hamiltonian_source is not FockModel.FULL and cfg.hamiltonian_source is not FockModel.FULL_ZEEMAN:
        n_s = (ops[0].conj().T @ ops[0] - ops[1].conj().T @ ops[1]).diagonal().real
    states, norm_err, boundary, ns_vals, step = [], 0.0, 0.0, [], 0.0
    for t, state, h in _integrate(p, cfg, ops, times, step_scale):
        step = h
        if cfg.dissipation:
            norm = float(np.trace(state).real)
            states.append(moments.from_density(state, t))
            pops = np.diagonal(state).real
        else:
            norm = float(np.vdot(state, state).real)
            states.append(moments.from_vector(state, t))
            pops = np.abs(state) ** 2
        if not np.isfinite(norm):
            raise ArithmeticError(f"Fock evolution diverged at t = {t:g} s")
        norm_err = max(norm_err, abs(norm - 1.0))
        boundary = max(boundary, _boundary_population(ops, cfg.cutoffs, state, cfg.dissipation))
        if n_s is not None:
            ns_vals.append(float(pops @ n_s))
        if boundary > boundary_tol:
            raise CutoffOverflowError(
                f"boundary-level population {boundary:.3g} > {boundary_tol:g} at t = {t:g} s; raise the cutoffs"
            )
    ns_drift = float(np.ptp(ns_vals)) if ns_vals else 0.0
    traj = Trajectory(tuple(states), {"engine": "fock", "source": cfg.hamiltonian_source.value, "cutoffs": cfg.cutoffs})
    return traj, norm_err, boundary, step, ns_drift


def evolve_fock(
    p: SystemParams,
    cfg: FockConfig,
    t_end: float,
    n_samples: int,
    *,
    theta: float = 0.0,
    hp_fraction: float = HP_FRACTION,
    boundary_tol: float = BOUNDARY_TOL,
    richardson: bool = False,
) -> FockRun:
    """Evolve the vacuum in the truncated Fock space and extract the observables.

    Raises:
        CutoffOverflowError: if the highest kept level of any mode holds more
            than ``boundary_tol`` population at any sample.
    """
    peak = predicted_peak_excitation(p, cfg.hamiltonian_source, t_end)
    needed = 4 + 6 * peak
    if min(cfg.cutoffs[:2]) < needed:
        warnings.warn(
            f"cutoffs {cfg.cutoffs} below heuristic 4 + 6 x peak excitation = {needed:.1f}",
            CutoffWarning,
            stacklevel=2,
        )
    traj, norm_err, boundary, step, ns_drift = _run(p, cfg, t_end, n_samples, boundary_tol)
    trace = squeezing_trace(traj, theta, n_spins=p.n_spins, hp_fraction=hp_fraction)
    rich = None
    if richardson and t_end > 0:
        fine, *_ = _run(p, cfg, t_end, n_samples, math.inf, step_scale=0.5)
        fine_trace = squeezing_trace(fine, theta, n_spins=p.n_spins, hp_fraction=hp_fraction)
        rich = float(np.abs(fine_trace.variance_theta - trace.variance_theta).max())
    return FockRun(
        trace=trace,
        trajectory=traj,
        norm_error=norm_err,
        boundary_population=boundary,
        step=step,
        richardson_error=rich,
        ns_drift=ns_drift,
        diagnostics={"predicted_peak_excitation": peak},
    )


def observed_first_minimum(
    p: SystemParams,
    cutoffs: tuple[int, int] = (12, 12),
    *,
    n_samples: int = 301,
    boundary_tol: float = 1e-3,
) -> float:
    """First minimum time of V(X(0)) for the equal-splitting model, from Fock evolution.

    The horizon covers 1.5x the later of the two candidate predictions; the grid
    minimum is refined by a parabola through its neighbours.
    """
    from .analytic import OscillationConvention, first_minimum_time

    if p.zeeman_offset != 0.0:
        raise ValueError("adjudication uses the equal-splitting model")
    e = effective_params(p)
    if not e.lambda_real or e.b_coef == 0.0:
        raise InconclusiveError("no oscillation to fit (lambda not real or B = 0)")
    horizon = 1.5 * first_minimum_time(p, OscillationConvention.LAMBDA_T)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CutoffWarning)
        run = evolve_fock(
            p, FockConfig(tuple(cutoffs), FockModel.EFFECTIVE), horizon, n_samples, boundary_tol=boundary_tol
        )
    v = run.trace.variance_theta
    t = run.trace.times
    if np.ptp(v) < 1e-9:
        raise InconclusiveError("variance trace is flat")
    for i in range(1, len(v) - 1):
        if v[i] <= v[i - 1] and v[i] < v[i + 1] and v[i] < v[0] - 1e-9:
            denom = v[i - 1] - 2 * v[i] + v[i + 1]
            shift = 0.5 * (v[i - 1] - v[i + 1]) / denom if denom > 0 else 0.0
            return float(t[i] + shift * (t[1] - t[0]))
    raise InconclusiveError("no interior minimum found within the horizon")


def adjudicate_oscillation(p: SystemParams, cutoffs: tuple[int, int] = (12, 12), *, rtol: float = 0.05, **kwargs):
    """Whether the equal-splitting variance oscillates as sin^2(lambda t) or sin^2(2 lambda t).

    Returns the :class:`~nvsqueeze.analytic.OscillationConvention` whose first
    minimum lies within ``rtol`` of the one seen in Fock-space evolution.
    """
    from .analytic import OscillationConvention, first_minimum_time

    if p.g_collective == 0.0:
        raise InconclusiveError("g = 0: variance is flat")
    t_obs = observed_first_minimum(p, cutoffs, **kwargs)
    for conv in OscillationConvention:
        predicted = first_minimum_time(p, conv)
        if abs(t_obs - predicted) <= rtol * predicted:
            return conv
    raise InconclusiveError(f"observed first minimum {t_obs:.4g} s matches neither convention")
