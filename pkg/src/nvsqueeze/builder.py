"""Linear (Gaussian) models of the spin-phonon system.

Every model is written first as Heisenberg equations for the ladder operators,

    d c_k/dt = sum_j alpha[k, j] c_j + beta[k, j] c_j^dag,

and then mapped to the real quadrature basis of :class:`~nvsqueeze.model.ModeLayout`,
giving the drift F in d<r>/dt = F <r> and the diffusion D in
d sigma/dt = F sigma + sigma F^T + D.

The rotating-frame sign of the mechanical modes follows d a/dt = +i omega a
with omega = delta_b1 - omega_m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    ADIABATIC_THRESHOLD,
    FULL_LAYOUT,
    SPIN_LAYOUT,
    ModeLayout,
    SystemParams,
    adiabaticity_ratios,
    effective_params,
)

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LinearModel:
    """Drift and diffusion of a set of bosonic modes in the quadrature basis.

    Attributes:
        layout: Mode labels and ordering.
        drift: Real (2n, 2n) generator of the mean, units rad/s.
        diffusion: Real symmetric PSD (2n, 2n) matrix, units rad/s.
        description: Which equations and frame produced the model.
    """

    layout: ModeLayout
    drift: np.ndarray
    diffusion: np.ndarray
    description: str = ""

    def __post_init__(self):
        n = self.layout.dim
        drift = np.array(self.drift, dtype=float)
        diffusion = np.array(self.diffusion, dtype=float)
        if drift.shape != (n, n) or diffusion.shape != (n, n):
            raise ValueError(f"matrices must be {n}x{n} for layout {self.layout.modes}")
        if not np.allclose(diffusion, diffusion.T, atol=1e-12 * (1 + np.abs(diffusion).max())):
            raise ValueError("diffusion matrix must be symmetric")
        drift.setflags(write=False)
        diffusion.setflags(write=False)
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "diffusion", diffusion)

    @property
    def is_closed(self) -> bool:
        return not np.any(self.diffusion)


def symplectic_form(n_modes: int) -> np.ndarray:
    """Omega = direct sum of [[0, 1], [-1, 0]], matching [x, p] = i."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def ladder_to_quadrature(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Real drift for d c/dt = alpha c + beta c^dag.

    Uses z = U r with z = (c_1, c_1^dag, c_2, ...) interleaved and
    per-mode U = [[1, i], [1, -i]]/sqrt2; F = U^-1 K U.
    """
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    n = alpha.shape[0]
    k = np.zeros((2 * n, 2 * n), dtype=complex)
    k[0::2, 0::2] = alpha
    k[0::2, 1::2] = beta
    k[1::2, 0::2] = beta.conj()
    k[1::2, 1::2] = alpha.conj()
    u1 = np.array([[1.0, 1j], [1.0, -1j]]) / _SQRT2
    u = np.kron(np.eye(n), u1)
    f = np.linalg.solve(u, k @ u)
    if np.abs(f.imag).max(initial=0.0) > 1e-9 * (1.0 + np.abs(f.real).max(initial=0.0)):
        raise AssertionError("ladder equations do not map to a real drift")
    return f.real


def thermal_diffusion(layout: ModeLayout, kappa: float, n_th: float, modes=None) -> np.ndarray:
    """kappa (2 n_th + 1)/2 on both quadratures of each damped mode."""
    d = np.zeros((layout.dim, layout.dim))
    for m in layout.mechanical_modes if modes is None else modes:
        i, j = layout.quadratures(m)
        d[i, i] = d[j, j] = kappa * (2.0 * n_th + 1.0) / 2.0
    return d


def build_full_model(p: SystemParams) -> LinearModel:
    """Four-mode model [c1, c2, a, b] with mechanical damping.

    dc1/dt = -i g a
    dc2/dt = -i Delta c2 - i g b^dag
    da/dt  = i omega a - i g c1 - i v b - kappa/2 a
    db/dt  = i omega b - i g c2^dag - i v a - kappa/2 b
    """
    g, v, omega, delta = p.g_collective, p.v, p.detuning, p.zeeman_offset
    alpha = np.zeros((4, 4), dtype=complex)
    beta = np.zeros((4, 4), dtype=complex)
    c1, c2, a, b = range(4)
    alpha[c1, a] = -1j * g
    alpha[c2, c2] = -1j * delta
    beta[c2, b] = -1j * g
    alpha[a, a] = 1j * omega - p.kappa / 2.0
    alpha[a, c1] = -1j * g
    alpha[a, b] = -1j * v
    alpha[b, b] = 1j * omega - p.kappa / 2.0
    beta[b, c2] = -1j * g
    alpha[b, a] = -1j * v
    return LinearModel(
        layout=FULL_LAYOUT,
        drift=ladder_to_quadrature(alpha, beta),
        diffusion=thermal_diffusion(FULL_LAYOUT, p.kappa, p.n_th),
        description=(
            "full four-mode model, rotating frame, "
            f"{'equal' if delta == 0 else 'unequal'} Zeeman splitting, mechanical damping"
        ),
    )


def build_effective_model(p: SystemParams) -> LinearModel:
    """Two-mode model after eliminating both phonons.

    H_eff = A c1^dag c1 + (A + Delta) c2^dag c2 + B (c1 c2 + c1^dag c2^dag); lossless.
    """
    e = effective_params(p)
    alpha = np.diag([-1j * e.a_coef, -1j * (e.a_coef + e.delta)])
    beta = np.array([[0.0, -1j * e.b_coef], [-1j * e.b_coef, 0.0]])
    return LinearModel(
        layout=SPIN_LAYOUT,
        drift=ladder_to_quadrature(alpha, beta),
        diffusion=np.zeros((4, 4)),
        description="adiabatically eliminated two-mode model" + (" (equal splitting)" if e.delta == 0 else ""),
    )


def build_squeeze_model(p: SystemParams) -> LinearModel:
    """Pure two-mode squeezer B (c1 c2 + c1^dag c2^dag).

    At Delta = -2A the eliminated model differs from this only by
    A (c1^dag c1 - c2^dag c2), which commutes with it and leaves vacuum-started
    moments of the pair quadratures unchanged.
    """
    e = effective_params(p)
    beta = np.array([[0.0, -1j * e.b_coef], [-1j * e.b_coef, 0.0]])
    return LinearModel(
        layout=SPIN_LAYOUT,
        drift=ladder_to_quadrature(np.zeros((2, 2)), beta),
        diffusion=np.zeros((4, 4)),
        description="reduced two-mode squeezing model (Delta = -2A)",
    )


def build_model(p: SystemParams, kind: str) -> LinearModel:
    builders = {"full": build_full_model, "effective": build_effective_model, "squeeze-special": build_squeeze_model}
    try:
        return builders[kind](p)
    except KeyError:
        raise ValueError(f"unknown model {kind!r}; expected one of {sorted(builders)}") from None


@dataclass(frozen=True)
class NormalModes:
    """The full model seen in the phonon normal-mode basis.

    ``basis_map`` is the orthogonal matrix R with r_new = R r_old.
    Mechanical frequencies are lab-frame values omega_m + v and omega_m - v.
    """

    model: LinearModel
    basis_map: np.ndarray
    mechanical_frequencies: tuple[float, float]
    rotating_frequencies: tuple[float, float]
    coupling: float


def normal_mode_transform(p: SystemParams) -> NormalModes:
    full = build_full_model(p)
    r = np.eye(8)
    block = np.array([[1.0, 1.0], [1.0, -1.0]]) / _SQRT2
    # (x_a, x_b) and (p_a, p_b) each mix by the same real rotation
    r[4:8, 4:8] = np.kron(block, np.eye(2))
    layout = ModeLayout(("c1", "c2", "a_plus", "a_minus"), ("spin", "spin", "mechanical", "mechanical"))
    model = LinearModel(
        layout=layout,
        drift=r @ full.drift @ r.T,
        diffusion=r @ full.diffusion @ r.T,
        description="full model in the (a+b)/sqrt2, (a-b)/sqrt2 basis",
    )
    return NormalModes(
        model=model,
        basis_map=r,
        mechanical_frequencies=(p.omega_m + p.v, p.omega_m - p.v),
        rotating_frequencies=(-(p.detuning - p.v), -(p.detuning + p.v)),
        coupling=p.g_collective / _SQRT2,
    )


def adiabaticity_report(p: SystemParams, threshold: float = ADIABATIC_THRESHOLD) -> dict:
    """Ratios of g and kappa to |omega +- v| and the resulting adiabatic flag."""
    ratios = adiabaticity_ratios(p)
    worst = max(ratios["g_over_omega_plus_v"], ratios["g_over_omega_minus_v"])
    return {**ratios, "worst_g_ratio": worst, "threshold": threshold, "adiabatic": bool(worst <= threshold)}
