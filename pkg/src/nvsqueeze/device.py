"""Beam geometry to physical rates: coupling, flexural frequency, damping, thermal occupation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.constants import hbar, k as k_boltzmann

from .model import TWO_PI, SystemParams, hz, to_hz

DIAMOND_DENSITY = 3500.0  # kg/m^3
DIAMOND_YOUNGS_MODULUS = 1.05e12  # Pa
#: Hz; multiplies the dimensionless sqrt(hbar / (L^3 w sqrt(rho E)))
COUPLING_PREFACTOR = 180e9
#: beta_1 L of the fundamental clamped-clamped flexural mode
BETA1_L = 4.730040744862704
#: kappa/2pi quoted alongside Q = 1e6 at T = 10 mK
QUOTED_KAPPA_HZ = 1e3


class GeometryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BeamGeometry:
    """Doubly clamped beam, SI units (m, kg/m^3, Pa, K)."""

    length: float
    width: float
    height: float
    density: float = DIAMOND_DENSITY
    youngs_modulus: float = DIAMOND_YOUNGS_MODULUS
    quality_factor: float = 1e6
    temperature: float = 0.01

    def __post_init__(self):
        for name in ("length", "width", "height", "density", "youngs_modulus", "quality_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.temperature >= 0:
            raise ValueError("temperature must be >= 0")
        if self.length < 5 * max(self.width, self.height):
            warnings.warn("thin-beam formulas assume L >> w, h", GeometryWarning, stacklevel=3)

    @classmethod
    def reference(cls) -> "BeamGeometry":
        """(L, w, h) = (0.5, 0.05, 0.05) um diamond beam."""
        return cls(length=0.5e-6, width=0.05e-6, height=0.05e-6)


def estimate_coupling(geom: BeamGeometry) -> float:
    """Single-NV strain coupling g (rad/s) for an NV near the beam surface."""
    radicand = hbar / (geom.length**3 * geom.width * math.sqrt(geom.density * geom.youngs_modulus))
    return hz(COUPLING_PREFACTOR * math.sqrt(radicand))


def collective_coupling(geom: BeamGeometry, n_spins: int) -> float:
    return math.sqrt(n_spins) * estimate_coupling(geom)


def estimate_mech_frequency(geom: BeamGeometry) -> float:
    """Fundamental Euler-Bernoulli frequency (rad/s): beta1^2 sqrt(E I / (rho w h)), I = w h^3/12."""
    inertia = geom.width * geom.height**3 / 12.0
    area = geom.width * geom.height
    return (BETA1_L / geom.length) ** 2 * math.sqrt(geom.youngs_modulus * inertia / (geom.density * area))


def bose_occupation(omega: float, temperature: float) -> float:
    if temperature == 0:
        return 0.0
    x = hbar * omega / (k_boltzmann * temperature)
    return 0.0 if x > 700 else 1.0 / math.expm1(x)


def thermal_and_damping(geom: BeamGeometry, omega_m: float) -> tuple[float, float]:
    """(kappa = omega_m / Q, n_th at the geometry's temperature)."""
    return omega_m / geom.quality_factor, bose_occupation(omega_m, geom.temperature)


def device_report(geom: BeamGeometry, n_spins: int = 100) -> dict:
    """All derived rates in Hz, plus the commonly quoted 1 kHz damping for comparison."""
    g = estimate_coupling(geom)
    omega_m = estimate_mech_frequency(geom)
    kappa, n_th = thermal_and_damping(geom, omega_m)
    return {
        "g_single_hz": to_hz(g),
        "g_collective_hz": to_hz(math.sqrt(n_spins) * g),
        "f1_hz": to_hz(omega_m),
        "kappa_hz": to_hz(kappa),
        "kappa_quoted_hz": QUOTED_KAPPA_HZ,
        "n_th": n_th,
        "n_spins": n_spins,
        "temperature_k": geom.temperature,
        "quality_factor": geom.quality_factor,
    }


def params_from_device(
    geom: BeamGeometry,
    *,
    n_spins: int = 100,
    v_hz: float = 1e6,
    omega_over_v: float = 2.0,
    zeeman_offset_hz: float = 0.0,
) -> SystemParams:
    """SystemParams with g, omega_m, kappa and n_th taken from the beam estimates."""
    g = collective_coupling(geom, n_spins)
    omega_m = estimate_mech_frequency(geom)
    kappa, n_th = thermal_and_damping(geom, omega_m)
    v = hz(v_hz)
    delta_b1 = omega_m + omega_over_v * v
    return SystemParams(
        omega_m=omega_m,
        delta_b1=delta_b1,
        delta_b2=delta_b1 - TWO_PI * zeeman_offset_hz,
        g_collective=g,
        v=v,
        n_spins=n_spins,
        kappa=kappa,
        n_th=n_th,
    )
