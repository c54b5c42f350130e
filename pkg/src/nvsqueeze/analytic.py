"""Closed-form results for the eliminated two-mode model.

These are reference implementations, independent of the moment propagator.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

from .model import RESONANCE_RTOL, SystemParams, effective_params


class DomainError(ValueError):
    """The requested formula does not apply at these parameters."""


class OscillationConvention(str, enum.Enum):
    LAMBDA_T = "lambda_t"
    TWO_LAMBDA_T = "two_lambda_t"


class Regime(str, enum.Enum):
    OSCILLATORY = "oscillatory"
    EXPONENTIAL = "exponential"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class NuCoefficients:
    """c1(t) = nu1 c1(0) - nu2 c2^dag(0) for the equal-splitting model."""

    nu1: complex
    nu2: complex


@dataclass(frozen=True)
class ExponentialCase:
    v_min: float
    v_max: float
    excitation: float


def _real_lambda(p: SystemParams) -> tuple[float, float, float]:
    e = effective_params(p)
    if not e.lambda_real:
        raise DomainError("oscillatory formulas need |omega| > v (real lambda)")
    return e.a_coef, e.b_coef, e.lam.real


def _require_equal_splitting(p: SystemParams):
    if p.zeeman_offset != 0.0:
        raise DomainError("equal-splitting formula requires delta_b1 == delta_b2")


def variance_equal_splitting(
    p: SystemParams, t: float, convention: OscillationConvention | str = OscillationConvention.LAMBDA_T
) -> float:
    """V(X_{c1c2}(0)) = 1/4 [1 - 2v/(omega + v) sin^2(arg)] with arg = lambda t or 2 lambda t."""
    _require_equal_splitting(p)
    _, _, lam = _real_lambda(p)
    convention = OscillationConvention(convention)
    arg = lam * t if convention is OscillationConvention.LAMBDA_T else 2.0 * lam * t
    omega, v = p.detuning, p.v
    return 0.25 * (1.0 - 2.0 * v / (omega + v) * math.sin(arg) ** 2)


def envelope_minimum(p: SystemParams) -> float:
    """1/4 (omega - v)/(omega + v), the deepest point of the equal-splitting oscillation."""
    omega, v = p.detuning, p.v
    return 0.25 * (omega - v) / (omega + v)


def excitation_equal_splitting(p: SystemParams, t: float) -> float:
    _require_equal_splitting(p)
    _, b, lam = _real_lambda(p)
    return (b / lam) ** 2 * math.sin(lam * t) ** 2


def peak_excitation_equal_splitting(p: SystemParams) -> float:
    _, b, lam = _real_lambda(p)
    return (b / lam) ** 2


def classify_regime(p: SystemParams, rtol: float = RESONANCE_RTOL) -> Regime:
    """Oscillatory iff |Delta + 2A| > 2|B|; exponential iff smaller; boundary within ``rtol``."""
    e = effective_params(p)
    lhs = abs(e.delta + 2.0 * e.a_coef)
    rhs = 2.0 * abs(e.b_coef)
    if abs(lhs - rhs) <= rtol * max(lhs, rhs, 1e-300):
        return Regime.BOUNDARY
    return Regime.OSCILLATORY if lhs > rhs else Regime.EXPONENTIAL


def exponential_case(p: SystemParams, t: float) -> ExponentialCase:
    """Squeezed/antisqueezed variances and excitation at Delta = -2A.

    v_min is the theta = pi/2 variance on the modes rotated by exp(i pi/4),
    v_max the theta = 0 one. The caller is responsible for Delta = -2A.
    """
    e = effective_params(p)
    bt = e.b_coef * t
    return ExponentialCase(
        v_min=0.25 * math.exp(-2.0 * bt),
        v_max=0.25 * math.exp(2.0 * bt),
        excitation=math.sinh(bt) ** 2,
    )


def propagator_coefficients(p: SystemParams, t: float) -> NuCoefficients:
    e = effective_params(p)
    lam = e.lam
    if abs(lam) == 0.0:
        raise DomainError("lambda = 0 (A = +-B): propagator coefficients are degenerate")
    s = cmath.sin(lam * t)
    return NuCoefficients(
        nu1=cmath.cos(lam * t) - 1j * (e.a_coef / lam) * s,
        nu2=1j * (e.b_coef / lam) * s,
    )


def second_moments(nu: NuCoefficients) -> dict[str, complex]:
    """Vacuum-started second moments of c1, c2 from the propagator coefficients."""
    nu1, nu2 = nu.nu1, nu.nu2
    return {
        "c1c2": -nu1 * nu2,
        "c1c1dag": nu1 * nu1.conjugate(),
        "c1dagc1": -(nu2**2),
        "c1dagc2dag": nu2 * nu1.conjugate(),
    }


def variance_from_moments(m: dict[str, complex]) -> float:
    """V(X(0)) = 1/4 (<c1 c1^dag> + <c2^dag c2> + <c1 c2> + <c1^dag c2^dag>), using c1/c2 symmetry."""
    return 0.25 * (m["c1c1dag"] + m["c1dagc1"] + m["c1c2"] + m["c1dagc2dag"]).real


def first_minimum_time(
    p: SystemParams, convention: OscillationConvention | str = OscillationConvention.LAMBDA_T
) -> float:
    """Time of the first variance minimum at Delta = 0: pi/(2 lambda), or pi/(4 lambda)."""
    _require_equal_splitting(p)
    if classify_regime(p) is not Regime.OSCILLATORY:
        raise DomainError("first minimum only defined in the oscillatory regime")
    _, _, lam = _real_lambda(p)
    t = math.pi / (2.0 * lam)
    return t if OscillationConvention(convention) is OscillationConvention.LAMBDA_T else t / 2.0
