"""Physical parameters, mode layout and the eliminated-model constants.

All rates are stored as angular frequencies (rad/s). Configuration files and
reports use ordinary frequencies (Hz); convert with :func:`hz` / :func:`to_hz`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

TWO_PI = 2.0 * math.pi

#: relative width of the |omega| = v exclusion zone
RESONANCE_RTOL = 1e-9
#: g/|omega +- v| above this counts as non-adiabatic
ADIABATIC_THRESHOLD = 0.1


class ResonanceError(ValueError):
    """Raised when the detuning sits on the phonon hopping resonance |omega| = v."""


def hz(f: float) -> float:
    """Ordinary frequency (Hz) to angular frequency (rad/s)."""
    return TWO_PI * f


def to_hz(w: float) -> float:
    return w / TWO_PI


@dataclass(frozen=True)
class SystemParams:
    """Rates of the four-mode model, all in rad/s.

    Attributes:
        omega_m: Mechanical frequency of both beams.
        delta_b1: Zeeman splitting of ensemble 1.
        delta_b2: Zeeman splitting of ensemble 2 (the inverted ensemble).
        g_collective: Collective spin-phonon coupling, already multiplied by sqrt(N).
        v: Phonon-phonon hopping strength.
        n_spins: Spins per ensemble; only used for Holstein-Primakoff checks.
        kappa: Mechanical energy damping rate, shared by both beams.
        n_th: Thermal phonon occupation of the bath.
    """

    omega_m: float
    delta_b1: float
    delta_b2: float
    g_collective: float
    v: float
    n_spins: int = 100
    kappa: float = 0.0
    n_th: float = 0.0

    def __post_init__(self):
        if not self.omega_m > 0:
            raise ValueError(f"omega_m must be > 0, got {self.omega_m}")
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError(f"n_spins must be a positive integer, got {self.n_spins}")
        for name in ("g_collective", "v", "kappa", "n_th"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        for name in ("omega_m", "delta_b1", "delta_b2", "g_collective", "v", "kappa", "n_th"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def detuning(self) -> float:
        """omega = delta_b1 - omega_m, the spin-phonon detuning of ensemble 1."""
        return self.delta_b1 - self.omega_m

    @property
    def zeeman_offset(self) -> float:
        """Delta = delta_b1 - delta_b2."""
        return self.delta_b1 - self.delta_b2

    def replace(self, **changes) -> "SystemParams":
        values = asdict(self)
        values.update(changes)
        return SystemParams(**values)

    @classmethod
    def from_hz(
        cls,
        *,
        omega_m: float,
        delta_b1: float,
        delta_b2: float,
        g_collective: float,
        v: float,
        n_spins: int = 100,
        kappa: float = 0.0,
        n_th: float = 0.0,
    ) -> "SystemParams":
        return cls(
            omega_m=hz(omega_m),
            delta_b1=hz(delta_b1),
            delta_b2=hz(delta_b2),
            g_collective=hz(g_collective),
            v=hz(v),
            n_spins=n_spins,
            kappa=hz(kappa),
            n_th=n_th,
        )

    @classmethod
    def from_ratios(
        cls,
        omega_over_v: float = 2.0,
        delta_over_a: float = 0.0,
        *,
        g_hz: float = 40e3,
        v_hz: float = 1e6,
        omega_m_hz: float = 2e9,
        n_spins: int = 100,
        kappa_hz: float = 0.0,
        n_th: float = 0.0,
    ) -> "SystemParams":
        """Build parameters from detuning and Zeeman-offset ratios.

        The detuning is ``omega_over_v * v`` and the Zeeman offset between the
        ensembles is ``delta_over_a * A``, with A the eliminated-model
        frequency at that detuning. Defaults are the g/2pi = 40 kHz,
        v/2pi = 1 MHz, omega = 2v set.
        """
        v = hz(v_hz)
        g = hz(g_hz)
        omega_m = hz(omega_m_hz)
        omega = omega_over_v * v
        delta = 0.0
        if delta_over_a != 0.0:
            delta = delta_over_a * omega * g**2 / (omega**2 - v**2)
        delta_b1 = omega_m + omega
        return cls(
            omega_m=omega_m,
            delta_b1=delta_b1,
            delta_b2=delta_b1 - delta,
            g_collective=g,
            v=v,
            n_spins=n_spins,
            kappa=hz(kappa_hz),
            n_th=n_th,
        )

    def to_hz_dict(self) -> dict:
        """Parameter echo in the reporting units (Hz, plus derived detunings)."""
        return {
            "omega_m_hz": to_hz(self.omega_m),
            "delta_b1_hz": to_hz(self.delta_b1),
            "delta_b2_hz": to_hz(self.delta_b2),
            "detuning_hz": to_hz(self.detuning),
            "zeeman_offset_hz": to_hz(self.zeeman_offset),
            "g_collective_hz": to_hz(self.g_collective),
            "v_hz": to_hz(self.v),
            "n_spins": int(self.n_spins),
            "kappa_hz": to_hz(self.kappa),
            "n_th": self.n_th,
        }


@dataclass(frozen=True)
class ModeLayout:
    """Ordered bosonic modes and the quadrature convention.

    Mode k owns quadrature indices (2k, 2k+1) holding x = (c + c^dag)/sqrt2 and
    p = -i(c - c^dag)/sqrt2, so the vacuum covariance is identity/2.
    """

    modes: tuple[str, ...] = ("c1", "c2", "a", "b")
    kinds: tuple[str, ...] = field(default=())

    def __post_init__(self):
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"duplicate mode labels in {modes}")
        kinds = tuple(self.kinds) or tuple("spin" if m.startswith("c") else "mechanical" for m in modes)
        if len(kinds) != len(modes):
            raise ValueError("kinds must match modes")
        object.__setattr__(self, "kinds", kinds)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def dim(self) -> int:
        return 2 * len(self.modes)

    def index(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise KeyError(f"mode {mode!r} not in layout {self.modes}") from None

    def quadratures(self, mode: str) -> tuple[int, int]:
        k = self.index(mode)
        return 2 * k, 2 * k + 1

    @property
    def spin_modes(self) -> tuple[str, ...]:
        return tuple(m for m, k in zip(self.modes, self.kinds) if k == "spin")

    @property
    def mechanical_modes(self) -> tuple[str, ...]:
        return tuple(m for m, k in zip(self.modes, self.kinds) if k == "mechanical")


FULL_LAYOUT = ModeLayout(("c1", "c2", "a", "b"))
SPIN_LAYOUT = ModeLayout(("c1", "c2"))


@dataclass(frozen=True)
class EffectiveParams:
    """Constants of the two-mode model left after eliminating the phonons (rad/s).

    ``lam`` is sqrt(A^2 - B^2), stored complex; it is imaginary when |A| < |B|.
    """

    a_coef: float
    b_coef: float
    lam: complex
    delta: float

    @property
    def lambda_real(self) -> bool:
        return self.lam.imag == 0.0 and self.lam.real > 0.0


def is_resonant(p: SystemParams, rtol: float = RESONANCE_RTOL) -> bool:
    omega = abs(p.detuning)
    return abs(omega - p.v) <= rtol * max(omega, p.v) or (omega == 0.0 and p.v == 0.0)


def effective_params(p: SystemParams) -> EffectiveParams:
    """A = omega g^2/(omega^2 - v^2), B = v g^2/(omega^2 - v^2), lambda, Delta."""
    if is_resonant(p):
        raise ResonanceError(
            f"|omega| = {abs(p.detuning):.6g} rad/s equals v = {p.v:.6g} rad/s "
            f"within relative {RESONANCE_RTOL:g}; the eliminated model diverges"
        )
    omega, v, g = p.detuning, p.v, p.g_collective
    denom = omega**2 - v**2
    a = omega * g**2 / denom
    b = v * g**2 / denom
    diff = a * a - b * b
    lam = complex(math.sqrt(diff), 0.0) if diff >= 0 else complex(0.0, math.sqrt(-diff))
    return EffectiveParams(a_coef=a, b_coef=b, lam=lam, delta=p.zeeman_offset)


def adiabaticity_ratios(p: SystemParams) -> dict:
    """g and kappa relative to the two normal-mode detunings |omega + v|, |omega - v|."""
    omega, v = p.detuning, p.v
    plus, minus = abs(omega + v), abs(omega - v)

    def ratio(x, d):
        if x == 0.0:
            return 0.0
        return x / d if d > 0 else math.inf

    return {
        "g_over_omega_plus_v": ratio(p.g_collective, plus),
        "g_over_omega_minus_v": ratio(p.g_collective, minus),
        "kappa_over_omega_plus_v": ratio(p.kappa, plus),
        "kappa_over_omega_minus_v": ratio(p.kappa, minus),
    }


def validate(p: SystemParams, threshold: float = ADIABATIC_THRESHOLD) -> list[str]:
    """Return human-readable warnings about regime assumptions (never raises)."""
    warnings = []
    if is_resonant(p):
        warnings.append("detuning is resonant with the phonon hopping (|omega| = v); no effective model exists")
    ratios = adiabaticity_ratios(p)
    worst = max(ratios["g_over_omega_plus_v"], ratios["g_over_omega_minus_v"])
    if worst > threshold:
        warnings.append(f"adiabatic elimination questionable: g/|omega +- v| = {worst:.3g} > {threshold:g}")
    if p.g_collective > 0 and p.kappa >= p.g_collective:
        warnings.append(f"mechanical damping kappa >= g ({to_hz(p.kappa):.3g} Hz vs {to_hz(p.g_collective):.3g} Hz)")
    if p.n_th > 1:
        warnings.append(f"thermal occupation n_th = {p.n_th:.3g} > 1")
    return warnings
