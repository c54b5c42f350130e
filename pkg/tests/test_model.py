import math

import pytest

from nvsqueeze.model import (
    FULL_LAYOUT,
    SPIN_LAYOUT,
    ResonanceError,
    SystemParams,
    adiabaticity_ratios,
    effective_params,
    hz,
    is_resonant,
    to_hz,
    validate,
)

from conftest import ref_params


def test_hz_round_trip():
    assert to_hz(hz(1234.5)) == pytest.approx(1234.5, rel=1e-15)


def test_effective_coefficients_at_twice_hopping(p2):
    # A = omega g^2/(omega^2 - v^2) = 2 g^2/(3 v) with g = 40 kHz, v = 1 MHz
    e = effective_params(p2)
    assert to_hz(e.a_coef) == pytest.approx(2 * 40e3**2 / 3e6, rel=1e-12)
    assert to_hz(e.b_coef) == pytest.approx(40e3**2 / 3e6, rel=1e-12)
    assert to_hz(e.lam.real) == pytest.approx(math.sqrt(1066.6666**2 - 533.3333**2), rel=1e-6)
    assert e.lambda_real


def test_imaginary_lambda_below_hopping():
    e = effective_params(ref_params(0.5))
    assert not e.lambda_real
    assert e.lam.imag != 0


def test_resonance_rejected():
    p = ref_params(1.0 + 1e-12)
    assert is_resonant(p)
    with pytest.raises(ResonanceError):
        effective_params(p)


def test_zeeman_offset_from_ratio():
    p = ref_params(2.0, -0.5)
    a = effective_params(p).a_coef
    assert p.zeeman_offset == pytest.approx(-0.5 * a, rel=1e-9)
    assert p.detuning == pytest.approx(2 * p.v, rel=1e-9)


def test_from_hz_matches_from_ratios():
    p = SystemParams.from_hz(omega_m=2e9, delta_b1=2e9 + 2e6, delta_b2=2e9 + 2e6, g_collective=40e3, v=1e6)
    q = ref_params(2.0)
    assert p.detuning == pytest.approx(q.detuning, rel=1e-9)
    assert p.g_collective == q.g_collective


@pytest.mark.parametrize(
    "field,value", [("omega_m", 0.0), ("g_collective", -1.0), ("v", -1.0), ("kappa", -1.0), ("n_th", -0.1),
                    ("n_spins", 0), ("n_spins", 2.5), ("v", math.inf)]
)
def test_invalid_values_rejected(p2, field, value):
    with pytest.raises(ValueError):
        p2.replace(**{field: value})


def test_adiabaticity_ratios(p2):
    r = adiabaticity_ratios(p2)
    assert r["g_over_omega_plus_v"] == pytest.approx(40e3 / 3e6)
    assert r["g_over_omega_minus_v"] == pytest.approx(40e3 / 1e6)


def test_validate_clean_at_reference_point(p2):
    assert validate(p2) == []


def test_validate_flags():
    near = ref_params(1.05)
    assert any("adiabatic" in w for w in validate(near))
    lossy = ref_params(2.0, kappa_hz=50e3)
    assert any("kappa" in w for w in validate(lossy))
    hot = ref_params(2.0, n_th=3.0)
    assert any("n_th" in w for w in validate(hot))
    assert any("resonan" in w for w in validate(ref_params(1.0)))


def test_layouts():
    assert FULL_LAYOUT.modes == ("c1", "c2", "a", "b")
    assert FULL_LAYOUT.quadratures("a") == (4, 5)
    assert SPIN_LAYOUT.dim == 4
    assert FULL_LAYOUT.spin_modes == ("c1", "c2")
    assert FULL_LAYOUT.mechanical_modes == ("a", "b")
    with pytest.raises(KeyError):
        SPIN_LAYOUT.index("a")
