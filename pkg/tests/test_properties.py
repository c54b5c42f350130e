import math
import warnings

import numpy as np
from hypothesis import given, settings, strategies as st

from nvsqueeze.analytic import Regime, classify_regime
from nvsqueeze.builder import build_effective_model, build_full_model, symplectic_form
from nvsqueeze.device import BeamGeometry, GeometryWarning, estimate_coupling, estimate_mech_frequency
from nvsqueeze.dynamics import propagate_exact, step_operators, vacuum_state
from nvsqueeze.model import SystemParams, effective_params
from nvsqueeze.observables import duan_sum, joint_quadrature_variance, mode_excitation, optimal_angle

SETTINGS = settings(max_examples=40, deadline=None)

ratio = st.floats(1.3, 4.0)
zeeman = st.floats(-3.0, 1.0)
g_hz = st.floats(5e3, 60e3)
v_hz = st.floats(2e5, 2e6)


def params(r, d, g, v, **kw):
    return SystemParams.from_ratios(r, d, g_hz=g, v_hz=v, **kw)


def roundoff(lin, t):
    """Expected floating-point floor after accumulating |F| t radians of phase."""
    return 1e-13 * (1.0 + np.abs(np.linalg.eigvals(lin.drift)).max() * t)


def horizon(p):
    # a few natural periods of the eliminated dynamics
    return 3.0 / abs(effective_params(p).b_coef)


@SETTINGS
@given(ratio, zeeman, g_hz, v_hz, st.floats(0.2, 5.0), st.floats(0.0, 1.0))
def test_scale_covariance(r, d, g, v, scale, frac):
    p = params(r, d, g, v)
    q = params(r, d, g * scale, v * scale)
    t = frac * horizon(p)
    for build in (build_effective_model, build_full_model):
        a, b = build(p), build(q)
        sa = propagate_exact(a, vacuum_state(a.layout), t)
        sb = propagate_exact(b, vacuum_state(b.layout), t / scale)
        # detunings are differences of GHz-scale splittings, so rates carry an
        # absolute error ~ eps omega_m that accumulates as a phase over t
        tol = (roundoff(a, t) + 1e-15 * p.omega_m * max(t, t / scale)) * max(1.0, np.abs(sa.cov).max())
        assert np.abs(sa.cov - sb.cov).max() <= tol


@SETTINGS
@given(ratio, zeeman, g_hz, v_hz, st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 2e3))
def test_semigroup(r, d, g, v, f1, f2, kappa):
    p = params(r, d, g, v, kappa_hz=kappa, n_th=0.01)
    lin = build_full_model(p)
    s0 = vacuum_state(lin.layout)
    t1, t2 = f1 * 1e-4, f2 * 1e-4
    one = propagate_exact(lin, s0, t1 + t2)
    two = propagate_exact(lin, propagate_exact(lin, s0, t1), t2)
    assert np.abs(one.cov - two.cov).max() <= roundoff(lin, t1 + t2) * max(1.0, np.abs(one.cov).max())


@SETTINGS
@given(ratio, zeeman, g_hz, v_hz, st.floats(0.0, 1.0))
def test_symplectic_and_pure(r, d, g, v, frac):
    p = params(r, d, g, v)
    t = frac * horizon(p)
    for lin in (build_full_model(p), build_effective_model(p)):
        e, _ = step_operators(lin, t)
        om = symplectic_form(lin.layout.n_modes)
        scale = max(1.0, np.abs(e).max() ** 2)
        assert np.abs(e @ om @ e.T - om).max() <= roundoff(lin, t) * scale
        s = propagate_exact(lin, vacuum_state(lin.layout), t)
        assert abs(s.purity() - 1.0) <= 1e-6


@SETTINGS
@given(ratio, zeeman, g_hz, v_hz, st.floats(0.0, 1.0))
def test_spin_difference_invariant(r, d, g, v, frac):
    p = params(r, d, g, v)
    lin = build_effective_model(p)
    s = propagate_exact(lin, vacuum_state(lin.layout), frac * horizon(p))
    n1, n2 = mode_excitation(s, "c1"), mode_excitation(s, "c2")
    assert abs(n1 - n2) <= 1e-9 * max(1.0, n1)


@settings(max_examples=200, deadline=None)
@given(st.floats(-4.0, 2.0), st.floats(0.05, 2.5).filter(lambda x: abs(x - 1.0) > 1e-3))
def test_regime_matches_ladder_eigenvalues(delta_over_a, b_over_a):
    p = SystemParams.from_ratios(1.0 / b_over_a, delta_over_a)
    e = effective_params(p)
    # d/dt (c1, c2^dag) = -i [[A, B], [-B, -(A + Delta)]] (c1, c2^dag)
    m = -1j * np.array([[e.a_coef, e.b_coef], [-e.b_coef, -(e.a_coef + e.delta)]])
    growth = np.abs(np.linalg.eigvals(m).real).max() / max(abs(e.a_coef), abs(e.b_coef))
    lhs, rhs = abs(e.delta + 2 * e.a_coef), 2 * abs(e.b_coef)
    if abs(lhs - rhs) <= 1e-6 * rhs:
        return
    regime = classify_regime(p)
    assert (regime is Regime.EXPONENTIAL) == (growth > 1e-7)


def partial_transpose_min_eig(s):
    i = list(s.layout.quadratures("c1")) + list(s.layout.quadratures("c2"))
    cov = s.cov[np.ix_(i, i)].copy()
    flip = np.diag([1, 1, 1, -1])
    cov = flip @ cov @ flip
    om = symplectic_form(2)
    return np.sort(np.abs(np.linalg.eigvals(1j * om @ cov)))[0]


@SETTINGS
@given(ratio, zeeman, g_hz, v_hz, st.floats(0.0, 1.0), st.floats(0.0, math.pi))
def test_duan_witness_implies_ppt_violation(r, d, g, v, frac, theta):
    p = params(r, d, g, v)
    lin = build_full_model(p)
    s = propagate_exact(lin, vacuum_state(lin.layout), frac * horizon(p))
    if duan_sum(s, "c1", "c2", theta) < 0.5 - 1e-9:
        assert partial_transpose_min_eig(s) < 0.5


@SETTINGS
@given(ratio, zeeman, g_hz, v_hz, st.floats(0.0, 1.0), st.floats(0.0, math.pi))
def test_theta_period(r, d, g, v, frac, theta):
    p = params(r, d, g, v)
    lin = build_effective_model(p)
    s = propagate_exact(lin, vacuum_state(lin.layout), frac * horizon(p))
    a = joint_quadrature_variance(s, "c1", "c2", theta)
    b = joint_quadrature_variance(s, "c1", "c2", theta + math.pi)
    assert abs(a - b) <= 1e-12 * max(1.0, a)
    assert optimal_angle(s, "c1", "c2")[1] <= a + 1e-12 * max(1.0, a)


@SETTINGS
@given(ratio, g_hz, v_hz, st.floats(0.0, 5e3), st.floats(0.0, 0.5), st.floats(0.0, 1.0))
def test_uncertainty_relation_with_damping(r, g, v, kappa, n_th, frac):
    p = params(r, 0.0, g, v, kappa_hz=kappa, n_th=n_th)
    lin = build_full_model(p)
    s = propagate_exact(lin, vacuum_state(lin.layout), frac * 1e-3)
    assert s.uncertainty_margin() >= -1e-9


lengths = st.floats(0.3e-6, 5e-6)
sides = st.floats(0.02e-6, 0.06e-6)  # keeps L >= 5 max(w, h)


@SETTINGS
@given(lengths, sides, sides, st.floats(1.1, 3.0))
def test_device_monotonic(length, w, h, k):
    base = BeamGeometry(length, w, h)
    longer = BeamGeometry(length * k, w, h)
    assert estimate_coupling(longer) < estimate_coupling(base)
    assert estimate_mech_frequency(longer) < estimate_mech_frequency(base)
    assert math.isclose(estimate_coupling(longer) / estimate_coupling(base), k**-1.5, rel_tol=1e-9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeometryWarning)
        thicker = BeamGeometry(length, w, h * k)
    assert math.isclose(estimate_mech_frequency(thicker) / estimate_mech_frequency(base), k, rel_tol=1e-9)
