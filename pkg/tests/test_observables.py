import math

import numpy as np
import pytest

from nvsqueeze.builder import build_effective_model, build_full_model
from nvsqueeze.dynamics import MomentState, propagate_exact, propagate_trace, vacuum_state
from nvsqueeze.model import SPIN_LAYOUT
from nvsqueeze.observables import (
    EmptyTraceError,
    HPInvalidError,
    duan_sum,
    find_min_variance,
    hp_check,
    joint_quadrature_variance,
    mode_excitation,
    optimal_angle,
    squeezing_trace,
    to_db,
)
from nvsqueeze.analytic import first_minimum_time

from conftest import ref_params


def tmsv(r, phase=0.0):
    """Two-mode squeezed vacuum exp(r (e^{i phase} c1 c2 - h.c.)) built directly in quadratures."""
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    rot = np.array([[math.cos(phase), math.sin(phase)], [math.sin(phase), -math.cos(phase)]])
    cov = 0.5 * np.block([[ch * np.eye(2), sh * rot], [sh * rot, ch * np.eye(2)]])
    return MomentState(0.0, np.zeros(4), cov, SPIN_LAYOUT)


def test_vacuum_is_quarter():
    s = vacuum_state(SPIN_LAYOUT)
    for th in np.linspace(0, math.pi, 5):
        assert joint_quadrature_variance(s, "c1", "c2", th) == pytest.approx(0.25)
    assert duan_sum(s, "c1", "c2", 0.3) == pytest.approx(0.5)
    assert to_db(0.25) == 0.0


def test_optimal_angle_against_scan():
    s = tmsv(0.4, phase=1.1)
    theta, v = optimal_angle(s, "c1", "c2")
    grid = np.linspace(0, math.pi, 20001)
    vals = [joint_quadrature_variance(s, "c1", "c2", th) for th in grid]
    # the closed form can only undercut a finite scan, and by no more than its resolution
    assert min(vals) - 1e-8 <= v <= min(vals) + 1e-15
    assert 0 <= theta < math.pi
    assert joint_quadrature_variance(s, "c1", "c2", theta) == pytest.approx(v, abs=1e-14)


@pytest.mark.parametrize("r", [0.1, 0.7, 1.5])
def test_pair_state_optimum(r):
    # e^{-2r}/4 for the squeezed vacuum; equivalently (sqrt(n+1) - sqrt(n))^2 / 4 with n = sinh^2 r
    s = tmsv(r)
    n = math.sinh(r) ** 2
    _, v = optimal_angle(s, "c1", "c2")
    assert v == pytest.approx(0.25 * math.exp(-2 * r), rel=1e-12)
    assert v == pytest.approx(0.25 * (math.sqrt(n + 1) - math.sqrt(n)) ** 2, rel=1e-9)
    assert mode_excitation(s, "c1") == pytest.approx(n)


def test_theta_period_pi():
    s = tmsv(0.5, 0.4)
    for th in (0.0, 0.3, 2.0):
        a = joint_quadrature_variance(s, "c1", "c2", th)
        assert joint_quadrature_variance(s, "c1", "c2", th + math.pi) == pytest.approx(a, abs=1e-14)


def test_same_mode_rejected():
    with pytest.raises(ValueError):
        joint_quadrature_variance(vacuum_state(SPIN_LAYOUT), "c1", "c1", 0.0)


def test_trace_fields(p2):
    lin = build_full_model(p2)
    tr = squeezing_trace(propagate_trace(lin, vacuum_state(lin.layout), 1e-4, 11), 0.0, n_spins=100)
    assert len(tr) == 11
    assert set(tr.excitations) == {"c1", "c2"} and set(tr.phonon_occupations) == {"a", "b"}
    assert tr.hp_valid.all() and tr.first_violation is None
    assert np.all(tr.variance_opt <= tr.variance_theta + 1e-15)


def test_hp_flagging():
    p = ref_params(2.0, -2.0)
    lin = build_effective_model(p)
    tr = squeezing_trace(propagate_trace(lin, vacuum_state(lin.layout), 2e-3, 201), n_spins=100)
    assert tr.first_violation is not None
    assert not tr.hp_valid[-1]
    m = find_min_variance(tr)
    assert m.t_min < tr.first_violation
    assert hp_check(tr, 1e9).hp_valid.all()


def test_min_refinement_hits_analytic_time(p2):
    lin = build_effective_model(p2)
    s0 = vacuum_state(lin.layout)
    tr = squeezing_trace(propagate_trace(lin, s0, 1e-3, 41))
    m = find_min_variance(tr, lambda t: optimal_angle(propagate_exact(lin, s0, t), "c1", "c2"))
    assert m.refined
    assert m.t_min == pytest.approx(first_minimum_time(p2), rel=1e-5)
    assert m.v_min == pytest.approx(1 / 12, abs=1e-9)


def test_ties_go_to_earliest(p2):
    lin = build_effective_model(p2)
    s0 = vacuum_state(lin.layout)
    t1 = first_minimum_time(p2)
    states = [propagate_exact(lin, s0, t) for t in (0.0, t1, 2 * t1, 3 * t1)]
    tr = squeezing_trace(states)
    assert find_min_variance(tr).t_min == pytest.approx(t1)


def test_min_errors():
    tr = squeezing_trace([vacuum_state(SPIN_LAYOUT)])
    with pytest.raises(HPInvalidError):
        find_min_variance(hp_check(tr, n_spins=-1.0))
    with pytest.raises(EmptyTraceError):
        squeezing_trace([])
