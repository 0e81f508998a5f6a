import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcimpulse import presets, scenarios
from wcimpulse.hybrid import RCCircuit, WCSystem, simulate, ImpulseSchedule
from wcimpulse.integrate import SolverConfig, StepUnderflow, integrate_segment, sample_times


def test_rc_against_closed_form():
    rc = RCCircuit(1.0, 0.1, 1.0)
    arc = integrate_segment(rc.rhs, 0.0, 1.0, [0.0], mu_min=rc.mu_min)
    err = np.abs(arc.x[:, 0] - rc.exact(arc.t)).max()
    assert err < 1e-6


@settings(max_examples=25)
@given(st.floats(0.01, 2.0), st.floats(-2.0, 2.0), st.floats(-1.0, 1.0))
def test_rc_family(rc_const, ir, v0):
    rc = RCCircuit(1.0, rc_const, ir)
    T = 10 * rc_const
    arc = integrate_segment(rc.rhs, 0.0, T, [v0], mu_min=rc.mu_min)
    assert np.abs(arc.x[:, 0] - rc.exact(arc.t, v0)).max() < 1e-6


def test_zero_field_is_constant():
    x0 = np.array([0.3, -0.2, 1.5])
    arc = integrate_segment(lambda t, x: np.zeros(3), 0.0, 2.0, x0)
    assert np.all(arc.x == x0)


def test_harmonic_oscillator_dense_output():
    arc = integrate_segment(lambda t, x: np.array([x[1], -x[0]]), 0.0, 2 * np.pi, [1.0, 0.0])
    np.testing.assert_allclose(arc.x[:, 0], np.cos(arc.t), atol=1e-7)
    np.testing.assert_allclose(arc.x[:, 1], -np.sin(arc.t), atol=1e-7)


def test_time_dependent_field():
    arc = integrate_segment(lambda t, x: np.array([math.cos(t) * x[0]]), 0.0, 3.0, [1.0])
    np.testing.assert_allclose(arc.x[:, 0], np.exp(np.sin(arc.t)), rtol=1e-7)


def test_lands_exactly_on_endpoints():
    arc = integrate_segment(lambda t, x: -x, 1 / 3, 2 / 3, [1.0])
    assert arc.t[0] == 1 / 3 and arc.t[-1] == 2 / 3
    assert arc.x[-1, 0] == pytest.approx(math.exp(-1 / 3), rel=1e-8)


@given(st.floats(0.0, 50.0), st.floats(0.002, 5.0))
def test_sample_grid(t0, length):
    t1 = t0 + length
    ts = sample_times(t0, t1, 1e-3)
    assert ts[0] == t0 and ts[-1] == t1
    assert np.all(np.diff(ts) > 0)
    inner = ts[1:-1]
    np.testing.assert_allclose(inner / 1e-3, np.round(inner / 1e-3), atol=1e-6)


SETTLING_CELLS = [("rc", None), ("model0+impulses", 0.3), ("model0+impulses", 0.1),
                  ("model0+impulses", 0.05), ("model0+impulses", 0.01), ("3states", 1.0), ("coupled", 0.2)]


def _endpoint_change(name, mu, x0=None, loose=1e-6, tight=1e-9):
    sc = scenarios.builtin(name)
    system, sched = sc.build(mu)
    x0 = sc.initial_states[0] if x0 is None else x0
    a = simulate(system, sched, x0, sc.T, SolverConfig(rel_tol=loose))
    b = simulate(system, sched, x0, sc.T, SolverConfig(rel_tol=tight))
    return np.abs(a.end - b.end).max()


@pytest.mark.parametrize("name,mu", SETTLING_CELLS)
def test_self_convergence_under_tolerance_refinement(name, mu):
    assert _endpoint_change(name, mu) < 1e-5


def test_oscillation_phase_error_shrinks_with_tolerance():
    # on a limit cycle the phase error accumulates over ~20 periods, so the
    # endpoint change is larger; it must still fall in step with rel_tol
    e6 = _endpoint_change("periodic", None, loose=1e-6)
    e7 = _endpoint_change("periodic", None, loose=1e-7)
    e8 = _endpoint_change("periodic", None, loose=1e-8)
    assert e6 < 5e-5
    assert e8 < e7 < e6
    assert e7 < 1e-5


def test_stiff_cap():
    cfg = SolverConfig(max_step=0.1)
    assert cfg.step_cap(0.01) == 0.005
    assert cfg.step_cap(0.5) == 0.1
    assert cfg.step_cap(None) == 0.1


def test_step_underflow_reported():
    # finite-time blow-up of x' = x^2 from x = 1 at t = 1
    with pytest.raises(StepUnderflow) as info:
        integrate_segment(lambda t, x: x * x, 0.0, 2.0, [1.0], SolverConfig(min_step=1e-6))
    assert 0.99 < info.value.t < 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(min_step=1.0, max_step=0.1)
    with pytest.raises(ValueError):
        integrate_segment(lambda t, x: x, 1.0, 1.0, [0.0])


def test_small_mu_stays_accurate():
    # fast relaxation onto the stable state at mu = 0.01
    system = WCSystem([presets.MODEL0.with_mu(0.01)])
    tr = simulate(system, ImpulseSchedule(), (0.25, 0.0), 1.0)
    assert tr.end == pytest.approx((0.4423399, 0.2275136), abs=1e-6)
