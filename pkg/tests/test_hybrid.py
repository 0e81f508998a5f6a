import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from wcimpulse import presets
from wcimpulse.hybrid import (
    REGULAR,
    SINGULAR,
    ImpulseSchedule,
    RCCircuit,
    WCSystem,
    apply_regular_jump,
    apply_singular_jump,
    arithmetic_instants,
    simulate,
)
from wcimpulse.integrate import integrate_segment
from wcimpulse.jumps import DomainError, RegularJump, SingularJump


def bistable(mu):
    return WCSystem([presets.MODEL0.with_mu(mu)])


def test_arithmetic_instants():
    assert arithmetic_instants(2, 0, 1, 3, 3) == (2 / 3, 4 / 3, 2.0)
    th = arithmetic_instants(*presets.COUPLED_THETA)
    assert th[0] == pytest.approx(6.95) and th[-1] == pytest.approx(104.95) and len(th) == 50


def test_schedule_validation():
    with pytest.raises(ValueError):
        ImpulseSchedule((1.0, 0.5))
    with pytest.raises(ValueError):
        ImpulseSchedule((0.0, 1.0))
    with pytest.raises(ValueError):
        ImpulseSchedule((1.0, 2.0), (2.0,))


def test_events_merged_and_cut_at_horizon():
    s = presets.coupled_schedule()
    ev = s.events(presets.COUPLED_T)
    assert [t for t, _ in ev] == sorted(t for t, _ in ev)
    # the last regular instant equals T and is not applied
    assert len(ev) == 99
    assert ev[0] == (pytest.approx(5.95), SINGULAR)


def test_regular_jump_examples():
    s = ImpulseSchedule(regular_jump=presets.MODEL0_REGULAR)
    assert tuple(apply_regular_jump(s, (0.0, 0.0))) == (0.44234, 0.22751)
    assert np.allclose(apply_regular_jump(s, (0.44234, 0.22751)), (0.0, 0.0), atol=1e-5)
    assert tuple(apply_regular_jump(ImpulseSchedule(), (0.3, 0.1))) == (0.3, 0.1)


def test_regular_jump_leaves_second_pair_alone():
    s = ImpulseSchedule(regular_jump=presets.THREE_STATES_REGULAR)
    out = apply_regular_jump(s, (0.1, 0.2, 0.3, 0.4))
    assert tuple(out[2:]) == (0.3, 0.4)


def test_singular_jump_examples():
    s = ImpulseSchedule(singular_jump=presets.SINGULAR_SQRT_CBRT)
    assert tuple(apply_singular_jump(s, (0.0, 0.0), 0.1, 0.1)) == (0.0, 0.0)
    post = apply_singular_jump(s, (0.44234, 0.22751), 0.1, 0.1)
    inc = post - np.array([0.44234, 0.22751])
    assert inc[0] == pytest.approx(-math.sin(0.01) * 0.22751 / 0.1, rel=1e-12)
    assert inc[1] == pytest.approx(-math.sin(0.01) * 0.44234 / 0.1, rel=1e-12)
    assert inc == pytest.approx((-0.02275, -0.04423), abs=1e-5)


@given(st.floats(1e-4, 1e-1))
def test_singular_increment_vanishes_at_origin_state(mu):
    s = ImpulseSchedule(singular_jump=presets.SINGULAR_SQRT_CBRT)
    assert tuple(apply_singular_jump(s, (0.0, 0.0), mu, mu)) == (0.0, 0.0)


def test_singular_jump_rejects_nonpositive_mu():
    with pytest.raises(ValueError):
        apply_singular_jump(ImpulseSchedule(), (0.0, 0.0), 0.0, 0.1)


def check_structure(tr, sched):
    events = sched.events(tr.T)
    assert len(tr.jumps) == len(events)
    assert len(tr.segments) == len(events) + 1
    for k, jr in enumerate(tr.jumps):
        assert (jr.t, jr.kind) == events[k]
        assert tr.segments[k].t[-1] == jr.t
        assert np.array_equal(tr.segments[k].x[-1], jr.pre)
        # right-continuity: the next arc starts exactly at the post state
        assert tr.segments[k + 1].t[0] == jr.t
        assert np.array_equal(tr.segments[k + 1].x[0], jr.post)
    for seg in tr.segments:
        assert np.all(np.diff(seg.t) > 0)
    assert tr.segments[-1].t[-1] == tr.T


def check_jump_consistency(tr, sched, system):
    mu_e, mu_i = system.jump_time_constants
    for jr in tr.jumps:
        if jr.kind == REGULAR:
            want = sched.regular_jump(jr.pre[0], jr.pre[1])
        else:
            K, J = sched.singular_jump(jr.pre[0], jr.pre[1], mu_e, mu_i)
            want = (K / mu_e, J / mu_i)
        got = jr.post - jr.pre
        assert abs(got[0] - want[0]) <= 1e-12 and abs(got[1] - want[1]) <= 1e-12
        assert np.array_equal(jr.post[2:], jr.pre[2:])


@pytest.mark.parametrize("mu", [0.3, 0.1, 0.05, 0.01])
def test_bistable_run_structure_and_consistency(mu):
    sched = presets.model0_schedule()
    system = bistable(mu)
    tr = simulate(system, sched, (0.25, 0.0), presets.MODEL0_T)
    check_structure(tr, sched)
    check_jump_consistency(tr, sched, system)


@settings(max_examples=10)
@given(st.sampled_from([1.0, 0.2, 0.1, 0.05]), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_coupled_run_structure_and_consistency(mu, E0, I0):
    system = WCSystem([presets.THREE_STATES.with_mu(mu), presets.PERIODIC])
    sched = presets.coupled_schedule()
    tr = simulate(system, sched, (E0, I0, 0.17, 0.25), 30.0)
    check_structure(tr, sched)
    check_jump_consistency(tr, sched, system)


def test_alternation_between_stable_states():
    tr = simulate(bistable(0.1), presets.model0_schedule(), (0.25, 0.0), presets.MODEL0_T)
    thetas = presets.model0_schedule().theta_instants
    # just before each regular instant the state sits near one of the two stable states, alternating
    ends = [np.interp(th - 0.02, tr.t, tr.x[:, 0]) for th in thetas]
    high = [e > 0.3 for e in ends]
    assert high[0]
    assert all(a != b for a, b in zip(high, high[1:]))


def test_empty_schedule_reduces_to_one_segment():
    rc = RCCircuit(1.0, 0.1, 1.0)
    tr = simulate(rc, ImpulseSchedule(), [0.0], 1.0)
    arc = integrate_segment(rc.rhs, 0.0, 1.0, [0.0], mu_min=rc.mu_min)
    assert len(tr.segments) == 1 and not tr.jumps
    np.testing.assert_array_equal(tr.x, arc.x)


def test_bistable_relaxation_without_impulses():
    tr = simulate(bistable(0.1), ImpulseSchedule(), (0.25, 0.0), 2.0)
    assert tr.end == pytest.approx((0.44234, 0.22751), abs=1e-3)


@pytest.mark.parametrize("mu", [0.3, 0.05])
def test_agrees_with_fixed_step_rk4(mu):
    """Adaptive run vs hand-written RK4 (h = 1e-5) with hand-written jumps."""
    T = 2.0
    sched = presets.model0_schedule()
    tr = simulate(bistable(mu), sched, (0.25, 0.0), T)
    f = oracles.wc_field(oracles.as_dict(presets.MODEL0), mu, mu)
    regular, singular = oracles.model0_jumps()
    kinds = dict(sched.events(T))
    worst = 0.0
    y = (0.25, 0.0)
    for k, seg in enumerate(tr.segments):
        idx = np.unique(np.r_[np.arange(0, len(seg.t), 25), len(seg.t) - 1])
        ref = oracles.rk4_arc(f, seg.t[idx].tolist(), y)
        worst = max(worst, np.abs(ref - seg.x[idx]).max())
        end = ref[-1]
        t_end = seg.t[-1]
        if k < len(tr.jumps):
            d = regular(*end) if kinds[t_end] == REGULAR else singular(*end, mu)
            y = (end[0] + d[0], end[1] + d[1])
    assert worst < 1e-4


def test_domain_error_reports_instant_and_partial():
    sched = presets.model0_schedule()
    with pytest.raises(DomainError) as info:
        simulate(bistable(0.1), sched, (-0.5, 0.0), presets.MODEL0_T)
    assert info.value.t == pytest.approx(1 / 3)
    assert len(info.value.partial.segments) == 1


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        simulate(bistable(0.1), ImpulseSchedule(), (0.1,), 1.0)
    with pytest.raises(ValueError):
        simulate(bistable(0.1), ImpulseSchedule(), (0.1, math.nan), 1.0)
    with pytest.raises(ValueError):
        simulate(bistable(0.1), ImpulseSchedule(), (0.1, 0.1), 0.0)
    with pytest.raises(ValueError):
        simulate(RCCircuit(1, 1, 1), ImpulseSchedule((0.5,)), (0.0,), 1.0)


def test_coupled_pairs_do_not_interact():
    # the oscillating pair evolves the same whatever the first pair does
    sched = presets.coupled_schedule()
    a = simulate(WCSystem([presets.THREE_STATES.with_mu(0.2), presets.PERIODIC]), sched, (0.0, 0.0, 0.17, 0.25), 20.0)
    b = simulate(WCSystem([presets.THREE_STATES.with_mu(0.2), presets.PERIODIC]), sched, (0.45, 0.49, 0.17, 0.25), 20.0)
    alone = simulate(WCSystem([presets.PERIODIC]), ImpulseSchedule(), (0.17, 0.25), 20.0)
    assert np.abs(a.end[2:] - b.end[2:]).max() < 1e-7
    assert np.abs(a.end[2:] - alone.end).max() < 1e-7


def test_coupled_rates_vanish_at_stable_state():
    system = WCSystem([presets.THREE_STATES.with_mu(0.1), presets.PERIODIC])
    rhs = system.rhs(0.0, np.array([0.45063843, 0.49, 0.2, 0.1]))
    assert np.abs(rhs[:2]).max() < 1e-5
