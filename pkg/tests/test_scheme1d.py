import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from conftest import admissible_state, states
from granpile.core import Grid1D, LayerState, PhysicalParams, Property, SlopePair, UsageError
from granpile.diagnostics import check_max_principle, check_nonneg_and_monotone, check_slope_bound
from granpile.presets import build_preset
from granpile.scheme1d import (
    NodeClass,
    StepFailure,
    advance,
    classify,
    directional_split,
    rolling_update,
    run1d,
    splitting_coeffs,
    standing_increment,
    standing_update,
    try_step,
    v_star,
)

UNIT = PhysicalParams(alpha=1.0, beta=1.0, gamma=1.0)


def single_node(left, right, v, n=4):
    """Profile on n intervals whose node 2 has the requested one-sided slopes (others flat-ish)."""
    dx = 1.0 / n
    base = 0.5
    u = np.array([0.0, base - left * dx, base, base + right * dx, 0.0])
    vv = np.array([0.0, 0.0, v, 0.0, 0.0])
    return LayerState(u, vv)


class TestClassify:
    @pytest.mark.parametrize(
        "left,right,expected",
        [
            (0.5, 0.2, NodeClass.RISING_RIGHT),
            (1.0, -0.5, NodeClass.PEAK),
            (0.0, 0.0, NodeClass.CAVITY),
            (-0.3, -0.1, NodeClass.RISING_LEFT),
            (0.0, 0.4, NodeClass.FLAT_FOOT),
            (-0.4, 0.0, NodeClass.FLAT_FOOT),
            (-0.2, 0.3, NodeClass.CAVITY),
            (0.3, 0.0, NodeClass.RISING_RIGHT),
            (0.0, -0.3, NodeClass.RISING_LEFT),
        ],
    )
    def test_table(self, left, right, expected):
        assert classify(SlopePair(left, right)) is expected

    @given(st.floats(-2, 2), st.floats(-2, 2))
    def test_total(self, left, right):
        assert isinstance(classify(SlopePair(left, right)), NodeClass)

    @given(st.floats(-2, 2), st.floats(-2, 2))
    def test_full_conversion_classes_have_no_descent(self, left, right):
        cls = classify(SlopePair(left, right))
        descends = left > 0 or right < 0
        assert (cls in (NodeClass.CAVITY, NodeClass.FLAT_FOOT)) == (not descends)


class TestSplitting:
    @pytest.mark.parametrize(
        "left,right,rm,rp", [(0.9, -0.4, 1, 0), (0.6, -0.6, 0.5, 0.5), (0.2, -0.8, 0, 1)]
    )
    def test_steepest_descent_rule(self, left, right, rm, rp):
        c = splitting_coeffs(SlopePair(left, right))
        assert (c.r_minus, c.r_plus) == (rm, rp)

    def test_weights_sum_to_one_on_descent(self):
        w = directional_split(np.array([[0.3, 0.0, 0.5], [0.3, 0.2, 0.0]]))
        assert np.array_equal(w, [[0.5, 0.0, 1.0], [0.5, 1.0, 0.0]])

    def test_no_descent_gives_zero_weights(self):
        assert np.array_equal(directional_split(np.zeros((4, 3))), np.zeros((4, 3)))


class TestStandingUpdate:
    def test_rising_row(self):
        s = single_node(0.5, 0.2, 0.4)
        du = standing_increment(s, UNIT, 0.1)
        assert du[2] == pytest.approx(0.1 * (1 - 0.5) * 0.4, rel=1e-12)

    def test_flat_node_converts_everything(self):
        s = single_node(0.0, 0.0, 0.3)
        assert standing_increment(s, UNIT, 0.1)[2] == 0.3

    def test_critical_peak_side_blocks_growth(self):
        s = single_node(1.0, -0.5, 0.4)
        assert standing_increment(s, UNIT, 0.1)[2] == 0.0

    @pytest.mark.parametrize("left,right", [(0.0, 0.0), (0.0, 0.3), (-0.3, 0.0), (-0.2, 0.1)])
    def test_overlapping_rows_agree(self, left, right):
        # every applicable full-conversion row gives the same increment: v
        s = single_node(left, right, 0.25)
        for dt in (1e-3, 0.1, 3.0):
            assert standing_increment(s, UNIT, dt)[2] == 0.25

    def test_boundary_and_input_untouched(self):
        s = single_node(0.5, 0.2, 0.4)
        before = s.u.copy()
        new_u = standing_update(s, UNIT, 0.1)
        assert new_u[0] == new_u[-1] == 0
        assert np.array_equal(s.u, before)

    @given(states(), st.floats(1e-4, 0.5))
    def test_matches_oracle(self, state, dt):
        dx = 1.0 / state.n
        du = standing_increment(state, UNIT, dt)
        for i in range(1, state.n):
            assert du[i] == pytest.approx(oracle.deposit(state.u, state.v, i, dx, 1.0, 1.0, dt), rel=1e-13, abs=1e-16)


class TestVStar:
    def test_examples(self):
        s = LayerState([0, 0, 0, 0], [0, 0.4, 0.3, 0])
        new_u = np.array([0, 0.02, 0.3, 0])
        assert np.allclose(v_star(s, new_u), [0, 0.38, 0, 0])

    def test_nothing_to_convert(self):
        s = LayerState(np.zeros(4), np.zeros(4))
        assert np.array_equal(v_star(s, np.zeros(4)), np.zeros(4))


class TestRollingUpdate:
    def test_wedge_hand_example(self):
        new_u = np.array([0, 0.1, 0.2, 0.1, 0])
        vstar = np.array([0, 0.1, 0, 0, 0])
        s = LayerState(new_u, vstar)
        out = rolling_update(s, new_u, vstar, UNIT, 0.05)
        assert out[2] == 0.0
        assert out[1] == pytest.approx(0.096, abs=1e-15)

    def test_wedge_against_scalar_flux(self):
        new_u = [0, 0.1, 0.2, 0.1, 0]
        vstar = [0, 0.1, 0, 0, 0]
        dx, dt = 0.25, 0.05
        # node 1: rising, right neighbour is a tied peak so half its left-going share applies
        left, right = oracle.slopes(new_u, dx, 1)
        gate = oracle.split(*oracle.slopes(new_u, dx, 2))[0]
        expected = vstar[1] + dt * 1.0 * gate * right * (vstar[2] - vstar[1]) / dx
        out = rolling_update(LayerState(new_u, vstar), np.array(new_u), np.array(vstar), UNIT, dt)
        assert out[1] == pytest.approx(expected, abs=1e-15)

    def test_peak_empties(self):
        new_u = np.array([0, 0.1, 0.2, 0.1, 0])
        vstar = np.array([0, 0, 0.2, 0, 0])
        out = rolling_update(LayerState(new_u, vstar), new_u, vstar, UNIT, 0.01)
        assert out[2] == 0.0

    def test_zero_vstar_stays_zero(self):
        new_u = np.array([0, 0.1, 0.2, 0.1, 0])
        z = np.zeros(5)
        assert np.array_equal(rolling_update(LayerState(new_u, z), new_u, z, UNIT, 0.1), z)

    def test_beta_zero_moves_nothing(self):
        new_u = np.array([0, 0.1, 0.2, 0.1, 0])
        vstar = np.array([0, 0.05, 0.2, 0.05, 0])
        out = rolling_update(LayerState(new_u, vstar), new_u, vstar, PhysicalParams(beta=0), 0.1)
        assert np.array_equal(out, vstar)


class TestStep:
    def test_zero_state_fixed_point(self):
        z = LayerState(np.zeros(6), np.zeros(6))
        cand, out = try_step(z, UNIT, 0.1)
        assert out.accepted and cand.u.tolist() == z.u.tolist() and cand.t == 0.1

    def test_no_rolling_layer_keeps_u(self):
        u, _ = build_preset("wedge", Grid1D(20))
        s = LayerState(u, np.zeros_like(u))
        cand, out = try_step(s, UNIT, 0.05)
        assert out.accepted and np.array_equal(cand.u, s.u)

    def test_large_dt_breaks_slope_bound(self):
        s = LayerState([0, 0.225, 0.45, 0.225, 0], [0, 0, 0.4, 0, 0])
        _, out = try_step(s, PhysicalParams(beta=0), 1.0)
        assert not out.accepted and out.violations == [Property.CRITICAL_SLOPE]

    def test_one_halving(self):
        s = LayerState([0, 0.225, 0.45, 0.225, 0], [0, 0, 0.4, 0, 0])
        new, out = advance(s, PhysicalParams(beta=0), 1.0, 0.01)
        assert (out.dt_used, out.retries, new.t) == (0.5, 1, 0.5)

    def test_accepted_first_try(self):
        s = admissible_state(10, [0.2] * 5 + [-0.2] * 5, [0.0] + [0.01] * 9 + [0.0])
        _, out = advance(s, UNIT, 0.01, 0.001)
        assert out.accepted and out.retries == 0 and out.dt_used == 0.01

    def test_floor_equal_to_start_fails(self):
        s = LayerState([0, 0.225, 0.45, 0.225, 0], [0, 0, 0.4, 0, 0])
        with pytest.raises(StepFailure) as err:
            advance(s, PhysicalParams(beta=0), 1.0, 1.0)
        assert Property.CRITICAL_SLOPE in err.value.outcome.violations

    def test_bad_dt(self):
        with pytest.raises(UsageError):
            try_step(LayerState(np.zeros(3), np.zeros(3)), UNIT, 0.0)

    @settings(max_examples=60, deadline=None)
    @given(states(), st.floats(1e-3, 0.2), st.sampled_from([0.0, 0.5, 1.0]))
    def test_step_matches_oracle(self, state, dt, beta):
        params = PhysicalParams(beta=beta)
        cand, _ = try_step(state, params, dt)
        ref_u, ref_v, _ = oracle.step(list(state.u), list(state.v), 1.0 / state.n, 1.0, beta, 1.0, dt)
        np.testing.assert_allclose(cand.u, ref_u, rtol=1e-13, atol=1e-16)
        np.testing.assert_allclose(cand.v, ref_v, rtol=1e-12, atol=1e-15)


class TestRun:
    def test_static_when_no_rolling_layer(self):
        u, _ = build_preset("cavity71", Grid1D(40))
        s = LayerState(u, np.zeros_like(u))
        traj = run1d(s, UNIT, 1.0, 0.0125)
        assert all(np.array_equal(x.u, u) for x in traj.states)

    def test_snapshots_are_first_state_at_or_after(self):
        u, v = build_preset("wedge", Grid1D(20))
        traj = run1d(LayerState(u, v), UNIT, 1.0, 0.03, snapshot_times=[0.0, 0.1, 0.5, 1.0])
        assert [t for t, _ in traj.snapshots] == [0.0, 0.1, 0.5, 1.0]
        for t, s in traj.snapshots:
            earlier = [x for x in traj.states if x.t < s.t]
            assert s.t >= t and all(x.t < t for x in earlier)
        assert traj.final.t == 1.0

    def test_dt_schedule_is_followed(self):
        u, v = build_preset("wedge", Grid1D(20))
        sched = [0.01, 0.02, 0.03] * 10
        traj = run1d(LayerState(u, v), UNIT, 0.3, 0.05, dt_schedule=sched)
        assert np.allclose(traj.dts, sched[: len(traj.dts)])

    def test_rejects_inadmissible_initial_data(self):
        with pytest.raises(UsageError):
            run1d(LayerState([0, 0.6, 0], [0, 0, 0]), UNIT, 1.0, 0.1)
        with pytest.raises(UsageError):
            run1d(LayerState([0.1, 0.1, 0], [0, 0, 0]), UNIT, 1.0, 0.1)

    def test_keep_states_false_keeps_snapshots_and_final(self):
        u, v = build_preset("wedge", Grid1D(20))
        full = run1d(LayerState(u, v), UNIT, 0.5, 0.025, snapshot_times=[0.25])
        lean = run1d(LayerState(u, v), UNIT, 0.5, 0.025, snapshot_times=[0.25], keep_states=False)
        assert lean.final == full.final and lean.snapshots[0][1] == full.snapshots[0][1]
        assert len(lean.states) == 3

    def test_deterministic(self):
        u, v = build_preset("cavity71", Grid1D(50))
        a = run1d(LayerState(u, v), UNIT, 1.0, 0.01)
        b = run1d(LayerState(u, v), UNIT, 1.0, 0.01)
        assert a.dts == b.dts and all(x == y for x, y in zip(a.states, b.states))

    @settings(max_examples=25, deadline=None)
    @given(states(max_v=0.02), st.sampled_from([0.0, 0.5, 2.0]))
    def test_accepted_runs_keep_every_property(self, state, beta):
        params = PhysicalParams(beta=beta)
        try:
            traj = run1d(state, params, 0.3, 0.5 / state.n, dt_min=1e-7)
        except StepFailure:
            # the controller refused to continue rather than accept a bad state
            return
        assert check_max_principle(traj).passed
        assert check_slope_bound(traj).passed
        assert check_nonneg_and_monotone(traj).passed
