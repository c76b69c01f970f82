import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import states
from granpile.core import Grid1D, Grid2D, LayerState, LayerState2D, PhysicalParams, UsageError
from granpile.diagnostics import check_max_principle, check_nonneg_and_monotone, check_slope_bound
from granpile.presets import build_preset
from granpile.scheme1d import run1d, try_step
from granpile.scheme2d import (
    directional_slopes,
    directional_split_at,
    rolling_update_2d,
    run2d,
    standing_increment_2d,
    try_step_2d,
)

UNIT = PhysicalParams(beta=1.0)


def spike(n=4, h=0.05, v=0.0):
    u = np.zeros((n + 1, n + 1))
    u[n // 2, n // 2] = h
    vv = np.zeros_like(u)
    vv[n // 2, n // 2] = v
    return LayerState2D(u, vv)


def extrude(state: LayerState):
    n = state.n
    return LayerState2D(np.tile(state.u, (n + 1, 1)), np.tile(state.v, (n + 1, 1)), state.t)


class TestDirectional:
    def test_isolated_spike_descends_everywhere(self):
        s = directional_slopes(spike(4, 0.05), 2, 2)
        assert (s.x_minus, s.x_plus, s.y_minus, s.y_plus) == (0.2, -0.2, 0.2, -0.2)

    def test_four_way_tie_splits_evenly(self):
        w = directional_split_at(spike(4, 0.05), 2, 2)
        assert (w.x_minus, w.x_plus, w.y_minus, w.y_plus) == (0.25, 0.25, 0.25, 0.25)

    def test_boundary_rejected(self):
        with pytest.raises(UsageError):
            directional_slopes(spike(), 0, 2)

    def test_flat_state_has_zero_slopes(self):
        z = LayerState2D(np.zeros((5, 5)), np.zeros((5, 5)))
        s = directional_slopes(z, 2, 2)
        assert (s.x_minus, s.x_plus, s.y_minus, s.y_plus) == (0, 0, 0, 0)


class TestUpdates:
    def test_v_zero_leaves_u(self):
        u, _ = build_preset("cone2d", Grid2D(10))
        s = LayerState2D(u, np.zeros_like(u))
        assert np.array_equal(standing_increment_2d(s, UNIT, 0.1), np.zeros_like(u))

    def test_flat_interior_converts_everything(self):
        v = np.zeros((5, 5))
        v[2, 2] = 0.01
        s = LayerState2D(np.zeros((5, 5)), v)
        assert standing_increment_2d(s, UNIT, 0.1)[2, 2] == 0.01

    def test_spike_loses_its_cap(self):
        s = spike(4, 0.05, 0.01)
        new_u = s.u + standing_increment_2d(s, UNIT, 0.01)
        vstar = s.v - (new_u - s.u)
        out = rolling_update_2d(s, new_u, vstar, UNIT, 0.01)
        assert out[2, 2] == 0.0

    def test_boundary_pinned(self):
        u, v = build_preset("cone2d", Grid2D(10))
        cand, _ = try_step_2d(LayerState2D(u, v), UNIT, 0.01)
        for edge in (cand.u[0], cand.u[-1], cand.u[:, 0], cand.u[:, -1], cand.v[0], cand.v[:, -1]):
            assert not edge.any()

    @settings(max_examples=40, deadline=None)
    @given(states(), st.floats(1e-3, 0.2), st.sampled_from([0.0, 1.0]))
    def test_y_invariant_step_is_the_1d_step(self, state, dt, beta):
        params = PhysicalParams(beta=beta)
        grid = Grid2D(state.n, periodic_y=True)
        c1, o1 = try_step(state, params, dt)
        c2, o2 = try_step_2d(extrude(state), params, dt, grid=grid)
        assert o1.violations == o2.violations
        for row in range(state.n + 1):
            assert np.array_equal(c2.u[row], c1.u) and np.array_equal(c2.v[row], c1.v)


class TestRun:
    def test_cone_symmetry_is_exact(self):
        g = Grid2D(20)
        u, v = build_preset("cone2d", g)
        traj = run2d(LayerState2D(u, v), UNIT, 0.5, 0.025, grid=g)
        for s in traj.states[:: max(1, len(traj.states) // 5)] + [traj.final]:
            for f in (s.u, s.v):
                assert np.array_equal(f, f.T)
                assert np.array_equal(f, f[::-1])
                assert np.array_equal(f, f[:, ::-1])

    def test_cone_keeps_invariants(self):
        g = Grid2D(16)
        u, v = build_preset("cone2d", g)
        traj = run2d(LayerState2D(u, v), UNIT, 0.5, 0.5 / 16, grid=g)
        assert check_max_principle(traj).passed
        assert check_slope_bound(traj).passed
        assert check_nonneg_and_monotone(traj).passed

    def test_periodic_strip_tracks_1d_run(self):
        n = 30
        u, v = build_preset("critical_left72", Grid1D(n))
        one = run1d(LayerState(u, v), UNIT, 1.0, 0.5 / n)
        g = Grid2D(n, periodic_y=True)
        U, V = build_preset("critical_left72", g)
        two = run2d(LayerState2D(U, V), UNIT, 1.0, 0.5 / n, dt_schedule=one.dts, grid=g)
        assert two.dts == one.dts
        assert all(np.array_equal(b.u[3], a.u) for a, b in zip(one.states, two.states))

    def test_rejects_nonzero_boundary(self):
        u = np.zeros((5, 5))
        u[0, 2] = 0.01
        with pytest.raises(UsageError):
            run2d(LayerState2D(u, np.zeros_like(u)), UNIT, 0.1, 0.01)
