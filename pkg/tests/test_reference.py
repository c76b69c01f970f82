import numpy as np
import pytest

from granpile.core import Grid1D, LayerState, PhysicalParams, UsageError
from granpile.presets import build_preset, get_preset
from granpile.reference import (
    CflFailure,
    PdeModelKind,
    default_dt,
    pde_rates,
    pde_step,
    probe_geyser,
    run_pde,
)

ONES = PhysicalParams(1.0, 1.0, 1.0)
KINDS = list(PdeModelKind)


def cavity(n):
    g = Grid1D(n)
    u, v = build_preset("cavity21", g)
    p = get_preset("cavity21").resolve()
    return g, LayerState(u, v), p


class TestStep:
    @pytest.mark.parametrize("kind", KINDS)
    def test_no_rolling_layer_is_stationary(self, kind):
        u, _ = build_preset("wedge", Grid1D(20))
        s = LayerState(u, np.zeros_like(u))
        nxt = pde_step(s, kind, ONES, 0.001)
        assert np.array_equal(nxt.u, s.u) and np.array_equal(nxt.v, s.v)

    def test_diffusive_stencil_by_hand(self):
        # five nodes, dx = 1/4; check node 2 against the written-out conservative formula
        u = np.array([0, 0.1, 0.05, 0.1, 0])
        v = np.array([0, 0.2, 0.3, 0.1, 0])
        dx = 0.25
        ut, vt = pde_rates(LayerState(u, v), "original", ONES, dx)
        diff = ((v[3] + v[2]) * (u[3] - u[2]) - (v[2] + v[1]) * (u[2] - u[1])) / (2 * dx * dx)
        ux = (u[3] - u[1]) / (2 * dx)
        assert ut[2] == pytest.approx((1 - abs(ux)) * v[2])
        assert vt[2] == pytest.approx(diff - (1 - abs(ux)) * v[2])

    def test_convective_uses_uphill_side(self):
        # rising to the right at node 1: transport uses forward quotients
        u = np.array([0, 0.05, 0.15, 0.2, 0])
        v = np.array([0, 0.1, 0.3, 0.0, 0])
        dx = 0.25
        _, vt = pde_rates(LayerState(u, v), "modified", ONES, dx)
        ut, _ = pde_rates(LayerState(u, v), "modified", ONES, dx)
        transport = ((u[2] - u[1]) / dx) * ((v[2] - v[1]) / dx)
        assert vt[1] + ut[1] == pytest.approx(transport)

    def test_boundary_stays_zero(self):
        g, s, _ = cavity(50)
        for kind in KINDS:
            nxt = pde_step(s, kind, ONES, default_dt(kind, ONES, g.dx))
            assert nxt.u[0] == nxt.u[-1] == nxt.v[0] == nxt.v[-1] == 0

    def test_blow_up_is_reported(self):
        g, s, _ = cavity(50)
        with pytest.raises(CflFailure):
            run_pde(s, "original", ONES, 5.0, dt=0.05)

    def test_bad_dt(self):
        g, s, _ = cavity(20)
        with pytest.raises(UsageError):
            pde_step(s, "original", ONES, -1.0)


class TestDefaultDt:
    def test_diffusive_scaling(self):
        assert default_dt("original", ONES, 0.01) == pytest.approx(0.25e-4)

    def test_convective_scaling(self):
        assert default_dt("modified", ONES, 0.01) == pytest.approx(0.005)

    def test_beta_zero_is_finite(self):
        assert np.isfinite(default_dt("modified", PhysicalParams(beta=0), 0.01))


class TestGeyser:
    def test_diffusive_model_rises_at_cavity_bottom(self):
        g, s, p = cavity(100)
        first = pde_step(s, "original", ONES, default_dt("original", ONES, g.dx))
        i = g.index_of(p["x_o"])
        assert first.total[i] > s.total[i]

    def test_rate_matches_curvature_prediction(self):
        g, s, p = cavity(200)
        rep = probe_geyser(s, "original", ONES, 1e-4, x_o=p["x_o"],
                           curvature=get_preset("cavity21").curvature(p), stop_on_detect=True)
        # the prediction is beta * v_o * u_xx = 1 * 0.9 * 6 d / w^2
        assert rep.predicted_rate == pytest.approx(0.9 * 6 * 0.05 / 0.15**2)
        assert rep.rate_error < 0.1

    def test_convective_model_has_no_geyser(self):
        g, s, p = cavity(200)
        rep = probe_geyser(s, "modified", ONES, 0.1, window=get_preset("cavity21").window(g, p))
        assert not rep.detected
        assert rep.predicted_rate is None

    @pytest.mark.parametrize("kind", KINDS)
    def test_beta_zero_no_geyser(self, kind):
        g, s, p = cavity(100)
        rep = probe_geyser(s, kind, PhysicalParams(beta=0.0), 0.05)
        assert not rep.detected

    def test_trajectory_flags_inexact(self):
        g, s, _ = cavity(20)
        assert not run_pde(s, "modified", ONES, 0.01).exact
