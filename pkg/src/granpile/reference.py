"""Forward-Euler finite-difference solvers for the two continuum pile models.

These are deliberately plain discretisations. They exist to show what the
continuum equations do near a cavity (the "geyser"), so their invariants are
checked with a tolerance rather than exactly.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    DiagnosticsSeries,
    Grid1D,
    LayerState,
    PhysicalParams,
    Trajectory,
    UsageError,
)

_EPS = 1e-12


class PdeModelKind(str, enum.Enum):
    ORIGINAL_DIFFUSIVE = "original"
    MODIFIED_CONVECTIVE = "modified"


class CflFailure(RuntimeError):
    """The explicit update produced non-finite values; dt is too large."""


def default_dt(kind: PdeModelKind, params: PhysicalParams, dx: float) -> float:
    """Heuristic stable step: parabolic scaling for the diffusive model, CFL for the convective one.

    Both are capped so the conversion term ``gamma * alpha * v`` is resolved.
    """
    kind = PdeModelKind(kind)
    reaction = 0.5 / (params.gamma * params.alpha)
    if kind is PdeModelKind.ORIGINAL_DIFFUSIVE:
        dt = 0.25 * dx * dx / max(params.beta, _EPS)
    else:
        dt = 0.5 * dx / (max(params.beta, _EPS) * params.alpha)
    return min(dt, reaction)


def _centred(u: np.ndarray, dx: float) -> np.ndarray:
    ux = np.zeros_like(u)
    ux[1:-1] = (u[2:] - u[:-2]) / (2 * dx)
    return ux


def pde_rates(state: LayerState, kind: PdeModelKind, params: PhysicalParams, dx: float):
    """Right-hand sides ``(u_t, v_t)`` at interior nodes (zero at the ends).

    The diffusive model uses centred ``u_x`` everywhere. The convective model
    works on the uphill side picked by the sign of centred ``u_x``: transport is
    ``beta * D u * D v`` with both one-sided quotients taken there, and the
    conversion uses the Godunov upwind ``|u_x|``. Centred ``u_x`` in the
    conversion term is unstable at convective step sizes.
    """
    kind = PdeModelKind(kind)
    u, v = state.u, state.v
    ux = _centred(u, dx)
    vt = np.zeros_like(v)
    if kind is PdeModelKind.ORIGINAL_DIFFUSIVE:
        ut = params.gamma * (params.alpha - np.abs(ux)) * v
        # conservative form of (v u_x)_x with face-averaged v
        face_v = 0.5 * (v[1:] + v[:-1])
        face_flux = face_v * np.diff(u) / dx
        vt[1:-1] = params.beta * np.diff(face_flux) / dx
    else:
        du_back = (u[1:-1] - u[:-2]) / dx
        du_fwd = (u[2:] - u[1:-1]) / dx
        dv_back = (v[1:-1] - v[:-2]) / dx
        dv_fwd = (v[2:] - v[1:-1]) / dx
        steep = np.zeros_like(u)
        steep[1:-1] = np.maximum(np.maximum(du_back, 0.0), -np.minimum(du_fwd, 0.0))
        ut = params.gamma * (params.alpha - steep) * v
        uxi = ux[1:-1]
        vt[1:-1] = params.beta * np.where(
            uxi > 0, np.maximum(du_fwd, 0.0) * dv_fwd,
            np.where(uxi < 0, np.minimum(du_back, 0.0) * dv_back, 0.0),
        )
    vt = vt - ut
    ut[0] = ut[-1] = vt[0] = vt[-1] = 0.0
    return ut, vt


def pde_step(state: LayerState, kind: PdeModelKind, params: PhysicalParams, dt: float) -> LayerState:
    """One forward-Euler step. Negative ``v`` produced by the update is kept, not clipped."""
    if not dt > 0:
        raise UsageError(f"dt must be > 0, got {dt}")
    dx = 1.0 / state.n
    # overflow is expected once a step is unstable; it is caught just below
    with np.errstate(over="ignore", invalid="ignore"):
        ut, vt = pde_rates(state, kind, params, dx)
        u = state.u + dt * ut
        v = state.v + dt * vt
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise CflFailure(f"non-finite values after a step of dt={dt!r} at t={state.t!r}")
    return LayerState(u, v, state.t + dt)


def run_pde(
    initial: LayerState,
    kind: PdeModelKind,
    params: PhysicalParams,
    T: float,
    dt: Optional[float] = None,
    snapshot_times: Sequence[float] = (),
    keep_states: bool = True,
    stop=None,
) -> Trajectory:
    """Fixed-step integration up to ``T`` (last step shortened to land on it).

    ``stop(state)`` returning True ends the run early after that state.
    """
    kind = PdeModelKind(kind)
    if not T > 0:
        raise UsageError(f"horizon T must be > 0, got {T}")
    grid = Grid1D(initial.n)
    if dt is None:
        dt = default_dt(kind, params, grid.dx)
    series = DiagnosticsSeries()
    series.record(initial, grid.dx)
    states = [initial]
    pending = sorted(float(t) for t in snapshot_times if 0 <= t <= T)
    snapshots = []
    while pending and pending[0] <= initial.t:
        snapshots.append((pending.pop(0), initial))
    state = initial
    while state.t < T:
        h = min(dt, T - state.t)
        state = pde_step(state, kind, params, h)
        series.record(state, grid.dx, h, 0)
        if keep_states:
            states.append(state)
        while pending and pending[0] <= state.t:
            snapshots.append((pending.pop(0), state))
        if stop is not None and stop(state):
            break
    if not keep_states:
        for s in [s for _, s in snapshots] + [state]:
            if all(s is not kept for kept in states):
                states.append(s)
    return Trajectory(grid, params, states, snapshots, series, exact=False, label=kind.value)


@dataclass
class GeyserReport:
    """Outcome of a geyser probe.

    ``detected`` means ``max(u + v)`` inside the window exceeded the initial
    maximum there by more than ``tolerance``. ``max_excess`` is the largest
    exceedance seen over the whole probed run.
    """

    kind: str
    detected: bool
    time: Optional[float]
    location: Optional[float]
    magnitude: float
    max_excess: float
    ceiling: float
    tolerance: float
    x_o: Optional[float] = None
    predicted_rate: Optional[float] = None
    measured_rate: Optional[float] = None

    @property
    def rate_error(self) -> Optional[float]:
        if self.predicted_rate is None or self.measured_rate is None:
            return None
        return abs(self.measured_rate - self.predicted_rate) / abs(self.predicted_rate)


def scan_for_geyser(states: Sequence[LayerState], x: np.ndarray, window: Optional[np.ndarray] = None,
                    tolerance: float = 1e-10):
    """First state whose windowed ``max(u+v)`` exceeds the initial windowed max.

    Returns ``(time, location, magnitude, max_excess, ceiling)``; the first
    three are None when nothing exceeds.
    """
    if window is None:
        window = np.ones_like(x, dtype=bool)
    ceiling = float(np.max(states[0].total[window]))
    first = None
    worst = 0.0
    for s in states[1:]:
        tot = s.total[window]
        j = int(np.argmax(tot))
        excess = float(tot[j]) - ceiling
        worst = max(worst, excess)
        if first is None and excess > tolerance:
            first = (s.t, float(x[window][j]), excess)
    if first is None:
        return None, None, None, worst, ceiling
    return first[0], first[1], first[2], worst, ceiling


def probe_geyser(
    initial: LayerState,
    kind: PdeModelKind,
    params: PhysicalParams,
    T: float,
    x_o: Optional[float] = None,
    curvature: Optional[float] = None,
    window: Optional[np.ndarray] = None,
    dt: Optional[float] = None,
    tolerance: float = 1e-10,
    stop_on_detect: bool = False,
) -> GeyserReport:
    """Run a PDE model and look for ``u + v`` rising above its starting maximum.

    When ``x_o`` is given, the first step's growth rate of ``u + v`` there is
    measured. For the diffusive model it is compared with ``beta * v_o * u_xx``
    (valid where ``u_x = 0``); ``curvature`` supplies ``u_xx``, otherwise a
    centred second difference of the initial ``u`` is used.
    ``stop_on_detect`` ends the run at the first exceedance.
    """
    kind = PdeModelKind(kind)
    grid = Grid1D(initial.n)
    mask = np.ones(grid.n + 1, dtype=bool) if window is None else np.asarray(window, dtype=bool)
    start_max = float(np.max(initial.total[mask]))
    stop = None
    if stop_on_detect:
        def stop(state):
            return float(np.max(state.total[mask])) - start_max > tolerance
    traj = run_pde(initial, kind, params, T, dt, stop=stop)
    t, loc, mag, worst, ceiling = scan_for_geyser(traj.states, grid.x, mask, tolerance)
    report = GeyserReport(
        kind=kind.value, detected=t is not None, time=t, location=loc,
        magnitude=0.0 if mag is None else mag, max_excess=worst, ceiling=ceiling,
        tolerance=tolerance, x_o=x_o,
    )
    if x_o is not None:
        i = grid.index_of(x_o)
        u0 = initial.u
        first = traj.states[1]
        if kind is PdeModelKind.ORIGINAL_DIFFUSIVE:
            if curvature is None:
                curvature = float((u0[i + 1] - 2 * u0[i] + u0[i - 1]) / grid.dx**2)
            report.predicted_rate = params.beta * float(initial.v[i]) * curvature
        report.measured_rate = float(first.total[i] - initial.total[i]) / (first.t - initial.t)
    return report
