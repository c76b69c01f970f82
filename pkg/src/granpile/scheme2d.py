"""Two-dimensional extension of the discrete pile model.

Each node looks along four axis directions (x-, x+, y-, y+). The standing
layer grows by the 1-D rule applied per direction, weighted by the node's
steepest-descent split so that one node's rolling matter is shared out once.
The rolling layer is moved by the 1-D flux along every x-line and y-line.
With y-invariant data every x-line reproduces the 1-D scheme bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import (
    Grid2D,
    LayerState2D,
    PhysicalParams,
    Property,
    Trajectory,
    UsageError,
)
from .scheme1d import (
    StepOutcome,
    axis_flux,
    directional_split,
    drive,
    halving_controller,
)

X_AXIS, Y_AXIS = 1, 0


@dataclass(frozen=True)
class DirectionalSlopes:
    """Slopes in the 1-D sign convention: ``*_minus`` > 0 and ``*_plus`` < 0 mean downhill away from the node."""

    x_minus: float
    x_plus: float
    y_minus: float
    y_plus: float


@dataclass(frozen=True)
class DirectionalSplit:
    x_minus: float
    x_plus: float
    y_minus: float
    y_plus: float


def _axis_slopes(u: np.ndarray, dx: float, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    prev = np.roll(u, 1, axis=axis)
    nxt = np.roll(u, -1, axis=axis)
    return (prev - u) / (-dx), (nxt - u) / dx


def _slopes4(u: np.ndarray, dx: float):
    lx, rx = _axis_slopes(u, dx, X_AXIS)
    ly, ry = _axis_slopes(u, dx, Y_AXIS)
    return lx, rx, ly, ry


def _descents(lx, rx, ly, ry) -> np.ndarray:
    return np.stack([
        np.where(lx > 0, lx, 0.0),
        np.where(rx < 0, -rx, 0.0),
        np.where(ly > 0, ly, 0.0),
        np.where(ry < 0, -ry, 0.0),
    ])


def _grid_of(state: LayerState2D, grid: Optional[Grid2D]) -> Grid2D:
    if grid is None:
        return Grid2D(state.n)
    if grid.n != state.n:
        raise UsageError(f"grid n={grid.n} does not match state n={state.n}")
    return grid


def directional_slopes(state: LayerState2D, i: int, k: int, grid: Optional[Grid2D] = None) -> DirectionalSlopes:
    """Four one-sided slopes at node (x_i, y_k)."""
    grid = _grid_of(state, grid)
    if not grid.active_mask()[k, i]:
        raise UsageError(f"node (i={i}, k={k}) is on the pinned boundary")
    lx, rx, ly, ry = _slopes4(state.u, grid.dx)
    return DirectionalSlopes(float(lx[k, i]), float(rx[k, i]), float(ly[k, i]), float(ry[k, i]))


def directional_split_at(state: LayerState2D, i: int, k: int, grid: Optional[Grid2D] = None) -> DirectionalSplit:
    s = directional_slopes(state, i, k, grid)
    w = directional_split(_descents(*(np.array(x) for x in (s.x_minus, s.x_plus, s.y_minus, s.y_plus))))
    return DirectionalSplit(*(float(x) for x in w))


def standing_increment_2d(
    state: LayerState2D, params: PhysicalParams, dt: float, grid: Optional[Grid2D] = None
) -> np.ndarray:
    grid = _grid_of(state, grid)
    u, v = state.u, state.v
    lx, rx, ly, ry = _slopes4(u, grid.dx)
    w = directional_split(_descents(lx, rx, ly, ry))
    a = params.alpha
    along_x = w[0] * (a - np.abs(lx)) + w[1] * (a - np.abs(rx))
    along_y = w[2] * (a - np.abs(ly)) + w[3] * (a - np.abs(ry))
    du = params.gamma * dt * (along_x + along_y) * v
    full = (lx <= 0) & (rx >= 0) & (ly <= 0) & (ry >= 0)
    du = np.where(full, v, du)
    return np.where(grid.active_mask(), du, 0.0)


def standing_update_2d(
    state: LayerState2D, params: PhysicalParams, dt: float, grid: Optional[Grid2D] = None
) -> np.ndarray:
    """New standing layer: ``u`` plus the x- and y-direction deposits."""
    return state.u + standing_increment_2d(state, params, dt, grid)


def _gates(new_u: np.ndarray, dx: float, active: np.ndarray):
    lx, rx, ly, ry = _slopes4(new_u, dx)
    w = directional_split(_descents(lx, rx, ly, ry))

    def from_neighbour(weight, shift, axis):
        g = np.roll(weight, shift, axis=axis)
        return np.where(np.roll(active, shift, axis=axis), g, 1.0)

    gx_right = from_neighbour(w[0], -1, X_AXIS)
    gx_left = from_neighbour(w[1], 1, X_AXIS)
    gy_up = from_neighbour(w[2], -1, Y_AXIS)
    gy_down = from_neighbour(w[3], 1, Y_AXIS)
    return (lx, rx, ly, ry), (gx_right, gx_left, gy_up, gy_down)


def rolling_update_2d(
    state: LayerState2D,
    new_u: np.ndarray,
    vstar: np.ndarray,
    params: PhysicalParams,
    dt: float,
    grid: Optional[Grid2D] = None,
) -> np.ndarray:
    """New rolling layer from the x-line and y-line fluxes.

    A node that is a peak along one axis and has no uphill side along the
    other receives nothing and loses everything (its ``v`` becomes 0). A peak
    along one axis only, with inflow along the other, keeps the other axis' flux.
    """
    grid = _grid_of(state, grid)
    active = grid.active_mask()
    new_u = np.asarray(new_u, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    dx = grid.dx
    (lx, rx, ly, ry), (gxr, gxl, gyu, gyd) = _gates(new_u, dx, active)
    vlx, vrx = _axis_slopes(vstar, dx, X_AXIS)
    vly, vry = _axis_slopes(vstar, dx, Y_AXIS)
    fx, peak_x = axis_flux(lx, rx, vlx, vrx, gxr, gxl)
    fy, peak_y = axis_flux(ly, ry, vly, vry, gyu, gyd)
    uphill_x = (rx > 0) | (lx < 0)
    uphill_y = (ry > 0) | (ly < 0)
    departs = (peak_x & ~uphill_y) | (peak_y & ~uphill_x)
    out = vstar + dt * params.beta * (fx + fy)
    if params.beta > 0:
        out = np.where(departs, 0.0, out)
    return np.where(active, out, 0.0)


def edge_slopes_2d(u: np.ndarray, grid: Grid2D):
    sx = np.diff(u, axis=X_AXIS) / grid.dx
    if grid.periodic_y:
        sy = (np.roll(u, -1, axis=Y_AXIS) - u) / grid.dx
    else:
        sy = np.diff(u, axis=Y_AXIS) / grid.dx
    return sx, sy


def _slopes_ok(u: np.ndarray, grid: Grid2D, alpha: float) -> bool:
    return all(np.all(np.abs(s) <= alpha) for s in edge_slopes_2d(u, grid))


def pending_conversion_ok_2d(candidate: LayerState2D, grid: Grid2D, alpha: float) -> bool:
    lx, rx, ly, ry = _slopes4(candidate.u, grid.dx)
    mask = (lx <= 0) & (rx >= 0) & (ly <= 0) & (ry >= 0) & grid.active_mask()
    if not np.any(candidate.v[mask] > 0):
        return True
    return _slopes_ok(candidate.u + np.where(mask, candidate.v, 0.0), grid, alpha)


def try_step_2d(
    state: LayerState2D,
    params: PhysicalParams,
    dt: float,
    ceiling: Optional[float] = None,
    grid: Optional[Grid2D] = None,
    lookahead: bool = True,
):
    if not dt > 0:
        raise UsageError(f"dt must be > 0, got {dt}")
    grid = _grid_of(state, grid)
    du = standing_increment_2d(state, params, dt, grid)
    new_u = state.u + du
    vstar = state.v - du
    new_v = rolling_update_2d(state, new_u, vstar, params, dt, grid)
    candidate = LayerState2D(new_u, new_v, state.t + dt)
    if ceiling is None:
        ceiling = float(np.max(state.total))
    found = []
    if not np.all(candidate.total <= ceiling):
        found.append(Property.MAX_PRINCIPLE)
    ok = _slopes_ok(new_u, grid, params.alpha)
    if ok and lookahead:
        ok = pending_conversion_ok_2d(candidate, grid, params.alpha)
    if not ok:
        found.append(Property.CRITICAL_SLOPE)
    if not (np.all(new_u >= 0) and np.all(new_v >= 0) and np.all(vstar >= 0)):
        found.append(Property.NONNEGATIVITY)
    return candidate, StepOutcome(not found, dt, found, 0)


def advance_2d(
    state: LayerState2D,
    params: PhysicalParams,
    dt_init: float,
    dt_min: float,
    ceiling: Optional[float] = None,
    grid: Optional[Grid2D] = None,
    lookahead: bool = True,
):
    grid = _grid_of(state, grid)
    return halving_controller(
        lambda dt: try_step_2d(state, params, dt, ceiling, grid, lookahead), state, dt_init, dt_min
    )


def validate_initial_2d(state: LayerState2D, grid: Grid2D, alpha: float) -> None:
    pinned = ~grid.active_mask()
    if np.any(state.u[pinned] != 0) or np.any(state.v[pinned] != 0):
        raise UsageError("initial data must vanish on the pinned boundary")
    if not (np.all(state.u >= 0) and np.all(state.v >= 0)):
        raise UsageError("initial data violates Nonnegativity")
    if not _slopes_ok(state.u, grid, alpha):
        raise UsageError("initial data violates CriticalSlope")


def run2d(
    initial: LayerState2D,
    params: PhysicalParams,
    T: float,
    dt_init: float,
    dt_min: Optional[float] = None,
    snapshot_times: Sequence[float] = (),
    keep_states: bool = True,
    dt_schedule: Optional[Sequence[float]] = None,
    grid: Optional[Grid2D] = None,
    lookahead: bool = True,
) -> Trajectory:
    """Integrate the 2-D scheme; same stepping contract as :func:`granpile.scheme1d.run1d`."""
    grid = _grid_of(initial, grid)
    validate_initial_2d(initial, grid, params.alpha)
    if dt_min is None:
        dt_min = dt_init * 2.0**-20

    def step(state, dt0, dtm, ceiling):
        return advance_2d(state, params, dt0, dtm, ceiling, grid, lookahead)

    return drive(
        initial, grid, params, T, dt_init, dt_min, snapshot_times, step, keep_states,
        dt_schedule, label="scheme2d",
    )
