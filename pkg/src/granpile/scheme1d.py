"""Discrete two-layer pile model in one dimension with an adaptive step controller.

One step is: conversion of rolling matter into the standing layer
(:func:`standing_update`), the leftover rolling field ``v*`` (:func:`v_star`),
then downhill transport of ``v*`` (:func:`rolling_update`). :func:`try_step`
composes them and checks the invariants; :func:`advance` halves the step
until they hold; :func:`run1d` drives a whole scenario.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    DiagnosticsSeries,
    Grid1D,
    LayerState,
    PhysicalParams,
    Property,
    SlopePair,
    Trajectory,
    UsageError,
    edge_slopes,
    one_sided_slopes,
)


class NodeClass(enum.Enum):
    RISING_RIGHT = "RisingRight"  # only the left side descends (left > 0, right >= 0)
    RISING_LEFT = "RisingLeft"  # only the right side descends (left <= 0, right < 0)
    FLAT_FOOT = "FlatFoot"  # no descent, exactly one side flat
    CAVITY = "Cavity"  # no descent, both sides rising or both flat
    PEAK = "Peak"  # both sides descend (left > 0, right < 0)


FULL_CONVERSION = (NodeClass.FLAT_FOOT, NodeClass.CAVITY)


def classify(slopes: SlopePair) -> NodeClass:
    """Total classification of a node by its one-sided slopes.

    Peak is tested first, then the two strict single-descent cases; what is
    left has no descending side and converts all of its rolling matter.
    """
    left, right = slopes.left, slopes.right
    if right < 0 and left > 0:
        return NodeClass.PEAK
    if left > 0 and right >= 0:
        return NodeClass.RISING_RIGHT
    if left <= 0 and right < 0:
        return NodeClass.RISING_LEFT
    if (left == 0) != (right == 0):
        return NodeClass.FLAT_FOOT
    return NodeClass.CAVITY


@dataclass(frozen=True)
class SplitCoeffs:
    r_minus: float
    r_plus: float


def directional_split(descents: np.ndarray) -> np.ndarray:
    """Steepest-descent weights.

    ``descents`` has the direction on axis 0 and holds the descent magnitude
    (0 when that side does not go down). All weight goes to the steepest
    direction(s), shared equally on ties; a node with no descent gets zeros.
    """
    d = np.asarray(descents, dtype=float)
    top = d.max(axis=0)
    winners = (d == top) & (d > 0)
    count = winners.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(count > 0, 1.0 / np.maximum(count, 1), 0.0)
    return np.where(winners, share, 0.0)


def descents_1d(left, right) -> np.ndarray:
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    return np.stack([np.where(left > 0, left, 0.0), np.where(right < 0, -right, 0.0)])


def splitting_coeffs(slopes: SlopePair) -> SplitCoeffs:
    """Share of a node's rolling matter sent left (``r_minus``) and right (``r_plus``).

    At a peak the steeper side takes everything and ties split in half. A node
    with one descending side sends everything that way; a node with none gets (0, 0).
    """
    w = directional_split(descents_1d(slopes.left, slopes.right))
    return SplitCoeffs(float(w[0]), float(w[1]))


def _interior_slopes(u: np.ndarray, dx: float):
    return one_sided_slopes(u, dx)


def standing_increment(state: LayerState, params: PhysicalParams, dt: float) -> np.ndarray:
    """Per-node growth of the standing layer over one step (zero at the boundary)."""
    u, v = state.u, state.v
    dx = 1.0 / (u.size - 1)
    left, right = _interior_slopes(u, dx)
    w = directional_split(descents_1d(left, right))
    a = params.alpha
    weighted = w[0] * (a - np.abs(left)) + w[1] * (a - np.abs(right))
    vi = v[1:-1]
    du_inner = params.gamma * dt * weighted * vi
    full = (left <= 0) & (right >= 0)
    du_inner = np.where(full, vi, du_inner)
    du = np.zeros_like(u)
    du[1:-1] = du_inner
    return du


def standing_update(state: LayerState, params: PhysicalParams, dt: float) -> np.ndarray:
    """New standing layer after one step; the input state is not touched."""
    return state.u + standing_increment(state, params, dt)


def v_star(state: LayerState, new_u: np.ndarray) -> np.ndarray:
    """Rolling matter left at each node after conversion: ``v - (new_u - u)``."""
    return state.v - (np.asarray(new_u, dtype=float) - state.u)


def inflow_gates(new_u: np.ndarray, dx: float) -> Tuple[np.ndarray, np.ndarray]:
    """Fraction of each uphill neighbour's matter that is routed to the node.

    Returns ``(from_right, from_left)`` for interior nodes: the right
    neighbour's left-going weight and the left neighbour's right-going weight.
    Boundary neighbours gate with 1 (they never carry rolling matter).
    """
    left, right = _interior_slopes(new_u, dx)
    w = directional_split(descents_1d(left, right))
    from_right = np.ones_like(left)
    from_left = np.ones_like(left)
    from_right[:-1] = w[0][1:]
    from_left[1:] = w[1][:-1]
    return from_right, from_left


def axis_flux(
    left: np.ndarray,
    right: np.ndarray,
    vx_minus: np.ndarray,
    vx_plus: np.ndarray,
    gate_right: np.ndarray,
    gate_left: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """Transport term along one grid line and the peak mask.

    ``left``/``right`` are the slopes of the new standing layer. Peaks get a
    zero flux here; the caller decides what happens to their matter.
    """
    peak = (right < 0) & (left > 0)
    from_right = gate_right * right * vx_plus
    from_left = gate_left * left * vx_minus
    rising = ~peak & (left >= 0) & (right >= 0)
    falling = ~peak & ~rising & (left <= 0) & (right <= 0)
    cavity = ~peak & ~rising & ~falling
    flux = np.where(
        rising, from_right, np.where(falling, from_left, np.where(cavity, from_right + from_left, 0.0))
    )
    return flux, peak


def rolling_update(
    state: LayerState,
    new_u: np.ndarray,
    vstar: np.ndarray,
    params: PhysicalParams,
    dt: float,
) -> np.ndarray:
    """New rolling layer: ``v* + dt * beta * F`` with upwind inflow from above.

    The node class is taken from the slopes of ``new_u``; ``v*`` slopes use the
    same one-sided quotients. A peak sends all its matter away (its ``v``
    becomes 0) unless ``beta == 0``, in which case nothing is transported at all.
    """
    new_u = np.asarray(new_u, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    dx = 1.0 / (new_u.size - 1)
    left, right = _interior_slopes(new_u, dx)
    vx_minus, vx_plus = one_sided_slopes(vstar, dx)
    gate_right, gate_left = inflow_gates(new_u, dx)
    flux, peak = axis_flux(left, right, vx_minus, vx_plus, gate_right, gate_left)
    vi = vstar[1:-1]
    v_inner = vi + dt * params.beta * flux
    if params.beta > 0:
        v_inner = np.where(peak, 0.0, v_inner)
    out = np.zeros_like(new_u)
    out[1:-1] = v_inner
    return out


@dataclass
class StepOutcome:
    accepted: bool
    dt_used: float
    violations: List[Property] = field(default_factory=list)
    retries: int = 0


class StepFailure(RuntimeError):
    """The step controller ran below ``dt_min`` with invariants still violated."""

    def __init__(self, message: str, outcome: StepOutcome, state: LayerState):
        super().__init__(message)
        self.outcome = outcome
        self.state = state


def _full_conversion_mask(u: np.ndarray, dx: float) -> np.ndarray:
    left, right = _interior_slopes(u, dx)
    mask = np.zeros(u.shape, dtype=bool)
    mask[1:-1] = (left <= 0) & (right >= 0)
    return mask


def pending_conversion_ok(candidate: LayerState, alpha: float, dx: float) -> bool:
    """Would converting all rolling matter at no-descent nodes keep slopes <= alpha?

    That conversion happens on the next step whatever its size, so a step that
    delivers too much matter to such a node is rejected now, while a smaller
    step can still fix it.
    """
    mask = _full_conversion_mask(candidate.u, dx)
    if not np.any(candidate.v[mask] > 0):
        return True
    settled = candidate.u + np.where(mask, candidate.v, 0.0)
    return all(np.all(np.abs(s) <= alpha) for s in edge_slopes(settled, dx))


def check_candidate(
    candidate: LayerState,
    vstar: np.ndarray,
    params: PhysicalParams,
    dx: float,
    ceiling: float,
    lookahead: bool = True,
    full_mask_fn=None,
) -> List[Property]:
    found = []
    if not np.all(candidate.total <= ceiling):
        found.append(Property.MAX_PRINCIPLE)
    slopes_ok = all(np.all(np.abs(s) <= params.alpha) for s in edge_slopes(candidate.u, dx))
    if slopes_ok and lookahead:
        if full_mask_fn is None:
            slopes_ok = pending_conversion_ok(candidate, params.alpha, dx)
        else:
            slopes_ok = full_mask_fn(candidate)
    if not slopes_ok:
        found.append(Property.CRITICAL_SLOPE)
    if not (np.all(candidate.u >= 0) and np.all(candidate.v >= 0) and np.all(vstar >= 0)):
        found.append(Property.NONNEGATIVITY)
    return found


def try_step(
    state: LayerState,
    params: PhysicalParams,
    dt: float,
    ceiling: Optional[float] = None,
    lookahead: bool = True,
) -> Tuple[LayerState, StepOutcome]:
    """One candidate step and its verdict; the candidate is returned even when rejected.

    ``ceiling`` is the bound for ``max(u + v)``; it defaults to the current
    state's maximum. ``v*`` is formed from the increment directly so that
    nodes converting everything end with exactly zero rolling matter.
    """
    if not dt > 0:
        raise UsageError(f"dt must be > 0, got {dt}")
    dx = 1.0 / state.n
    du = standing_increment(state, params, dt)
    new_u = state.u + du
    vstar = state.v - du
    new_v = rolling_update(state, new_u, vstar, params, dt)
    candidate = LayerState(new_u, new_v, state.t + dt)
    if ceiling is None:
        ceiling = float(np.max(state.total))
    violations = check_candidate(candidate, vstar, params, dx, ceiling, lookahead)
    return candidate, StepOutcome(not violations, dt, violations, 0)


def halving_controller(step_fn, state, dt_init: float, dt_min: float):
    """Shared retry loop: halve until ``step_fn(dt)`` is accepted or dt < dt_min."""
    if not (dt_min > 0 and dt_min <= dt_init):
        raise UsageError(f"need 0 < dt_min <= dt_init, got {dt_min}, {dt_init}")
    dt = dt_init
    retries = 0
    while True:
        candidate, outcome = step_fn(dt)
        if outcome.accepted:
            outcome.retries = retries
            return candidate, outcome
        retries += 1
        dt = dt / 2.0
        if dt < dt_min:
            outcome.retries = retries
            names = ", ".join(p.value for p in outcome.violations)
            raise StepFailure(
                f"step from t={state.t!r} still violates {names} at dt={outcome.dt_used!r} "
                f"(dt_min={dt_min!r})",
                outcome,
                state,
            )


def advance(
    state: LayerState,
    params: PhysicalParams,
    dt_init: float,
    dt_min: float,
    ceiling: Optional[float] = None,
    lookahead: bool = True,
) -> Tuple[LayerState, StepOutcome]:
    """Accept one step, halving ``dt`` on every rejection.

    Raises :class:`StepFailure` once ``dt`` drops below ``dt_min``.
    """
    return halving_controller(
        lambda dt: try_step(state, params, dt, ceiling, lookahead), state, dt_init, dt_min
    )


def scheduled_times(times: Sequence[float], T: float) -> List[float]:
    return sorted(float(t) for t in times if 0 <= t <= T)


def drive(
    initial: LayerState,
    grid,
    params: PhysicalParams,
    T: float,
    dt_init: float,
    dt_min: float,
    snapshot_times: Sequence[float],
    step,
    keep_states: bool = True,
    dt_schedule: Optional[Sequence[float]] = None,
    label: str = "scheme1d",
) -> Trajectory:
    """Time loop shared by the 1-D and 2-D schemes.

    ``step(state, dt_init, dt_min, ceiling)`` must return ``(state, outcome)``.
    A snapshot is the first accepted state at or after its scheduled time.
    The last step is shortened to land on ``T``. ``dt_schedule`` replaces
    ``dt_init`` step by step (used to force identical step sequences).
    """
    if not T > 0:
        raise UsageError(f"horizon T must be > 0, got {T}")
    series = DiagnosticsSeries()
    series.record(initial, grid.dx)
    states = [initial]
    pending = scheduled_times(snapshot_times, T)
    snapshots: List[Tuple[float, LayerState]] = []
    while pending and pending[0] <= initial.t:
        snapshots.append((pending.pop(0), initial))
    ceiling = float(np.max(initial.total))
    state = initial
    j = 0
    while state.t < T:
        want = dt_init if dt_schedule is None else float(dt_schedule[j])
        dt0 = min(want, T - state.t)
        state, outcome = step(state, dt0, min(dt_min, dt0), ceiling)
        j += 1
        series.record(state, grid.dx, outcome.dt_used, outcome.retries)
        if keep_states:
            states.append(state)
        while pending and pending[0] <= state.t:
            snapshots.append((pending.pop(0), state))
    if not keep_states:
        for s in [s for _, s in snapshots] + [state]:
            if all(s is not kept for kept in states):
                states.append(s)
    return Trajectory(grid, params, states, snapshots, series, exact=True, label=label)


def validate_initial(state: LayerState, params: PhysicalParams, dx: float) -> None:
    from .core import state_violations

    bad = state_violations(state, params.alpha, dx)
    if state.u[0] != 0 or state.u[-1] != 0 or state.v[0] != 0 or state.v[-1] != 0:
        raise UsageError("initial data must vanish at x = 0 and x = 1")
    if bad:
        raise UsageError(
            "initial data violates " + ", ".join(p.value for p in bad)
        )


def run1d(
    initial: LayerState,
    params: PhysicalParams,
    T: float,
    dt_init: float,
    dt_min: Optional[float] = None,
    snapshot_times: Sequence[float] = (),
    keep_states: bool = True,
    dt_schedule: Optional[Sequence[float]] = None,
    lookahead: bool = True,
) -> Trajectory:
    """Integrate the 1-D scheme from ``initial`` up to time ``T``.

    ``initial`` must be non-negative, vanish at both ends and have slopes <= alpha.
    """
    grid = Grid1D(initial.n)
    validate_initial(initial, params, grid.dx)
    if dt_min is None:
        dt_min = dt_init * 2.0**-20

    def step(state, dt0, dtm, ceiling):
        return advance(state, params, dt0, dtm, ceiling, lookahead)

    return drive(
        initial, grid, params, T, dt_init, dt_min, snapshot_times, step, keep_states, dt_schedule
    )
