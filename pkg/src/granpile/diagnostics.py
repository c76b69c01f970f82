"""Invariant checkers, volume tracking, geyser detection and mesh-refinement studies."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import Grid2D, LayerState, Trajectory, bilinear_eval, edge_slopes, volume
from .reference import scan_for_geyser


@dataclass
class CheckResult:
    """Verdict of one checker.

    ``witness`` is ``(t, node)`` of the worst offence (``node`` is an index or
    an index tuple) and ``worst`` its size; both are None/0 on a pass.
    """

    name: str
    passed: bool
    witness: Optional[Tuple[float, object]] = None
    worst: float = 0.0
    tolerance: float = 0.0

    def line(self) -> str:
        return f"CHECK: {'pass' if self.passed else 'fail'} {self.name}"


def _node(idx, ndim):
    return int(idx[0]) if ndim == 1 else tuple(int(i) for i in idx)


def _worst(values: List[Tuple[float, float, object]], name: str, tol: float) -> CheckResult:
    """``values`` holds (excess, t, node); excess > 0 means an offence."""
    if not values:
        return CheckResult(name, True, tolerance=tol)
    # ties broken by time then node so the witness is independent of inspection order
    top = max(e[0] for e in values)
    best = [e for e in values if e[0] == top]
    excess, t, node = min(best, key=lambda e: (e[1], np.atleast_1d(e[2]).tolist()))
    if excess > 0:
        return CheckResult(name, False, (t, node), excess, tol)
    return CheckResult(name, True, tolerance=tol)


def default_tolerance(traj: Trajectory, K: float = 1.0) -> float:
    """``K * max(dx, dt_max)`` for continuum-model trajectories, 0 for the discrete schemes."""
    if traj.exact:
        return 0.0
    dts = traj.dts or [0.0]
    return K * max(traj.grid.dx, max(dts))


def check_max_principle(traj: Trajectory, tolerance: Optional[float] = None) -> CheckResult:
    tol = default_tolerance(traj) if tolerance is None else float(tolerance)
    first = min(traj.states, key=lambda s: s.t)
    ceiling = float(np.max(first.total))
    vals = []
    for s in traj.states:
        tot = s.total
        idx = np.unravel_index(int(np.argmax(tot)), tot.shape)
        vals.append((float(tot[idx]) - ceiling - tol, s.t, _node(idx, tot.ndim)))
    return _worst(vals, "MaxPrinciple", tol)


def check_slope_bound(traj: Trajectory, alpha: Optional[float] = None) -> CheckResult:
    """Every edge slope of every state within ``alpha`` (exact comparison)."""
    alpha = traj.params.alpha if alpha is None else float(alpha)
    dx = traj.grid.dx
    vals = []
    for s in traj.states:
        for axis, sl in enumerate(edge_slopes(s.u, dx)):
            if not sl.size:
                continue
            a = np.abs(sl)
            idx = np.unravel_index(int(np.argmax(a)), a.shape)
            vals.append((float(a[idx]) - alpha, s.t, _node(idx, a.ndim)))
    return _worst(vals, "CriticalSlope", 0.0)


def check_nonneg_and_monotone(traj: Trajectory) -> CheckResult:
    """u, v >= 0 everywhere and u non-decreasing in time at every node."""
    states = sorted(traj.states, key=lambda s: s.t)
    vals = []
    prev = None
    for s in states:
        low = np.minimum(s.u, s.v)
        idx = np.unravel_index(int(np.argmin(low)), low.shape)
        vals.append((-float(low[idx]), s.t, _node(idx, low.ndim)))
        if prev is not None:
            drop = prev.u - s.u
            j = np.unravel_index(int(np.argmax(drop)), drop.shape)
            vals.append((float(drop[j]), s.t, _node(j, drop.ndim)))
        prev = s
    return _worst(vals, "NonnegativeMonotone", 0.0)


def run_checks(traj: Trajectory, tolerance: Optional[float] = None) -> List[CheckResult]:
    return [
        check_max_principle(traj, tolerance),
        check_slope_bound(traj),
        check_nonneg_and_monotone(traj),
    ]


@dataclass
class VolumeSeries:
    times: np.ndarray
    volumes: np.ndarray

    @property
    def drift(self) -> np.ndarray:
        v0 = self.volumes[0]
        if v0 == 0:
            return np.zeros_like(self.volumes)
        return (self.volumes - v0) / v0

    @property
    def max_abs_drift(self) -> float:
        return float(np.max(np.abs(self.drift)))


def volume_series(traj: Trajectory) -> VolumeSeries:
    """Volume of ``u + v`` per recorded state (all accepted steps if the run kept them)."""
    if len(traj.series):
        return VolumeSeries(np.array(traj.series.t), np.array(traj.series.volume))
    dx = traj.grid.dx
    return VolumeSeries(np.array([s.t for s in traj.states]),
                        np.array([volume(s, dx) for s in traj.states]))


@dataclass
class GeyserScan:
    detected: bool
    time: Optional[float]
    location: Optional[float]
    magnitude: float
    max_excess: float


def detect_geyser(traj: Trajectory, window: Optional[np.ndarray] = None,
                  tolerance: float = 1e-10) -> GeyserScan:
    """Look for ``max(u + v)`` over ``window`` rising above its initial value."""
    t, loc, mag, worst, _ = scan_for_geyser(traj.states, traj.grid.x, window, tolerance)
    return GeyserScan(t is not None, t, loc, 0.0 if mag is None else mag, worst)


@dataclass
class ConvergenceReport:
    """Successive sup-norm gaps of ``u`` across refined meshes.

    ``u_gaps[j]`` compares mesh ``j`` with mesh ``j+1``: the maximum over the
    snapshot times of the sup-norm of the difference, both interpolated onto
    the finest mesh. ``v_l2_gaps`` is the same with a discrete L2 norm of ``v``.
    """

    meshes: List[int]
    times: List[float]
    u_gaps: List[float]
    v_l2_gaps: List[float]
    per_time: List[List[float]] = field(default_factory=list)

    @property
    def non_increasing(self) -> bool:
        return all(b <= a for a, b in zip(self.u_gaps, self.u_gaps[1:]))

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.u_gaps, self.u_gaps[1:]))


def _on_fine_mesh(state: LayerState, grid, fine_x: np.ndarray):
    if isinstance(grid, Grid2D):
        X, Y = np.meshgrid(fine_x, fine_x)
        return bilinear_eval(state.u, grid, X, Y), bilinear_eval(state.v, grid, X, Y)
    return np.interp(fine_x, grid.x, state.u), np.interp(fine_x, grid.x, state.v)


def _state_at(traj: Trajectory, t: float) -> LayerState:
    for s in sorted(traj.states, key=lambda s: s.t):
        if s.t >= t:
            return s
    return traj.final


def refinement_study(scenario, meshes: Sequence[int], jobs: int = 1,
                     times: Optional[Sequence[float]] = None) -> ConvergenceReport:
    """Run ``scenario`` on every mesh in ``meshes`` and compare successive solutions.

    Every run uses the scenario's ``dt_init`` rescaled with ``dx`` (the ratio
    ``dt_init / dx`` of the given scenario is kept). Runs are independent and
    may be spread over ``jobs`` threads; results are gathered by mesh size.
    """
    from .scenarios import run_scenario, with_mesh

    meshes = sorted(int(m) for m in meshes)
    if len(meshes) < 3 or len(set(meshes)) != len(meshes):
        raise ValueError("a refinement study needs at least three distinct mesh sizes")
    times = list(scenario.snapshot_times if times is None else times) or [scenario.T]
    specs = [with_mesh(scenario, m) for m in meshes]

    def run(spec):
        return run_scenario(spec, keep_states=False, snapshot_times=times)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trajs = list(pool.map(run, specs))
    else:
        trajs = [run(s) for s in specs]
    fine_x = np.arange(meshes[-1] + 1) / meshes[-1]
    fields = []
    for traj in trajs:
        fields.append([_on_fine_mesh(_state_at(traj, t), traj.grid, fine_x) for t in times])
    h = 1.0 / meshes[-1]
    u_gaps, v_gaps, per_time = [], [], []
    for a, b in zip(fields, fields[1:]):
        du = [float(np.max(np.abs(ua - ub))) for (ua, _), (ub, _) in zip(a, b)]
        dv = [float(np.sqrt(np.sum((va - vb) ** 2) * h ** va.ndim)) for (_, va), (_, vb) in zip(a, b)]
        per_time.append(du)
        u_gaps.append(max(du))
        v_gaps.append(max(dv))
    return ConvergenceReport(meshes, [float(t) for t in times], u_gaps, v_gaps, per_time)
