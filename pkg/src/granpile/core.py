"""Mesh descriptors, layer containers and one-sided slopes shared by every scheme."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np


class UsageError(ValueError):
    """Raised when an operation is called outside its domain (bad index, bad coordinate)."""


class Property(str, enum.Enum):
    MAX_PRINCIPLE = "MaxPrinciple"
    CRITICAL_SLOPE = "CriticalSlope"
    NONNEGATIVITY = "Nonnegativity"


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh of [0, 1] with ``n`` intervals; nodes ``x_i = i * dx``."""

    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise UsageError(f"grid needs an integer n >= 2, got {self.n!r}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dx

    def index_of(self, x: float) -> int:
        """Nearest node index to coordinate ``x``."""
        if not 0.0 <= x <= 1.0:
            raise UsageError(f"coordinate {x} outside [0, 1]")
        return int(round(x * self.n))


@dataclass(frozen=True)
class Grid2D:
    """Square n x n mesh of the unit square (dx == dy).

    Arrays are indexed ``[k, i]``: row ``k`` is the y node, column ``i`` the x node.
    ``periodic_y`` wraps the y neighbours instead of pinning the y edges; it exists
    to embed y-invariant (1-D) data and is not a physical boundary condition.
    """

    n: int
    periodic_y: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise UsageError(f"grid needs an integer n >= 2, got {self.n!r}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    dy = dx

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dx

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n + 1, self.n + 1)

    def active_mask(self) -> np.ndarray:
        """Nodes that evolve; everything else is pinned to zero."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[:, 1:-1] = True
        if not self.periodic_y:
            mask[0, :] = False
            mask[-1, :] = False
        return mask


@dataclass(frozen=True)
class PhysicalParams:
    alpha: float = 1.0  # critical slope
    beta: float = 0.5  # rolling transport coefficient
    gamma: float = 1.0  # conversion rate

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise UsageError(f"{name} must be finite, got {value}")
        if self.alpha <= 0:
            raise UsageError(f"alpha must be > 0, got {self.alpha}")
        if self.gamma <= 0:
            raise UsageError(f"gamma must be > 0, got {self.gamma}")
        if self.beta < 0:
            raise UsageError(f"beta must be >= 0, got {self.beta}")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LayerState:
    """Standing (``u``) and rolling (``v``) node values at time ``t``.

    Arrays are copied and made read-only. Construction does not validate the
    physical invariants: rejected candidates from the step controller are
    LayerStates too. Use :func:`state_violations` to inspect them.
    """

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        u, v = _frozen(self.u), _frozen(self.v)
        if u.shape != v.shape:
            raise UsageError(f"u and v shapes differ: {u.shape} vs {v.shape}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.u.shape[-1] - 1

    @property
    def total(self) -> np.ndarray:
        return self.u + self.v

    def replace(self, u=None, v=None, t=None) -> "LayerState":
        return type(self)(
            self.u if u is None else u,
            self.v if v is None else v,
            self.t if t is None else t,
        )

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return (
            self.t == other.t
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
        )

    __hash__ = None


class LayerState2D(LayerState):
    """2-D variant; ``u`` and ``v`` are (n+1, n+1) arrays indexed ``[k, i]``."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.u.ndim != 2 or self.u.shape[0] != self.u.shape[1]:
            raise UsageError(f"2-D state needs square arrays, got {self.u.shape}")


@dataclass(frozen=True)
class SlopePair:
    left: float  # (u[i] - u[i-1]) / dx
    right: float  # (u[i+1] - u[i]) / dx


def slopes_at(state: LayerState, grid: Grid1D, i: int) -> SlopePair:
    """One-sided difference quotients at interior node ``i``."""
    if not 1 <= i <= grid.n - 1:
        raise UsageError(f"slopes are defined at interior nodes 1..{grid.n - 1}, got {i}")
    u = state.u
    left = (u[i - 1] - u[i]) / (-grid.dx)
    right = (u[i + 1] - u[i]) / grid.dx
    return SlopePair(float(left), float(right))


def one_sided_slopes(u: np.ndarray, dx: float) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`slopes_at` for all interior nodes of a 1-D array.

    Returns ``(left, right)``, each of length ``n - 1``; entry ``j`` belongs to node ``j + 1``.
    Bit-identical to the scalar version.
    """
    u = np.asarray(u, dtype=float)
    left = (u[:-2] - u[1:-1]) / (-dx)
    right = (u[2:] - u[1:-1]) / dx
    return left, right


def edge_slopes(u: np.ndarray, dx: float) -> List[np.ndarray]:
    """Difference quotients across every mesh edge, one array per axis."""
    u = np.asarray(u, dtype=float)
    return [np.diff(u, axis=ax) / dx for ax in range(u.ndim)]


def max_abs_slope(u: np.ndarray, dx: float) -> float:
    return max(float(np.max(np.abs(s))) if s.size else 0.0 for s in edge_slopes(u, dx))


def piecewise_linear_eval(
    state: LayerState, grid: Grid1D, x
) -> Tuple[np.ndarray, np.ndarray]:
    """Linear interpolation of ``u`` and ``v`` at ``x`` (scalar or array); exact at nodes."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0.0) or np.any(xs > 1.0) or not np.all(np.isfinite(xs)):
        raise UsageError("evaluation points must lie in [0, 1]")
    nodes = grid.x
    u = np.interp(xs, nodes, state.u)
    v = np.interp(xs, nodes, state.v)
    if xs.ndim == 0:
        return float(u), float(v)
    return u, v


def bilinear_eval(field2d: np.ndarray, grid: Grid2D, x, y) -> np.ndarray:
    """Bilinear interpolation of a nodal 2-D field; used for export only."""
    xs, ys = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    if np.any((xs < 0) | (xs > 1) | (ys < 0) | (ys > 1)):
        raise UsageError("evaluation points must lie in the unit square")
    n = grid.n
    fx, fy = xs * n, ys * n
    i0 = np.clip(np.floor(fx).astype(int), 0, n - 1)
    k0 = np.clip(np.floor(fy).astype(int), 0, n - 1)
    sx, sy = fx - i0, fy - k0
    f = np.asarray(field2d, float)
    return (
        f[k0, i0] * (1 - sx) * (1 - sy)
        + f[k0, i0 + 1] * sx * (1 - sy)
        + f[k0 + 1, i0] * (1 - sx) * sy
        + f[k0 + 1, i0 + 1] * sx * sy
    )


def state_violations(
    state: LayerState, alpha: float, dx: float, ceiling: Optional[float] = None
) -> List[Property]:
    """Which invariants ``state`` breaks. Comparisons are exact; NaN counts as a violation."""
    found = []
    if ceiling is not None and not np.all(state.total <= ceiling):
        found.append(Property.MAX_PRINCIPLE)
    if not all(np.all(np.abs(s) <= alpha) for s in edge_slopes(state.u, dx)):
        found.append(Property.CRITICAL_SLOPE)
    if not (np.all(state.u >= 0) and np.all(state.v >= 0)):
        found.append(Property.NONNEGATIVITY)
    return found


def cap_slopes(u: np.ndarray, dx: float, alpha: float, max_sweeps: int = 64) -> np.ndarray:
    """Lower nodes by a few ulps so every floating-point edge slope is <= alpha.

    Sampled profiles with a slope of exactly ``alpha`` can round to slightly
    above it. Only ever lowers values, and never below zero.
    """
    out = np.array(u, dtype=float, copy=True)
    for _ in range(max_sweeps):
        changed = False
        for s, axis in zip(edge_slopes(out, dx), range(out.ndim)):
            bad = np.argwhere(np.abs(s) > alpha)
            for idx in bad:
                lo = tuple(idx)
                hi = list(idx)
                hi[axis] += 1
                hi = tuple(hi)
                top = hi if out[hi] > out[lo] else lo
                out[top] = max(np.nextafter(out[top], -np.inf), 0.0)
                changed = True
        if not changed:
            return out
    raise UsageError("could not bring sampled slopes under the critical value")


@dataclass
class DiagnosticsSeries:
    """One row per accepted state (the initial state included, with dt = 0)."""

    t: List[float] = field(default_factory=list)
    max_uv: List[float] = field(default_factory=list)
    max_slope: List[float] = field(default_factory=list)
    min_u: List[float] = field(default_factory=list)
    min_v: List[float] = field(default_factory=list)
    volume: List[float] = field(default_factory=list)
    dt: List[float] = field(default_factory=list)
    retries: List[int] = field(default_factory=list)

    COLUMNS = ("t", "max_uv", "max_slope", "min_u", "min_v", "volume", "dt", "retries")

    def record(self, state: LayerState, dx: float, dt: float = 0.0, retries: int = 0) -> None:
        self.t.append(state.t)
        self.max_uv.append(float(np.max(state.total)))
        self.max_slope.append(max_abs_slope(state.u, dx))
        self.min_u.append(float(np.min(state.u)))
        self.min_v.append(float(np.min(state.v)))
        self.volume.append(volume(state, dx))
        self.dt.append(float(dt))
        self.retries.append(int(retries))

    def __len__(self) -> int:
        return len(self.t)

    def rows(self):
        return zip(*(getattr(self, c) for c in self.COLUMNS))


def volume(state: LayerState, dx: float) -> float:
    """Trapezoid quadrature of u + v over the domain."""
    total = state.total
    for _ in range(total.ndim):
        total = np.trapezoid(total, dx=dx, axis=-1)
    return float(total)


@dataclass
class Trajectory:
    """Result of a run.

    ``states`` holds every accepted state when the run kept them, otherwise the
    snapshots only (initial state always first). ``exact`` marks discrete-scheme
    runs whose invariants are compared without tolerance.
    """

    grid: object
    params: PhysicalParams
    states: List[LayerState]
    snapshots: List[Tuple[float, LayerState]]
    series: DiagnosticsSeries
    exact: bool = True
    label: str = "scheme1d"

    @property
    def initial(self) -> LayerState:
        return self.states[0]

    @property
    def final(self) -> LayerState:
        return self.states[-1]

    @property
    def dts(self) -> List[float]:
        return self.series.dt[1:]

