"""Scenario configuration: the key=value schema, validation and dispatch to a scheme.

A config file is a list of ``key = value`` lines; ``#`` starts a comment.
Keys (all optional unless marked):

==================  =====================================================
kind                ``1d`` (default) or ``2d``
grid.n              number of intervals per axis (required)
grid.y_boundary     ``zero`` (default) or ``periodic`` (2-D only)
time.T              horizon, default 4.0
time.dt_init        first trial step, default ``0.5 * dx``
time.dt_min         smallest step before giving up, default ``dt_init * 2**-20``
params.alpha        critical slope, default 1.0
params.beta         transport coefficient, default 0.5
params.gamma        conversion rate, default 1.0
init.preset         preset name (see ``granpile presets list``)
preset.<name>       override one preset parameter
init.u0, init.v0    breakpoints ``x:value, x:value, ...`` (instead of a preset)
snapshots.times     comma-separated times, default ``0.5, 1, 2, 3, 4`` up to T
pde.dt              step for the continuum models, default model-dependent
==================  =====================================================
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import Grid1D, Grid2D, LayerState, LayerState2D, PhysicalParams, UsageError
from .presets import build_preset, get_preset

DEFAULT_T = 4.0
DEFAULT_SNAPSHOTS = (0.5, 1.0, 2.0, 3.0, 4.0)

Points = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class Diagnostic:
    message: str
    key: Optional[str] = None
    line: Optional[int] = None
    column: Optional[int] = None
    constraint: Optional[str] = None

    def __str__(self) -> str:
        where = f"line {self.line}, column {self.column}: " if self.line is not None else ""
        tag = f" [{self.constraint}]" if self.constraint else ""
        return f"{where}{self.message}{tag}"


class ScenarioError(UsageError):
    """Config could not be parsed or validated; ``diagnostics`` lists every problem found."""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    n: int
    T: float
    params: PhysicalParams
    dt_init: float
    dt_min: float
    snapshot_times: Tuple[float, ...]
    preset: Optional[str] = None
    preset_params: Tuple[Tuple[str, float], ...] = ()
    u0_points: Optional[Points] = None
    v0_points: Optional[Points] = None
    y_boundary: str = "zero"
    pde_dt: Optional[float] = None

    @property
    def grid(self):
        if self.kind == "2d":
            return Grid2D(self.n, periodic_y=self.y_boundary == "periodic")
        return Grid1D(self.n)


_SCALARS = {
    "kind", "grid.n", "grid.y_boundary", "time.T", "time.dt_init", "time.dt_min",
    "params.alpha", "params.beta", "params.gamma", "init.preset", "init.u0", "init.v0",
    "snapshots.times", "pde.dt",
}


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _points(text: str) -> Points:
    out = []
    for item in text.split(","):
        x, sep, y = item.partition(":")
        if not sep:
            raise ValueError(f"breakpoint {item.strip()!r} is not x:value")
        out.append((_float(x), _float(y)))
    xs = [p[0] for p in out]
    if xs[0] != 0.0 or xs[-1] != 1.0 or any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("breakpoint x values must increase from 0 to 1")
    return tuple(out)


def _read_lines(text: str):
    entries: Dict[str, Tuple[str, int, int]] = {}
    problems: List[Diagnostic] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            problems.append(Diagnostic("expected 'key = value'", None, lineno, col, "syntax"))
            continue
        key, _, value = line.partition("=")
        col = len(key) - len(key.lstrip()) + 1
        key = key.strip()
        if not key:
            problems.append(Diagnostic("missing key before '='", None, lineno, col, "syntax"))
            continue
        if key in entries:
            problems.append(Diagnostic(f"duplicate key {key!r}", key, lineno, col, "syntax"))
            continue
        entries[key] = (value.strip(), lineno, col)
    return entries, problems


def parse_scenario(text: str) -> ScenarioSpec:
    """Parse and validate a config; raises :class:`ScenarioError` listing every problem."""
    entries, problems = _read_lines(text)
    values: Dict[str, object] = {}
    preset_over: Dict[str, float] = {}

    def bad(key, message, constraint="value"):
        _, line, col = entries[key]
        problems.append(Diagnostic(message, key, line, col, constraint))

    for key, (raw, line, col) in entries.items():
        if key.startswith("preset."):
            try:
                preset_over[key[len("preset."):]] = _float(raw)
            except ValueError as exc:
                bad(key, f"{key}: {exc}")
            continue
        if key not in _SCALARS:
            problems.append(Diagnostic(f"unknown key {key!r}", key, line, col, "unknown-key"))
            continue
        try:
            if key == "grid.n":
                if not raw.isdigit():
                    raise ValueError(f"{raw!r} is not a positive integer")
                values[key] = int(raw)
            elif key in ("kind", "grid.y_boundary", "init.preset"):
                values[key] = raw
            elif key in ("init.u0", "init.v0"):
                values[key] = _points(raw)
            elif key == "snapshots.times":
                values[key] = tuple(sorted(_float(t) for t in raw.split(",") if t.strip()))
            else:
                values[key] = _float(raw)
        except ValueError as exc:
            bad(key, f"{key}: {exc}")

    if problems:
        raise ScenarioError(problems)
    spec = _assemble(values, preset_over, entries, problems)
    if problems:
        raise ScenarioError(problems)
    return spec


def _assemble(values, preset_over, entries, problems) -> Optional[ScenarioSpec]:
    def fail(message, key=None, constraint="value"):
        line, col = (entries[key][1], entries[key][2]) if key in entries else (None, None)
        problems.append(Diagnostic(message, key, line, col, constraint))

    kind = values.get("kind", "1d")
    if kind not in ("1d", "2d"):
        fail(f"kind must be 1d or 2d, got {kind!r}", "kind")
    if "grid.n" not in values:
        fail("grid.n is required", "grid.n", "required")
        return None
    n = values["grid.n"]
    if n < 2:
        fail("grid.n must be at least 2", "grid.n")
    y_boundary = values.get("grid.y_boundary", "zero")
    if y_boundary not in ("zero", "periodic"):
        fail("grid.y_boundary must be zero or periodic", "grid.y_boundary")
    if "grid.y_boundary" in values and kind != "2d":
        fail("grid.y_boundary only applies to 2d", "grid.y_boundary")
    T = values.get("time.T", DEFAULT_T)
    if not T > 0:
        fail("time.T must be > 0", "time.T")
    dt_init = values.get("time.dt_init", 0.5 / max(n, 1))
    if not dt_init > 0:
        fail("time.dt_init must be > 0", "time.dt_init")
    dt_min = values.get("time.dt_min", dt_init * 2.0**-20)
    if not 0 < dt_min <= dt_init:
        fail("time.dt_min must satisfy 0 < dt_min <= dt_init", "time.dt_min")
    pde_dt = values.get("pde.dt")
    if pde_dt is not None and not pde_dt > 0:
        fail("pde.dt must be > 0", "pde.dt")
    try:
        params = PhysicalParams(
            values.get("params.alpha", 1.0), values.get("params.beta", 0.5), values.get("params.gamma", 1.0)
        )
    except UsageError as exc:
        fail(str(exc), None, "params")
        return None
    times = values.get("snapshots.times")
    if times is None:
        times = tuple(t for t in DEFAULT_SNAPSHOTS if t <= T)
    elif any(t < 0 or t > T for t in times):
        fail("snapshot times must lie in [0, T]", "snapshots.times")

    preset = values.get("init.preset")
    u0, v0 = values.get("init.u0"), values.get("init.v0")
    resolved: Tuple[Tuple[str, float], ...] = ()
    if preset is not None:
        if u0 is not None or v0 is not None:
            fail("give either init.preset or init.u0/init.v0, not both", "init.preset")
        try:
            p = get_preset(preset)
            resolved = tuple(sorted(p.resolve(preset_over).items()))
            if p.dims == 2 and kind != "2d":
                fail(f"preset {preset!r} needs kind = 2d", "init.preset")
        except UsageError as exc:
            fail(str(exc), "init.preset")
    else:
        if preset_over:
            fail("preset.* keys need init.preset", None, "required")
        if u0 is None or v0 is None:
            fail("initial data needs init.preset or both init.u0 and init.v0", None, "required")
    if problems:
        return None
    spec = ScenarioSpec(kind, n, T, params, dt_init, dt_min, tuple(times), preset, resolved,
                        u0, v0, y_boundary, pde_dt)
    try:
        initial_state(spec)
    except ScenarioError as exc:
        problems.extend(exc.diagnostics)
    except UsageError as exc:
        problems.append(Diagnostic(str(exc), "init.preset", constraint="preset"))
    return spec


def _fmt(x: float) -> str:
    return repr(float(x))


def render_scenario(spec: ScenarioSpec) -> str:
    """Canonical text of a fully resolved spec; ``parse_scenario`` inverts it exactly."""
    lines = [f"kind = {spec.kind}", f"grid.n = {spec.n}"]
    if spec.kind == "2d":
        lines.append(f"grid.y_boundary = {spec.y_boundary}")
    lines += [
        f"time.T = {_fmt(spec.T)}",
        f"time.dt_init = {_fmt(spec.dt_init)}",
        f"time.dt_min = {_fmt(spec.dt_min)}",
        f"params.alpha = {_fmt(spec.params.alpha)}",
        f"params.beta = {_fmt(spec.params.beta)}",
        f"params.gamma = {_fmt(spec.params.gamma)}",
    ]
    if spec.pde_dt is not None:
        lines.append(f"pde.dt = {_fmt(spec.pde_dt)}")
    lines.append("snapshots.times = " + ", ".join(_fmt(t) for t in spec.snapshot_times))
    if spec.preset is not None:
        lines.append(f"init.preset = {spec.preset}")
        lines += [f"preset.{k} = {_fmt(v)}" for k, v in spec.preset_params]
    else:
        for key, pts in (("init.u0", spec.u0_points), ("init.v0", spec.v0_points)):
            lines.append(f"{key} = " + ", ".join(f"{_fmt(x)}:{_fmt(y)}" for x, y in pts))
    return "\n".join(lines) + "\n"


def initial_state(spec: ScenarioSpec):
    """Sample the initial data on the scenario's mesh and check it is admissible."""
    grid = spec.grid
    if spec.preset is not None:
        u, v = build_preset(spec.preset, grid, dict(spec.preset_params), spec.params.alpha)
    else:
        u = np.interp(grid.x, *zip(*spec.u0_points))
        v = np.interp(grid.x, *zip(*spec.v0_points))
        if isinstance(grid, Grid2D):
            u = np.tile(u, (grid.n + 1, 1))
            v = np.tile(v, (grid.n + 1, 1))
            if not grid.periodic_y:
                u[[0, -1], :] = v[[0, -1], :] = 0.0
    problems = []
    if np.any(u < 0) or np.any(v < 0):
        problems.append(Diagnostic("initial u and v must be non-negative", constraint="initial-nonnegativity"))
    ends = u[..., [0, -1]], v[..., [0, -1]]
    if isinstance(grid, Grid2D) and not grid.periodic_y:
        ends += (u[[0, -1], :], v[[0, -1], :])
    if any(np.any(e != 0) for e in ends):
        problems.append(Diagnostic("initial data must vanish on the boundary", constraint="boundary-zero"))
    if isinstance(grid, Grid2D):
        from .scheme2d import edge_slopes_2d

        slopes = edge_slopes_2d(u, grid)
    else:
        slopes = [np.diff(u) / grid.dx]
    worst = max(float(np.max(np.abs(s))) for s in slopes)
    if worst > spec.params.alpha:
        problems.append(Diagnostic(
            f"initial slope {worst:.6g} exceeds alpha = {spec.params.alpha}",
            constraint="initial-slope-bound"))
    if problems:
        raise ScenarioError(problems)
    if isinstance(grid, Grid2D):
        return LayerState2D(u, v, 0.0)
    return LayerState(u, v, 0.0)


def with_mesh(spec: ScenarioSpec, n: int) -> ScenarioSpec:
    """Same scenario on ``n`` intervals, with both steps rescaled by the mesh ratio."""
    ratio = spec.n / n
    return dataclasses.replace(
        spec, n=int(n), dt_init=spec.dt_init * ratio, dt_min=spec.dt_min * ratio,
        pde_dt=None if spec.pde_dt is None else spec.pde_dt * ratio,
    )


def run_scenario(spec: ScenarioSpec, keep_states: bool = True, snapshot_times=None, **kwargs):
    """Run the discrete scheme that matches ``spec.kind``."""
    from .scheme1d import run1d
    from .scheme2d import run2d

    initial = initial_state(spec)
    times = spec.snapshot_times if snapshot_times is None else snapshot_times
    if spec.kind == "2d":
        return run2d(initial, spec.params, spec.T, spec.dt_init, spec.dt_min, times,
                     keep_states, grid=spec.grid, **kwargs)
    return run1d(initial, spec.params, spec.T, spec.dt_init, spec.dt_min, times, keep_states, **kwargs)


def geyser_probe(spec: ScenarioSpec, kind, params: Optional[PhysicalParams] = None,
                 tolerance: float = 1e-10, stop_on_detect: bool = False):
    """Probe a continuum model on a scenario's initial data.

    The preset supplies the geyser point ``x_o``, the analytic curvature there
    and the watched window when it defines them.
    """
    from .reference import probe_geyser

    if spec.kind != "1d":
        raise UsageError("the continuum models are one-dimensional")
    params = spec.params if params is None else params
    initial = initial_state(spec)
    x_o = curvature = window = None
    if spec.preset is not None:
        preset = get_preset(spec.preset)
        p = dict(spec.preset_params)
        x_o = p.get("x_o")
        if preset.curvature is not None:
            curvature = preset.curvature(p)
        if preset.window is not None:
            window = preset.window(spec.grid, p)
    return probe_geyser(initial, kind, params, spec.T, x_o, curvature, window, spec.pde_dt,
                        tolerance, stop_on_detect)
