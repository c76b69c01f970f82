"""Named initial conditions.

The geyser profiles and the two scheme examples are reconstructions: the
shapes are described qualitatively in the literature, so each preset fixes a
concrete parameterisation here. Every preset samples continuous profiles on
the mesh, then nudges nodes down by a few ulps where a slope equal to the
critical value rounds above it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from .core import Grid1D, Grid2D, UsageError, cap_slopes


def _bump(s):
    """(1 - s^2)^3 on |s| < 1, zero outside; C^2 with curvature -6 at s = 0."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1, (1 - s * s) ** 3, 0.0)


def _interp(x, xs, ys):
    return np.interp(np.asarray(x, dtype=float), xs, ys)


@dataclass(frozen=True)
class Preset:
    name: str
    dims: int
    summary: str
    defaults: Mapping[str, float]
    build: Callable
    # Analytic curvature of u_0 at the geyser point, when the preset has one.
    curvature: Optional[Callable] = None
    window: Optional[Callable] = None

    def resolve(self, params: Optional[Mapping[str, float]] = None) -> Dict[str, float]:
        out = dict(self.defaults)
        for key, value in (params or {}).items():
            if key not in self.defaults:
                raise UsageError(
                    f"preset {self.name!r} has no parameter {key!r}; "
                    f"known: {', '.join(sorted(self.defaults))}"
                )
            out[key] = float(value)
        return out


# --- Cavity21: plateau of u + v over a smooth dip in u -------------------------

def _cavity21_profiles(p):
    C, xo, d, w, H, taper = p["C_o"], p["x_o"], p["depth"], p["half_width"], p["base"], p["taper"]
    if not (0.25 + 1e-12 < xo - w and xo + w < 0.75 - 1e-12):
        raise UsageError("cavity21: the dip must sit strictly inside [0.25, 0.75]")
    if not 0 < d < H:
        raise UsageError("cavity21: need 0 < depth < base")
    if H >= C:
        raise UsageError("cavity21: base height must stay below C_o")
    ramp = H / 0.2  # base rises on [0, 0.2] and falls on [0.8, 1]

    def u0(x):
        x = np.asarray(x, dtype=float)
        base = np.minimum(np.minimum(ramp * x, H), ramp * (1 - x))
        return base - d * _bump((x - xo) / w)

    def v0(x):
        x = np.asarray(x, dtype=float)
        plateau = C - u0(x)
        edge_lo, edge_hi = C - u0(0.25), C - u0(0.75)
        lo = _interp(x, [0.25 - taper, 0.25], [0.0, edge_lo])
        hi = _interp(x, [0.75, 0.75 + taper], [edge_hi, 0.0])
        return np.where(x < 0.25, np.where(x > 0.25 - taper, lo, 0.0),
                        np.where(x > 0.75, np.where(x < 0.75 + taper, hi, 0.0), plateau))

    return u0, v0


def _cavity21(grid, p):
    u0, v0 = _cavity21_profiles(p)
    x = grid.x
    u = u0(x)
    v = v0(x)
    on = (x >= 0.25) & (x <= 0.75)
    v = np.where(on, p["C_o"] - u, v)
    return u, v


def _cavity21_curvature(p):
    # base is flat at the dip; the dip contributes 6 d / w^2
    return 6.0 * p["depth"] / p["half_width"] ** 2


# --- Ledge22: the right part of a shallow cavity on a rising flank --------------

def _ledge22_geometry(p):
    xo, a, lip, slope_in, slope_out, h = (
        p["x_o"], p["curvature"] / 2, p["lip"], p["left_slope"], p["right_slope"], p["thickness"]
    )
    x_lip = xo - lip
    x_right = xo + slope_out / (2 * a)
    c = slope_in * x_lip - a * lip**2
    u_right = c + a * (x_right - xo) ** 2
    x_peak = p["peak"]
    u_peak = u_right + slope_out * (x_peak - x_right)
    return dict(a=a, x_lip=x_lip, x_right=x_right, c=c, u_right=u_right,
                x_peak=x_peak, u_peak=u_peak, h=h)


def _ledge22(grid, p):
    g = _ledge22_geometry(p)
    if not (0 < g["x_lip"] < p["x_o"] < g["x_right"] < g["x_peak"] < 1):
        raise UsageError("ledge22: geometry out of order; shrink curvature/right_slope")
    if g["u_peak"] / (1 - g["x_peak"]) > p["alpha_cap"]:
        raise UsageError("ledge22: far flank steeper than alpha_cap")
    x = grid.x
    a, xo = g["a"], p["x_o"]
    u = np.where(
        x <= g["x_lip"],
        p["left_slope"] * x,
        np.where(
            x <= g["x_right"],
            g["c"] + a * (x - xo) ** 2,
            np.where(
                x <= g["x_peak"],
                g["u_right"] + p["right_slope"] * (x - g["x_right"]),
                g["u_peak"] * (1 - x) / (1 - g["x_peak"]),
            ),
        ),
    )
    level = g["c"] + g["h"]
    fill = np.maximum(level - u, 0.0)
    v_lip = level - p["left_slope"] * g["x_lip"]
    taper = _interp(x, [g["x_lip"] - p["taper"], g["x_lip"]], [0.0, v_lip])
    v = np.where(x < g["x_lip"], np.where(x > g["x_lip"] - p["taper"], taper, 0.0),
                 np.where(x <= g["x_right"], fill, 0.0))
    return u, v


def _ledge22_window(grid, p):
    # the filled part of the ledge: the taper plus the pool up to where it meets the flank
    g = _ledge22_geometry(p)
    x = grid.x
    fill_end = p["x_o"] + np.sqrt(g["h"] / g["a"])
    return (x > g["x_lip"] - p["taper"]) & (x < fill_end)


def _ledge22_curvature(p):
    return p["curvature"]


# --- CriticalFoot: critical slope meeting a flat base ----------------------------

def _critical_foot(grid, p):
    xs, xp, alpha = p["x_star"], p["x_peak"], p["alpha"]
    h = alpha * (xp - xs)
    if not (0 < xs < xp < 1) or h / (1 - xp) > alpha:
        raise UsageError("critical_foot: need 0 < x_star < x_peak and a right flank no steeper than alpha")
    x = grid.x
    u = _interp(x, [0, xs, xp, 1], [0, 0, h, 0])
    v = p["thickness"] * _bump((x - p["v_center"]) / p["v_half_width"])
    return u, v


# --- Cavity71: hill whose left flank holds a V-shaped cavity ---------------------

def _cavity71(grid, p):
    xc, w, d, s, xp = p["x_cavity"], p["half_width"], p["depth"], p["flank_slope"], p["x_peak"]
    top = s * xp
    x = grid.x
    u = _interp(x, [0, xp, 1], [0, top, 0]) - d * np.maximum(0.0, 1 - np.abs(x - xc) / w)
    v = p["thickness"] * _bump((x - p["v_center"]) / p["v_half_width"])
    return u, v


# --- CriticalLeft72: gentle left slope that steepens -----------------------------

def _critical_left72(grid, p):
    xp, s = p["x_peak"], p["left_slope"]
    top = s * xp
    x = grid.x
    u = _interp(x, [0, xp, 1], [0, top, 0])
    v = p["thickness"] * _bump((x - p["v_center"]) / p["v_half_width"])
    return u, v


def _wedge(grid, p):
    x = grid.x
    u = _interp(x, [0, p["x_peak"], 1], [0, p["height"], 0])
    v = p["thickness"] * _bump((x - p["x_peak"]) / p["v_half_width"])
    return u, v


def _flat_with_heap(grid, p):
    x = grid.x
    u = np.zeros_like(x)
    v = p["height"] * _bump((x - p["center"]) / p["half_width"])
    return u, v


def _cone2d(grid, p):
    n = grid.n
    if n % 2:
        raise UsageError("cone2d needs an even n so the apex is a node")
    # integer offsets keep the sampling exactly symmetric under the square's symmetries
    off = np.arange(n + 1) - n // 2
    r = grid.dx * np.sqrt(off[:, None] ** 2 + off[None, :] ** 2)
    u = p["slope"] * np.maximum(0.0, p["radius"] - r)
    v = p["thickness"] * np.maximum(0.0, 1 - r / p["v_radius"])
    return u, v


PRESETS: Dict[str, Preset] = {}


def _register(preset: Preset) -> None:
    PRESETS[preset.name] = preset


_register(Preset(
    "cavity21", 1,
    "u+v = C_o on [0.25, 0.75] over a smooth dip of u at x_o (geyser in a cavity)",
    dict(C_o=1.0, x_o=0.5, depth=0.05, half_width=0.15, base=0.15, taper=0.1),
    _cavity21, curvature=_cavity21_curvature,
    window=lambda grid, p: (grid.x > 0.25 - p["taper"]) & (grid.x < 0.75 + p["taper"]),
))
_register(Preset(
    "ledge22", 1,
    "thin rolling layer filling a ledge (right part of a cavity) on a rising flank",
    dict(x_o=0.4, curvature=20.0, lip=0.01, left_slope=0.5, right_slope=0.8,
         peak=0.6, thickness=0.004, taper=0.02, alpha_cap=1.0),
    _ledge22, curvature=_ledge22_curvature, window=_ledge22_window,
))
_register(Preset(
    "critical_foot", 1,
    "slope at the critical value rising from a flat base at x_star, rolling layer on it",
    dict(x_star=0.3, x_peak=0.6, alpha=1.0, thickness=0.03, v_center=0.5, v_half_width=0.08),
    _critical_foot,
))
_register(Preset(
    "cavity71", 1,
    "hill with a V-shaped cavity at x = 0.3 on its left flank, rolling layer near the top",
    dict(x_cavity=0.3, half_width=0.04, depth=0.02, flank_slope=0.3, x_peak=0.64,
         thickness=0.02, v_center=0.48, v_half_width=0.08),
    _cavity71,
))
_register(Preset(
    "critical_left72", 1,
    "hill with a gentle left slope under a rolling layer; the slope steepens",
    dict(x_peak=0.6, left_slope=0.5, thickness=0.03, v_center=0.45, v_half_width=0.15),
    _critical_left72,
))
_register(Preset(
    "wedge", 1,
    "symmetric tent with a rolling cap on its peak",
    dict(x_peak=0.5, height=0.25, thickness=0.02, v_half_width=0.15),
    _wedge,
))
_register(Preset(
    "flat_with_heap", 1,
    "no standing layer, a smooth heap of rolling matter",
    dict(center=0.5, half_width=0.2, height=0.05),
    _flat_with_heap,
))
_register(Preset(
    "cone2d", 2,
    "standing cone centred in the square with a cap of rolling matter",
    dict(slope=0.5, radius=0.3, thickness=0.03, v_radius=0.2),
    _cone2d,
))


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise UsageError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None


def build_preset(name: str, grid, params: Optional[Mapping[str, float]] = None,
                 alpha: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Nodal ``(u_0, v_0)`` for a preset on ``grid``.

    1-D presets on a :class:`Grid2D` are extruded along y (rows identical).
    """
    preset = get_preset(name)
    p = preset.resolve(params)
    if preset.dims == 2 and not isinstance(grid, Grid2D):
        raise UsageError(f"preset {name!r} is two-dimensional")
    if isinstance(grid, Grid2D) and preset.dims == 1:
        u1, v1 = build_preset(name, Grid1D(grid.n), params, alpha)
        u, v = np.tile(u1, (grid.n + 1, 1)), np.tile(v1, (grid.n + 1, 1))
        if not grid.periodic_y:
            u[0, :] = u[-1, :] = v[0, :] = v[-1, :] = 0.0
        return u, v
    u, v = preset.build(grid, p)
    u = cap_slopes(np.maximum(u, 0.0), grid.dx, alpha)
    v = np.maximum(v, 0.0)
    for arr in (u, v):
        if arr.ndim == 1:
            arr[0] = arr[-1] = 0.0
        else:
            arr[0, :] = arr[-1, :] = arr[:, 0] = arr[:, -1] = 0.0
    return u, v
