"""Two-layer granular pile simulator: discrete schemes, continuum reference models and diagnostics."""
from .core import (
    Grid1D,
    Grid2D,
    LayerState,
    LayerState2D,
    PhysicalParams,
    Property,
    Trajectory,
    UsageError,
    piecewise_linear_eval,
    slopes_at,
)
from .diagnostics import (
    ConvergenceReport,
    check_max_principle,
    check_nonneg_and_monotone,
    check_slope_bound,
    refinement_study,
    run_checks,
    volume_series,
)
from .presets import PRESETS, build_preset
from .reference import CflFailure, GeyserReport, PdeModelKind, pde_step, run_pde
from .scenarios import ScenarioError, ScenarioSpec, geyser_probe, parse_scenario, render_scenario, run_scenario
from .scheme1d import NodeClass, StepFailure, advance, classify, run1d, try_step
from .scheme2d import run2d

__version__ = "0.1.0"
