import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from granpile.core import Grid1D, LayerState, cap_slopes  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def admissible_state(n, slopes, thickness, alpha=1.0):
    """Non-negative u with every edge slope within alpha and zero ends, plus v >= 0."""
    dx = 1.0 / n
    s = np.clip(np.asarray(slopes, dtype=float), -alpha, alpha)
    u = np.concatenate([[0.0], np.cumsum(s * dx)])
    # pull the right end back to zero without steepening: take the lower envelope with a descending ramp
    ramp = alpha * (1.0 - np.arange(n + 1) * dx)
    u = np.maximum(np.minimum(u, ramp), 0.0)
    u[0] = u[-1] = 0.0
    u = cap_slopes(u, dx, alpha)
    v = np.abs(np.asarray(thickness, dtype=float))
    v[0] = v[-1] = 0.0
    return LayerState(u, v)


@st.composite
def states(draw, min_n=3, max_n=24, max_v=0.05):
    n = draw(st.integers(min_n, max_n))
    sl = draw(st.lists(st.floats(-1.0, 1.0), min_size=n, max_size=n))
    th = draw(st.lists(st.floats(0.0, max_v), min_size=n + 1, max_size=n + 1))
    return admissible_state(n, sl, th)


@pytest.fixture
def grid8():
    return Grid1D(8)
