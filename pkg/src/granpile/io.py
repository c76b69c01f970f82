"""CSV and JSON writers and readers for runs.

Floats are written with ``repr`` (shortest round-trip decimal), so reading a
file back reproduces the node values exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .core import DiagnosticsSeries, LayerState, LayerState2D

FORMAT_VERSION = "granpile-1"


class OutputError(OSError):
    pass


def _r(x) -> str:
    return repr(float(x))


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _read(path: Path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def time_tag(t: float) -> str:
    """File-name friendly rendering of a time, e.g. ``0.5`` -> ``t0.5``."""
    return "t" + _r(t)


def write_snapshot(path, state: LayerState, x: np.ndarray) -> None:
    """1-D snapshot: header ``x,u,v`` then one row per node."""
    rows = ["x,u,v"] + [f"{_r(a)},{_r(b)},{_r(c)}" for a, b, c in zip(x, state.u, state.v)]
    _write(Path(path), "\n".join(rows) + "\n")


def read_snapshot(path, t: float = 0.0) -> Tuple[np.ndarray, LayerState]:
    lines = _read(Path(path)).splitlines()
    if not lines or lines[0] != "x,u,v":
        raise OutputError(f"{path}: not a 1-D snapshot (header {lines[:1]})")
    data = np.array([[float(c) for c in line.split(",")] for line in lines[1:]], dtype=float)
    return data[:, 0], LayerState(data[:, 1], data[:, 2], t)


def _heightmap_text(field: np.ndarray) -> str:
    return "\n".join(",".join(_r(a) for a in row) for row in field) + "\n"


def write_heightmap(directory, tag: str, state: LayerState2D, meta: Dict) -> List[Path]:
    """2-D snapshot: ``u_<tag>.csv`` and ``v_<tag>.csv`` (row k is y node k) plus ``<tag>.json``."""
    d = Path(directory)
    paths = [d / f"u_{tag}.csv", d / f"v_{tag}.csv", d / f"{tag}.json"]
    _write(paths[0], _heightmap_text(state.u))
    _write(paths[1], _heightmap_text(state.v))
    info = dict(meta, t=state.t, n=state.n, rows="y ascending", columns="x ascending")
    _write(paths[2], json.dumps(info, indent=2, sort_keys=True) + "\n")
    return paths


def read_heightmap(directory, tag: str) -> LayerState2D:
    d = Path(directory)
    meta = json.loads(_read(d / f"{tag}.json"))

    def load(name):
        text = _read(d / name)
        return np.array([[float(c) for c in line.split(",")] for line in text.splitlines()])

    return LayerState2D(load(f"u_{tag}.csv"), load(f"v_{tag}.csv"), meta["t"])


def write_diagnostics(path, series: DiagnosticsSeries) -> None:
    rows = [",".join(series.COLUMNS)]
    for row in series.rows():
        *floats, retries = row
        rows.append(",".join([_r(x) for x in floats] + [str(int(retries))]))
    _write(Path(path), "\n".join(rows) + "\n")


def read_diagnostics(path) -> DiagnosticsSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != DiagnosticsSeries.COLUMNS:
            raise OutputError(f"{path}: unexpected diagnostics header {reader.fieldnames}")
        series = DiagnosticsSeries()
        for rec in reader:
            for col in DiagnosticsSeries.COLUMNS:
                getattr(series, col).append(int(rec[col]) if col == "retries" else float(rec[col]))
    return series


def write_report(path, report) -> None:
    """Convergence report: one row per successive mesh pair."""
    rows = ["n_coarse,n_fine,u_sup_gap,v_l2_gap"]
    for a, b, gu, gv in zip(report.meshes, report.meshes[1:], report.u_gaps, report.v_l2_gaps):
        rows.append(f"{a},{b},{_r(gu)},{_r(gv)}")
    _write(Path(path), "\n".join(rows) + "\n")


def write_manifest(path, scenario_text: str, verdicts: Iterable, dts: Iterable[float],
                   extra: Dict = None) -> None:
    body = {
        "version": FORMAT_VERSION,
        "scenario": scenario_text,
        "verdicts": {c.name: c.passed for c in verdicts},
        "dts": [float(x) for x in dts],
    }
    if extra:
        body.update(extra)
    _write(Path(path), json.dumps(body, indent=2, sort_keys=True) + "\n")
