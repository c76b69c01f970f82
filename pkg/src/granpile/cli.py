"""Command-line driver.

Exit codes: 0 success, 1 usage or config error, 2 a run could not continue
(step failure or unstable continuum step), 3 a property check failed under
``--check``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import diagnostics, io
from .core import Grid2D, UsageError
from .presets import PRESETS, get_preset
from .reference import CflFailure, PdeModelKind, run_pde
from .scenarios import ScenarioError, geyser_probe, initial_state, parse_scenario, render_scenario, run_scenario
from .scheme1d import StepFailure

EXIT_OK, EXIT_USAGE, EXIT_RUN, EXIT_CHECK = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageExit(f"{self.prog}: error: {message}")


class _UsageExit(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="granpile", description="Two-layer granular pile simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out=True):
        p.add_argument("--config", required=True, type=Path, help="scenario file (key = value)")
        if out:
            p.add_argument("--out", type=Path, help="output directory")

    for name in ("run1d", "run2d"):
        p = sub.add_parser(name, help=f"run the {name[-2:]} discrete scheme")
        common(p)
        p.add_argument("--check", action="store_true", help="run property checkers; exit 3 on failure")
    p = sub.add_parser("compare", help="discrete scheme against a continuum model")
    common(p)
    p.add_argument("--model", choices=[k.value for k in PdeModelKind], default="original")
    p.add_argument("--check", action="store_true")
    p = sub.add_parser("geyser", help="probe a continuum model for a geyser")
    common(p)
    p.add_argument("--model", choices=[k.value for k in PdeModelKind], default="original")
    p = sub.add_parser("converge", help="mesh-refinement study")
    common(p)
    p.add_argument("--meshes", required=True, help="comma-separated mesh sizes, e.g. 50,100,200")
    p.add_argument("--jobs", type=int, default=1, help="meshes run concurrently")
    p = sub.add_parser("presets", help="list or describe initial-condition presets")
    p.add_argument("action", choices=["list", "describe"])
    p.add_argument("name", nargs="?")
    return parser


def _load(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_scenario(text)


def _report_checks(results) -> int:
    for r in results:
        print(r.line())
        if not r.passed:
            print(f"  worst {r.worst!r} at t={r.witness[0]!r}, node {r.witness[1]}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def _write_run(out: Path, spec, traj, verdicts) -> None:
    grid = traj.grid
    for t, state in traj.snapshots:
        tag = io.time_tag(t)
        if isinstance(grid, Grid2D):
            io.write_heightmap(out, tag, state, {"scheduled_t": t, "dx": grid.dx})
        else:
            io.write_snapshot(out / f"snapshot_{tag}.csv", state, grid.x)
    io.write_diagnostics(out / "diagnostics.csv", traj.series)
    io.write_manifest(out / "manifest.json", render_scenario(spec), verdicts, traj.dts,
                      {"scheme": traj.label, "snapshots": [[t, s.t] for t, s in traj.snapshots]})


def _cmd_run(args) -> int:
    spec = _load(args.config)
    want = args.command[-2:]
    if spec.kind != want:
        raise UsageError(f"{args.command} needs kind = {want}, config has kind = {spec.kind}")
    traj = run_scenario(spec, keep_states=args.check)
    verdicts = diagnostics.run_checks(traj) if args.check else []
    if args.out:
        _write_run(args.out, spec, traj, verdicts)
    fin = traj.final
    print(f"{traj.label}: n={spec.n} T={spec.T!r} steps={len(traj.dts)} "
          f"retries={sum(traj.series.retries)} max(u+v)={float(np.max(fin.total))!r}")
    return _report_checks(verdicts) if args.check else EXIT_OK


def _cmd_compare(args) -> int:
    spec = _load(args.config)
    if spec.kind != "1d":
        raise UsageError("compare works on 1d scenarios")
    kind = PdeModelKind(args.model)
    discrete = run_scenario(spec, keep_states=True)
    continuum = run_pde(initial_state(spec), kind, spec.params, spec.T, spec.pde_dt, spec.snapshot_times)
    ceiling = float(np.max(discrete.initial.total))
    print(f"initial max(u+v) = {ceiling!r}")
    for label, traj in (("scheme1d", discrete), (kind.value, continuum)):
        peak = max(float(np.max(s.total)) for s in traj.states)
        print(f"{label}: max over run of max(u+v) = {peak!r} (excess {peak - ceiling!r})")
    for (t, a), (_, b) in zip(discrete.snapshots, continuum.snapshots):
        print(f"t={t!r}: sup|u_scheme - u_{kind.value}| = {float(np.max(np.abs(a.u - b.u)))!r}")
    verdicts = diagnostics.run_checks(discrete) if args.check else []
    if args.out:
        _write_run(args.out / "scheme1d", spec, discrete, verdicts)
        _write_run(args.out / kind.value, spec, continuum, diagnostics.run_checks(continuum))
    return _report_checks(verdicts) if args.check else EXIT_OK


def _cmd_geyser(args) -> int:
    spec = _load(args.config)
    report = geyser_probe(spec, PdeModelKind(args.model))
    if report.detected:
        print(f"geyser: {report.kind} at x={report.location!r}, t={report.time!r}, "
              f"excess {report.magnitude!r} over {report.ceiling!r}")
    else:
        print(f"geyser: none under {report.kind} (largest excess {report.max_excess!r})")
    if report.rate_error is not None:
        print(f"growth rate at x_o={report.x_o!r}: measured {report.measured_rate!r}, "
              f"predicted {report.predicted_rate!r}, relative error {report.rate_error!r}")
    elif report.measured_rate is not None:
        print(f"growth rate at x_o={report.x_o!r}: measured {report.measured_rate!r}")
    if args.out:
        body = {k: getattr(report, k) for k in (
            "kind", "detected", "time", "location", "magnitude", "max_excess", "ceiling",
            "tolerance", "x_o", "predicted_rate", "measured_rate")}
        body["scenario"] = render_scenario(spec)
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"geyser_{report.kind}.json").write_text(
            json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_converge(args) -> int:
    spec = _load(args.config)
    try:
        meshes = [int(m) for m in args.meshes.split(",") if m.strip()]
    except ValueError:
        raise UsageError(f"--meshes must be comma-separated integers, got {args.meshes!r}") from None
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    try:
        report = diagnostics.refinement_study(spec, meshes, jobs=args.jobs)
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(str(exc)) from exc
    for a, b, g in zip(report.meshes, report.meshes[1:], report.u_gaps):
        print(f"n={a} -> n={b}: sup gap in u = {g!r}")
    print(f"gaps non-increasing: {report.non_increasing}")
    if args.out:
        io.write_report(args.out / "convergence.csv", report)
    return EXIT_OK


def _cmd_presets(args) -> int:
    if args.action == "list":
        for name in sorted(PRESETS):
            p = PRESETS[name]
            print(f"{name} ({p.dims}d): {p.summary}")
        return EXIT_OK
    if not args.name:
        raise UsageError("presets describe needs a preset name")
    p = get_preset(args.name)
    print(f"{p.name} ({p.dims}d): {p.summary}")
    for key, value in sorted(p.defaults.items()):
        print(f"  preset.{key} = {value!r}")
    return EXIT_OK


_COMMANDS = {
    "run1d": _cmd_run, "run2d": _cmd_run, "compare": _cmd_compare,
    "geyser": _cmd_geyser, "converge": _cmd_converge, "presets": _cmd_presets,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageExit as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_USAGE
    except (StepFailure, CflFailure) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    except (UsageError, io.OutputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
