"""Command-line scenario runner emitting plot-ready CSV artifacts.

Subcommands
-----------
run          density evolution: indicator series plus density snapshots
mc           ensemble cross-check of the same scenario (needs the mc block)
bifurcation  monsoon equilibrium scan
sweep        scenario grids: model-parameter points or monsoon albedo ramps
baseline     stationary nonlinear indicator table over a noise grid
check        admissibility report only

Shared flags: ``--config PATH`` (required), ``--out DIR`` (default ``./out``,
overridable via the ``TIPWARN_OUT`` environment variable), ``--jobs N``,
``--strict``, ``--seed U64``.  Exit codes: 0 success, 2 invalid config,
3 numerical or I/O failure, 4 admissibility failure in strict mode.

Identical configs (seed included) produce byte-identical artifacts.
Plotting stays out of the package; point any notebook or script at the CSVs
(``tools/`` in the repository holds non-contractual helpers).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    baseline_noise_grid,
    build_baseline_table,
    build_grid,
    build_initial,
    build_model,
    build_recorder,
    build_time_grid,
    builtin_monsoon_params,
    load_config,
    resolve_config,
)
from .drifts import StraightDrift
from .errors import AdmissibilityError, ConfigError, FitError, TipwarnError
from .export import (
    export_baseline,
    export_bifurcation,
    export_comparison,
    export_density,
    export_ensemble,
    export_json,
    export_series,
    export_table,
)
from .indicators import IndicatorSeries, build_baseline, fit_kappa_c
from .monsoon import MonsoonParams, scan_bifurcation, sweep_escape
from .montecarlo import EnsembleConfig, compare, sample_from_density, simulate
from .solver import AdmissibilityReport, check_admissibility, evolve

__all__ = ["build_parser", "main"]


def _slug(x: float) -> str:
    return f"{x:.10g}"


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


@dataclass(frozen=True)
class _RunArtifacts:
    series: IndicatorSeries
    report: AdmissibilityReport
    snapshots: list


def _gate_admissibility(cfg: dict, report: AdmissibilityReport) -> None:
    if report.peclet_ok and report.dt_ok:
        return
    detail = (f"Pe = {report.peclet:.4g} (bound 2), "
              f"dt = {report.dt:.4g} vs dx^2/D = {report.dt_bound:.4g}")
    if cfg["strict_admissibility"]:
        raise AdmissibilityError(f"discretization inadmissible: {detail}")
    print(f"warning: discretization inadmissible: {detail}", file=sys.stderr)


def _run_pipeline(cfg: dict, outdir: Path) -> _RunArtifacts:
    """The shared density pipeline behind ``run`` and ``mc``."""
    model = build_model(cfg)
    g = build_grid(cfg)
    tg = build_time_grid(cfg)
    report = check_admissibility(model, g, tg, cfg["noise"])
    _gate_admissibility(cfg, report)
    export_json(report.to_dict(), outdir / "admissibility.json", config=cfg)

    baseline = build_baseline_table(cfg)
    recorder = build_recorder(cfg, model, g, tg, baseline)
    initial = build_initial(cfg, model, g)
    series = evolve(model, g, tg, cfg["noise"], initial, recorder)

    if cfg["outputs"]["series"]:
        export_series(series, outdir / "series.csv", config=cfg)
    for t, state in recorder.snapshots:
        analytic = None
        if cfg["scenario"] == "straight":
            init = cfg["initial"]
            analytic = StraightDrift.analytic_density(
                g.nodes, t, t_start=tg.t_start, x0=init["center"],
                noise=cfg["noise"], initial_variance=init["sigma"] ** 2)
        export_density(state, g, t, outdir / f"density_t{_slug(t)}.csv",
                       analytic=analytic, config=cfg)
    return _RunArtifacts(series=series, report=report,
                         snapshots=recorder.snapshots)


def _cmd_run(cfg: dict, outdir: Path, ns) -> None:
    _run_pipeline(cfg, outdir)


def _cmd_mc(cfg: dict, outdir: Path, ns) -> None:
    if "mc" not in cfg:
        raise ConfigError("the mc subcommand needs an mc block in the config")
    arts = _run_pipeline(cfg, outdir)
    model, g, tg = build_model(cfg), build_grid(cfg), build_time_grid(cfg)
    mc = cfg["mc"]
    ecfg = EnsembleConfig(n_paths=mc["n_paths"], dt=mc["dt"], seed=mc["seed"],
                          absorb_low=mc["absorb"][0], absorb_high=mc["absorb"][1])
    rng = np.random.Generator(np.random.PCG64(ecfg.seed))
    positions = sample_from_density(build_initial(cfg, model, g), g,
                                    ecfg.n_paths, rng)
    summary = simulate(model, cfg["noise"], ecfg, positions, tg.t_start,
                       np.asarray(mc["sample_times"], dtype=float),
                       lag_dt=tg.dt, rng=rng)
    report = compare(arts.series, summary)
    export_ensemble(summary, outdir / "mc_summary.csv", config=cfg)
    export_comparison(report, outdir / "mc_compare.csv", config=cfg)
    if report.any_flagged:
        print(f"warning: {sum(r.flagged for r in report.rows)} comparison rows "
              f"beyond |z| = 3 (max {report.max_abs_z:.3g})", file=sys.stderr)


def _monsoon_params(cfg: dict) -> MonsoonParams:
    m = cfg.get("model", {})
    if "params" in m:
        return MonsoonParams.from_config(m["params"])
    return builtin_monsoon_params()


def _cmd_bifurcation(cfg: dict, outdir: Path, ns) -> None:
    block = cfg["outputs"].get("bifurcation")
    if block is None:
        raise ConfigError("the bifurcation subcommand needs outputs.bifurcation")
    q_grid = np.linspace(block["q_min"], block["q_max"], block["n"])
    curve = scan_bifurcation(_monsoon_params(cfg), q_grid)
    export_bifurcation(curve, outdir / "bifurcation.csv", config=cfg)


def _cmd_baseline(cfg: dict, outdir: Path, ns) -> None:
    spec = cfg["outputs"].get("baseline", {})
    d_grid = baseline_noise_grid(spec["d_grid"]) if "d_grid" in spec else None
    table = build_baseline(q0=spec.get("q0", 1.0), d_grid=d_grid)
    try:
        kappa_c = fit_kappa_c(table, spec.get("fit_window_max", 0.05))
    except FitError:
        kappa_c = None
    export_baseline(table, outdir / "baseline.csv", kappa_c=kappa_c, config=cfg)


def _cmd_check(cfg: dict, outdir: Path, ns) -> None:
    model, g, tg = build_model(cfg), build_grid(cfg), build_time_grid(cfg)
    report = check_admissibility(model, g, tg, cfg["noise"])
    export_json(report.to_dict(), outdir / "admissibility.json", config=cfg)
    for key, value in report.to_dict().items():
        print(f"{key}: {value}")
    _gate_admissibility(cfg, report)


# -- sweep -------------------------------------------------------------------


def _monsoon_sweep_task(args) -> tuple:
    cfg, path_spec, noise, outdir_name = args
    sweep = cfg["outputs"]["sweep"]
    g = cfg["grid"]
    ramp = (path_spec["label"], path_spec["a0"], path_spec["eps_per_decade"],
            path_spec["t_end_decades"])
    result = sweep_escape(
        _monsoon_params(cfg), [ramp], [noise],
        domain=(g["x_start"], g["x_end"]),
        dx_cap=sweep["dx_cap"], dt_cap=sweep["dt_cap"],
        max_rows=sweep["max_rows"],
    )[0]
    final, n_rows = math.nan, 0
    if result.series is not None:
        final = float(result.series.cumulative_escape[-1])
        n_rows = int(result.series.times.size)
        extra = (f"label: {result.label}", f"a0: {result.a0!r}",
                 f"eps_per_decade: {result.eps!r}", f"noise: {result.noise!r}",
                 f"fold_clamped_steps: {result.fold_clamped_steps}")
        name = f"sweep_{result.label}_d{_slug(noise)}.csv"
        export_series(result.series, Path(outdir_name) / name, config=cfg,
                      extra=extra)
    return (result.label, result.a0, result.eps, result.noise, result.t_end,
            final, result.fold_clamped_steps, n_rows, result.error or "")


def _point_sweep_task(args) -> tuple:
    cfg, point, outdir_name = args
    sub = {k: v for k, v in cfg.items() if k != "outputs"}
    sub["model"] = {**cfg.get("model", {}), **point.get("model", {})}
    if "noise" in point:
        sub["noise"] = point["noise"]
    if "time" in point:
        sub["time"] = point["time"]
    outputs = dict(cfg["outputs"])
    outputs.pop("sweep", None)
    outputs["series"] = False
    sub["outputs"] = outputs
    label = point["label"]
    try:
        subdir = Path(outdir_name) / f"point_{label}"
        arts = _run_pipeline(sub, subdir)
        series = arts.series
        export_series(series, Path(outdir_name) / f"sweep_{label}.csv",
                      config=sub, extra=(f"label: {label}",))
        return (label, sub["noise"], float(series.cumulative_escape[-1]),
                int(series.times.size), "")
    except TipwarnError as exc:
        return (label, sub["noise"], math.nan, 0, f"{type(exc).__name__}: {exc}")


def _cmd_sweep(cfg: dict, outdir: Path, ns) -> None:
    sweep = cfg["outputs"].get("sweep")
    if sweep is None:
        raise ConfigError("the sweep subcommand needs outputs.sweep")
    if "paths" in sweep:
        tasks = [(cfg, p, noise, str(outdir))
                 for p in sweep["paths"] for noise in sweep["noise_levels"]]
        rows = _map_tasks(_monsoon_sweep_task, tasks, ns.jobs)
        header = ("label, a0, eps_per_decade, noise, t_end, "
                  "final_cumulative_escape, fold_clamped_steps, rows, error")
    else:
        tasks = [(cfg, p, str(outdir)) for p in sweep["points"]]
        rows = _map_tasks(_point_sweep_task, tasks, ns.jobs)
        header = "label, noise, final_cumulative_escape, rows, error"
    export_table(outdir / "sweep_summary.csv", header, rows,
                 kind="sweep-summary", config=cfg)
    failures = [r for r in rows if r[-1]]
    for r in failures:
        print(f"warning: sweep point {r[0]} failed: {r[-1]}", file=sys.stderr)


def _map_tasks(fn, tasks, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


# -- entry point ---------------------------------------------------------------

_COMMANDS = {
    "run": _cmd_run,
    "mc": _cmd_mc,
    "bifurcation": _cmd_bifurcation,
    "sweep": _cmd_sweep,
    "baseline": _cmd_baseline,
    "check": _cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", required=True, metavar="PATH",
                        help="scenario config JSON")
    shared.add_argument("--out", default=os.environ.get("TIPWARN_OUT", "out"),
                        metavar="DIR", help="output directory (default ./out, "
                        "or $TIPWARN_OUT when set)")
    shared.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="parallel sweep points")
    shared.add_argument("--strict", action="store_true",
                        help="fail (exit 4) on inadmissible discretization")
    shared.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="override the config seed")
    parser = argparse.ArgumentParser(
        prog="tipwarn",
        description="Drifting-landscape density evolution, tipping indicators, "
                    "and escape-rate artifacts.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "density evolution, indicator series, density snapshots"),
        ("mc", "ensemble simulation and z-score comparison"),
        ("bifurcation", "monsoon equilibrium scan"),
        ("sweep", "run a grid of scenario points"),
        ("baseline", "stationary nonlinear indicator table"),
        ("check", "admissibility report only"),
    ):
        sub.add_parser(name, parents=[shared], help=help_text)
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    if ns.jobs < 1:
        _fail(f"--jobs must be >= 1, got {ns.jobs}")
        return 2
    try:
        raw = load_config(ns.config)
        cfg = resolve_config(raw, seed=ns.seed, strict=ns.strict)
        outdir = Path(ns.out)
        _COMMANDS[ns.command](cfg, outdir, ns)
    except AdmissibilityError as exc:
        _fail(str(exc))
        return 4
    except ConfigError as exc:
        _fail(str(exc))
        return 2
    except (TipwarnError, OSError) as exc:
        _fail(f"{type(exc).__name__}: {exc}")
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
