"""Plot-ready CSV artifacts with config-stamped headers, written atomically.

Every file starts with a ``#``-prefixed comment block carrying the artifact
version, the sha256 of the resolved config, and the resolved config itself
in canonical JSON, so each artifact is self-describing.  Numbers are written
with ``repr`` (full round-trip precision), missing values as empty fields,
UTF-8, LF line endings.  Writes go through a temp file plus rename so
readers never observe a partial artifact.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .config import ARTIFACT_VERSION, canonical_json, config_hash
from .errors import StructuralError
from .grids import DensityState, SpatialGrid, trapezoid_mass
from .indicators import BaselineTable, IndicatorSeries
from .monsoon import BifurcationCurve, MonsoonSweepResult
from .montecarlo import ComparisonReport, EnsembleSummary

__all__ = [
    "SERIES_HEADER",
    "format_value",
    "atomic_write_text",
    "header_block",
    "export_table",
    "export_series",
    "read_series",
    "export_density",
    "export_ensemble",
    "export_comparison",
    "export_bifurcation",
    "export_baseline",
    "export_sweep_summary",
    "export_json",
]

# Column contract for indicator-series CSV; order is load-bearing.
SERIES_HEADER = ("t, variance, lag1, lag1_per_unit_time, decay_rate, "
                 "escape_rate, survival, cumulative_escape, kramers_rate, "
                 "qs_lin_kappa, qs_lin_a, qs_lin_v, qs_nl_kappa, qs_nl_v")

_SERIES_FIELDS = (
    "times", "variance", "lag1", "lag1_per_unit_time", "decay_rate",
    "escape_rate", "survival", "cumulative_escape", "kramers_rate",
    "qs_lin_kappa", "qs_lin_a", "qs_lin_v", "qs_nl_kappa", "qs_nl_v",
)


def format_value(x) -> str:
    """One CSV cell: repr for floats, empty for missing, str otherwise."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def atomic_write_text(path, text: str) -> Path:
    """Write UTF-8 text via temp file + rename; creates parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def header_block(kind: str, config: dict | None, extra=()) -> list[str]:
    """Comment lines stamped on every artifact."""
    lines = [f"# tipwarn {kind}", f"# artifact_version: {ARTIFACT_VERSION}"]
    if config is not None:
        lines.append(f"# config_sha256: {config_hash(config)}")
        lines.append(f"# config: {canonical_json(config)}")
    lines.extend(f"# {item}" for item in extra)
    return lines


def _csv_text(kind: str, config, extra, header: str, rows) -> str:
    lines = header_block(kind, config, extra)
    lines.append(header)
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def export_table(path, header: str, rows, *, kind: str = "table",
                 config: dict | None = None, extra=()) -> Path:
    """Arbitrary small CSV table under the standard header block."""
    return atomic_write_text(path, _csv_text(kind, config, extra, header, rows))


def export_series(series: IndicatorSeries, path, *, config: dict | None = None,
                  extra=()) -> Path:
    """Indicator series CSV under the fixed column contract.

    Raises:
        StructuralError: empty series.
    """
    if series.times.size == 0:
        raise StructuralError("refusing to export an empty indicator series")
    columns = [np.asarray(getattr(series, name), dtype=float)
               for name in _SERIES_FIELDS]
    rows = zip(*columns)
    return atomic_write_text(path, _csv_text("indicator-series", config, extra,
                                             SERIES_HEADER, rows))


def read_series(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Parse a series CSV back into column arrays plus header metadata.

    Missing fields come back as NaN.  Metadata holds the ``key: value``
    comment lines (config, hash, version).

    Raises:
        StructuralError: wrong header row or ragged data lines.
    """
    meta: dict[str, str] = {}
    names: list[str] | None = None
    data: list[list[float]] = []
    with open(path, encoding="utf-8", newline="\n") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if ": " in body:
                    key, value = body.split(": ", 1)
                    meta[key] = value
                continue
            cells = [c.strip() for c in line.split(",")]
            if names is None:
                if cells != [c.strip() for c in SERIES_HEADER.split(",")]:
                    raise StructuralError(f"unexpected series header {line!r}")
                names = cells
                continue
            if len(cells) != len(names):
                raise StructuralError(f"ragged series row {line!r}")
            data.append([float(c) if c else math.nan for c in cells])
    if names is None:
        raise StructuralError(f"{path} has no header row")
    table = np.asarray(data, dtype=float).reshape(len(data), len(names))
    return {name: table[:, j] for j, name in enumerate(names)}, meta


def export_density(state: DensityState, g: SpatialGrid, t: float, path, *,
                   analytic: np.ndarray | None = None,
                   config: dict | None = None, extra=()) -> Path:
    """Density snapshot CSV: x, p (and the exact solution when known)."""
    info = [f"t: {format_value(t)}",
            f"survival: {format_value(state.survival)}",
            f"mass: {format_value(trapezoid_mass(state, g))}"]
    info.extend(extra)
    header = "x, p"
    columns = [g.nodes, np.asarray(state.values, dtype=float)]
    if analytic is not None:
        header += ", p_exact"
        columns.append(np.asarray(analytic, dtype=float))
    return atomic_write_text(path, _csv_text("density", config, info, header,
                                             zip(*columns)))


def export_ensemble(summary: EnsembleSummary, path, *,
                    config: dict | None = None, extra=()) -> Path:
    """Monte Carlo ensemble summary CSV."""
    cols = summary.as_columns()
    header = ", ".join(cols)
    rows = zip(*(cols[name] for name in cols))
    return atomic_write_text(path, _csv_text("mc-summary", config, extra,
                                             header, rows))


def export_comparison(report: ComparisonReport, path, *,
                      config: dict | None = None, extra=()) -> Path:
    """Density-vs-ensemble z-score table CSV."""
    cols = report.as_columns()
    info = [f"max_abs_z: {format_value(report.max_abs_z)}",
            f"any_flagged: {int(report.any_flagged)}"]
    info.extend(extra)
    header = ", ".join(cols)
    rows = zip(*(cols[name] for name in cols))
    return atomic_write_text(path, _csv_text("mc-compare", config, info,
                                             header, rows))


def export_bifurcation(curve: BifurcationCurve, path, *,
                       config: dict | None = None, extra=()) -> Path:
    """Equilibrium-curve scan CSV with the fold point in the header."""
    info = [f"fold_q: {format_value(curve.fold_q if curve.fold_q is not None else math.nan)}",
            f"fold_a_sys: {format_value(curve.fold_a if curve.fold_a is not None else math.nan)}"]
    info.extend(extra)
    cols = curve.as_columns()
    header = ", ".join(cols)
    rows = zip(*(cols[name] for name in cols))
    return atomic_write_text(path, _csv_text("bifurcation", config, info,
                                             header, rows))


def export_baseline(table: BaselineTable, path, *, kappa_c: float | None = None,
                    config: dict | None = None, extra=()) -> Path:
    """Stationary nonlinear baseline table CSV."""
    info = [f"q0: {format_value(table.q0)}"]
    if kappa_c is not None:
        info.append(f"kappa_c: {format_value(kappa_c)}")
    info.extend(extra)
    rows = zip(table.d_grid, table.kappa, table.v)
    return atomic_write_text(path, _csv_text("baseline", config, info,
                                             "d, kappa, v", rows))


def export_sweep_summary(results: list[MonsoonSweepResult], path, *,
                         config: dict | None = None, extra=()) -> Path:
    """One row per sweep scenario; failed points carry their error string."""
    header = ("label, a0, eps_per_decade, noise, t_end, final_cumulative_escape, "
              "fold_clamped_steps, rows, error")
    rows = []
    for r in results:
        final = r.series.cumulative_escape[-1] if r.series is not None else math.nan
        n_rows = r.series.times.size if r.series is not None else 0
        rows.append((r.label, r.a0, r.eps, r.noise, r.t_end, final,
                     r.fold_clamped_steps, n_rows, r.error or ""))
    return atomic_write_text(path, _csv_text("sweep-summary", config, extra,
                                             header, rows))


def export_json(payload: dict, path, *, config: dict | None = None) -> Path:
    """Indented JSON artifact (reports, metadata); atomic like the CSVs."""
    body = dict(payload)
    if config is not None:
        body.setdefault("artifact_version", ARTIFACT_VERSION)
        body.setdefault("config_sha256", config_hash(config))
    return atomic_write_text(path, json.dumps(body, indent=2, sort_keys=True) + "\n")
