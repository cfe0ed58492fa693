"""Scenario configs: schema validation, canonical form, pipeline builders.

A scenario config is a single JSON object (schema shipped in
``data/config.schema.json``) naming the drift model, discretization, noise
level, initial density, and requested outputs.  :func:`load_config` parses
and validates a file; :func:`resolve_config` fills defaults and stamps the
artifact version, producing the resolved form embedded in every output
header.  Resolution is idempotent, so the header hash is stable when a
resolved config is re-serialized and re-resolved.

The ``build_*`` helpers turn a resolved config into live pipeline objects.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from importlib import resources

import jsonschema
import numpy as np

from .drifts import (
    DriftModel,
    OULinearization,
    SaddleNodeLinearDrift,
    SaddleNodeNonlinearDrift,
    StraightDrift,
)
from .errors import ConfigError
from .grids import DensityState, SpatialGrid, TimeGrid, normalize
from .indicators import BaselineTable, IndicatorRecorder, build_baseline
from .monsoon import MonsoonDrift, MonsoonParams
from .solver import stationary_density

__all__ = [
    "ARTIFACT_VERSION",
    "load_schema",
    "validate_config",
    "load_config",
    "resolve_config",
    "canonical_json",
    "config_hash",
    "builtin_monsoon_params",
    "build_model",
    "build_grid",
    "build_time_grid",
    "build_initial",
    "build_recorder",
    "build_baseline_table",
    "baseline_noise_grid",
    "time_index",
]

ARTIFACT_VERSION = "0.1.0"

# Relative slack for "this time lies on the grid" checks.
_ALIGN_RTOL = 1e-9

_schema_cache: dict | None = None


def load_schema() -> dict:
    """The scenario-config JSON schema shipped with the package."""
    global _schema_cache
    if _schema_cache is None:
        text = resources.files("tipwarn.data").joinpath("config.schema.json").read_text()
        _schema_cache = json.loads(text)
    return _schema_cache


def _amend_schema_error(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{where}: {err.message}"


def validate_config(raw: dict) -> None:
    """Schema plus cross-field validation; unknown keys are rejected.

    Raises:
        ConfigError: with every schema violation listed, or the first
            cross-field inconsistency.
    """
    if not isinstance(raw, dict):
        raise ConfigError(f"config must be a JSON object, got {type(raw).__name__}")
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        shown = "; ".join(_amend_schema_error(e) for e in errors[:8])
        raise ConfigError(f"config violates the schema: {shown}")
    _validate_cross_fields(raw)


def _validate_cross_fields(raw: dict) -> None:
    grid = raw["grid"]
    time = raw["time"]
    if not grid["x_start"] < grid["x_end"]:
        raise ConfigError("grid.x_start must be below grid.x_end")
    if not time["t0"] < time["t_end"]:
        raise ConfigError("time.t0 must be below time.t_end")
    dt = (time["t_end"] - time["t0"]) / time["M"]

    outputs = raw.get("outputs", {})
    for t in outputs.get("densities_at", []):
        _aligned_index(t, time["t0"], dt, time["M"], "outputs.densities_at entry")
    if outputs.get("quasi_static") in ("nonlinear", "both") and "baseline" not in outputs:
        raise ConfigError(
            "outputs.quasi_static nonlinear needs an outputs.baseline block"
        )
    baseline = outputs.get("baseline", {})
    if "d_grid" in baseline:
        baseline_noise_grid(baseline["d_grid"])
    bif = outputs.get("bifurcation")
    if bif is not None:
        if raw["scenario"] != "monsoon":
            raise ConfigError("outputs.bifurcation needs the monsoon scenario")
        if not bif["q_min"] < bif["q_max"]:
            raise ConfigError("bifurcation q_min must be below q_max")
    sweep = outputs.get("sweep")
    if sweep is not None:
        _validate_sweep_block(raw["scenario"], sweep)

    mc = raw.get("mc")
    if mc is not None:
        _validate_mc_block(mc, grid, time, dt, outputs.get("stride", 1))


def _validate_sweep_block(scenario: str, sweep: dict) -> None:
    has_points = "points" in sweep
    has_paths = "paths" in sweep
    if has_points == has_paths:
        raise ConfigError("outputs.sweep needs exactly one of 'points' or 'paths'")
    if has_paths and scenario != "monsoon":
        raise ConfigError("outputs.sweep.paths needs the monsoon scenario")
    if has_points and scenario == "monsoon":
        raise ConfigError("monsoon sweeps use outputs.sweep.paths, not points")
    if has_paths and "noise_levels" not in sweep:
        raise ConfigError("outputs.sweep.paths needs noise_levels")
    labels = [p["label"] for p in sweep.get("points", sweep.get("paths", []))]
    if len(labels) != len(set(labels)):
        raise ConfigError(f"sweep labels must be unique, got {labels}")
    for p in sweep.get("points", []):
        t = p.get("time")
        if t is not None and not t["t0"] < t["t_end"]:
            raise ConfigError(f"sweep point {p['label']}: t0 must be below t_end")


def _validate_mc_block(mc: dict, grid: dict, time: dict, dt: float,
                       stride: int) -> None:
    if mc["dt"] > dt * (1.0 + _ALIGN_RTOL):
        raise ConfigError(
            f"mc.dt {mc['dt']} exceeds the density step {dt}"
        )
    ratio = dt / mc["dt"]
    if abs(ratio - round(ratio)) > _ALIGN_RTOL * ratio:
        raise ConfigError(
            f"density step {dt} must be an integer multiple of mc.dt {mc['dt']}"
        )
    for t in mc.get("sample_times", []):
        k = _aligned_index(t, time["t0"], dt, time["M"], "mc.sample_times entry")
        if k % stride and k != time["M"]:
            raise ConfigError(
                f"mc sample time {t} falls between recorded series rows "
                f"(stride {stride})"
            )
    absorb = mc.get("absorb")
    if absorb is not None:
        lo, hi = absorb
        if not (math.isclose(lo, grid["x_start"], rel_tol=0.0, abs_tol=1e-12)
                and math.isclose(hi, grid["x_end"], rel_tol=0.0, abs_tol=1e-12)):
            raise ConfigError(
                f"mc.absorb {absorb} must match the density domain "
                f"[{grid['x_start']}, {grid['x_end']}]"
            )


def _aligned_index(t: float, t0: float, dt: float, n_steps: int, what: str) -> int:
    k = round((t - t0) / dt)
    if k < 0 or k > n_steps or abs(t0 + k * dt - t) > _ALIGN_RTOL * max(1.0, abs(t)):
        raise ConfigError(f"{what} {t} does not lie on the time grid")
    return k


def load_config(path) -> dict:
    """Parse and validate a config file (raw, not yet resolved).

    Raises:
        ConfigError: unreadable file, invalid JSON, or schema violation.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    validate_config(raw)
    return raw


def resolve_config(raw: dict, *, seed: int | None = None,
                   strict: bool | None = None) -> dict:
    """Fill defaults and stamp the artifact version; validates first.

    ``seed`` and ``strict`` are command-line overrides.  Resolving an
    already resolved config is the identity (given no overrides), which
    keeps the embedded hash stable under reserialization.
    """
    validate_config(raw)
    cfg = copy.deepcopy(raw)
    cfg["artifact_version"] = ARTIFACT_VERSION
    cfg.setdefault("model", {})
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError(f"seed override {seed} does not fit 64 bits")
        cfg["seed"] = int(seed)
    cfg.setdefault("seed", 0)
    if strict:
        cfg["strict_admissibility"] = True
    cfg.setdefault("strict_admissibility", False)
    if cfg["scenario"] != "straight":
        cfg.setdefault("initial", {"kind": "stationary"})

    outputs = cfg.setdefault("outputs", {})
    outputs.setdefault("series", True)
    outputs.setdefault("stride", 1)
    outputs.setdefault("densities_at", [])
    outputs.setdefault("escape", False)
    outputs.setdefault("quasi_static", "none")
    if "baseline" in outputs:
        outputs["baseline"].setdefault("q0", 1.0)
        outputs["baseline"].setdefault("fit_window_max", 0.05)
    sweep = outputs.get("sweep")
    if sweep is not None and "paths" in sweep:
        sweep.setdefault("dx_cap", 0.001)
        sweep.setdefault("dt_cap", 0.0002)
        sweep.setdefault("max_rows", 4000)

    mc = cfg.get("mc")
    if mc is not None:
        mc.setdefault("seed", cfg["seed"])
        mc.setdefault("sample_times", [cfg["time"]["t_end"]])
        mc.setdefault("absorb", [cfg["grid"]["x_start"], cfg["grid"]["x_end"]])
    validate_config(cfg)
    return cfg


def canonical_json(cfg: dict) -> str:
    """Key-sorted, whitespace-free JSON; the hashing and embedding form."""
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(cfg: dict) -> str:
    """sha256 hex digest of the canonical form."""
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()


# -- builders ----------------------------------------------------------------


def builtin_monsoon_params() -> MonsoonParams:
    """The calibration shipped in ``data/monsoon_calibration.json``."""
    text = resources.files("tipwarn.data").joinpath("monsoon_calibration.json").read_text()
    return MonsoonParams.from_config(json.loads(text)["params"])


def build_model(cfg: dict) -> DriftModel:
    """Drift model named by the resolved config."""
    scenario = cfg["scenario"]
    m = cfg.get("model", {})
    if scenario == "straight":
        return StraightDrift()
    if scenario == "saddle_linear":
        return SaddleNodeLinearDrift(p0=m["p0"], eps=m.get("eps", 0.0))
    if scenario == "saddle_nonlinear":
        return SaddleNodeNonlinearDrift(p0=m["p0"], eps=m["eps"],
                                        lambda_max=m["lambda_max"])
    if scenario == "ou":
        return OULinearization(kappa=m["kappa"], center=m.get("center", 0.0))
    if scenario == "monsoon":
        params = (MonsoonParams.from_config(m["params"]) if "params" in m
                  else builtin_monsoon_params())
        g = cfg["grid"]
        return MonsoonDrift(
            params,
            a0=m.get("a0"),
            eps=m.get("eps_per_decade", 0.0),
            domain=(g["x_start"], g["x_end"]),
            stencil_h=m.get("stencil_h", 0.001),
        )
    raise ConfigError(f"unknown scenario {scenario!r}")


def build_grid(cfg: dict) -> SpatialGrid:
    g = cfg["grid"]
    return SpatialGrid(g["x_start"], g["x_end"], g["N"])


def build_time_grid(cfg: dict) -> TimeGrid:
    t = cfg["time"]
    return TimeGrid(t["t0"], t["t_end"], t["M"])


def build_initial(cfg: dict, model: DriftModel, g: SpatialGrid) -> DensityState:
    """Initial density named by the resolved config.

    Raises:
        ConfigError: missing initial block (straight scenario has no
            stationary default).
    """
    spec = cfg.get("initial")
    if spec is None:
        raise ConfigError("config has no initial block and no default applies")
    if spec["kind"] == "stationary":
        return stationary_density(model, g, cfg["noise"], cfg["time"]["t0"])
    center, sigma = spec["center"], spec["sigma"]
    values = np.exp(-((g.nodes - center) ** 2) / (2.0 * sigma**2))
    values[0] = 0.0
    values[-1] = 0.0
    return normalize(DensityState(values), g)


def baseline_noise_grid(spec: dict) -> np.ndarray:
    """Expand a noise-grid spec ({start, stop, step} or {values}).

    Raises:
        ConfigError: empty or non-increasing expansion.
    """
    if "values" in spec:
        grid = np.asarray(spec["values"], dtype=float)
    else:
        start, stop, step = spec["start"], spec["stop"], spec["step"]
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 2:
            raise ConfigError(f"noise grid {spec} yields fewer than 2 points")
        grid = start + step * np.arange(n)
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("noise grid must be strictly increasing")
    return grid


def build_baseline_table(cfg: dict) -> BaselineTable | None:
    """Baseline table when nonlinear quasi-static output is requested."""
    outputs = cfg["outputs"]
    if outputs["quasi_static"] not in ("nonlinear", "both"):
        return None
    spec = outputs["baseline"]
    d_grid = baseline_noise_grid(spec["d_grid"]) if "d_grid" in spec else None
    return build_baseline(q0=spec["q0"], d_grid=d_grid)


def time_index(tg: TimeGrid, t: float, what: str = "time") -> int:
    """1-based grid index of instant ``t``.

    Raises:
        ConfigError: ``t`` off the grid.
    """
    return 1 + _aligned_index(t, tg.t_start, tg.dt, tg.n_steps, what)


def build_recorder(cfg: dict, model: DriftModel, g: SpatialGrid, tg: TimeGrid,
                   baseline: BaselineTable | None = None) -> IndicatorRecorder:
    """Recorder wired to the resolved outputs block."""
    outputs = cfg["outputs"]
    qs = outputs["quasi_static"]
    densities_at = tuple(
        time_index(tg, t, "outputs.densities_at entry")
        for t in outputs["densities_at"]
    )
    return IndicatorRecorder(
        model, g, tg, cfg["noise"],
        lag1=True,
        kramers=outputs["escape"],
        qs_linear=qs in ("linear", "both"),
        baseline=baseline,
        strict_extrapolation=True,
        stride=outputs["stride"],
        densities_at=densities_at,
    )
