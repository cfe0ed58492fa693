"""Euler-Maruyama ensemble oracle for cross-checking the Fokker-Planck route.

Simulates dX = f(X,t) dt + sqrt(2 D) dW with plain discrete-time absorption at
the grid's zeroed boundary nodes, and summarizes the surviving ensemble
(mean, variance, lag-1 autocorrelation over one FP step, survival) with
standard errors at requested sample times.  :func:`compare` turns a summary
and an :class:`~tipwarn.indicators.IndicatorSeries` into z-scores.

Randomness comes from one ``numpy.random.Generator(PCG64(seed))`` stream with
a fixed draw order (one block per substep), so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drifts import DriftModel
from .errors import ConfigError, DomainError, StructuralError
from .grids import DensityState, SpatialGrid
from .indicators import IndicatorSeries

__all__ = [
    "EnsembleConfig",
    "EnsembleSummary",
    "ComparisonRow",
    "ComparisonReport",
    "sample_from_density",
    "simulate",
    "compare",
]

Z_FLAG_THRESHOLD = 3.0


@dataclass(frozen=True)
class EnsembleConfig:
    """Ensemble size, substep, seed, and absorbing thresholds."""

    n_paths: int
    dt: float
    seed: int
    absorb_low: float
    absorb_high: float

    def __post_init__(self) -> None:
        if self.n_paths < 2:
            raise ConfigError(f"need at least 2 paths, got {self.n_paths}")
        if self.dt <= 0:
            raise ConfigError(f"substep must be positive, got {self.dt}")
        if not self.absorb_low < self.absorb_high:
            raise ConfigError("absorb_low must be below absorb_high")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit an unsigned 64-bit integer")


@dataclass(frozen=True)
class EnsembleSummary:
    """Surviving-ensemble statistics with standard errors per sample time."""

    times: np.ndarray
    mean: np.ndarray
    mean_se: np.ndarray
    variance: np.ndarray
    variance_se: np.ndarray
    lag1: np.ndarray
    lag1_se: np.ndarray
    survival: np.ndarray
    survival_se: np.ndarray
    n_alive: np.ndarray

    def as_columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.times,
            "mean": self.mean,
            "mean_se": self.mean_se,
            "variance": self.variance,
            "variance_se": self.variance_se,
            "lag1": self.lag1,
            "lag1_se": self.lag1_se,
            "survival": self.survival,
            "survival_se": self.survival_se,
            "n_alive": self.n_alive,
        }


def sample_from_density(state: DensityState, g: SpatialGrid, n: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Draw n positions from a node density by inverse-CDF interpolation."""
    pdf = np.clip(state.values, 0.0, None)
    cdf = np.concatenate(([0.0], np.cumsum((pdf[:-1] + pdf[1:]) * (g.dx / 2.0))))
    total = cdf[-1]
    if total <= 0.0:
        raise DomainError("cannot sample from a massless density")
    return np.interp(rng.random(n) * total, cdf, g.nodes)


def _substep_index(t: float, t_start: float, dt: float, what: str) -> int:
    k = round((t - t_start) / dt)
    if k < 0 or abs(t_start + k * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise StructuralError(
            f"{what} {t} does not align with the Monte Carlo substep {dt}"
        )
    return k


def simulate(model: DriftModel, noise: float, cfg: EnsembleConfig,
             initial_positions: np.ndarray, t_start: float,
             sample_times: np.ndarray, lag_dt: float | None = None,
             rng: np.random.Generator | None = None) -> EnsembleSummary:
    """March the ensemble and summarize it at the sample times.

    ``lag_dt`` (usually the FP time step) sets the lag for the lag-1
    statistic; pairs are (X_{t-lag_dt}, X_t) over paths alive at t.  Both the
    sample times and ``lag_dt`` must be integer multiples of the substep.

    Raises:
        StructuralError: misaligned sample times or lag.
        DomainError: negative noise.
    """
    if noise < 0:
        raise DomainError(f"noise must be >= 0, got {noise}")
    sample_times = np.sort(np.asarray(sample_times, dtype=float))
    if sample_times.size == 0:
        raise StructuralError("need at least one sample time")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(cfg.seed))

    sample_steps = [_substep_index(t, t_start, cfg.dt, "sample time")
                    for t in sample_times]
    lag_steps = 0
    if lag_dt is not None:
        lag_steps = _substep_index(t_start + lag_dt, t_start, cfg.dt, "lag")
        if lag_steps < 1:
            raise StructuralError(f"lag {lag_dt} is below one substep {cfg.dt}")
    prelag_steps = {k - lag_steps for k in sample_steps if lag_steps and k - lag_steps >= 0}

    x = np.asarray(initial_positions, dtype=float).copy()
    if x.shape != (cfg.n_paths,):
        raise StructuralError(
            f"initial positions shape {x.shape} != ({cfg.n_paths},)"
        )
    alive = (x > cfg.absorb_low) & (x < cfg.absorb_high)
    snapshots: dict[int, np.ndarray] = {}
    rows = []
    amplitude = math.sqrt(2.0 * noise * cfg.dt)

    def record(k: int) -> None:
        t = t_start + k * cfg.dt
        n_alive = int(np.count_nonzero(alive))
        surv = n_alive / cfg.n_paths
        surv_se = math.sqrt(max(surv * (1.0 - surv), 0.0) / cfg.n_paths)
        if n_alive < 2:
            rows.append((t, math.nan, math.nan, math.nan, math.nan,
                         math.nan, math.nan, surv, surv_se, n_alive))
            return
        xs = x[alive]
        mean = float(xs.mean())
        var = float(xs.var(ddof=1))
        mean_se = math.sqrt(var / n_alive)
        centered = xs - mean
        m4 = float(np.mean(centered**4))
        var_se = math.sqrt(max(m4 - var * var, 0.0) / n_alive)
        rho = rho_se = math.nan
        if lag_steps and (k - lag_steps) in snapshots:
            prev = snapshots[k - lag_steps][alive]
            sx = prev.std(ddof=1)
            sy = xs.std(ddof=1)
            if sx > 0 and sy > 0:
                cov = float(np.mean((prev - prev.mean()) * centered))
                cov *= n_alive / (n_alive - 1)
                rho = cov / (sx * sy)
                rho_se = (1.0 - rho * rho) / math.sqrt(n_alive)
        rows.append((t, mean, mean_se, var, var_se, rho, rho_se,
                     surv, surv_se, n_alive))

    if 0 in prelag_steps:
        snapshots[0] = x.copy()
    pending = {k: True for k in sample_steps}
    if 0 in pending:
        record(0)
        del pending[0]

    last_step = max(sample_steps)
    for k in range(1, last_step + 1):
        t_prev = t_start + (k - 1) * cfg.dt
        z = rng.standard_normal(cfg.n_paths)
        drift = np.asarray(model.f(x, t_prev), dtype=float)
        proposal = x + drift * cfg.dt + amplitude * z
        x = np.where(alive, proposal, x)
        alive &= (x > cfg.absorb_low) & (x < cfg.absorb_high)
        if k in prelag_steps:
            snapshots[k] = x.copy()
        if k in pending:
            record(k)
            del pending[k]

    data = np.asarray(rows, dtype=float)
    return EnsembleSummary(
        times=data[:, 0], mean=data[:, 1], mean_se=data[:, 2],
        variance=data[:, 3], variance_se=data[:, 4],
        lag1=data[:, 5], lag1_se=data[:, 6],
        survival=data[:, 7], survival_se=data[:, 8],
        n_alive=data[:, 9].astype(int),
    )


@dataclass(frozen=True)
class ComparisonRow:
    time: float
    metric: str
    fp: float
    mc: float
    se: float
    z: float
    flagged: bool


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    @property
    def max_abs_z(self) -> float:
        finite = [abs(r.z) for r in self.rows if math.isfinite(r.z)]
        return max(finite) if finite else math.nan

    @property
    def any_flagged(self) -> bool:
        return any(r.flagged for r in self.rows)

    def as_columns(self) -> dict[str, list]:
        return {
            "t": [r.time for r in self.rows],
            "metric": [r.metric for r in self.rows],
            "fp": [r.fp for r in self.rows],
            "mc": [r.mc for r in self.rows],
            "se": [r.se for r in self.rows],
            "z": [r.z for r in self.rows],
            "flag": [int(r.flagged) for r in self.rows],
        }


def _series_index(series: IndicatorSeries, t: float) -> int:
    idx = int(np.argmin(np.abs(series.times - t)))
    if abs(series.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
        raise StructuralError(
            f"time {t} not present in the indicator series (nearest "
            f"{series.times[idx]})"
        )
    return idx


def compare(series: IndicatorSeries, mc: EnsembleSummary) -> ComparisonReport:
    """z-scores of FP variance, lag-1, and survival against the MC summary.

    FP survival compared at the cumulative level (1 - cumulative escape).
    Rows with undefined MC error (zero or NaN) get z = NaN, never a flag.

    Raises:
        StructuralError: MC sample times missing from the FP series.
    """
    rows: list[ComparisonRow] = []
    for j, t in enumerate(mc.times):
        i = _series_index(series, float(t))
        fp_survival = 1.0 - series.cumulative_escape[i]
        for metric, fp_val, mc_val, se in (
            ("variance", series.variance[i], mc.variance[j], mc.variance_se[j]),
            ("lag1", series.lag1[i], mc.lag1[j], mc.lag1_se[j]),
            ("survival", fp_survival, mc.survival[j], mc.survival_se[j]),
        ):
            if not math.isfinite(se) or se == 0.0 or not math.isfinite(mc_val):
                z = math.nan
            else:
                z = (fp_val - mc_val) / se
            rows.append(ComparisonRow(
                time=float(t), metric=metric, fp=float(fp_val),
                mc=float(mc_val), se=float(se), z=float(z),
                flagged=bool(math.isfinite(z) and abs(z) > Z_FLAG_THRESHOLD),
            ))
    return ComparisonReport(rows=tuple(rows))
