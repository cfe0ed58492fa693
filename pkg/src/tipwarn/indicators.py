"""Early-warning indicators and their quasi-static reference curves.

Per-step indicators computed on the evolving density: variance, lag-1
autocorrelation of the conditional-on-survival joint density, the dynamic
decay rate -ln(a)/dt, per-step survival and escape rates, and Kramers' rate
from the model's curvatures.  Quasi-static references: the linearized
(Ornstein-Uhlenbeck) formulas kappa = U''(x_s), a = exp(-kappa dt),
V = D/kappa, and the nonlinear baseline table rescaled through the
noise-scaling map.

:class:`IndicatorRecorder` plugs these into :func:`tipwarn.solver.evolve` and
assembles an :class:`IndicatorSeries`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .drifts import (
    DriftModel,
    SaddleNodeLinearDrift,
    quasi_static_rescale,
    scale_parameters,
)
from .errors import (
    DegenerateDensityError,
    DomainError,
    ExtrapolationError,
    FitError,
    FoldCrossedError,
    NoEquilibriumError,
    SolverQualityError,
    StructuralError,
)
from .grids import DensityState, SpatialGrid, TimeGrid, moment, normalize
from .solver import (
    TridiagonalOperator,
    assemble_cn_pair,
    solve_stationary,
)

__all__ = [
    "KramersInputs",
    "IndicatorSeries",
    "IndicatorRecorder",
    "BaselineTable",
    "variance",
    "lag1_autocorrelation",
    "decay_rate_dynamic",
    "escape_stats",
    "kramers_rate",
    "kramers_inputs_from_model",
    "quasi_static_linear",
    "quasi_static_nonlinear",
    "build_baseline",
    "fit_kappa_c",
]

# CSV column order is part of the output contract.
SERIES_COLUMNS = (
    "t",
    "variance",
    "lag1",
    "lag1_per_unit_time",
    "decay_rate",
    "escape_rate",
    "survival",
    "cumulative_escape",
    "kramers_rate",
    "qs_lin_kappa",
    "qs_lin_a",
    "qs_lin_v",
    "qs_nl_kappa",
    "qs_nl_v",
)


@dataclass(frozen=True)
class KramersInputs:
    """Well curvature, hill curvature magnitude, barrier height, noise level."""

    alpha: float
    beta: float
    delta_u: float
    d: float

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta, self.delta_u, self.d) <= 0:
            raise DomainError(f"KramersInputs must all be positive: {self}")


def variance(d: DensityState, g: SpatialGrid) -> float:
    """Var = E[X^2] - E[X]^2 of a normalized density.

    Raises:
        DegenerateDensityError: if the variance is not strictly positive.
        PreconditionError: if the density is not normalized (via moment).
    """
    m1 = moment(d, g, 1)
    m2 = moment(d, g, 2)
    var = m2 - m1 * m1
    if var <= 0.0:
        raise DegenerateDensityError(f"density variance {var} is not positive")
    return var


def _conditional_means_adjoint(a1: TridiagonalOperator, a2: TridiagonalOperator,
                               x: np.ndarray):
    """E[Y | X = x_i] for all i via two transposed solves.

    One step maps p to K p with K = -A2^{-1} A1, so the conditional mean of a
    delta at node i is (K^T x)_i / (K^T 1)_i; the delta's 1/dx height cancels.
    """
    numer = -a1.rmatvec(a2.solve_transposed(x))
    denom = -a1.rmatvec(a2.solve_transposed(np.ones_like(x)))
    return numer, denom


def _conditional_means_per_delta(a1: TridiagonalOperator, a2: TridiagonalOperator,
                                 g: SpatialGrid, active: np.ndarray):
    """Reference path: evolve one renormalized delta per active node."""
    n = g.n_nodes
    x = g.nodes
    numer = np.zeros(n)
    denom = np.zeros(n)
    for i in np.flatnonzero(active):
        delta = np.zeros(n)
        delta[i] = 1.0 / g.dx
        out = a2.solve(-a1.matvec(delta))
        out[0] = 0.0
        out[-1] = 0.0
        denom[i] = float(np.trapezoid(out, dx=g.dx))
        numer[i] = float(np.trapezoid(x * out, dx=g.dx))
    return numer, denom


def lag1_autocorrelation(d_prev: DensityState, a1: TridiagonalOperator,
                         a2: TridiagonalOperator, g: SpatialGrid,
                         method: str = "adjoint") -> float:
    """Lag-1 autocorrelation across one Crank-Nicolson step.

    E[XY] = sum_i x_i * mass_i * E[Y | X = x_i], with node masses from the
    normalized pre-step density and each conditional density renormalized
    after its step (absorbing-leak correction).  Var(X) comes from the
    pre-step density, E[Y] and Var(Y) from the renormalized evolved full
    density.  ``method`` selects the adjoint evaluation (default) or the
    per-delta reference; both agree to solver precision.

    Raises:
        DegenerateDensityError: zero variance at either time.
        SolverQualityError: result beyond [-1, 1] by more than 1e-9.
    """
    x = g.nodes
    p = d_prev.values
    mass = p * g.dx  # boundary values are zero, so this equals trapezoid weights

    e_x = float(np.sum(x * mass))
    var_x = float(np.sum(x * x * mass)) - e_x * e_x
    if var_x <= 0.0:
        raise DegenerateDensityError("pre-step density has nonpositive variance")

    evolved = a2.solve(-a1.matvec(p))
    evolved[0] = 0.0
    evolved[-1] = 0.0
    mass_y = float(np.trapezoid(evolved, dx=g.dx))
    if mass_y <= 0.0:
        raise DegenerateDensityError("evolved density lost all mass")
    y_norm = evolved / mass_y
    e_y = float(np.trapezoid(x * y_norm, dx=g.dx))
    var_y = float(np.trapezoid(x * x * y_norm, dx=g.dx)) - e_y * e_y
    if var_y <= 0.0:
        raise DegenerateDensityError("post-step density has nonpositive variance")

    active = mass > 0.0
    if method == "adjoint":
        numer, denom = _conditional_means_adjoint(a1, a2, x)
    elif method == "per_delta":
        numer, denom = _conditional_means_per_delta(a1, a2, g, active)
    else:
        raise DomainError(f"unknown lag-1 method {method!r}")

    usable = active & (denom > 1e-300)
    cond_mean = np.zeros_like(x)
    cond_mean[usable] = numer[usable] / denom[usable]
    e_xy = float(np.sum(x[usable] * mass[usable] * cond_mean[usable]))

    a = (e_xy - e_x * e_y) / math.sqrt(var_x * var_y)
    if abs(a) > 1.0:
        if abs(a) > 1.0 + 1e-9:
            raise SolverQualityError(f"lag-1 autocorrelation {a} outside [-1, 1]")
        a = math.copysign(1.0, a)
    return a


def decay_rate_dynamic(a_n: float, dt: float) -> float:
    """Dynamic decay rate -ln(a_n)/dt, the inverse of the OU relation.

    Raises:
        DomainError: if ``a_n`` is outside (0, 1].
    """
    if not 0.0 < a_n <= 1.0:
        raise DomainError(f"decay rate needs autocorrelation in (0, 1], got {a_n}")
    return -math.log(a_n) / dt


def escape_stats(survivals: np.ndarray, dt: float):
    """Per-step escape rates and cumulative escape probability.

    ``survivals[k]`` is the per-step survival s_n of step n = k+1 (the first
    entry belongs to the initial instant and must be 1).  Returns
    ``r = (1 - s)/dt`` and ``c = 1 - prod(s)`` (running product).

    Raises:
        DomainError: if any survival leaves [0, 1] (1e-12 slack).
    """
    s = np.asarray(survivals, dtype=float)
    if np.any(s < -1e-12) or np.any(s > 1.0 + 1e-12):
        raise DomainError("survival values must lie in [0, 1]")
    s = np.clip(s, 0.0, 1.0)
    rates = (1.0 - s) / dt
    cumulative = 1.0 - np.cumprod(s)
    return rates, cumulative


def kramers_rate(k: KramersInputs) -> float:
    """Kramers' escape rate sqrt(alpha*beta)/(2 pi) * exp(-delta_u/d)."""
    return math.sqrt(k.alpha * k.beta) / (2.0 * math.pi) * math.exp(-k.delta_u / k.d)


def kramers_inputs_from_model(model: DriftModel, t: float, noise: float) -> KramersInputs:
    """Assemble KramersInputs from the model's curvature accessors.

    Raises:
        NoEquilibriumError: if the model has no well/hill/barrier at t.
    """
    return KramersInputs(
        alpha=model.well_curvature(t),
        beta=model.hill_curvature(t),
        delta_u=model.barrier_height(t),
        d=noise,
    )


def quasi_static_linear(model: DriftModel, t: float, noise: float, dt: float):
    """Linearized quasi-static references (kappa, a, v) at time t.

    kappa = well curvature, a = exp(-kappa*dt), v = noise/kappa.

    Raises:
        NoEquilibriumError / FoldCrossedError: past the fold.
    """
    kappa = model.well_curvature(t)
    return kappa, math.exp(-kappa * dt), noise / kappa


@dataclass(frozen=True)
class BaselineTable:
    """Nonlinear stationary indicators tabulated over noise at q0, eps = 0."""

    d_grid: np.ndarray
    kappa: np.ndarray
    v: np.ndarray
    q0: float = 1.0

    def __post_init__(self) -> None:
        if not (self.d_grid.shape == self.kappa.shape == self.v.shape):
            raise StructuralError("baseline table columns must share one length")
        if self.d_grid.shape[0] < 2:
            raise StructuralError("baseline table needs at least two points")
        if np.any(np.diff(self.d_grid) <= 0):
            raise StructuralError("baseline noise grid must be strictly increasing")

    def interpolate(self, d_tilde: float, strict: bool = True):
        """Linear interpolation of (kappa, v) at noise level d_tilde.

        Raises:
            ExtrapolationError: outside the grid in strict mode; lenient mode
                clamps to the nearest endpoint and warns.
        """
        lo, hi = float(self.d_grid[0]), float(self.d_grid[-1])
        if not lo <= d_tilde <= hi:
            if strict:
                raise ExtrapolationError(
                    f"noise level {d_tilde} outside baseline range [{lo}, {hi}]"
                )
            warnings.warn(
                f"baseline lookup {d_tilde} clamped into [{lo}, {hi}]",
                RuntimeWarning, stacklevel=2,
            )
            d_tilde = min(max(d_tilde, lo), hi)
        return (
            float(np.interp(d_tilde, self.d_grid, self.kappa)),
            float(np.interp(d_tilde, self.d_grid, self.v)),
        )


def default_baseline_grid() -> np.ndarray:
    """The standard baseline noise grid 0.005, 0.010, ..., 0.300."""
    return np.round(np.arange(1, 61) * 0.005, decimals=10)


def build_baseline(q0: float = 1.0, d_grid: np.ndarray | None = None,
                   domain: tuple[float, float] = (-2.5, 2.0),
                   peclet_target: float = 1.9,
                   sigma_resolution: float = 8.0,
                   dt_cap: float = 0.01) -> BaselineTable:
    """Tabulate stationary nonlinear (kappa, V) over a noise grid.

    Each entry solves the stationary problem for the eps = 0 normal form at
    parameter q0 and measures variance and the one-step lag-1 decay rate.
    The grid is sized per entry: dx small enough for Pe <= peclet_target and
    for sigma_resolution nodes per stationary standard deviation; dt capped by
    0.9 dx^2/noise.

    Raises:
        DomainError: q0 <= 0 or nonpositive grid entries.
    """
    if q0 <= 0:
        raise DomainError(f"q0 must be > 0, got {q0}")
    if d_grid is None:
        d_grid = default_baseline_grid()
    d_grid = np.asarray(d_grid, dtype=float)
    if np.any(d_grid <= 0):
        raise DomainError("baseline noise grid must be positive")

    model = SaddleNodeLinearDrift(p0=q0, eps=0.0)
    x_lo, x_hi = domain
    span = x_hi - x_lo
    probe = np.linspace(x_lo, x_hi, 512)
    max_f = float(np.max(np.abs(model.f(probe, 0.0))))

    kappas = np.empty_like(d_grid)
    vs = np.empty_like(d_grid)
    kappa_lin = 2.0 * math.sqrt(q0)
    for k, d_tilde in enumerate(d_grid):
        sigma = math.sqrt(d_tilde / kappa_lin)
        dx_target = min(sigma / sigma_resolution, peclet_target * d_tilde / max_f)
        n_intervals = max(int(math.ceil(span / dx_target)) - 1, 2)
        g = SpatialGrid(x_lo, x_hi, n_intervals)
        dt = min(dt_cap, 0.9 * g.dx**2 / d_tilde)

        stationary = solve_stationary(model, g, float(d_tilde), t=0.0)
        vs[k] = variance(stationary.density, g)
        tg = TimeGrid(0.0, dt, 1)
        a1, a2 = assemble_cn_pair(model, g, tg, float(d_tilde), 1)
        a = lag1_autocorrelation(stationary.density, a1, a2, g)
        kappas[k] = decay_rate_dynamic(a, dt)
    return BaselineTable(d_grid=d_grid, kappa=kappas, v=vs, q0=q0)


def fit_kappa_c(table: BaselineTable, fit_window_max: float = 0.05) -> float:
    """Tangent slope kappa_c of the small-noise decay-rate deficit.

    Fits kappa_linear - kappa_Y = kappa_c * (d_tilde/q0) through the origin
    over table points with d_tilde <= fit_window_max.

    Raises:
        FitError: fewer than 8 points in the window.
    """
    sel = (table.d_grid > 0) & (table.d_grid <= fit_window_max)
    if int(np.count_nonzero(sel)) < 8:
        raise FitError(
            f"kappa_c fit needs >= 8 points at noise <= {fit_window_max}, "
            f"got {int(np.count_nonzero(sel))}"
        )
    x = table.d_grid[sel] / table.q0
    y = 2.0 * math.sqrt(table.q0) - table.kappa[sel]
    return float(np.sum(x * y) / np.sum(x * x))


def quasi_static_nonlinear(model, t: float, noise: float, table: BaselineTable,
                           strict: bool = True):
    """Nonlinear quasi-static (kappa, v) at time t via the baseline table.

    Maps the instantaneous parameter p(t) and noise to the equivalent table
    noise level d_tilde = (q0/p)^{3/2} * noise, interpolates, and rescales
    back through the space/time scaling.

    Raises:
        FoldCrossedError: p(t) <= 0.
        ExtrapolationError: d_tilde outside the table (strict mode).
    """
    p_t = model.parameter(t)
    if p_t <= 0.0:
        raise FoldCrossedError(f"parameter {p_t} <= 0 at t={t}")
    d_tilde, _, smap = scale_parameters(p_t, 0.0, noise, table.q0)
    kappa_y, v_y = table.interpolate(d_tilde, strict=strict)
    return quasi_static_rescale(kappa_y, v_y, smap)


@dataclass(frozen=True)
class IndicatorSeries:
    """Per-instant indicator record; missing entries are NaN."""

    times: np.ndarray
    variance: np.ndarray
    lag1: np.ndarray
    lag1_per_unit_time: np.ndarray
    decay_rate: np.ndarray
    escape_rate: np.ndarray
    survival: np.ndarray
    cumulative_escape: np.ndarray
    kramers_rate: np.ndarray
    qs_lin_kappa: np.ndarray
    qs_lin_a: np.ndarray
    qs_lin_v: np.ndarray
    qs_nl_kappa: np.ndarray
    qs_nl_v: np.ndarray
    dt: float

    def __len__(self) -> int:
        return self.times.shape[0]

    def as_columns(self) -> dict[str, np.ndarray]:
        """Columns keyed and ordered per the CSV contract."""
        return {
            "t": self.times,
            "variance": self.variance,
            "lag1": self.lag1,
            "lag1_per_unit_time": self.lag1_per_unit_time,
            "decay_rate": self.decay_rate,
            "escape_rate": self.escape_rate,
            "survival": self.survival,
            "cumulative_escape": self.cumulative_escape,
            "kramers_rate": self.kramers_rate,
            "qs_lin_kappa": self.qs_lin_kappa,
            "qs_lin_a": self.qs_lin_a,
            "qs_lin_v": self.qs_lin_v,
            "qs_nl_kappa": self.qs_nl_kappa,
            "qs_nl_v": self.qs_nl_v,
        }

    def kramers_cumulative(self) -> np.ndarray:
        """Cumulative escape implied by the Kramers rates.

        Composes per-step factors 1 - dt*r_K(t_{n-1}) (left endpoints), kept
        in [0, 1]; NaN rates propagate from their first occurrence.
        """
        factors = 1.0 - self.dt * self.kramers_rate[:-1]
        factors = np.clip(factors, 0.0, 1.0)
        out = np.empty_like(self.kramers_rate)
        out[0] = 0.0
        out[1:] = 1.0 - np.cumprod(factors)
        return out


class IndicatorRecorder:
    """Evolution recorder assembling an :class:`IndicatorSeries`.

    Rows are stored for the initial instant and every ``stride``-th step
    (survival products and cumulative escape stay exact regardless of
    stride).  Optional columns: lag-1/decay (``lag1``), Kramers rate
    (``kramers``), linear quasi-static (``qs_linear``), nonlinear quasi-static
    (pass a ``baseline`` table).  ``densities_at`` lists 1-based time indices
    whose raw (unnormalized) densities are kept in ``self.snapshots``.
    """

    def __init__(self, model: DriftModel, g: SpatialGrid, tg: TimeGrid,
                 noise: float, *, lag1: bool = True, kramers: bool = False,
                 qs_linear: bool = False, baseline: BaselineTable | None = None,
                 strict_extrapolation: bool = True, stride: int = 1,
                 densities_at: tuple[int, ...] = ()) -> None:
        if stride < 1:
            raise DomainError(f"stride must be >= 1, got {stride}")
        self.model = model
        self.grid = g
        self.time_grid = tg
        self.noise = noise
        self.with_lag1 = lag1
        self.with_kramers = kramers
        self.with_qs_linear = qs_linear
        self.baseline = baseline
        self.strict_extrapolation = strict_extrapolation
        self.stride = stride
        self.density_indices = frozenset(densities_at)
        self.snapshots: list[tuple[float, DensityState]] = []
        self._rows: list[list[float]] = []
        self._pending_lag1 = math.nan
        self._prev_cumulative_survival = 1.0

    # -- reference columns -------------------------------------------------

    def _kramers_at(self, t: float) -> float:
        if not self.with_kramers:
            return math.nan
        try:
            return kramers_rate(kramers_inputs_from_model(self.model, t, self.noise))
        except NoEquilibriumError:
            return math.nan

    def _qs_linear_at(self, t: float):
        if not self.with_qs_linear:
            return math.nan, math.nan, math.nan
        try:
            return quasi_static_linear(self.model, t, self.noise, self.time_grid.dt)
        except NoEquilibriumError:
            return math.nan, math.nan, math.nan

    def _qs_nonlinear_at(self, t: float):
        if self.baseline is None:
            return math.nan, math.nan
        try:
            return quasi_static_nonlinear(
                self.model, t, self.noise, self.baseline,
                strict=self.strict_extrapolation,
            )
        except (NoEquilibriumError, ExtrapolationError):
            return math.nan, math.nan

    def _append_row(self, t: float, var: float, a: float, s_step: float,
                    cumulative: float) -> None:
        if math.isnan(a):
            per_unit, kappa = math.nan, math.nan
        else:
            per_unit = a ** (1.0 / self.time_grid.dt) if a > 0 else math.nan
            try:
                kappa = decay_rate_dynamic(a, self.time_grid.dt)
            except DomainError:
                kappa = math.nan
        qs_k, qs_a, qs_v = self._qs_linear_at(t)
        nl_k, nl_v = self._qs_nonlinear_at(t)
        self._rows.append([
            t, var, a, per_unit, kappa,
            (1.0 - s_step) / self.time_grid.dt, s_step, cumulative,
            self._kramers_at(t), qs_k, qs_a, qs_v, nl_k, nl_v,
        ])

    # -- evolve hooks --------------------------------------------------------

    def initial(self, state: DensityState) -> None:
        t = self.time_grid.time(1)
        self._prev_cumulative_survival = state.survival
        self._append_row(t, variance(state, self.grid), math.nan, 1.0, 0.0)
        if 1 in self.density_indices:
            self.snapshots.append((t, state))

    def before_step(self, n: int, state: DensityState, a1: TridiagonalOperator,
                    a2: TridiagonalOperator) -> None:
        self._pending_lag1 = math.nan
        if self.with_lag1 and n % self.stride == 0:
            self._pending_lag1 = lag1_autocorrelation(state, a1, a2, self.grid)

    def after_step(self, n: int, raw: DensityState) -> None:
        s_step = raw.survival / self._prev_cumulative_survival
        self._prev_cumulative_survival = raw.survival
        t = self.time_grid.time(n + 1)
        if n % self.stride == 0 or n == self.time_grid.n_steps:
            var = variance(normalize(raw, self.grid), self.grid)
            self._append_row(t, var, self._pending_lag1, s_step,
                             1.0 - raw.survival)
        if (n + 1) in self.density_indices:
            self.snapshots.append((t, raw))

    def finish(self) -> IndicatorSeries:
        data = np.asarray(self._rows, dtype=float)
        if data.size == 0:
            raise StructuralError("recorder finished with no rows")
        return IndicatorSeries(
            times=data[:, 0], variance=data[:, 1], lag1=data[:, 2],
            lag1_per_unit_time=data[:, 3], decay_rate=data[:, 4],
            escape_rate=data[:, 5], survival=data[:, 6],
            cumulative_escape=data[:, 7], kramers_rate=data[:, 8],
            qs_lin_kappa=data[:, 9], qs_lin_a=data[:, 10], qs_lin_v=data[:, 11],
            qs_nl_kappa=data[:, 12], qs_nl_v=data[:, 13],
            dt=self.time_grid.dt,
        )
