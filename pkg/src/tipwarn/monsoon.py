"""Reduced Indian-summer-monsoon box model and its scalar drift adapter.

The full model couples two soil-moisture layers (w1, w2), specific humidity
q_a, and near-surface air temperature T_a over land, driven by the planetary
albedo A_sys.  Process closures (all SI):

    E   = A * w1 * (T_a - T_oc) * (q_sat(T_s) - q_a)     evaporation, mm/s
    P   = B * q_a                                        precipitation, mm/s
    R   = C * w1 * P                                     runoff, mm/s
    A_v = G * (T_a - T_oc) * (g1*q_oc - g2*q_a)          moisture advection
    F   = H * T_a + J                                    longwave cooling
    A_T = K * (T_a - T_oc) * (theta_oc - theta_a)        heat advection

Setting the soil layers to equilibrium gives w1 = w2 = P/(E~ + R~); setting
the temperature equation to equilibrium and clearing the soil denominator
yields a quadratic in the land-ocean contrast x = T_a - T_oc whose upper root
is the physical branch (the cleared polynomial is negative at the root
separator Psi/H, so the roots always straddle it and the upper one keeps the
soil denominator positive).  The reduced humidity drift then follows from the
energy-balance identity E - P = (Psi - H*x)/L at that root, which stays
smooth through q_a <= 0.

The quadratic reduction requires zero heat advection (K = 0) and a saturation
humidity that does not vary along the reduction (T_s map slope zero);
otherwise the cleared equation is cubic and the reduction refuses to run.
The full 4-D right-hand side supports every term and serves as the
consistency harness.

Monsoon SDE runs use the decade as time unit; the drift adapter multiplies
the SI tendency by seconds_per_decade.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dataclass_fields
from typing import Callable

import numpy as np

from .drifts import DriftModel
from .errors import (
    ConfigError,
    DomainError,
    FoldCrossedError,
    NoEquilibriumError,
    PhysicalRegimeError,
    TipwarnError,
)
from .grids import SpatialGrid, TimeGrid
from .indicators import IndicatorRecorder, IndicatorSeries
from .solver import (AdmissibilityReport, check_admissibility, evolve,
                     stationary_density)

__all__ = [
    "SECONDS_PER_DECADE",
    "MonsoonParams",
    "MonsoonState",
    "BifurcationCurve",
    "MonsoonDrift",
    "MonsoonSweepResult",
    "full_rhs",
    "soil_equilibrium",
    "temperature_equilibrium",
    "scan_bifurcation",
    "sweep_escape",
]

SECONDS_PER_DECADE = 10 * 365.25 * 86400.0

# Unit multipliers into SI for config-declared units.
_UNIT_FACTORS = {
    "1": 1.0,
    "si": 1.0,
    "mm": 1.0,
    "mm/s": 1.0,
    "mm/day": 1.0 / 86400.0,
    "1/mm": 1.0,
    "s": 1.0,
    "day": 86400.0,
    "decade": SECONDS_PER_DECADE,
    "K": 1.0,
    "K/m": 1.0,
    "m": 1.0,
    "kg/kg": 1.0,
    "W/m^2": 1.0,
    "W/m^2/K": 1.0,
    "W/m^2 per mm/s": 1.0,
    "mm/s/K": 1.0,
}


@dataclass(frozen=True)
class MonsoonParams:
    """Process constants of the box model, all in SI units.

    Field names follow the model's closure coefficients; see the module
    docstring for what each multiplies.  ``A_sys0`` is the present-day
    planetary albedo.  ``q_sat(T_s) = q_sat0 + q_sat_slope*(T_s - t_s_ref)``
    with the surface temperature mapped affinely from the air temperature,
    ``T_s = t_s_offset + t_s_slope*T_a``.  The lapse rate is affine,
    ``Gamma(T, q) = gamma0 + gamma_t*T + gamma_q*q``, entering the potential
    temperatures ``theta = T - (Gamma - gamma_a)*z``.
    """

    A: float
    B: float
    C: float
    G: float
    H: float
    J: float
    K: float
    g1: float
    g2: float
    I_q: float
    I_T: float
    L: float
    f1: float
    f2: float
    tau: float
    T_oc: float
    q_oc: float
    I0_cos_xi: float
    z1: float
    z2: float
    gamma0: float
    gamma_t: float
    gamma_q: float
    gamma_a: float
    q_sat0: float
    q_sat_slope: float
    t_s_ref: float
    t_s_offset: float
    t_s_slope: float
    A_sys0: float

    def __post_init__(self) -> None:
        for name in ("I_q", "I_T", "f1", "f2", "tau"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"monsoon parameter {name} must be positive")

    # -- closures ------------------------------------------------------------

    def surface_temperature(self, t_a):
        return self.t_s_offset + self.t_s_slope * np.asarray(t_a, dtype=float)

    def saturation_humidity(self, t_s):
        return self.q_sat0 + self.q_sat_slope * (np.asarray(t_s, dtype=float) - self.t_s_ref)

    def lapse_rate(self, t, q):
        return self.gamma0 + self.gamma_t * np.asarray(t, dtype=float) + self.gamma_q * q

    def potential_temperature(self, t, q, z):
        return np.asarray(t, dtype=float) - (self.lapse_rate(t, q) - self.gamma_a) * z

    def reduction_saturation(self) -> float:
        """Saturation humidity as seen by the quadratic reduction.

        Raises:
            PhysicalRegimeError: if heat advection or a T_a-dependent
                saturation humidity makes the cleared equilibrium non-quadratic.
        """
        if self.K != 0.0 or self.q_sat_slope * self.t_s_slope != 0.0:
            raise PhysicalRegimeError(
                "quadratic temperature reduction requires K = 0 and a "
                "saturation humidity independent of T_a"
            )
        return float(self.saturation_humidity(self.surface_temperature(self.T_oc)))

    @classmethod
    def from_config(cls, raw: dict) -> "MonsoonParams":
        """Build from a config mapping; entries may carry explicit units.

        Each field is either a plain number (already SI) or an object
        ``{"value": v, "unit": u}`` with ``u`` from the supported unit table.

        Raises:
            ConfigError: unknown fields, missing fields, unknown units.
        """
        names = {f.name for f in dataclass_fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ConfigError(f"unknown monsoon parameters: {sorted(unknown)}")
        missing = names - set(raw)
        if missing:
            raise ConfigError(f"missing monsoon parameters: {sorted(missing)}")
        values = {}
        for name, entry in raw.items():
            if isinstance(entry, dict):
                extra = set(entry) - {"value", "unit"}
                if extra or "value" not in entry:
                    raise ConfigError(f"malformed parameter entry {name}: {entry}")
                unit = entry.get("unit", "si")
                if unit not in _UNIT_FACTORS:
                    raise ConfigError(f"unknown unit {unit!r} for parameter {name}")
                values[name] = float(entry["value"]) * _UNIT_FACTORS[unit]
            else:
                values[name] = float(entry)
        return cls(**values)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclass_fields(self)}


@dataclass(frozen=True)
class MonsoonState:
    """Full-model state: humidity, air temperature, two soil layers."""

    q_a: float
    t_a: float
    w1: float
    w2: float

    def __post_init__(self) -> None:
        if self.q_a < 0 or self.w1 < 0 or self.w2 < 0:
            raise DomainError("MonsoonState requires q_a, w1, w2 >= 0")


def full_rhs(state: MonsoonState, a_sys: float, p: MonsoonParams):
    """Time derivatives (dw1, dw2, dq_a, dT_a) of the full model, SI per second."""
    contrast = state.t_a - p.T_oc
    sat = float(p.saturation_humidity(p.surface_temperature(state.t_a)))
    evap = p.A * state.w1 * contrast * (sat - state.q_a)
    precip = p.B * state.q_a
    runoff = p.C * state.w1 * precip
    advection = p.G * contrast * (p.g1 * p.q_oc - p.g2 * state.q_a)
    cooling = p.H * state.t_a + p.J
    theta_oc = float(p.potential_temperature(p.T_oc, p.q_oc, p.z1))
    theta_a = float(p.potential_temperature(state.t_a, state.q_a, p.z2))
    heat_adv = p.K * contrast * (theta_oc - theta_a)
    solar = p.I0_cos_xi * (1.0 - a_sys)

    dw1 = (precip - evap - runoff) / p.f1 + (state.w2 - state.w1) / p.tau
    dw2 = p.f1 * (state.w1 - state.w2) / (p.f2 * p.tau)
    dq = (evap - precip + advection) / p.I_q
    dt_a = (p.L * (precip - evap) - cooling + solar + heat_adv) / p.I_T
    return dw1, dw2, dq, dt_a


def soil_equilibrium(q_a: float, t_a: float, p: MonsoonParams):
    """Equilibrium soil moisture w1 = w2 = P/(E~ + R~).

    Raises:
        PhysicalRegimeError: nonpositive denominator E~ + R~.
    """
    sat = float(p.saturation_humidity(p.surface_temperature(t_a)))
    e_tilde = p.A * (t_a - p.T_oc) * (sat - q_a)
    r_tilde = p.C * p.B * q_a
    denom = e_tilde + r_tilde
    if denom <= 0.0:
        raise PhysicalRegimeError(
            f"soil equilibrium denominator {denom} <= 0 at q_a={q_a}, T_a={t_a}"
        )
    w = p.B * q_a / denom
    return w, w


def _psi(a_sys: float, p: MonsoonParams) -> float:
    """Root separator Psi = I0cosxi*(1 - A_sys) - J - H*T_oc."""
    return p.I0_cos_xi * (1.0 - a_sys) - p.J - p.H * p.T_oc


def _contrast_roots(q, a_sys: float, p: MonsoonParams, clamp: bool):
    """Upper roots x(q) of the cleared temperature-equilibrium quadratic.

    Vectorized over q.  Returns (x, clamped) where ``clamped`` marks entries
    whose discriminant was negative and clamped to zero.
    """
    sat = p.reduction_saturation()
    q = np.asarray(q, dtype=float)
    w_bar = p.A * (sat - q)
    if np.any(w_bar <= 0.0):
        raise PhysicalRegimeError(
            "humidity reached the saturation value; reduction invalid"
        )
    rho = p.C * p.B * q
    lam = p.L * p.C * p.B**2 * q * q
    psi = _psi(a_sys, p)
    qa = p.H * w_bar
    qb = p.H * rho - psi * w_bar
    qc = -(lam + psi * rho)
    disc = qb * qb - 4.0 * qa * qc
    clamped = disc < 0.0
    if np.any(clamped) and not clamp:
        raise NoEquilibriumError(
            f"temperature equilibrium lost its root at A_sys={a_sys}"
        )
    disc = np.where(clamped, 0.0, disc)
    x = (-qb + np.sqrt(disc)) / (2.0 * qa)
    return x, clamped


def temperature_equilibrium(q_a: float, a_sys: float, p: MonsoonParams) -> float:
    """Equilibrium air temperature with soil moisture eliminated.

    Solves the cleared quadratic in the land-ocean contrast and returns
    ``T_oc`` plus its upper root, the branch continuous with the present-day
    state (and the one keeping the soil denominator positive).

    Raises:
        NoEquilibriumError: negative discriminant.
        PhysicalRegimeError: saturation regime or non-quadratic reduction.
    """
    x, _ = _contrast_roots(float(q_a), a_sys, p, clamp=False)
    return p.T_oc + float(x)


def _albedo_from_contrast(q, x, p: MonsoonParams):
    """A_sys from the temperature equation given the moisture-balance root."""
    m = p.g1 * p.q_oc - p.g2 * q
    latent = p.L * p.G * x * m  # L*(P - E) = L*A_v at moisture balance
    return 1.0 - (p.H * (p.T_oc + x) + p.J - latent) / p.I0_cos_xi


@dataclass(frozen=True)
class BifurcationCurve:
    """Equilibrium albedo along a humidity scan, with the fold if present."""

    q: np.ndarray
    a_sys: np.ndarray
    stable: np.ndarray
    fold_q: float | None
    fold_a: float | None

    def as_columns(self) -> dict[str, np.ndarray]:
        return {"q_a": self.q, "a_sys": self.a_sys,
                "stable": self.stable.astype(int)}


def scan_bifurcation(p: MonsoonParams, q_grid: np.ndarray) -> BifurcationCurve:
    """Equilibrium manifold A_sys(q_a) and its fold.

    Per humidity sample the moisture balance E - P + A_v = 0 (with soil
    eliminated) is itself a quadratic in the contrast with exactly one
    positive root; the temperature equation then gives A_sys in closed form.
    The fold is the curve maximum, refined by a parabola through the three
    samples around the discrete maximum; samples above the fold humidity are
    the stable branch.

    Raises:
        DomainError: q_grid not strictly increasing/positive, or advection
            target m = g1*q_oc - g2*q nonpositive somewhere on the grid.
    """
    q = np.asarray(q_grid, dtype=float)
    if q.ndim != 1 or q.size < 3:
        raise DomainError("bifurcation scan needs >= 3 humidity samples")
    if np.any(q <= 0) or np.any(np.diff(q) <= 0):
        raise DomainError("q_grid must be positive and strictly increasing")
    sat = p.reduction_saturation()
    m = p.g1 * p.q_oc - p.g2 * q
    w_bar = p.A * (sat - q)
    if np.any(m <= 0) or np.any(w_bar <= 0):
        raise DomainError(
            "scan grid leaves the monsoon regime (advection or saturation margin"
            " nonpositive)"
        )
    precip = p.B * q
    rho = p.C * precip
    # G*m*W_bar x^2 + G*m*rho x - P*rho = 0; positive root.
    qa = p.G * m * w_bar
    qb = p.G * m * rho
    qc = -precip * rho
    x = (-qb + np.sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa)
    a_sys = _albedo_from_contrast(q, x, p)

    i = int(np.argmax(a_sys))
    if i == 0 or i == q.size - 1:
        stable = np.ones_like(q, dtype=bool) if a_sys[0] > a_sys[-1] else \
            np.zeros_like(q, dtype=bool)
        return BifurcationCurve(q=q, a_sys=a_sys, stable=stable,
                                fold_q=None, fold_a=None)
    # Quadratic refinement through the three samples around the maximum.
    q3 = q[i - 1 : i + 2]
    a3 = a_sys[i - 1 : i + 2]
    denom = (q3[0] - q3[1]) * (q3[0] - q3[2]) * (q3[1] - q3[2])
    aa = (q3[2] * (a3[1] - a3[0]) + q3[1] * (a3[0] - a3[2])
          + q3[0] * (a3[2] - a3[1])) / denom
    bb = (q3[2] ** 2 * (a3[0] - a3[1]) + q3[1] ** 2 * (a3[2] - a3[0])
          + q3[0] ** 2 * (a3[1] - a3[2])) / denom
    if aa == 0.0:
        fold_q, fold_a = float(q3[1]), float(a3[1])
    else:
        fold_q = float(-bb / (2.0 * aa))
        cc = a3[1] - aa * q3[1] ** 2 - bb * q3[1]
        fold_a = float(aa * fold_q**2 + bb * fold_q + cc)
    return BifurcationCurve(q=q, a_sys=a_sys, stable=q > fold_q,
                            fold_q=fold_q, fold_a=fold_a)


def _bisect(fun: Callable[[float], float], lo: float, hi: float,
            iters: int = 80) -> float:
    f_lo = fun(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f_mid = fun(mid)
        if f_mid == 0.0:
            return mid
        if (f_lo < 0) == (f_mid < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class MonsoonDrift(DriftModel):
    """Scalar humidity drift under a linear albedo ramp, in decade units.

    ``f(q, t)`` evaluates the reduced tendency (E - P + A_v)/I_q at the
    temperature-equilibrium root for albedo ``A_sys0 + eps*t`` (t in decades)
    and converts to per-decade.  Past the fold the discriminant is clamped at
    zero to keep the drift continuous; ``fold_clamped_steps`` counts those
    evaluations for run metadata.

    Equilibria and curvatures are found numerically: a dense sign-change scan
    plus bisection, 5-point stencils of width ``stencil_h`` for curvatures,
    trapezoid quadrature for the barrier height.
    """

    def __init__(self, params: MonsoonParams, a0: float | None = None,
                 eps: float = 0.0, domain: tuple[float, float] = (-0.015, 0.045),
                 stencil_h: float = 0.001) -> None:
        if stencil_h <= 0:
            raise ConfigError(f"stencil_h must be positive, got {stencil_h}")
        self.params = params
        self.a0 = params.A_sys0 if a0 is None else float(a0)
        self.eps = float(eps)
        self.domain = (float(domain[0]), float(domain[1]))
        self.stencil_h = float(stencil_h)
        self.fold_clamped_steps = 0
        self._equilibria_cache: tuple[float, tuple] | None = None
        # Validate the reduction once up front.
        params.reduction_saturation()

    def albedo(self, t: float) -> float:
        return self.a0 + self.eps * t

    def f(self, x, t: float):
        p = self.params
        a_sys = self.albedo(t)
        q = np.asarray(x, dtype=float)
        contrast, clamped = _contrast_roots(q, a_sys, p, clamp=True)
        if np.any(clamped):
            self.fold_clamped_steps += 1
        psi = _psi(a_sys, p)
        net_evap = (psi - p.H * contrast) / p.L  # E - P at the root
        advection = p.G * contrast * (p.g1 * p.q_oc - p.g2 * q)
        return (net_evap + advection) / p.I_q * SECONDS_PER_DECADE

    def potential(self, x, t: float):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        lo = min(float(x_arr.min()), 0.0)
        hi = max(float(x_arr.max()), 0.0)
        grid = np.linspace(lo, hi if hi > lo else lo + 1.0, 2049)
        f_vals = np.asarray(self.f(grid, t), dtype=float)
        seg = (f_vals[:-1] + f_vals[1:]) * 0.5 * np.diff(grid)
        u_grid = -np.concatenate(([0.0], np.cumsum(seg)))
        u_grid -= np.interp(0.0, grid, u_grid)
        out = np.interp(x_arr, grid, u_grid)
        return out[0] if np.isscalar(x) or np.asarray(x).ndim == 0 else out

    # -- equilibria ----------------------------------------------------------

    def equilibria(self, t: float):
        """Sorted drift roots in the domain with their slopes f'(root)."""
        cached = self._equilibria_cache
        if cached is not None and cached[0] == t:
            return cached[1]
        lo, hi = self.domain
        qs = np.linspace(lo, hi, 2048)
        fv = np.asarray(self.f(qs, t), dtype=float)
        roots = []
        sign_change = np.flatnonzero(fv[:-1] * fv[1:] < 0.0)
        for i in sign_change:
            root = _bisect(lambda q: float(self.f(q, t)), float(qs[i]), float(qs[i + 1]))
            roots.append((root, self._slope(root, t)))
        exact = np.flatnonzero(fv == 0.0)
        for i in exact:
            roots.append((float(qs[i]), self._slope(float(qs[i]), t)))
        result = tuple(sorted(roots))
        self._equilibria_cache = (t, result)
        return result

    def _slope(self, q: float, t: float) -> float:
        h = self.stencil_h
        stencil = np.array([q - 2 * h, q - h, q + h, q + 2 * h])
        f_vals = np.asarray(self.f(stencil, t), dtype=float)
        return float((f_vals[0] - 8 * f_vals[1] + 8 * f_vals[2] - f_vals[3]) / (12 * h))

    def stable_equilibrium(self, t: float) -> float:
        stable = [q for q, slope in self.equilibria(t) if slope < 0]
        if not stable:
            raise FoldCrossedError(f"no stable humidity equilibrium at t={t}")
        return stable[-1]

    def unstable_equilibrium(self, t: float) -> float:
        q_s = self.stable_equilibrium(t)
        unstable = [q for q, slope in self.equilibria(t) if slope > 0 and q < q_s]
        if not unstable:
            raise FoldCrossedError(f"no unstable humidity equilibrium at t={t}")
        return unstable[-1]

    def well_curvature(self, t: float) -> float:
        kappa = -self._slope(self.stable_equilibrium(t), t)
        if kappa <= 0:
            raise FoldCrossedError(f"well curvature degenerate at t={t}")
        return kappa

    def hill_curvature(self, t: float) -> float:
        beta = self._slope(self.unstable_equilibrium(t), t)
        if beta <= 0:
            raise FoldCrossedError(f"hill curvature degenerate at t={t}")
        return beta

    def barrier_height(self, t: float) -> float:
        q_s = self.stable_equilibrium(t)
        q_u = self.unstable_equilibrium(t)
        grid = np.linspace(q_u, q_s, 1025)
        f_vals = np.asarray(self.f(grid, t), dtype=float)
        height = float(np.trapezoid(f_vals, grid))  # U(q_u)-U(q_s) = +int_{q_u}^{q_s} f
        if height <= 0:
            raise FoldCrossedError(f"barrier height degenerate at t={t}")
        return height


@dataclass(frozen=True)
class MonsoonSweepResult:
    """One escape scenario of a sweep (or its recorded failure)."""

    label: str
    a0: float
    eps: float
    noise: float
    t_end: float
    series: IndicatorSeries | None
    albedo: np.ndarray | None
    admissibility: AdmissibilityReport | None
    grid: SpatialGrid | None
    time_grid: TimeGrid | None
    fold_clamped_steps: int = 0
    error: str | None = None


def _scenario_discretization(drift: MonsoonDrift, noise: float, t_end: float,
                             dx_cap: float, dt_cap: float):
    """Grid/time sizing for one scenario: Pe <= 1.9 and resolved well width."""
    lo, hi = drift.domain
    span = hi - lo
    probe_q = np.linspace(lo, hi, 256)
    max_f = 1e-12
    for t in np.linspace(0.0, t_end, 17):
        max_f = max(max_f, float(np.max(np.abs(drift.f(probe_q, float(t))))))
    dx_target = min(dx_cap, 1.9 * noise / max_f)
    try:
        sigma = math.sqrt(noise / drift.well_curvature(0.0))
        dx_target = min(dx_target, sigma / 8.0)
        # Pe > 2 spikes on near-empty drift cliffs may not starve the grid.
        dx_target = max(dx_target, min(dx_cap, sigma / 20.0))
    except NoEquilibriumError:
        pass
    n_intervals = max(int(math.ceil(span / dx_target)) - 1, 2)
    g = SpatialGrid(lo, hi, n_intervals)
    dt_target = min(dt_cap, 0.9 * g.dx**2 / noise)
    n_steps = max(int(math.ceil(t_end / dt_target)), 1)
    tg = TimeGrid(0.0, t_end, n_steps)
    return g, tg


def sweep_escape(p: MonsoonParams, albedo_paths, noise_levels, *,
                 domain: tuple[float, float] = (-0.015, 0.045),
                 dx_cap: float = 0.001, dt_cap: float = 0.0002,
                 max_rows: int = 4000) -> list[MonsoonSweepResult]:
    """Escape curves over the product of albedo ramps and noise levels.

    ``albedo_paths`` entries are (label, a0, eps_per_decade, t_end_decades).
    Grids are auto-sized per scenario (see :func:`_scenario_discretization`);
    each run starts from the stationary density at t = 0 and records survival
    and cumulative escape (indicator stride keeps at most ``max_rows`` rows).
    Scenario failures are recorded on their result rows; the sweep continues.
    """
    results: list[MonsoonSweepResult] = []
    for label, a0, eps, t_end in albedo_paths:
        for noise in noise_levels:
            drift = MonsoonDrift(p, a0=a0, eps=eps, domain=domain)
            try:
                g, tg = _scenario_discretization(drift, noise, t_end, dx_cap, dt_cap)
                report = check_admissibility(drift, g, tg, noise)
                stride = max(1, tg.n_steps // max_rows)
                recorder = IndicatorRecorder(drift, g, tg, noise,
                                             lag1=False, stride=stride)
                initial = stationary_density(drift, g, noise, tg.t_start)
                series = evolve(drift, g, tg, noise, initial, recorder)
                results.append(MonsoonSweepResult(
                    label=label, a0=a0, eps=eps, noise=noise, t_end=t_end,
                    series=series, albedo=a0 + eps * series.times,
                    admissibility=report, grid=g, time_grid=tg,
                    fold_clamped_steps=drift.fold_clamped_steps,
                ))
            except TipwarnError as exc:
                results.append(MonsoonSweepResult(
                    label=label, a0=a0, eps=eps, noise=noise, t_end=t_end,
                    series=None, albedo=None, admissibility=None,
                    grid=None, time_grid=None,
                    fold_clamped_steps=drift.fold_clamped_steps,
                    error=f"{type(exc).__name__}: {exc}",
                ))
    return results
