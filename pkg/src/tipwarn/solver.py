"""Finite-difference Fokker-Planck solver with absorbing boundaries.

Discretizes dP/dt = D d2P/dx2 - d(f P)/dx on a :class:`~tipwarn.grids.SpatialGrid`
using second-order central differences in the product-rule form, so an interior
row i of the stationary operator A reads

    A(i,i-1) =  f_i/(2 dx) + D/dx^2
    A(i,i)   = (f_{i-1} - f_{i+1})/(2 dx) - 2 D/dx^2
    A(i,i+1) = -f_i/(2 dx) + D/dx^2

with Dirichlet rows at both boundary nodes.  Time stepping is Crank-Nicolson:
A2^{n+1} p^{n+1} = -A1^{n} p^{n}, where A1/A2 carry +1/-1 on the interior
diagonal plus (dt/2) times the stencil at t_n / t_{n+1}.  A1 boundary rows are
identically zero so the Dirichlet rows of A2 pin the boundary values of every
iterate to exactly zero.

The stationary density and its decay eigenvalue come from inverse power
iteration on the interior block with one reused tridiagonal factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy.linalg import get_lapack_funcs

from .drifts import DriftModel
from .errors import (
    ConvergenceError,
    DegenerateDensityError,
    DomainError,
    NumericalFailureError,
    SolverQualityError,
    StructuralError,
)
from .grids import DensityState, SpatialGrid, TimeGrid, normalize

__all__ = [
    "TridiagonalOperator",
    "StationaryResult",
    "AdmissibilityReport",
    "EvolutionRecorder",
    "assemble_stationary",
    "solve_stationary",
    "stationary_density",
    "assemble_cn_pair",
    "step",
    "sanitize_density",
    "check_admissibility",
    "evolve",
]

_gttrf, _gttrs = get_lapack_funcs(("gttrf", "gttrs"), (np.array([1.0]),))

PECLET_BOUND = 2.0


@dataclass(frozen=True)
class TridiagonalOperator:
    """Tridiagonal matrix in banded form with a reusable LU factorization.

    ``sub[i]`` is entry (i, i-1), ``diag[i]`` entry (i, i), ``sup[i]`` entry
    (i, i+1), all length N+1; ``sub[0]`` and ``sup[-1]`` are unused and zero.
    ``label`` records which operator this is ("A", "A1", "A2"); ``time_index``
    the 1-based step it was assembled for.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    label: str = "A"
    time_index: int = 1
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = self.diag.shape[0]
        if not (self.sub.shape == (n,) and self.sup.shape == (n,)):
            raise StructuralError("band arrays must share one length")
        if self.sub[0] != 0.0 or self.sup[-1] != 0.0:
            raise StructuralError("unused band slots sub[0], sup[-1] must be zero")

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if v.shape != (self.n,):
            raise StructuralError(f"vector length {v.shape} != {self.n}")
        out = self.diag * v
        out[1:] += self.sub[1:] * v[:-1]
        out[:-1] += self.sup[:-1] * v[1:]
        return out

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        """Transpose action self.T @ v."""
        if v.shape != (self.n,):
            raise StructuralError(f"vector length {v.shape} != {self.n}")
        out = self.diag * v
        out[1:] += self.sup[:-1] * v[:-1]
        out[:-1] += self.sub[1:] * v[1:]
        return out

    def _factorization(self):
        fact = self._cache.get("lu")
        if fact is None:
            dl, d, du, du2, ipiv, info = _gttrf(
                self.sub[1:].copy(), self.diag.copy(), self.sup[:-1].copy()
            )
            if info != 0:
                raise NumericalFailureError(
                    f"tridiagonal factorization of {self.label} failed (info={info})"
                )
            fact = (dl, d, du, du2, ipiv)
            self._cache["lu"] = fact
        return fact

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve self @ x = rhs."""
        dl, d, du, du2, ipiv = self._factorization()
        x, info = _gttrs(dl, d, du, du2, ipiv, rhs)
        if info != 0:
            raise NumericalFailureError(f"tridiagonal solve failed (info={info})")
        return x

    def solve_transposed(self, rhs: np.ndarray) -> np.ndarray:
        """Solve self.T @ x = rhs, reusing the same factorization."""
        dl, d, du, du2, ipiv = self._factorization()
        x, info = _gttrs(dl, d, du, du2, ipiv, rhs, trans="T")
        if info != 0:
            raise NumericalFailureError(f"transposed tridiagonal solve failed (info={info})")
        return x


@dataclass(frozen=True)
class StationaryResult:
    """Quasi-stationary density with its decay eigenvalue and residual."""

    density: DensityState
    gamma1: float
    residual: float


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the discretization admissibility checks."""

    max_abs_drift: float
    peclet: float
    peclet_ok: bool
    dt: float
    dt_bound: float
    dt_ok: bool
    n_time_samples: int

    @property
    def ok(self) -> bool:
        return self.peclet_ok and self.dt_ok

    def to_dict(self) -> dict:
        return {
            "max_abs_drift": self.max_abs_drift,
            "peclet": self.peclet,
            "peclet_bound": PECLET_BOUND,
            "peclet_ok": self.peclet_ok,
            "dt": self.dt,
            "dt_bound": self.dt_bound,
            "dt_ok": self.dt_ok,
            "n_time_samples": self.n_time_samples,
        }


class EvolutionRecorder(Protocol):
    """Per-step measurement hooks consumed by :func:`evolve`."""

    def initial(self, state: DensityState) -> None: ...

    def before_step(self, n: int, state: DensityState,
                    a1: TridiagonalOperator, a2: TridiagonalOperator) -> None: ...

    def after_step(self, n: int, raw: DensityState) -> None: ...

    def finish(self): ...


def _stencil(f_nodes: np.ndarray, dx: float, noise: float):
    """Interior stencil bands of the stationary operator; boundary rows zeroed.

    Interior rows keep their boundary-column entries (they multiply the pinned
    zero boundary values, so they never affect the dynamics).
    """
    inv2dx = 1.0 / (2.0 * dx)
    diff = noise / dx**2
    sub = f_nodes * inv2dx + diff
    sup = -f_nodes * inv2dx + diff
    diag = np.zeros_like(f_nodes)
    diag[1:-1] = (f_nodes[:-2] - f_nodes[2:]) * inv2dx - 2.0 * diff
    sub[0] = 0.0   # nonexistent entry
    sub[-1] = 0.0  # boundary row N+1
    sup[0] = 0.0   # boundary row 1
    sup[-1] = 0.0  # nonexistent entry
    return sub, diag, sup


def assemble_stationary(model: DriftModel, g: SpatialGrid, noise: float,
                        t: float) -> TridiagonalOperator:
    """Stationary operator A at time t, Dirichlet rows at both boundaries.

    Raises:
        DomainError: if ``noise <= 0``.
    """
    if noise <= 0:
        raise DomainError(f"noise must be > 0, got {noise}")
    f_nodes = np.asarray(model.f(g.nodes, t), dtype=float)
    sub, diag, sup = _stencil(f_nodes, g.dx, noise)
    diag[0] = 1.0
    diag[-1] = 1.0
    return TridiagonalOperator(sub, diag, sup, label="A")


def solve_stationary(model: DriftModel, g: SpatialGrid, noise: float, t: float,
                     max_iters: int = 500, tol: float = 1e-12) -> StationaryResult:
    """Leading eigenpair of A by inverse power iteration on the interior block.

    The eigenvalue of smallest magnitude gamma1 is the quasi-stationary decay
    rate (negative: absorbing boundaries leak mass); its eigenvector, made
    nonnegative and normalized, is the quasi-stationary density.

    The interior tridiagonal block is factorized once and reused across
    iterations.  Convergence is decided on the eigenvalue estimate
    (|change| <= tol); the reported residual is max|A v - gamma1 v| for the
    unit-norm eigenvector.

    Raises:
        ConvergenceError: iteration budget exhausted.
        SolverQualityError: eigenvector negativity beyond sanitization
            tolerance, or gamma1 positive beyond the residual noise floor.
        NumericalFailureError: singular factorization.
    """
    a = assemble_stationary(model, g, noise, t)
    n_nodes = g.n_nodes
    interior = slice(1, n_nodes - 1)
    t_op = TridiagonalOperator(
        np.concatenate(([0.0], a.sub[2 : n_nodes - 1])),
        a.diag[interior].copy(),
        np.concatenate((a.sup[1 : n_nodes - 2], [0.0])),
        label="A-interior",
    )

    v = np.ones(n_nodes - 2)
    v /= np.linalg.norm(v)
    gamma = np.inf
    for _ in range(max_iters):
        y = t_op.solve(v)
        norm_y = np.linalg.norm(y)
        if not np.isfinite(norm_y) or norm_y == 0.0:
            raise NumericalFailureError("inverse iteration produced a degenerate vector")
        gamma_new = float(np.dot(y, v) / np.dot(y, y))
        v = y / norm_y
        if abs(gamma_new - gamma) <= tol:
            gamma = gamma_new
            break
        gamma = gamma_new
    else:
        raise ConvergenceError(
            f"inverse iteration did not converge in {max_iters} iterations"
        )

    full = np.zeros(n_nodes)
    full[interior] = v
    if full.sum() < 0.0:
        full = -full
    residual = float(np.max(np.abs(a.matvec(full) - gamma * full)))

    peak = float(full.max())
    if peak <= 0.0:
        raise SolverQualityError("stationary eigenvector has no positive part")
    neg_tol = 1e-10 * peak
    if float(full.min()) < -neg_tol:
        raise SolverQualityError(
            f"stationary eigenvector mixes signs beyond tolerance (min {full.min()})"
        )
    np.clip(full, 0.0, None, out=full)

    # gamma1 < 0 enforced only when it is resolvable above solver noise.
    noise_floor = max(10.0 * residual, 1e3 * np.finfo(float).eps * float(np.abs(a.diag).max()))
    if gamma > noise_floor:
        raise SolverQualityError(
            f"leading eigenvalue {gamma} is positive beyond noise floor {noise_floor}"
        )

    density = normalize(DensityState(full), g)
    return StationaryResult(density=density, gamma1=gamma, residual=residual)


def stationary_density(model: DriftModel, g: SpatialGrid, noise: float,
                       t: float, peclet_cap: float = 1.9,
                       max_refine: int = 64) -> DensityState:
    """Quasi-stationary density on ``g``, eigensolved on a Pe-safe grid.

    Central differencing makes the stationary eigenvector oscillate in sign
    wherever the cell Peclet number |f| dx / D exceeds 2, which trips the
    quality gate in :func:`solve_stationary` on coarse grids over steep
    drifts.  This wrapper refines the grid by the smallest integer factor
    that brings the Peclet number under ``peclet_cap``, eigensolves there,
    and restricts back to the nodes of ``g`` (which are a subset of the
    refined nodes).  The restriction is clipped at zero and renormalized.

    Raises:
        DomainError: refinement factor beyond ``max_refine``.
    """
    f_nodes = np.asarray(model.f(g.nodes, t), dtype=float)
    peclet = float(np.max(np.abs(f_nodes))) * g.dx / noise
    factor = max(1, int(np.ceil(peclet / peclet_cap)))
    if factor == 1:
        return solve_stationary(model, g, noise, t).density
    if factor > max_refine:
        raise DomainError(
            f"stationary init needs refinement x{factor} (> {max_refine}); "
            "grid too coarse for this drift"
        )
    fine = SpatialGrid(g.x_start, g.x_end,
                       (g.n_intervals + 1) * factor - 1)
    coarse = solve_stationary(model, fine, noise, t).density.values[::factor]
    restricted = np.clip(coarse, 0.0, None)
    restricted[0] = 0.0
    restricted[-1] = 0.0  # coarse Dirichlet node, interior on the fine grid
    if restricted.sum() <= 0.0:
        raise DegenerateDensityError("restricted stationary density is empty")
    return normalize(DensityState(restricted), g)


def _cn_from_drift_values(f_n: np.ndarray, f_np1: np.ndarray, g: SpatialGrid,
                          dt: float, noise: float, n: int):
    half = dt / 2.0
    sub_n, diag_n, sup_n = _stencil(f_n, g.dx, noise)
    sub_p, diag_p, sup_p = _stencil(f_np1, g.dx, noise)

    a1_diag = half * diag_n
    a1_diag[1:-1] += 1.0
    a1 = TridiagonalOperator(half * sub_n, a1_diag, half * sup_n,
                             label="A1", time_index=n)

    a2_diag = half * diag_p
    a2_diag[1:-1] += -1.0
    a2_diag[0] = 1.0
    a2_diag[-1] = 1.0
    a2 = TridiagonalOperator(half * sub_p, a2_diag, half * sup_p,
                             label="A2", time_index=n)
    return a1, a2


def assemble_cn_pair(model: DriftModel, g: SpatialGrid, tg: TimeGrid,
                     noise: float, n: int):
    """Crank-Nicolson pair (A1 at t_n, A2 at t_{n+1}) for step n (1-based).

    A2 carries Dirichlet boundary rows; A1 boundary rows are zero so the
    stepped density keeps exact zero boundaries.

    Raises:
        DomainError: if ``noise <= 0`` or n outside 1..M.
    """
    if noise <= 0:
        raise DomainError(f"noise must be > 0, got {noise}")
    if not 1 <= n <= tg.n_steps:
        raise DomainError(f"step index {n} outside 1..{tg.n_steps}")
    f_n = np.asarray(model.f(g.nodes, tg.time(n)), dtype=float)
    f_np1 = np.asarray(model.f(g.nodes, tg.time(n + 1)), dtype=float)
    return _cn_from_drift_values(f_n, f_np1, g, tg.dt, noise, n)


def sanitize_density(values: np.ndarray) -> np.ndarray:
    """Clamp tiny Crank-Nicolson negativity; reject genuine sign defects.

    Values in [-neg_tol, 0) with neg_tol = 1e-10 * max(values) are set to 0;
    anything below -neg_tol raises.

    Raises:
        SolverQualityError: negativity beyond tolerance (unstable run).
    """
    peak = float(values.max(initial=0.0))
    neg_tol = 1e-10 * peak
    low = float(values.min(initial=0.0))
    if low < -neg_tol:
        raise SolverQualityError(
            f"density went negative beyond tolerance: min {low}, allowed {-neg_tol}"
        )
    if low < 0.0:
        values = np.where(values < 0.0, 0.0, values)
    return values


def step(p_prev: DensityState, a1: TridiagonalOperator, a2: TridiagonalOperator,
         g: SpatialGrid, sanitize: bool = True) -> DensityState:
    """One Crank-Nicolson step: solve A2 p_next = -A1 p_prev.

    The caller is expected to pass a normalized ``p_prev`` (the survival
    bookkeeping assumes unit incoming mass); the output is NOT renormalized.
    With ``sanitize=False`` the raw linear-solve output is returned (exact
    linearity, negativity allowed) and survival is carried over unchanged.

    Raises:
        NumericalFailureError: singular tridiagonal solve.
        SolverQualityError: sanitization failure or per-step mass growth.
    """
    rhs = -a1.matvec(p_prev.values)
    vals = a2.solve(rhs)
    # A1 boundary rows are zero and A2 boundary rows Dirichlet: exact zeros.
    vals[0] = 0.0
    vals[-1] = 0.0
    if not sanitize:
        return p_prev.with_values(vals, time_index=p_prev.time_index + 1)
    vals = sanitize_density(vals)
    mass = float(np.trapezoid(vals, dx=g.dx))
    if mass > 1.0 + 1e-10:
        raise SolverQualityError(f"per-step mass grew to {mass} (> 1 + 1e-10)")
    survival = min(p_prev.survival * mass, 1.0)
    return p_prev.with_values(vals, time_index=p_prev.time_index + 1,
                              survival=survival)


def check_admissibility(model: DriftModel, g: SpatialGrid, tg: TimeGrid,
                        noise: float, time_range: tuple[float, float] | None = None,
                        n_time_samples: int = 33) -> AdmissibilityReport:
    """Peclet and time-step admissibility of the discretization.

    Pe = max|f| dx / D <= 2 over all nodes at ``n_time_samples`` uniformly
    spaced times (endpoints included), and dt < dx^2 / D.  Reporting only;
    callers decide whether a failure aborts.
    """
    if noise <= 0:
        raise DomainError(f"noise must be > 0, got {noise}")
    lo, hi = time_range if time_range is not None else (tg.t_start, tg.t_end)
    times = np.linspace(lo, hi, n_time_samples)
    max_f = 0.0
    for t in times:
        max_f = max(max_f, float(np.max(np.abs(model.f(g.nodes, float(t))))))
    peclet = max_f * g.dx / noise
    dt_bound = g.dx**2 / noise
    return AdmissibilityReport(
        max_abs_drift=max_f,
        peclet=peclet,
        peclet_ok=peclet <= PECLET_BOUND,
        dt=tg.dt,
        dt_bound=dt_bound,
        dt_ok=tg.dt < dt_bound,
        n_time_samples=n_time_samples,
    )


def evolve(model: DriftModel, g: SpatialGrid, tg: TimeGrid, noise: float,
           initial: DensityState, recorder: EvolutionRecorder | None = None,
           n_steps: int | None = None):
    """March the density over the time grid, feeding measurement hooks.

    The initial state is normalized first.  For each step the recorder sees
    the pre-step normalized density together with the operator pair, then the
    raw (unnormalized, survival-updated) output; the next iterate is the
    normalized output.  ``n_steps`` limits the march (``0`` means initial
    measurements only); the default runs all ``tg.n_steps`` steps.

    Returns:
        ``recorder.finish()`` if a recorder was given, else the final
        normalized :class:`DensityState`.

    Raises:
        Same as :func:`step`, with the failing step index prepended, plus
        DegenerateDensityError once all mass is absorbed.
    """
    total = tg.n_steps if n_steps is None else n_steps
    if not 0 <= total <= tg.n_steps:
        raise DomainError(f"n_steps {total} outside 0..{tg.n_steps}")
    state = normalize(initial, g)
    if state.time_index != 1:
        state = DensityState(state.values, time_index=1, survival=state.survival)
    if recorder is not None:
        recorder.initial(state)

    f_next = np.asarray(model.f(g.nodes, tg.time(1)), dtype=float)
    for n in range(1, total + 1):
        f_now = f_next
        f_next = np.asarray(model.f(g.nodes, tg.time(n + 1)), dtype=float)
        a1, a2 = _cn_from_drift_values(f_now, f_next, g, tg.dt, noise, n)
        if recorder is not None:
            recorder.before_step(n, state, a1, a2)
        try:
            raw = step(state, a1, a2, g)
            if recorder is not None:
                recorder.after_step(n, raw)
            state = normalize(raw, g)
        except Exception as exc:
            if isinstance(exc, (SolverQualityError, NumericalFailureError,
                                DegenerateDensityError)):
                raise type(exc)(f"step {n} (t={tg.time(n):g}): {exc}") from exc
            raise
    if recorder is not None:
        return recorder.finish()
    return state
