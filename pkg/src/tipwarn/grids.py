"""Spatial and temporal grids plus the density container.

Conventions
-----------
The spatial grid over ``[x_start, x_end]`` with ``n_intervals = N`` carries
``N + 1`` nodes indexed 1..N+1 with spacing ``dx = (x_end - x_start)/(N + 1)``
and ``node(i) = x_start + (i - 1)*dx``.  The right endpoint ``x_end`` is NOT a
node; the last node sits one spacing inside.  Both extreme nodes (1 and N+1)
are absorbing boundaries and every density is pinned to zero there.

The time grid over ``[t_start, t_end]`` with ``n_steps = M`` carries ``M + 1``
instants ``time(n) = t_start + (n - 1)*dt``, ``dt = (t_end - t_start)/M``, so
``t_end`` IS included.

Node and instant accessors are 1-based to match the formulas above; the arrays
``nodes`` and ``times`` are ordinary 0-based numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConfigError,
    DegenerateDensityError,
    DomainError,
    PreconditionError,
    StructuralError,
)

__all__ = [
    "SpatialGrid",
    "TimeGrid",
    "DensityState",
    "trapezoid_mass",
    "normalize",
    "moment",
]

# Mass below which a density cannot be meaningfully renormalized.
_MASS_FLOOR = 1e-300


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform absorbing-boundary grid.

    Args:
        x_start: left domain edge (first node).
        x_end: right domain edge; lies one spacing beyond the last node.
        n_intervals: N; the grid has N + 1 nodes and N - 1 interior nodes.

    Raises:
        ConfigError: if ``x_start >= x_end`` or ``n_intervals < 2``.
    """

    x_start: float
    x_end: float
    n_intervals: int

    def __post_init__(self) -> None:
        if not self.x_start < self.x_end:
            raise ConfigError(
                f"x_start must be below x_end, got [{self.x_start}, {self.x_end}]"
            )
        if self.n_intervals < 2:
            raise ConfigError(f"need n_intervals >= 2, got {self.n_intervals}")

    @property
    def dx(self) -> float:
        return (self.x_end - self.x_start) / (self.n_intervals + 1)

    @property
    def n_nodes(self) -> int:
        return self.n_intervals + 1

    def node(self, i: int) -> float:
        """Coordinate of node ``i`` (1-based, 1 <= i <= N+1)."""
        if not 1 <= i <= self.n_nodes:
            raise DomainError(f"node index {i} outside 1..{self.n_nodes}")
        return self.x_start + (i - 1) * self.dx

    @property
    def nodes(self) -> np.ndarray:
        return self.x_start + self.dx * np.arange(self.n_nodes)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid including both endpoints.

    Args:
        t_start: first instant.
        t_end: last instant (included, unlike the spatial right edge).
        n_steps: M >= 1; the grid has M + 1 instants.

    Raises:
        ConfigError: if ``t_start >= t_end`` or ``n_steps < 1``.
    """

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self) -> None:
        if not self.t_start < self.t_end:
            raise ConfigError(
                f"t_start must be below t_end, got [{self.t_start}, {self.t_end}]"
            )
        if self.n_steps < 1:
            raise ConfigError(f"need n_steps >= 1, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    def time(self, n: int) -> float:
        """Instant ``n`` (1-based, 1 <= n <= M+1)."""
        if not 1 <= n <= self.n_steps + 1:
            raise DomainError(f"time index {n} outside 1..{self.n_steps + 1}")
        return self.t_start + (n - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class DensityState:
    """Density values on the nodes of a :class:`SpatialGrid`.

    ``values[0]`` and ``values[-1]`` sit on the absorbing boundary nodes and
    must be zero.  ``time_index`` is the 1-based instant the state belongs to.
    ``survival`` is the running product of per-step trapezoid masses and equals
    1 for freshly constructed states.
    """

    values: np.ndarray
    time_index: int = 1
    survival: float = 1.0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.shape[0] < 3:
            raise StructuralError(f"density needs >= 3 nodes, got shape {values.shape}")
        if values[0] != 0.0 or values[-1] != 0.0:
            raise StructuralError("boundary nodes of a density must be exactly zero")
        if not np.all(np.isfinite(values)):
            raise StructuralError("density contains non-finite values")
        object.__setattr__(self, "values", values)
        if self.time_index < 1:
            raise StructuralError(f"time_index must be >= 1, got {self.time_index}")
        if not 0.0 <= self.survival <= 1.0 + 1e-12:
            raise StructuralError(f"survival {self.survival} outside [0, 1]")

    def with_values(self, values: np.ndarray, *, time_index: int | None = None,
                    survival: float | None = None) -> "DensityState":
        return replace(
            self,
            values=values,
            time_index=self.time_index if time_index is None else time_index,
            survival=self.survival if survival is None else survival,
        )


def _check_shape(state: DensityState, grid: SpatialGrid) -> None:
    if state.values.shape[0] != grid.n_nodes:
        raise StructuralError(
            f"density has {state.values.shape[0]} nodes, grid has {grid.n_nodes}"
        )


def trapezoid_mass(state: DensityState, grid: SpatialGrid) -> float:
    """Trapezoid-rule mass of the density over the grid."""
    _check_shape(state, grid)
    return float(np.trapezoid(state.values, dx=grid.dx))


def normalize(state: DensityState, grid: SpatialGrid) -> DensityState:
    """Rescale so the trapezoid mass is 1; survival and time index unchanged.

    Raises:
        DegenerateDensityError: if the current mass is too small to divide by.
    """
    mass = trapezoid_mass(state, grid)
    if not np.isfinite(mass) or mass <= _MASS_FLOOR:
        raise DegenerateDensityError(f"cannot normalize density of mass {mass}")
    return state.with_values(state.values / mass)


def moment(state: DensityState, grid: SpatialGrid, order: int) -> float:
    """k-th raw moment, the dx-weighted node sum ``dx * sum(x_i^k * v_i)``.

    Requires a normalized density (trapezoid mass within 1e-9 of 1).

    Raises:
        PreconditionError: if the density is not normalized.
        DomainError: if ``order`` is negative.
    """
    if order < 0:
        raise DomainError(f"moment order must be >= 0, got {order}")
    mass = trapezoid_mass(state, grid)
    if abs(mass - 1.0) > 1e-9:
        raise PreconditionError(
            f"moment requires a normalized density, trapezoid mass is {mass!r}"
        )
    return float(grid.dx * np.sum(grid.nodes**order * state.values))
