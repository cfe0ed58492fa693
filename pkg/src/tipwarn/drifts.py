"""Drift/potential families for the scalar SDE dX = f(X,t) dt + sqrt(2 D) dW.

Every family implements :class:`DriftModel`: the drift ``f(x, t)``, the
potential ``U(x, t)`` with ``f = -dU/dx``, and (where they exist) the
quasi-static equilibria, curvatures, and barrier height used by the
quasi-static and Kramers indicator references.

Also hosts the space/time/parameter scaling between two noise levels of the
saddle-node normal form, and the deterministic rate-tipping integrator.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    ConfigError,
    DomainError,
    FoldCrossedError,
    NoEquilibriumError,
    NumericalFailureError,
)

__all__ = [
    "DriftModel",
    "StraightDrift",
    "SaddleNodeLinearDrift",
    "SaddleNodeNonlinearDrift",
    "OULinearization",
    "ScalingMap",
    "scale_parameters",
    "quasi_static_rescale",
    "rate_tipping_deterministic",
    "drift_range",
]


class DriftModel(ABC):
    """Capability interface for drift families.

    ``f`` and ``potential`` accept scalar or array ``x`` and broadcast.
    The equilibrium accessors raise :class:`NoEquilibriumError` (or its
    subclass :class:`FoldCrossedError`) when the requested feature does not
    exist at time ``t``.
    """

    @abstractmethod
    def f(self, x, t: float):
        """Drift value(s) at position(s) ``x`` and time ``t``."""

    @abstractmethod
    def potential(self, x, t: float):
        """Potential ``U`` with ``f = -dU/dx``."""

    def stable_equilibrium(self, t: float) -> float:
        raise NoEquilibriumError(f"{type(self).__name__} has no stable equilibrium")

    def unstable_equilibrium(self, t: float) -> float:
        raise NoEquilibriumError(f"{type(self).__name__} has no unstable equilibrium")

    def well_curvature(self, t: float) -> float:
        """Curvature of the potential at the stable equilibrium (> 0)."""
        raise NoEquilibriumError(f"{type(self).__name__} has no potential well")

    def hill_curvature(self, t: float) -> float:
        """Curvature magnitude of the potential at the unstable equilibrium."""
        raise NoEquilibriumError(f"{type(self).__name__} has no potential hill")

    def barrier_height(self, t: float) -> float:
        """Potential difference hill minus well (> 0 below the fold)."""
        raise NoEquilibriumError(f"{type(self).__name__} has no barrier")


class StraightDrift(DriftModel):
    """Constant drift f = -1 with linear potential U = x.

    The density of a path started at ``x0`` stays Gaussian; see
    :meth:`analytic_density`.
    """

    def f(self, x, t: float):
        return np.full_like(np.asarray(x, dtype=float), -1.0)

    def potential(self, x, t: float):
        return np.asarray(x, dtype=float) + 0.0

    @staticmethod
    def analytic_density(x, t: float, *, t_start: float, x0: float, noise: float,
                         initial_variance: float = 0.0):
        """Exact density at time t for a Gaussian (or point) initial condition.

        Mean drifts as ``x0 - (t - t_start)``; variance grows as
        ``initial_variance + 2*noise*(t - t_start)``.
        """
        var = initial_variance + 2.0 * noise * (t - t_start)
        if var <= 0.0:
            raise DomainError("analytic density needs positive elapsed variance")
        mu = x0 - (t - t_start)
        x = np.asarray(x, dtype=float)
        return np.exp(-((x - mu) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


@dataclass(frozen=True)
class SaddleNodeLinearDrift(DriftModel):
    """Normal form f = x^2 - p(t) with linearly drifting p(t) = p0 - eps*t."""

    p0: float
    eps: float = 0.0

    def __post_init__(self) -> None:
        if self.eps < 0:
            raise ConfigError(f"eps must be >= 0, got {self.eps}")

    def parameter(self, t: float) -> float:
        return self.p0 - self.eps * t

    def f(self, x, t: float):
        return np.asarray(x, dtype=float) ** 2 - self.parameter(t)

    def potential(self, x, t: float):
        x = np.asarray(x, dtype=float)
        return -(x**3) / 3.0 + self.parameter(t) * x

    def _sqrt_parameter(self, t: float) -> float:
        p = self.parameter(t)
        if p <= 0.0:
            raise FoldCrossedError(f"parameter {p} <= 0 at t={t}: equilibria vanished")
        return math.sqrt(p)

    def stable_equilibrium(self, t: float) -> float:
        return -self._sqrt_parameter(t)

    def unstable_equilibrium(self, t: float) -> float:
        return self._sqrt_parameter(t)

    def well_curvature(self, t: float) -> float:
        return 2.0 * self._sqrt_parameter(t)

    def hill_curvature(self, t: float) -> float:
        return 2.0 * self._sqrt_parameter(t)

    def barrier_height(self, t: float) -> float:
        return (4.0 / 3.0) * self._sqrt_parameter(t) ** 3


@dataclass(frozen=True)
class SaddleNodeNonlinearDrift(DriftModel):
    """Normal form driven through a smooth tanh ramp.

    The ramp ``ramp(t) = (lambda_max/2)*(tanh(lambda_max*eps*t/2) + 1)`` is
    evaluated in closed form; the effective parameter is
    ``parameter(t) = p0 - eps*lambda_max*ramp(t) + eps*ramp(t)^2``, an even
    function of t with minimum ``p0 - eps*lambda_max^2/4`` at t = 0.
    """

    p0: float
    eps: float
    lambda_max: float

    def __post_init__(self) -> None:
        if self.eps < 0:
            raise ConfigError(f"eps must be >= 0, got {self.eps}")
        if self.lambda_max <= 0:
            raise ConfigError(f"lambda_max must be > 0, got {self.lambda_max}")

    def ramp(self, t: float) -> float:
        return (self.lambda_max / 2.0) * (
            math.tanh(self.lambda_max * self.eps * t / 2.0) + 1.0
        )

    def parameter(self, t: float) -> float:
        lam = self.ramp(t)
        return self.p0 - self.eps * self.lambda_max * lam + self.eps * lam * lam

    def f(self, x, t: float):
        return np.asarray(x, dtype=float) ** 2 - self.parameter(t)

    def potential(self, x, t: float):
        x = np.asarray(x, dtype=float)
        return -(x**3) / 3.0 + self.parameter(t) * x

    def _sqrt_parameter(self, t: float) -> float:
        p = self.parameter(t)
        if p <= 0.0:
            raise FoldCrossedError(f"parameter {p} <= 0 at t={t}: equilibria vanished")
        return math.sqrt(p)

    def stable_equilibrium(self, t: float) -> float:
        return -self._sqrt_parameter(t)

    def unstable_equilibrium(self, t: float) -> float:
        return self._sqrt_parameter(t)

    def well_curvature(self, t: float) -> float:
        return 2.0 * self._sqrt_parameter(t)

    def hill_curvature(self, t: float) -> float:
        return 2.0 * self._sqrt_parameter(t)

    def barrier_height(self, t: float) -> float:
        return (4.0 / 3.0) * self._sqrt_parameter(t) ** 3


@dataclass(frozen=True)
class OULinearization(DriftModel):
    """Ornstein-Uhlenbeck drift f = -kappa*(x - center), the well linearization."""

    kappa: float
    center: float = 0.0

    def __post_init__(self) -> None:
        if self.kappa <= 0:
            raise ConfigError(f"kappa must be > 0, got {self.kappa}")

    def f(self, x, t: float):
        return -self.kappa * (np.asarray(x, dtype=float) - self.center)

    def potential(self, x, t: float):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.kappa * (x - self.center) ** 2

    def stable_equilibrium(self, t: float) -> float:
        return self.center

    def well_curvature(self, t: float) -> float:
        return self.kappa


@dataclass(frozen=True)
class ScalingMap:
    """Space/time/parameter scaling between noise levels of the normal form.

    ``s_x = (d_original/d_scaled)^{1/3}``, ``s_t = 1/s_x``, ``s_p = s_x^2``.
    Positions, times, and parameters map as x = s_x*y, t = s_t*tau,
    p = s_p*q; decay rates and variances of the scaled problem map back via
    :func:`quasi_static_rescale`.
    """

    d_original: float
    d_scaled: float
    s_x: float
    s_t: float
    s_p: float

    def __post_init__(self) -> None:
        if self.d_original <= 0 or self.d_scaled <= 0:
            raise DomainError("noise levels must be positive")
        if abs(self.s_x * self.s_t - 1.0) > 1e-12 * max(1.0, abs(self.s_x * self.s_t)):
            raise ConfigError("scaling factors must satisfy s_x*s_t = 1")
        if abs(self.s_p - self.s_x**2) > 1e-12 * max(1.0, abs(self.s_p)):
            raise ConfigError("scaling factors must satisfy s_p = s_x^2")

    @classmethod
    def from_noise_levels(cls, d_original: float, d_scaled: float) -> "ScalingMap":
        if d_original <= 0 or d_scaled <= 0:
            raise DomainError("noise levels must be positive")
        s_x = (d_original / d_scaled) ** (1.0 / 3.0)
        return cls(d_original, d_scaled, s_x, 1.0 / s_x, s_x**2)


def scale_parameters(p0: float, eps: float, d: float, q0: float):
    """Rescale (p0, eps, d) so the initial parameter becomes q0.

    Returns:
        (d_tilde, eps_tilde, map): the equivalent noise level
        ``d_tilde = (q0/p0)^{3/2} * d``, the rescaled speed
        ``eps_tilde = eps*d_tilde/d``, and the corresponding ScalingMap.

    Raises:
        DomainError: if p0, q0, or d is not positive.
    """
    if p0 <= 0 or q0 <= 0 or d <= 0:
        raise DomainError("scale_parameters requires p0 > 0, q0 > 0, d > 0")
    d_tilde = (q0 / p0) ** 1.5 * d
    eps_tilde = eps * d_tilde / d
    return d_tilde, eps_tilde, ScalingMap.from_noise_levels(d, d_tilde)


def quasi_static_rescale(kappa_y: float, v_y: float, smap: ScalingMap):
    """Map decay rate and variance of the scaled problem back to the original.

    ``kappa_x = (d/d_tilde)^{1/3} * kappa_y`` and
    ``v_x = (d/d_tilde)^{2/3} * v_y``.

    Raises:
        DomainError: if either input is not positive.
    """
    if kappa_y <= 0 or v_y <= 0:
        raise DomainError("quasi_static_rescale requires positive kappa_y and v_y")
    ratio = smap.d_original / smap.d_scaled
    return ratio ** (1.0 / 3.0) * kappa_y, ratio ** (2.0 / 3.0) * v_y


def drift_range(model: SaddleNodeNonlinearDrift):
    """Range (p_min, p_max) swept by the nonlinear drift's parameter.

    p_max = p0 (the t -> -inf limit); p_min = p0 - eps*lambda_max^2/4 (t = 0).
    A negative p_min means the fold is crossed during the ramp.
    """
    return model.p0 - model.eps * model.lambda_max**2 / 4.0, model.p0


def rate_tipping_deterministic(
    p0: float,
    lambda_max: float,
    eps: float,
    x0: float | None = None,
    horizon: float = 10.0,
    x_blow: float = 10.0,
    rtol: float = 1e-8,
) -> bool:
    """Integrate the noiseless ramped normal form and report blow-up.

    Runs dx/dt = x^2 - parameter(t) from t = -horizon to +horizon with an
    adaptive explicit Runge-Kutta pair.  ``x0`` defaults to the stable
    equilibrium at -horizon.  Returns True iff the trajectory reaches
    ``x_blow`` before the horizon (escape to infinity is then certain).

    Raises:
        NumericalFailureError: if the integrator fails.
        FoldCrossedError: if no stable equilibrium exists at -horizon and no
            explicit x0 was given.
    """
    model = SaddleNodeNonlinearDrift(p0=p0, eps=eps, lambda_max=lambda_max)
    if x0 is None:
        x0 = model.stable_equilibrium(-horizon)

    def rhs(t, y):
        return [y[0] ** 2 - model.parameter(t)]

    def blow(t, y):
        return y[0] - x_blow

    blow.terminal = True
    blow.direction = 1.0

    sol = solve_ivp(
        rhs, (-horizon, horizon), [x0], method="RK45",
        rtol=rtol, atol=1e-10, events=blow, dense_output=False,
    )
    if sol.status == -1:
        raise NumericalFailureError(f"rate-tipping integration failed: {sol.message}")
    return sol.status == 1
