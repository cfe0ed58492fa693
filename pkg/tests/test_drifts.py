"""Drift families: equilibria, curvatures, scaling map, rate-tipping integrator."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tipwarn.drifts import (
    OULinearization,
    SaddleNodeLinearDrift,
    SaddleNodeNonlinearDrift,
    ScalingMap,
    StraightDrift,
    drift_range,
    quasi_static_rescale,
    rate_tipping_deterministic,
    scale_parameters,
)
from tipwarn.errors import ConfigError, DomainError, FoldCrossedError


def numeric_gradient(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2 * h)


def test_straight_drift_is_constant():
    m = StraightDrift()
    x = np.linspace(-5, 5, 11)
    assert np.all(m.f(x, 0.0) == -1.0)
    assert np.all(m.f(x, 99.0) == -1.0)
    # f = -dU/dx
    assert numeric_gradient(lambda y: m.potential(y, 0.0), 1.3) == pytest.approx(1.0, abs=1e-8)


def test_straight_analytic_density_moments():
    m = StraightDrift()
    x = np.linspace(-12, 4, 4001)
    pdf = m.analytic_density(x, 3.0, t_start=0.0, x0=0.0, noise=0.2,
                             initial_variance=0.0064)
    dx = x[1] - x[0]
    mass = np.trapezoid(pdf, dx=dx)
    mean = np.trapezoid(x * pdf, dx=dx)
    var = np.trapezoid(x**2 * pdf, dx=dx) - mean**2
    assert mass == pytest.approx(1.0, abs=1e-7)
    assert mean == pytest.approx(-3.0, abs=1e-7)
    assert var == pytest.approx(0.0064 + 2 * 0.2 * 3.0, rel=1e-7)
    with pytest.raises(DomainError):
        m.analytic_density(x, 0.0, t_start=0.0, x0=0.0, noise=0.2)


def test_linear_drift_equilibria_and_barrier():
    m = SaddleNodeLinearDrift(1.0, 0.0)
    assert m.parameter(17.0) == 1.0
    assert m.stable_equilibrium(0.0) == pytest.approx(-1.0)
    assert m.unstable_equilibrium(0.0) == pytest.approx(1.0)
    assert m.f(m.stable_equilibrium(0.0), 0.0) == pytest.approx(0.0, abs=1e-14)
    assert m.well_curvature(0.0) == pytest.approx(2.0)
    assert m.hill_curvature(0.0) == pytest.approx(2.0)
    assert m.barrier_height(0.0) == pytest.approx(4.0 / 3.0)
    # barrier equals the potential difference hill minus well
    diff = m.potential(1.0, 0.0) - m.potential(-1.0, 0.0)
    assert m.barrier_height(0.0) == pytest.approx(diff)


def test_linear_drift_ramp_and_fold():
    m = SaddleNodeLinearDrift(1.0, 0.0075)
    assert m.parameter(100.0) == pytest.approx(0.25)
    with pytest.raises(FoldCrossedError):
        m.stable_equilibrium(1.0 / 0.0075 + 1.0)
    with pytest.raises(ConfigError):
        SaddleNodeLinearDrift(1.0, -0.1)


@given(
    p0=st.floats(0.2, 9.0),
    eps=st.floats(0.0, 0.5),
    t=st.floats(-5.0, 5.0),
    x=st.floats(-3.0, 3.0),
)
def test_linear_drift_matches_potential_gradient(p0, eps, t, x):
    m = SaddleNodeLinearDrift(p0, eps)
    grad = numeric_gradient(lambda y: m.potential(y, t), x)
    assert m.f(x, t) == pytest.approx(-grad, abs=1e-5)


def test_curvatures_match_second_differences():
    m = SaddleNodeLinearDrift(2.5, 0.0)
    h = 1e-5
    for xs, want in [(m.stable_equilibrium(0.0), m.well_curvature(0.0)),
                     (m.unstable_equilibrium(0.0), -m.hill_curvature(0.0))]:
        u2 = (m.potential(xs + h, 0.0) - 2 * m.potential(xs, 0.0)
              + m.potential(xs - h, 0.0)) / h**2
        assert u2 == pytest.approx(want, rel=1e-4)


def test_nonlinear_ramp_shape():
    m = SaddleNodeNonlinearDrift(1.0, 1.0 / 3.0, 3.0)
    assert m.ramp(-50.0) == pytest.approx(0.0, abs=1e-12)
    assert m.ramp(50.0) == pytest.approx(3.0, abs=1e-12)
    assert m.ramp(0.0) == pytest.approx(1.5)
    # parameter returns to p0 at both ends, dips to p0 - eps*lambda_max^2/4
    assert m.parameter(-50.0) == pytest.approx(1.0, abs=1e-10)
    assert m.parameter(50.0) == pytest.approx(1.0, abs=1e-10)
    assert m.parameter(0.0) == pytest.approx(1.0 - (1.0 / 3.0) * 9.0 / 4.0)
    lo, hi = drift_range(m)
    assert lo == pytest.approx(m.parameter(0.0))
    assert hi == pytest.approx(1.0)


@given(
    p0=st.floats(0.5, 4.0),
    eps=st.floats(0.01, 1.0),
    lam=st.floats(0.5, 4.0),
    t=st.floats(-20.0, 20.0),
)
def test_nonlinear_parameter_is_even_in_time(p0, eps, lam, t):
    m = SaddleNodeNonlinearDrift(p0, eps, lam)
    assert m.parameter(t) == pytest.approx(m.parameter(-t), rel=1e-12, abs=1e-12)


def test_nonlinear_fold_crossing_raises():
    # eps above lambda_max threshold pushes the minimum parameter below zero
    m = SaddleNodeNonlinearDrift(1.0, 0.6, 3.0)
    assert m.parameter(0.0) < 0.0
    with pytest.raises(FoldCrossedError):
        m.stable_equilibrium(0.0)


def test_ou_linearization():
    m = OULinearization(2.0)
    assert m.f(0.5, 0.0) == pytest.approx(-1.0)
    assert m.stable_equilibrium(3.0) == 0.0
    assert m.well_curvature(0.0) == pytest.approx(2.0)
    grad = numeric_gradient(lambda y: m.potential(y, 0.0), 0.7)
    assert m.f(0.7, 0.0) == pytest.approx(-grad, abs=1e-8)
    shifted = OULinearization(1.5, center=-1.0)
    assert shifted.f(-1.0, 0.0) == pytest.approx(0.0)


def test_scale_parameters_halved_noise_family():
    d_scaled, eps_scaled, smap = scale_parameters(4.0, 0.0, 0.2, 1.0)
    assert d_scaled == pytest.approx(0.025)
    assert eps_scaled == 0.0
    assert smap.s_x == pytest.approx(2.0)
    assert smap.s_t == pytest.approx(0.5)
    assert smap.s_p == pytest.approx(4.0)
    assert smap.s_x * smap.s_t == pytest.approx(1.0)
    assert smap.s_p == pytest.approx(smap.s_x**2)


def test_scaling_equivariance_of_drift():
    # f_p(s_x * y) = s_x^2 * f_q(y) when p0 = s_x^2 * q0 and eps = 0
    d_scaled, _, smap = scale_parameters(4.0, 0.0, 0.2, 1.0)
    big = SaddleNodeLinearDrift(4.0, 0.0)
    small = SaddleNodeLinearDrift(1.0, 0.0)
    y = np.linspace(-2, 2, 21)
    np.testing.assert_allclose(big.f(smap.s_x * y, 0.0),
                               smap.s_x**2 * small.f(y, 0.0), rtol=1e-12)


def test_quasi_static_rescale_roundtrip():
    _, _, smap = scale_parameters(4.0, 0.0, 0.2, 1.0)
    kappa_x, v_x = quasi_static_rescale(2.0, 0.0125, smap)
    assert kappa_x == pytest.approx(4.0)
    assert v_x == pytest.approx(0.05)


def test_scaling_map_validates():
    with pytest.raises(ConfigError):
        ScalingMap(0.2, 0.025, s_x=2.0, s_t=0.7, s_p=4.0)  # s_x*s_t != 1
    m = ScalingMap.from_noise_levels(0.2, 0.025)
    assert m.s_x == pytest.approx(2.0)


def test_rate_tipping_threshold_brackets():
    assert not rate_tipping_deterministic(1.0, 3.0, 1.2)
    assert rate_tipping_deterministic(1.0, 3.0, 1.5)
