"""Euler-Maruyama ensemble: sampling, marching, absorption, FP comparison."""

import math

import numpy as np
import pytest

from tipwarn.drifts import OULinearization, SaddleNodeLinearDrift, StraightDrift
from tipwarn.errors import ConfigError, DomainError, StructuralError
from tipwarn.grids import SpatialGrid, TimeGrid
from tipwarn.indicators import IndicatorRecorder
from tipwarn.montecarlo import (
    EnsembleConfig,
    EnsembleSummary,
    compare,
    sample_from_density,
    simulate,
)
from tipwarn.solver import evolve, stationary_density


def test_ensemble_config_validation():
    good = dict(n_paths=100, dt=0.01, seed=1, absorb_low=-1.0, absorb_high=1.0)
    EnsembleConfig(**good)
    for bad in (dict(good, n_paths=1), dict(good, dt=0.0), dict(good, seed=2**64),
                dict(good, absorb_low=2.0)):
        with pytest.raises(ConfigError):
            EnsembleConfig(**bad)


def test_sample_from_density_moments_and_determinism():
    model = OULinearization(2.0)
    g = SpatialGrid(-2.0, 2.0, 119)
    d = stationary_density(model, g, 0.2, 0.0)
    n = 200_000
    xs = sample_from_density(d, g, n, np.random.Generator(np.random.PCG64(3)))
    assert xs.shape == (n,)
    assert np.all((xs >= g.x_start) & (xs <= g.nodes[-1]))
    se_mean = math.sqrt(0.1 / n)
    assert abs(xs.mean()) < 4 * se_mean
    assert xs.var() == pytest.approx(0.1, rel=0.02)
    again = sample_from_density(d, g, n, np.random.Generator(np.random.PCG64(3)))
    np.testing.assert_array_equal(xs, again)


def test_noiseless_ou_reproduces_euler_recursion():
    kappa = 2.0
    model = OULinearization(kappa)
    cfg = EnsembleConfig(n_paths=4, dt=0.01, seed=9, absorb_low=-5.0, absorb_high=5.0)
    x0 = np.array([0.5, -0.3, 0.2, 1.0])
    out = simulate(model, 0.0, cfg, x0, 0.0, np.array([0.5, 1.0]))
    for j, t in enumerate((0.5, 1.0)):
        k = round(t / cfg.dt)
        want = x0 * (1.0 - kappa * cfg.dt) ** k
        assert out.mean[j] == pytest.approx(want.mean(), rel=1e-12)
        assert out.variance[j] == pytest.approx(want.var(ddof=1), rel=1e-12)
        assert out.survival[j] == 1.0
        assert out.n_alive[j] == 4


def test_straight_drift_ensemble_statistics():
    model = StraightDrift()
    noise = 0.2
    n = 20_000
    cfg = EnsembleConfig(n_paths=n, dt=0.005, seed=21, absorb_low=-50.0,
                         absorb_high=50.0)
    x0 = np.zeros(n)
    out = simulate(model, noise, cfg, x0, 0.0, np.array([1.0]), lag_dt=0.05)
    assert abs(out.mean[0] - (-1.0)) < 4 * out.mean_se[0]
    assert abs(out.variance[0] - 2 * noise * 1.0) < 4 * out.variance_se[0]
    # Brownian-with-drift lag correlation: sqrt((t - lag)/t)
    want_rho = math.sqrt(0.95)
    assert abs(out.lag1[0] - want_rho) < 4 * out.lag1_se[0]
    assert out.survival[0] == 1.0


def test_simulate_is_deterministic_per_seed():
    model = SaddleNodeLinearDrift(1.0, 0.0)
    cfg = EnsembleConfig(n_paths=500, dt=0.01, seed=42, absorb_low=-2.5,
                         absorb_high=2.0)
    x0 = np.full(500, -1.0)
    times = np.array([2.0, 5.0])
    a = simulate(model, 0.2, cfg, x0, 0.0, times, lag_dt=0.01)
    b = simulate(model, 0.2, cfg, x0, 0.0, times, lag_dt=0.01)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.variance, b.variance)
    np.testing.assert_array_equal(a.lag1, b.lag1)
    np.testing.assert_array_equal(a.survival, b.survival)
    c = simulate(model, 0.2, EnsembleConfig(500, 0.01, 43, -2.5, 2.0), x0, 0.0,
                 times, lag_dt=0.01)
    assert not np.array_equal(a.mean, c.mean)


def test_absorption_monotone_and_counts():
    # shallow barrier drains the ensemble quickly
    model = SaddleNodeLinearDrift(0.25, 0.0)
    n = 4000
    cfg = EnsembleConfig(n_paths=n, dt=0.01, seed=5, absorb_low=-2.5,
                         absorb_high=2.0)
    x0 = np.full(n, -0.5)
    out = simulate(model, 0.2, cfg, x0, 0.0, np.array([1.0, 3.0, 6.0, 10.0]))
    assert np.all(np.diff(out.survival) <= 0)
    assert out.survival[-1] < 0.9
    np.testing.assert_allclose(out.n_alive, out.survival * n)


def test_simulate_rejects_misaligned_inputs():
    model = StraightDrift()
    cfg = EnsembleConfig(n_paths=10, dt=0.01, seed=1, absorb_low=-5.0,
                         absorb_high=5.0)
    x0 = np.zeros(10)
    with pytest.raises(StructuralError):
        simulate(model, 0.2, cfg, x0, 0.0, np.array([0.505]))
    with pytest.raises(StructuralError):
        simulate(model, 0.2, cfg, x0, 0.0, np.array([1.0]), lag_dt=0.001)
    with pytest.raises(StructuralError):
        simulate(model, 0.2, cfg, np.zeros(9), 0.0, np.array([1.0]))
    with pytest.raises(DomainError):
        simulate(model, -0.1, cfg, x0, 0.0, np.array([1.0]))


def small_fp_series():
    model = SaddleNodeLinearDrift(1.0, 0.0)
    g = SpatialGrid(-2.5, 2.0, 89)
    tg = TimeGrid(0.0, 0.5, 50)
    rec = IndicatorRecorder(model, g, tg, 0.2)
    init = stationary_density(model, g, 0.2, 0.0)
    return evolve(model, g, tg, 0.2, init, recorder=rec)


def echo_summary(series, times, se=1e-6):
    idx = [int(np.argmin(np.abs(series.times - t))) for t in times]
    n = len(times)
    return EnsembleSummary(
        times=np.asarray(times, dtype=float),
        mean=np.full(n, math.nan),
        mean_se=np.full(n, math.nan),
        variance=series.variance[idx].copy(),
        variance_se=np.full(n, se),
        lag1=series.lag1[idx].copy(),
        lag1_se=np.full(n, se),
        survival=1.0 - series.cumulative_escape[idx],
        survival_se=np.full(n, se),
        n_alive=np.full(n, 1000),
    )


def test_compare_echo_is_unflagged():
    series = small_fp_series()
    report = compare(series, echo_summary(series, [0.2, 0.4]))
    assert len(report.rows) == 6
    for row in report.rows:
        assert row.z == pytest.approx(0.0, abs=1e-9)
        assert not row.flagged


def test_compare_flags_disagreement_and_handles_zero_se():
    series = small_fp_series()
    mc = echo_summary(series, [0.2])
    mc.variance[0] *= 1.5
    report = compare(series, mc)
    by_metric = {r.metric: r for r in report.rows}
    assert by_metric["variance"].flagged
    assert abs(by_metric["variance"].z) > 3
    assert not by_metric["lag1"].flagged

    degenerate = echo_summary(series, [0.2], se=0.0)
    report = compare(series, degenerate)
    assert all(math.isnan(r.z) and not r.flagged for r in report.rows)


def test_compare_requires_matching_times():
    series = small_fp_series()
    with pytest.raises(StructuralError):
        compare(series, echo_summary(series, [0.123456]))
