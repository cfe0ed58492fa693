"""Shared fixtures: the slow-ramp reference run and the stationary baseline table."""

import time
from types import SimpleNamespace

import numpy as np
import pytest

from tipwarn.config import builtin_monsoon_params
from tipwarn.drifts import SaddleNodeLinearDrift
from tipwarn.grids import SpatialGrid, TimeGrid
from tipwarn.indicators import IndicatorRecorder, build_baseline
from tipwarn.solver import evolve, stationary_density


@pytest.fixture(scope="session")
def baseline_table():
    """60-point stationary decay/variance table at q0 = 1, d in [0.005, 0.3]."""
    t0 = time.perf_counter()
    table = build_baseline(1.0, np.arange(0.005, 0.3 + 1e-9, 0.005))
    elapsed = time.perf_counter() - t0
    table_ns = SimpleNamespace(table=table, elapsed=elapsed)
    return table_ns


@pytest.fixture(scope="session")
def monsoon_params():
    return builtin_monsoon_params()


@pytest.fixture(scope="session")
def slow_ramp_run():
    """Linear parameter ramp p(t) = 1 - 0.0075 t over [0, 100], dx = 0.05, dt = 0.01.

    Several acceptance checks and the ensemble cross-check reuse this run, so
    it is computed once per session.  ``elapsed`` is the wall time of the
    evolution alone.
    """
    model = SaddleNodeLinearDrift(1.0, 0.0075)
    g = SpatialGrid(-2.5, 2.0, 89)
    tg = TimeGrid(0.0, 100.0, 10000)
    noise = 0.2
    initial = stationary_density(model, g, noise, tg.t_start)
    rec = IndicatorRecorder(model, g, tg, noise, kramers=True, qs_linear=True)
    t0 = time.perf_counter()
    series = evolve(model, g, tg, noise, initial, recorder=rec)
    elapsed = time.perf_counter() - t0
    return SimpleNamespace(model=model, grid=g, time_grid=tg, noise=noise,
                           initial=initial, series=series, elapsed=elapsed)
