"""Grid bookkeeping, density-state validation, and moments."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tipwarn.errors import (
    ConfigError,
    DegenerateDensityError,
    DomainError,
    PreconditionError,
    StructuralError,
)
from tipwarn.grids import (
    DensityState,
    SpatialGrid,
    TimeGrid,
    moment,
    normalize,
    trapezoid_mass,
)


def test_spatial_grid_excludes_right_edge():
    g = SpatialGrid(-2.5, 2.0, 89)
    assert g.n_nodes == 90
    assert g.dx == pytest.approx(4.5 / 90)
    assert g.node(1) == -2.5
    assert g.node(90) == pytest.approx(2.0 - g.dx)
    assert g.nodes[-1] < g.x_end
    assert g.nodes.shape == (90,)
    assert np.allclose(np.diff(g.nodes), g.dx)


def test_spatial_grid_rejects_degenerate_input():
    with pytest.raises(ConfigError):
        SpatialGrid(1.0, 1.0, 10)
    with pytest.raises(ConfigError):
        SpatialGrid(2.0, 1.0, 10)
    with pytest.raises(ConfigError):
        SpatialGrid(0.0, 1.0, 1)


def test_node_indexing_is_one_based():
    g = SpatialGrid(0.0, 1.0, 9)
    with pytest.raises(DomainError):
        g.node(0)
    with pytest.raises(DomainError):
        g.node(g.n_nodes + 1)


def test_time_grid_includes_both_endpoints():
    tg = TimeGrid(0.0, 3.0, 300)
    assert tg.dt == pytest.approx(0.01)
    assert tg.time(1) == 0.0
    assert tg.time(301) == pytest.approx(3.0)
    assert tg.times.shape == (301,)
    assert tg.times[-1] == pytest.approx(3.0)
    with pytest.raises(DomainError):
        tg.time(302)


def test_time_grid_rejects_degenerate_input():
    with pytest.raises(ConfigError):
        TimeGrid(1.0, 1.0, 5)
    with pytest.raises(ConfigError):
        TimeGrid(0.0, 1.0, 0)


def test_density_state_validation():
    with pytest.raises(StructuralError):
        DensityState(np.array([0.0, 0.0]))
    with pytest.raises(StructuralError):
        DensityState(np.array([0.1, 1.0, 0.0]))
    with pytest.raises(StructuralError):
        DensityState(np.array([0.0, 1.0, 0.5]))
    with pytest.raises(StructuralError):
        DensityState(np.array([0.0, np.nan, 0.0]))
    with pytest.raises(StructuralError):
        DensityState(np.array([0.0, 1.0, 0.0]), time_index=0)
    with pytest.raises(StructuralError):
        DensityState(np.array([0.0, 1.0, 0.0]), survival=1.5)
    with pytest.raises(StructuralError):
        DensityState(np.array([0.0, 1.0, 0.0]), survival=-0.1)


def test_with_values_keeps_unspecified_fields():
    d = DensityState(np.array([0.0, 1.0, 0.0]), time_index=7, survival=0.5)
    d2 = d.with_values(np.array([0.0, 2.0, 0.0]))
    assert d2.time_index == 7
    assert d2.survival == 0.5
    d3 = d.with_values(d.values, time_index=8, survival=0.25)
    assert (d3.time_index, d3.survival) == (8, 0.25)


def test_trapezoid_mass_matches_hand_sum():
    # zero boundary nodes make the trapezoid rule a plain dx-weighted sum
    g = SpatialGrid(0.0, 1.0, 4)
    d = DensityState(np.array([0.0, 1.0, 2.0, 1.0, 0.0]))
    assert trapezoid_mass(d, g) == pytest.approx(g.dx * 4.0)


def test_shape_mismatch_is_structural():
    g = SpatialGrid(0.0, 1.0, 9)
    d = DensityState(np.array([0.0, 1.0, 0.0]))
    with pytest.raises(StructuralError):
        trapezoid_mass(d, g)


def test_normalize_and_moments():
    g = SpatialGrid(-6.0, 6.0, 599)
    x = g.nodes
    sigma = 0.7
    vals = np.exp(-((x - 0.3) ** 2) / (2 * sigma**2))
    vals[0] = vals[-1] = 0.0
    d = normalize(DensityState(vals), g)
    assert trapezoid_mass(d, g) == pytest.approx(1.0, abs=1e-12)
    mean = moment(d, g, 1)
    var = moment(d, g, 2) - mean**2
    assert mean == pytest.approx(0.3, abs=1e-6)
    assert var == pytest.approx(sigma**2, rel=1e-4)


def test_moment_requires_normalized_density():
    g = SpatialGrid(0.0, 1.0, 4)
    d = DensityState(np.array([0.0, 1.0, 2.0, 1.0, 0.0]))
    with pytest.raises(PreconditionError):
        moment(d, g, 1)
    with pytest.raises(DomainError):
        moment(normalize(d, g), g, -1)


def test_normalize_rejects_vanishing_mass():
    g = SpatialGrid(0.0, 1.0, 4)
    d = DensityState(np.zeros(5))
    with pytest.raises(DegenerateDensityError):
        normalize(d, g)


@given(
    interior=st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=40),
    span=st.floats(0.1, 100.0),
)
def test_normalize_is_idempotent(interior, span):
    vals = np.array([0.0, *interior, 0.0])
    g = SpatialGrid(0.0, span, len(vals) - 1)
    d1 = normalize(DensityState(vals), g)
    d2 = normalize(d1, g)
    assert trapezoid_mass(d1, g) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(d2.values, d1.values, rtol=1e-12)
