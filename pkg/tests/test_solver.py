"""Tridiagonal algebra, operator assembly, stationary solve, time stepping."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tipwarn.drifts import OULinearization, SaddleNodeLinearDrift, StraightDrift
from tipwarn.errors import (
    ConfigError,
    DomainError,
    SolverQualityError,
    StructuralError,
)
from tipwarn.grids import DensityState, SpatialGrid, TimeGrid, moment, normalize
from tipwarn.solver import (
    PECLET_BOUND,
    TridiagonalOperator,
    assemble_cn_pair,
    assemble_stationary,
    check_admissibility,
    evolve,
    sanitize_density,
    solve_stationary,
    stationary_density,
    step,
)


def dense(op: TridiagonalOperator) -> np.ndarray:
    a = np.diag(op.diag.copy())
    a += np.diag(op.sub[1:], -1)
    a += np.diag(op.sup[:-1], 1)
    return a


def thomas_reference(sub, diag, sup, rhs):
    """Textbook elimination without pivoting, for cross-checking solves."""
    n = len(diag)
    c = np.zeros(n)
    d = np.zeros(n)
    c[0] = sup[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        den = diag[i] - sub[i] * c[i - 1]
        c[i] = sup[i] / den if i < n - 1 else 0.0
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def random_operator(rng, n=12):
    sub = rng.uniform(-1, 1, n)
    sup = rng.uniform(-1, 1, n)
    diag = rng.uniform(3, 5, n) * rng.choice([-1.0, 1.0], n)  # dominant
    sub[0] = 0.0
    sup[-1] = 0.0
    return TridiagonalOperator(sub, diag, sup)


def test_tridiagonal_solve_matches_references():
    rng = np.random.default_rng(7)
    op = random_operator(rng)
    rhs = rng.uniform(-1, 1, op.n)
    x = op.solve(rhs)
    np.testing.assert_allclose(x, np.linalg.solve(dense(op), rhs), rtol=1e-12)
    np.testing.assert_allclose(x, thomas_reference(op.sub, op.diag, op.sup, rhs),
                               rtol=1e-10)


def test_tridiagonal_matvec_and_transpose():
    rng = np.random.default_rng(11)
    op = random_operator(rng)
    v = rng.uniform(-1, 1, op.n)
    a = dense(op)
    np.testing.assert_allclose(op.matvec(v), a @ v, rtol=1e-13)
    np.testing.assert_allclose(op.rmatvec(v), a.T @ v, rtol=1e-13)
    np.testing.assert_allclose(op.solve_transposed(v), np.linalg.solve(a.T, v),
                               rtol=1e-12)


def test_tridiagonal_validates_bands():
    with pytest.raises(StructuralError):
        TridiagonalOperator(np.zeros(3), np.ones(4), np.zeros(4))
    with pytest.raises(StructuralError):
        TridiagonalOperator(np.ones(4), np.ones(4), np.zeros(4))  # sub[0] != 0
    op = TridiagonalOperator(np.zeros(4), np.ones(4), np.zeros(4))
    with pytest.raises(StructuralError):
        op.matvec(np.ones(5))


def test_stationary_stencil_entries():
    # constant drift makes every interior row identical and easy to check
    g = SpatialGrid(0.0, 1.0, 4)  # dx = 0.2
    noise = 0.3
    op = assemble_stationary(StraightDrift(), g, noise, 0.0)
    inv2dx = 1.0 / (2 * g.dx)
    diff = noise / g.dx**2
    np.testing.assert_allclose(op.sub[1:-1], -1.0 * inv2dx + diff)
    np.testing.assert_allclose(op.sup[1:-1], 1.0 * inv2dx + diff)
    np.testing.assert_allclose(op.diag[1:-1], -2.0 * diff)
    # Dirichlet boundary rows
    assert op.diag[0] == 1.0 and op.diag[-1] == 1.0
    assert op.sup[0] == 0.0 and op.sub[-1] == 0.0
    with pytest.raises(DomainError):
        assemble_stationary(StraightDrift(), g, 0.0, 0.0)


def test_stationary_stencil_varying_drift():
    g = SpatialGrid(-1.0, 1.0, 9)
    model = SaddleNodeLinearDrift(1.0, 0.0)
    noise = 0.25
    op = assemble_stationary(model, g, noise, 0.0)
    f = model.f(g.nodes, 0.0)
    i = 4
    inv2dx = 1.0 / (2 * g.dx)
    diff = noise / g.dx**2
    assert op.sub[i] == pytest.approx(f[i] * inv2dx + diff)
    assert op.sup[i] == pytest.approx(-f[i] * inv2dx + diff)
    assert op.diag[i] == pytest.approx((f[i - 1] - f[i + 1]) * inv2dx - 2 * diff)


def test_cn_pair_against_dense_solve():
    model = OULinearization(2.0)
    g = SpatialGrid(-2.0, 2.0, 39)
    tg = TimeGrid(0.0, 1.0, 100)
    noise = 0.2
    a1, a2 = assemble_cn_pair(model, g, tg, noise, 1)
    # A1 boundary rows vanish; A2 boundary rows pin Dirichlet zeros
    assert a1.diag[0] == 0.0 and a1.diag[-1] == 0.0
    assert a2.diag[0] == 1.0 and a2.diag[-1] == 1.0
    p0 = stationary_density(model, g, noise, 0.0)
    got = step(p0, a1, a2, g, sanitize=False)
    want = np.linalg.solve(dense(a2), -dense(a1) @ p0.values)
    want[0] = want[-1] = 0.0
    np.testing.assert_allclose(got.values, want, rtol=1e-10, atol=1e-14)
    with pytest.raises(DomainError):
        assemble_cn_pair(model, g, tg, noise, 0)
    with pytest.raises(DomainError):
        assemble_cn_pair(model, g, tg, noise, tg.n_steps + 1)


def test_step_without_sanitize_is_linear():
    model = OULinearization(2.0)
    g = SpatialGrid(-2.0, 2.0, 39)
    tg = TimeGrid(0.0, 1.0, 100)
    a1, a2 = assemble_cn_pair(model, g, tg, 0.2, 1)
    vals = np.exp(-g.nodes**2 / 0.1)
    vals[0] = vals[-1] = 0.0
    p = DensityState(vals)
    one = step(p, a1, a2, g, sanitize=False)
    three = step(DensityState(3.0 * vals), a1, a2, g, sanitize=False)
    np.testing.assert_allclose(three.values, 3.0 * one.values, rtol=1e-12)
    assert one.time_index == p.time_index + 1
    assert one.survival == p.survival


def test_step_updates_survival_from_step_mass():
    model = SaddleNodeLinearDrift(1.0, 0.0)
    g = SpatialGrid(-2.5, 2.0, 89)
    tg = TimeGrid(0.0, 1.0, 100)
    noise = 0.2
    p0 = stationary_density(model, g, noise, 0.0)
    a1, a2 = assemble_cn_pair(model, g, tg, noise, 1)
    raw = step(p0, a1, a2, g)
    mass = float(np.trapezoid(raw.values, dx=g.dx))
    assert raw.survival == pytest.approx(mass)
    assert mass < 1.0  # absorbing boundaries leak
    assert raw.values.min() >= 0.0
    assert raw.time_index == 2


def test_ou_transient_matches_analytic_moments():
    # mean decays as e^{-kappa t}; variance relaxes to D/kappa
    kappa, noise = 2.0, 0.2
    model = OULinearization(kappa)
    g = SpatialGrid(-2.0, 2.0, 199)
    tg = TimeGrid(0.0, 0.5, 250)
    x = g.nodes
    vals = np.exp(-((x - 0.5) ** 2) / (2 * 0.05))
    vals[0] = vals[-1] = 0.0
    final = evolve(model, g, tg, noise, DensityState(vals))
    mean = moment(final, g, 1)
    var = moment(final, g, 2) - mean**2
    t = tg.t_end
    want_mean = 0.5 * np.exp(-kappa * t)
    want_var = 0.1 + (0.05 - 0.1) * np.exp(-2 * kappa * t)
    assert mean == pytest.approx(want_mean, rel=5e-3)
    assert var == pytest.approx(want_var, rel=5e-3)


def test_solve_stationary_matches_dense_eigensolve():
    model = OULinearization(2.0)
    g = SpatialGrid(-2.0, 2.0, 59)
    res = solve_stationary(model, g, 0.2, 0.0)
    a = assemble_stationary(model, g, 0.2, 0.0)
    interior = dense(a)[1:-1, 1:-1]
    eigvals, eigvecs = np.linalg.eig(interior)
    k = int(np.argmin(np.abs(eigvals)))
    assert res.gamma1 == pytest.approx(float(np.real(eigvals[k])), rel=1e-6, abs=1e-12)
    vec = np.real(eigvecs[:, k])
    if vec.sum() < 0:
        vec = -vec
    got = res.density.values[1:-1] / np.max(res.density.values)
    np.testing.assert_allclose(got, vec / vec.max(), atol=1e-8)
    assert res.residual < 1e-8
    assert res.gamma1 <= 0.0 or res.gamma1 < 1e-10


def test_stationary_density_matches_gaussian():
    model = OULinearization(2.0)
    g = SpatialGrid(-2.0, 2.0, 119)
    d = stationary_density(model, g, 0.2, 0.0)
    mean = moment(d, g, 1)
    var = moment(d, g, 2) - mean**2
    # the right edge is not a node, so the domain is very slightly asymmetric
    assert mean == pytest.approx(0.0, abs=1e-6)
    assert var == pytest.approx(0.1, rel=0.01)


def test_stationary_density_refines_steep_drift():
    # Pe = 5 on the requested grid; the wrapper must eigensolve refined
    model = OULinearization(2.0)
    g = SpatialGrid(-2.0, 2.0, 15)  # dx = 0.25, Pe = 4*0.25/0.2 = 5
    with pytest.raises(SolverQualityError):
        solve_stationary(model, g, 0.2, 0.0)  # central stencil oscillates
    d = stationary_density(model, g, 0.2, 0.0)
    assert d.values.shape == (g.n_nodes,)
    assert float(np.trapezoid(d.values, dx=g.dx)) == pytest.approx(1.0, abs=1e-12)
    var = moment(d, g, 2) - moment(d, g, 1) ** 2
    assert var == pytest.approx(0.1, rel=0.05)  # moments are coarse at dx = 0.25
    with pytest.raises(DomainError):
        stationary_density(model, g, 0.2, 0.0, max_refine=2)


def test_sanitize_density_clamps_only_tiny_negativity():
    vals = np.array([0.0, 1.0, -1e-12, 2.0, 0.0])
    out = sanitize_density(vals)
    assert out[2] == 0.0
    assert out[1] == 1.0
    with pytest.raises(SolverQualityError):
        sanitize_density(np.array([0.0, 1.0, -1e-3, 0.0]))


@given(st.lists(st.floats(0.0, 1e3), min_size=3, max_size=30),
       st.floats(1e-13, 9e-11))
def test_sanitize_density_tolerance_scales_with_peak(vals, frac):
    vals = np.asarray(vals)
    peak = vals.max()
    dirty = np.append(vals, -frac * peak)  # within 1e-10 * peak
    out = sanitize_density(dirty)
    assert out[-1] == 0.0
    np.testing.assert_array_equal(out[:-1], vals)


def test_check_admissibility_report():
    model = OULinearization(2.0)
    g = SpatialGrid(-3.0, 3.0, 59)  # dx = 0.1, max|f| = 6 at the walls
    tg = TimeGrid(0.0, 1.0, 100)
    rep = check_admissibility(model, g, tg, 0.2)
    assert rep.max_abs_drift == pytest.approx(6.0, rel=1e-12)
    assert rep.peclet == pytest.approx(3.0, rel=1e-12)
    assert not rep.peclet_ok
    assert rep.dt_bound == pytest.approx(0.05)
    assert rep.dt_ok  # 0.01 < 0.05
    assert not rep.ok
    d = rep.to_dict()
    assert d["peclet_bound"] == PECLET_BOUND
    fine = SpatialGrid(-3.0, 3.0, 239)  # dx = 0.025 tightens the dt bound too
    assert check_admissibility(model, fine, TimeGrid(0.0, 1.0, 500), 0.2).ok


def test_evolve_partial_and_survival_monotonic():
    model = SaddleNodeLinearDrift(1.0, 0.0)
    g = SpatialGrid(-2.5, 2.0, 89)
    tg = TimeGrid(0.0, 2.0, 200)
    noise = 0.2
    init = stationary_density(model, g, noise, 0.0)
    mid = evolve(model, g, tg, noise, init, n_steps=5)
    assert mid.time_index == 6
    assert 0.0 < mid.survival <= 1.0

    class SurvivalTap:
        def __init__(self):
            self.survivals = []

        def initial(self, state):
            self.survivals.append(state.survival)

        def before_step(self, n, state, a1, a2):
            pass

        def after_step(self, n, raw):
            self.survivals.append(raw.survival)

        def finish(self):
            return np.asarray(self.survivals)

    surv = evolve(model, g, tg, noise, init, recorder=SurvivalTap())
    assert surv.shape == (201,)
    assert np.all(np.diff(surv) <= 0.0)
    with pytest.raises(DomainError):
        evolve(model, g, tg, noise, init, n_steps=201)
