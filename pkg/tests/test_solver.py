import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughpme.bounds import estimate_contraction_constant
from roughpme.coefficients import CoefficientSet, Constant, Gaussian, SineProduct, mu_field
from roughpme.exceptions import NotBoundedVariation
from roughpme.geometry import Grid
from roughpme.nonlinearity import PhiSpec
from roughpme.signals import (NoiseModel, path_from_function, piecewise_linear, sample_path,
                              zero_path)
from roughpme.solver import (SolverConfig, limit_solution, solve_direct_bv, solve_rough,
                             solve_transformed, step_transformed, test_function,
                             very_weak_residual)

G = Grid.interval(-1.0, 1.0, 60)
BUMP = np.maximum(1.0 - 4.0 * G.x**2, 0.0)
SINE = CoefficientSet(G, [SineProduct(0.5, (np.pi / 2,), (0.3,))])


def brownian(T=0.2, dt=1e-3, seed=0, dim=1):
    return sample_path(NoiseModel.brownian(dim), 0.0, T, dt, seed=seed)


# coefficients ----------------------------------------------------------------

def test_mu_field_examples():
    z0 = mu_field(SINE, [0.0])
    assert all(np.all(a == 0) for a in z0)
    c = CoefficientSet(G, [Constant(1.0)])
    mu, gmu, lmu = mu_field(c, [2.0])
    assert np.all(mu == -2.0) and np.all(gmu == 0) and np.all(lmu == 0)
    g = Grid.interval(0.0, 1.0, 50)
    s = CoefficientSet(g, [SineProduct(1.0, (np.pi,))])
    _, _, lmu = mu_field(s, [1.0])
    assert np.allclose(lmu, np.pi**2 * np.sin(np.pi * g.x), atol=1e-12)
    with pytest.raises(ValueError):
        mu_field(s, [1.0, 2.0])


@pytest.mark.parametrize("f", [SineProduct(0.7, (1.3, 2.1), (0.2, -0.4)), Gaussian(1.2, (0.1, -0.2), 0.6)])
def test_coefficient_derivatives_vs_differences(f):
    errs = []
    for n in (20, 40):
        g = Grid.rectangle((-1, 1), (-1, 1), n)
        c = CoefficientSet(g, [f])
        Fc = c.closure[0][0].reshape(n + 2, n + 2)
        lap_fd = g.laplacian(c.F[0]) + 0.0
        # boundary contributions of the closure values
        inner = np.zeros((n + 2, n + 2))
        inner[1:-1, 1:-1] = c.F[0].reshape(n, n)
        bnd = Fc - inner
        lap_fd += ((bnd[:-2, 1:-1] + bnd[2:, 1:-1]) / g.h[0] ** 2
                   + (bnd[1:-1, :-2] + bnd[1:-1, 2:]) / g.h[1] ** 2).reshape(-1)
        gx_fd = ((Fc[2:, 1:-1] - Fc[:-2, 1:-1]) / (2 * g.h[0])).reshape(-1)
        errs.append((np.abs(lap_fd - c.L[0]).max(), np.abs(gx_fd - c.G[0][:, 0]).max()))
    assert errs[0][0] / errs[1][0] > 3.5 and errs[0][1] / errs[1][1] > 3.5


# one step --------------------------------------------------------------------

def test_zero_is_fixed_point():
    cfg = SolverConfig(m=2.0, dt=0.01, delta=0.1)
    z = brownian()
    assert np.all(step_transformed(np.zeros(G.size), 0.0, z, cfg, SINE) == 0)
    assert np.all(solve_transformed(np.zeros(G.size), z, cfg, SINE).values == 0)
    assert np.all(solve_rough(np.zeros(G.size), z, cfg, SINE).values == 0)


@pytest.mark.parametrize("m", [2.0, 0.6])
def test_constant_mu_is_time_rescaling(m):
    c = -0.7
    coeffs = CoefficientSet(G, [Constant(1.0)])
    cfg = SolverConfig(m=m, dt=0.01, delta=0.05, newton_tol=1e-13, anchor="origin")
    z = path_from_function(lambda t: np.full_like(t, -c), 0.0, 0.1, 0.01)  # mu = c
    spec = PhiSpec(m, 0.05)
    Y = solve_transformed(BUMP, z, cfg, coeffs, spec=spec).final
    s = np.exp((1 - m) * c)
    cfg0 = SolverConfig(m=m, dt=0.01 * s, delta=0.05, newton_tol=1e-13, anchor="origin")
    Y0 = solve_transformed(BUMP, zero_path(0.0, 0.1 * s, 0.01 * s), cfg0, coeffs, spec=spec).final
    assert np.abs(Y - Y0).max() <= 1e-8


def test_single_step_first_order():
    g = Grid.interval(-1, 1, 200)
    from roughpme.harness.profiles import zkb_profile
    u0 = zkb_profile(0.1, g.x, 2.0)
    coeffs = CoefficientSet(g, [Constant(0.0)])
    spec = PhiSpec(2.0, 0.01)
    z = zero_path(0.0, 0.02, 0.02 / 64)

    def run(dt, steps):
        cfg = SolverConfig(m=2.0, dt=dt, delta=0.01, newton_tol=1e-13)
        return solve_rough(u0, z, cfg, coeffs, T=dt * steps, spec=spec).final

    errs = []
    for dt in (0.02, 0.01):
        ref = run(dt / 16, 16)
        errs.append(np.abs(run(dt, 1) - ref).max())
    assert 1.5 <= errs[0] / errs[1] <= 2.6


def test_origin_and_step_anchor_agree_without_noise():
    z = zero_path(0, 0.1, 0.01)
    a = solve_rough(BUMP, z, SolverConfig(m=2.0, dt=0.01, delta=0.1), SINE).final
    b = solve_rough(BUMP, z, SolverConfig(m=2.0, dt=0.01, delta=0.1, anchor="origin"), SINE).final
    assert np.abs(a - b).max() <= 1e-9


# trajectories ----------------------------------------------------------------

def test_rough_equals_transformed_without_noise():
    z = zero_path(0, 0.1, 0.01)
    cfg = SolverConfig(m=2.0, dt=0.01, delta=0.1)
    a = solve_rough(BUMP, z, cfg, SINE)
    b = solve_transformed(BUMP, z, cfg, SINE)
    assert np.array_equal(a.values, b.values)


def test_l1_nonincreasing_without_noise():
    z = zero_path(0, 0.5, 0.01)
    traj = solve_transformed(np.maximum(1 - G.x**2, 0) * 2, z, SolverConfig(m=2.0, dt=0.01), SINE)
    l1 = traj.diagnostics["L1"]
    assert np.all(np.diff(l1) <= 1e-12)
    assert l1[-1] < l1[0]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_nonnegativity_and_energy(seed):
    z = brownian(seed=seed)
    cfg = SolverConfig(m=2.0, dt=0.005)
    traj = solve_rough(BUMP, z, cfg, SINE)
    assert traj.values.min() >= -10 * cfg.newton_tol
    d = traj.diagnostics
    lhs = d["energy"] + d["dissipation"]
    rhs = d["energy"][0] + d["energy_source"]
    assert np.all(lhs <= rhs + 1e-10 * (1 + np.abs(rhs)))
    assert all(np.all(np.isfinite(v)) for v in d.values())


def test_determinism():
    z = brownian(seed=3)
    cfg = SolverConfig(m=3.0, dt=0.005)
    a = solve_rough(BUMP, z, cfg, SINE)
    b = solve_rough(BUMP.copy(), z, cfg, SINE)
    assert np.array_equal(a.values, b.values)
    assert a.to_csv() == b.to_csv()
    assert a.diagnostics_json() == b.diagnostics_json()


def test_rejects_bad_input():
    z = brownian()
    cfg = SolverConfig(m=2.0, dt=0.01)
    bad = BUMP.copy()
    bad[3] = np.nan
    with pytest.raises(ValueError):
        solve_rough(bad, z, cfg, SINE)
    with pytest.raises(ValueError):
        SolverConfig(m=2.0, dt=0.0)
    with pytest.raises(ValueError):
        SolverConfig(m=2.0, dt=0.1, delta=1.5)


def test_csv_export():
    z = zero_path(0, 0.02, 0.01)
    traj = solve_rough(np.stack([BUMP, 2 * BUMP]), z, SolverConfig(m=2.0, dt=0.01), SINE)
    lines = traj.to_csv().splitlines()
    assert lines[0] == "t,member,x,value"
    assert len(lines) == 1 + 3 * 2 * G.size


# direct scheme ---------------------------------------------------------------

def test_direct_requires_bv():
    with pytest.raises(NotBoundedVariation):
        solve_direct_bv(BUMP, brownian(), SolverConfig(m=2.0, dt=0.01), SINE)


def test_direct_matches_rough_without_noise():
    z = zero_path(0, 0.1, 0.01)
    cfg = SolverConfig(m=2.0, dt=0.01, delta=0.1, newton_tol=1e-12)
    a = solve_direct_bv(BUMP, z, cfg, SINE).values
    b = solve_rough(BUMP, z, cfg, SINE).values
    assert np.abs(a - b).max() <= 1e-10
    assert np.all(solve_direct_bv(0 * BUMP, z, cfg, SINE).values == 0)


def test_direct_and_rough_converge_together():
    parent = path_from_function(lambda t: np.sin(6 * t) + t, 0.0, 0.25, 2**-12)
    dists = []
    for k in (6, 7, 8):
        z = piecewise_linear(parent, k)
        cfg = SolverConfig(m=2.0, dt=0.25 / 2**k, delta=0.1)
        spec = PhiSpec(2.0, 0.1)
        a = solve_direct_bv(BUMP, z, cfg, SINE, spec=spec, diagnostics=False).final
        b = solve_rough(BUMP, z, cfg, SINE, spec=spec, diagnostics=False).final
        dists.append(G.norm(a - b, "Hdual"))
    assert dists[0] > dists[1] > dists[2]


# limit solutions -------------------------------------------------------------

def test_limit_solution_bounded_data():
    z = brownian(T=0.05)
    traj = limit_solution(BUMP, [10, 100], z, SolverConfig(m=2.0, dt=0.005), SINE)
    assert np.all(traj.diagnostics["cauchy_increments"] == 0)
    with pytest.raises(ValueError):
        limit_solution(BUMP, [10, 5], z, SolverConfig(m=2.0, dt=0.005), SINE)


def test_limit_solution_spike_contraction():
    g = Grid.interval(-4.0, 4.0, 80)
    coeffs = CoefficientSet(g, [SineProduct(0.5, (np.pi / 4,))])
    z = sample_path(NoiseModel.brownian(), 0.0, 0.2, 1e-6, seed=2)
    spike = np.zeros(g.size)
    spike[40] = 1e3
    cfg = SolverConfig(m=2.0, dt=0.01)
    traj = limit_solution(spike, [10, 100, 1000], z, cfg, coeffs)
    C = estimate_contraction_constant(g, coeffs, z, 2.0, T=0.2)
    inc = traj.diagnostics["cauchy_increments"]
    assert np.all(inc <= C * traj.diagnostics["clamp_differences"])


# very weak residual ----------------------------------------------------------

def test_residual_zero():
    T = 0.1
    z = brownian(T=T)
    cfg = SolverConfig(m=2.0, dt=0.001)
    eta = test_function(G, T)
    zero = solve_transformed(np.zeros(G.size), z, cfg, SINE)
    assert very_weak_residual(zero, eta, SINE, z) <= 1e-14
    with pytest.raises(ValueError):
        very_weak_residual(solve_rough(BUMP, z, cfg, SINE), eta, SINE, z)


def test_residual_corruption():
    from roughpme.harness.profiles import zkb_profile
    g = Grid.interval(-4, 4, 200)
    T = 0.4
    coeffs = CoefficientSet(g, [Constant(0.0)])
    z = zero_path(0.0, T, 1e-3)
    traj = solve_transformed(zkb_profile(0.1, g.x, 2.0), z, SolverConfig(m=2.0, dt=1e-3), coeffs)
    eta = test_function(g, T)
    good = very_weak_residual(traj, eta, coeffs, z)

    def corrupted(i):
        vals = traj.values.copy()
        vals[i] = 0.0
        return very_weak_residual(traj.with_values(vals, "Y"), eta, coeffs, z)

    assert corrupted(0) >= 100 * good
    # an interior slice carries quadrature weight dt, the order of the discretisation residual
    assert corrupted(len(traj) // 2) > good


# properties ------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.001, 0.05), st.sampled_from([0.5, 2.0, 3.0]))
def test_property_monotone_step(seed, dt, m):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 2, G.size)
    b = a + rng.uniform(0, 1, G.size) * (rng.random(G.size) < 0.5)
    z = brownian(T=0.1, dt=1e-3, seed=seed % 1000)
    cfg = SolverConfig(m=m, dt=round(dt, 3) or 0.001, delta=0.05, anchor="origin")
    spec = PhiSpec(m, 0.05)
    ya = step_transformed(a, 0.0, z, cfg, SINE, spec=spec)
    yb = step_transformed(b, 0.0, z, cfg, SINE, spec=spec)
    scale = max(1.0, np.abs(b).max())
    assert np.all(ya <= yb + 10 * cfg.newton_tol * scale)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_property_ordered_trajectories(seed):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(0, 1, G.size) * BUMP
    hi = lo + rng.uniform(0, 1, G.size) * BUMP
    z = brownian(T=0.05, seed=seed % 1000)
    cfg = SolverConfig(m=2.0, dt=0.005)
    out = solve_rough(np.stack([lo, hi]), z, cfg, SINE, diagnostics=False).values
    assert np.all(out[:, 0] <= out[:, 1] + 1e-8)
