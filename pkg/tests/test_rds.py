import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughpme.coefficients import CoefficientSet, Constant, SineProduct
from roughpme.exceptions import WindowError
from roughpme.geometry import Grid
from roughpme.rds import CocycleRun, absorption_check, attractor_diameter_curve, cocycle, pullback
from roughpme.signals import NoiseModel, zero_path
from roughpme.solver import SolverConfig

G = Grid.interval(-4.0, 4.0, 60)
F = CoefficientSet(G, [SineProduct(0.5, (np.pi / 4,))])
CFG = SolverConfig(m=2.0, dt=0.01)


def bundle(n, seed=0, amp=(1.0, 10.0)):
    rng = np.random.default_rng(seed)
    a = np.exp(rng.uniform(np.log(amp[0]), np.log(amp[1]), n))
    c = rng.uniform(-2, 2, n)
    return a[:, None] * np.maximum(1 - (G.x[None, :] - c[:, None]) ** 2, 0)


@pytest.fixture(scope="module")
def run():
    return CocycleRun.sample(NoiseModel.brownian(), 3.0, 1.0, 1e-3, 11, F, CFG, sup=10.0)


def test_identity_and_zero(run):
    x = bundle(1)[0]
    assert np.array_equal(cocycle(run, 0.0, 0.3, x), x)
    assert np.all(cocycle(run, 0.5, -1.0, np.zeros(G.size)) == 0)


def test_window_errors(run):
    with pytest.raises(WindowError):
        cocycle(run, 2.0, 0.0, bundle(1)[0])
    with pytest.raises(WindowError):
        pullback(run, bundle(2), [1.0, 5.0])
    with pytest.raises(WindowError):
        CocycleRun(zero_path(1.0, 2.0, 0.01), F, CFG)


def test_cocycle_identity(run):
    rng = np.random.default_rng(3)
    xs = bundle(5, seed=4)
    for x in xs:
        s = -round(rng.uniform(0.5, 2.5), 2)
        t1 = round(rng.uniform(0.05, 0.4), 2)
        t2 = round(rng.uniform(0.05, 0.4), 2)
        whole = cocycle(run, t1 + t2, s, x)
        legs = cocycle(run, t2, s + t1, cocycle(run, t1, s, x))
        steps = round((t1 + t2) / CFG.dt)
        assert G.norm(whole - legs, "L1") <= 5 * CFG.newton_tol * steps


def test_cache(run):
    x = bundle(1, seed=9)[0]
    before = run.cache_info()["entries"]
    a = cocycle(run, 0.2, -0.6, x)
    b = cocycle(run, 0.2, -0.6, x.copy())
    assert np.array_equal(a, b)
    assert run.cache_info()["entries"] == before + 1


def test_pullback_trivial_bundles(run):
    rep = pullback(run, np.zeros((3, G.size)), [0.5, 1.0])
    assert all(np.all(d == 0) for d in rep.diameters.values())
    assert np.all(rep.images == 0)
    x = bundle(1, seed=2)[0]
    rep = pullback(run, np.stack([x, x]), [0.5, 1.0, 1.5])
    assert all(np.all(d == 0) for d in rep.diameters.values())
    curve = attractor_diameter_curve(rep)
    assert np.all(curve["diam_L1"] == 0) and np.all(curve["diam_Linf"] == 0)


def test_pullback_ordered_bundle(run):
    x = bundle(1, seed=5)[0]
    rep = pullback(run, np.stack([x, 2 * x, 3 * x]), [0.5, 1.0, 2.0], workers=2)
    im = rep.images
    slack = 1e-8 * np.abs(im).max()
    assert np.all(im[:, 0] <= im[:, 1] + slack) and np.all(im[:, 1] <= im[:, 2] + slack)
    assert np.all(rep.diameters["L1"] >= 0)


def test_pullback_exports(run):
    rep = pullback(run, bundle(3, seed=6), [0.5, 1.0, 1.5])
    lines = rep.to_csv().splitlines()
    assert lines[0] == "t,diam_L1,diam_L2,diam_Linf,max_sup" and len(lines) == 4
    payload = json.loads(rep.to_json())
    assert payload["times"] == [0.5, 1.0, 1.5]
    with pytest.raises(ValueError):
        attractor_diameter_curve(pullback(run, bundle(2), [0.5, 1.0]))


def test_deterministic_l1_diameter_nonincreasing():
    c = CoefficientSet(G, [Constant(0.0)])
    r = CocycleRun(zero_path(-3.0, 0.0, 0.01), c, CFG, sup=10.0)
    rep = pullback(r, bundle(6, seed=7), [0.25, 0.5, 1.0, 2.0, 3.0])
    assert np.all(np.diff(rep.diameters["L1"]) <= 1e-12)


def test_fbm_bundle_shrinks():
    r = CocycleRun.sample(NoiseModel.fbm(0.7), 4.0, 0.0, 1e-3, 5, F, CFG, sup=10.0)
    rep = pullback(r, bundle(8, seed=8), [0.5, 4.0])
    for w in ("L1", "L2", "Linf"):
        assert rep.diameters[w][1] < rep.diameters[w][0]


def test_absorption():
    r = CocycleRun.sample(NoiseModel.brownian(), 2.0, 0.0, 1e-5, 3, F, CFG, sup=1e3)
    xs = np.concatenate([np.zeros((1, G.size)), bundle(3, seed=1, amp=(1e3, 1e3))])
    rep = pullback(r, xs, [0.5, 1.0, 1.5, 2.0])
    out = absorption_check(rep, r)
    assert list(out["times"]) == [1.0, 1.5, 2.0]
    assert np.all(out["absorbed"]) and np.all(out["nodewise_absorbed"])
    zero = pullback(r, np.zeros((1, G.size)), [1.0])
    z = absorption_check(zero, r, tol=0.0)
    assert z["margin"][0] == pytest.approx(z["radius"])
    with pytest.raises(ValueError):
        absorption_check(pullback(r, xs, [0.5]), r)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_property_comparison_under_pullback(seed):
    r = CocycleRun.sample(NoiseModel.brownian(), 1.0, 0.0, 1e-3, seed % 997, F, CFG, sup=10.0)
    rng = np.random.default_rng(seed)
    lo = bundle(1, seed=seed % 1000)[0]
    hi = lo + rng.uniform(0, 2, G.size) * (np.abs(G.x) < 3)
    im = pullback(r, np.stack([lo, hi]), [0.3, 1.0]).images
    assert np.all(im[:, 0] <= im[:, 1] + 1e-8 * np.abs(im).max())
