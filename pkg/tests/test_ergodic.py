import json
import math

import numpy as np
import pytest

from flatstrip.ergodic import (GENERIC_POINT, OrbitMeasure, SeparationCount, abramov_ratio,
                               ball_observable, ball_sampler, builtin_observables,
                               bundle_sampler, center_distance_observable, class_entropy_check,
                               constant_observable, count_separated, curvature_observable,
                               entropy_estimate, growth_rate_per, growth_rate_report,
                               liouville_average, make_rng, mme_diagnostics, nu_hat, nu_T,
                               octagon_boundary_radius, orbit_average, orbit_lyapunov,
                               orbit_measure_integrate, ruelle_check, spanning_size,
                               states_sampler, strip_boundary_measure, uniform_measure)
from flatstrip.errors import IncompleteTableError, UnsupportedModelError
from flatstrip.hyperbolic import (CIRCUMRADIUS, INRADIUS, distance, enumerate_conjugacy_classes,
                                  in_fundamental_domain, mobius_tangent)
from flatstrip.strips import quotient_class

from oracles import brute_separated, radial_liouville


def smooth_ball(r, radius=1.0, width=0.4):
    x = np.clip((r - (radius - width / 2)) / width, 0, 1)
    return 1 - x * x * (3 - 2 * x)


# ---------------------------------------------------------------- samplers

def test_rng_streams():
    a = make_rng(5, (1,)).uniform(size=4)
    assert np.array_equal(a, make_rng(5, (1,)).uniform(size=4))
    assert not np.array_equal(a, make_rng(5, (2,)).uniform(size=4))
    assert not np.array_equal(a, make_rng(6, (1,)).uniform(size=4))


def test_octagon_boundary_radius():
    assert octagon_boundary_radius(0.0) == pytest.approx(CIRCUMRADIUS)
    assert octagon_boundary_radius(math.pi / 8) == pytest.approx(INRADIUS)
    assert octagon_boundary_radius(math.pi / 4) == pytest.approx(CIRCUMRADIUS)


def test_bundle_sampler_in_octagon_and_uniform(M, G):
    s = bundle_sampler(M, seed=1).draw(20000)
    assert s.shape == (20000, 3)
    assert np.all(in_fundamental_domain(s[:, 0] + 1j * s[:, 1], G))
    assert np.array_equal(s, bundle_sampler(M, seed=1).draw(20000))
    # Monte Carlo mean of a radial function against one-dimensional quadrature
    r = distance(s[:, 0] + 1j * s[:, 1], 1j)
    ref = radial_liouville(smooth_ball, rmax=1.2)
    assert np.mean(smooth_ball(r)) == pytest.approx(ref, abs=0.01)
    assert np.std(np.cos(s[:, 2])) == pytest.approx(math.sqrt(0.5), abs=0.01)


def test_ball_sampler_radius(M):
    from flatstrip.surfaces import sasaki_arrays
    sm = ball_sampler(M, radius=0.05, seed=3)
    s = sm.draw(500)
    c = np.array([0.0, 1.0, math.pi / 2])
    d = sasaki_arrays(M, c, s)
    assert np.all(d <= 0.05 + 1e-12) and d.max() > 0.045
    assert sm.descriptor["kind"] == "ball" and sm.descriptor["seed"] == 3
    assert states_sampler(s[:10]).draw(10).shape == (10, 3)


# ---------------------------------------------------------------- separated sets

def test_count_matches_brute_force_constant(M):
    s = ball_sampler(M, radius=0.05, seed=11).draw(150)
    times = np.arange(0, 2.05, 0.1)
    c = count_separated(M, s, 2.0, 0.1, n_candidates=150)
    assert c.M == brute_separated(M, s, times, 0.1)
    assert c.lower_bound_only and c.candidates == 150


def test_count_matches_brute_force_collar(collar):
    rng = np.random.default_rng(4)
    s = np.stack([rng.uniform(-0.6, 0.6, 120), rng.uniform(0, 0.3, 120),
                  rng.uniform(0, 2 * np.pi, 120)], -1)
    times = np.arange(0, 3.05, 0.1)
    c = count_separated(collar, s, 3.0, 0.1, n_candidates=120)
    assert c.M == brute_separated(collar, s, times, 0.1)


def test_count_deck_invariant(M, G):
    # translating candidates by deck elements changes nothing on the surface
    s = ball_sampler(M, radius=0.05, seed=12).draw(100)
    g = G.evaluate("aB").array
    z, a = mobius_tangent(g, s[:, 0] + 1j * s[:, 1], s[:, 2])
    t = np.stack([z.real, z.imag, a], -1)
    assert count_separated(M, s, 2.0, 0.1, n_candidates=100).M == \
        count_separated(M, t, 2.0, 0.1, n_candidates=100).M


def test_count_monotone(M):
    sm = ball_sampler(M, radius=0.05, seed=13)
    n_eps = [count_separated(M, sm, 2.0, e, n_candidates=400).M for e in (0.2, 0.1, 0.05)]
    assert n_eps[0] <= n_eps[1] <= n_eps[2]
    n_T = [count_separated(M, sm, T, 0.1, n_candidates=400).M for T in (1.0, 2.0, 3.0)]
    assert n_T[0] <= n_T[1] <= n_T[2]


def test_count_errors(M):
    with pytest.raises(ValueError):
        count_separated(M, np.zeros((1, 3)) + [0, 1, 0], 0.0, 0.1)


# ---------------------------------------------------------------- entropy fits

def synthetic(h, Ts=(2.0, 4.0, 6.0), eps=(0.1,), step=0.1, scale=3.0):
    return [SeparationCount(T, e, int(round(scale * math.exp(h * T))), {}, step)
            for e in eps for T in Ts]


def test_entropy_estimate_synthetic():
    est = entropy_estimate(synthetic(0.7, Ts=(4.0, 6.0, 8.0, 10.0), scale=20.0))
    assert est.h == pytest.approx(0.7, abs=0.01)
    assert est.h_map == pytest.approx(0.07, abs=0.001)
    assert "lower-bound" in est.caveats[0]
    rec = json.loads(est.to_json())
    assert rec["h"] == pytest.approx(est.h)


def test_entropy_estimate_needs_three_T():
    with pytest.raises(ValueError):
        entropy_estimate(synthetic(0.7, Ts=(2.0, 4.0)))


def test_entropy_estimate_caveats():
    counts = synthetic(0.7)
    counts[1] = SeparationCount(4.0, 0.1, 1, {}, 0.1, budget_exhausted=True)
    est = entropy_estimate(counts)
    assert any("budget" in c for c in est.caveats)
    assert any("non-monotone" in c for c in est.caveats)


def test_abramov_synthetic():
    a = entropy_estimate(synthetic(0.8, step=1.0, Ts=(4.0, 6.0, 8.0, 10.0), scale=20))
    b = entropy_estimate(synthetic(0.8, step=2.0, Ts=(4.0, 6.0, 8.0, 10.0), scale=20))
    assert abramov_ratio(a, b) == pytest.approx(2.0, rel=1e-9)


# ---------------------------------------------------------------- periodic growth

def test_periodic_growth_rate(G):
    table = enumerate_conjugacy_classes(G, 8.0)
    rep = growth_rate_report(table, [4, 5, 6, 7, 8])
    assert rep.counts == (12, 24, 48, 96, 196)
    assert rep.slope == pytest.approx(0.6968, abs=1e-3)
    T = np.arange(4.0, 9.0)
    n = np.array(rep.counts)
    assert rep.corrected_slope == pytest.approx(np.polyfit(T, np.log(T * n), 1)[0], abs=1e-12)
    assert growth_rate_per(table, [4, 5, 6, 7, 8]) == rep.slope
    with pytest.raises(IncompleteTableError):
        growth_rate_per(table, [4, 9])
    with pytest.raises(ValueError):
        growth_rate_per(table, [1, 4])
    with pytest.raises(ValueError):
        growth_rate_per(table, [4])


# ---------------------------------------------------------------- observables and Liouville

def test_observables(M, G):
    c = center_distance_observable(M)
    assert c(np.array([[0.0, 1.0, 0.3]]))[0] == pytest.approx(0.0, abs=1e-12)
    v = complex(G.vertices_uhp()[0])
    assert c(np.array([[v.real, v.imag, 0.0]]))[0] == pytest.approx(CIRCUMRADIUS, abs=1e-9)
    s = bundle_sampler(M, seed=2).draw(50)
    g = G.evaluate("cD").array
    z, a = mobius_tangent(g, s[:, 0] + 1j * s[:, 1], s[:, 2])
    t = np.stack([z.real, z.imag, a], -1)
    for ob in builtin_observables(M) + [constant_observable(2.0), curvature_observable(M)]:
        assert np.allclose(ob(s), ob(t), atol=1e-9)
        lo, hi = ob.bounds
        vals = ob(s)
        assert np.all(vals >= lo - 1e-12) and np.all(vals <= hi + 1e-12)
    b = ball_observable(M, GENERIC_POINT, 0.8, 0.4)
    assert b(np.array([[GENERIC_POINT.real, GENERIC_POINT.imag, 0.0]]))[0] == 1.0


def test_liouville_against_quadrature(M):
    ball = ball_observable(M, 1j, 1.0, 0.4)
    ref = radial_liouville(smooth_ball, rmax=1.2)
    assert liouville_average(M, ball, 400, 400) == pytest.approx(ref, abs=2e-6)
    assert liouville_average(M, constant_observable(1.0), 50, 50) == pytest.approx(1.0)
    # direction-dependent observable averages out over the fibre
    cosang = lambda s: np.cos(s[:, 2])  # noqa: E731
    assert liouville_average(M, cosang, 20, 20, n_angle=8) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(UnsupportedModelError):
        liouville_average(object(), cosang)


def test_liouville_generic_ball_equals_centre_scaled(M):
    # a ball of radius 0.8 + 0.2 smoothing fits inside the octagon around the generic point
    ball = ball_observable(M, GENERIC_POINT, 0.8, 0.4)
    ref = radial_liouville(lambda r: smooth_ball(r, 0.8, 0.4), rmax=1.0)
    assert liouville_average(M, ball, 400, 400) == pytest.approx(ref, abs=2e-6)


# ---------------------------------------------------------------- orbit measures

def test_orbit_measures(M, table85):
    mu = nu_T(M, table85, 5.0)
    assert len(mu) == 24 and mu.normalization == "uniform"
    hat = nu_hat(M, table85, 8.0, 0.5)
    assert all(abs(r.period - 8.0) <= 0.5 for r, _ in hat.atoms)
    with pytest.raises(IncompleteTableError):
        nu_hat(M, table85, 8.3, 0.5)
    with pytest.raises(ValueError):
        OrbitMeasure([(table85[0], 0.5)], "uniform")
    with pytest.raises(ValueError):
        uniform_measure(M, [])


def test_integration_linear_and_normalized(M, table85):
    mu = nu_T(M, table85, 4.0)
    one = constant_observable(1.0)
    assert orbit_measure_integrate(mu, one) == pytest.approx(1.0)
    f, g = builtin_observables(M)[:2]
    lhs = orbit_measure_integrate(mu, lambda s: 2 * f(s) - 3 * g(s))
    rhs = 2 * orbit_measure_integrate(mu, f) - 3 * orbit_measure_integrate(mu, g)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert orbit_average(M, table85[0], curvature_observable(M)) == -1


def test_orbit_average_invariant_under_start(M, table85):
    rec = table85[3]
    f = builtin_observables(M)[0]
    a = orbit_average(M, rec, f, n=2000)
    from dataclasses import replace
    from flatstrip.flow import flow_states
    from flatstrip.surfaces import UnitTangent
    moved = UnitTangent.from_array(M, flow_states(M, rec.initial.as_array()[None], 1.234)[0])
    assert orbit_average(M, replace(rec, initial=moved), f, n=2000) == pytest.approx(a, abs=1e-5)


def test_mme_small(M, table85):
    rep = mme_diagnostics(M, (4.0, 6.0), table=table85, liouville_cells=(100, 100))
    names = [ob.name for ob in builtin_observables(M)]
    assert sorted(rep.values) == sorted(names)
    text = rep.to_csv()
    assert text.splitlines()[0] == "T,observable,value,difference"
    assert len(text.splitlines()) == 1 + 2 * len(names)
    assert set(rep.to_record()["final_gap"]) == set(names)
    with pytest.raises(ValueError):
        mme_diagnostics(M, (2.0, 4.0), table=table85, liouville_cells=(10, 10))


# ---------------------------------------------------------------- Ruelle

def test_ruelle_single_orbit(M, table85):
    rec = table85[0]
    assert orbit_lyapunov(M, rec) == pytest.approx(1.0, abs=1e-9)
    res = ruelle_check(uniform_measure(M, [rec]), M)
    assert res.h_surrogate == 0 and res.verdict


def test_ruelle_nu8(M, table85):
    res = ruelle_check(nu_T(M, table85, 8.0), M)
    assert res.h_surrogate == pytest.approx(0.6968, abs=1e-3)
    assert res.lambda_integral == pytest.approx(1.0, abs=1e-6)
    assert res.verdict


def test_ruelle_collar_band(collar, band_class):
    mu = strip_boundary_measure(collar, band_class)
    res = ruelle_check(mu, collar)
    assert res.h_surrogate == 0 and abs(res.lambda_integral) < 1e-3 and res.verdict
    with pytest.raises(UnsupportedModelError):
        strip_boundary_measure(object(), band_class)


# ---------------------------------------------------------------- class entropy

def test_class_entropy_band(collar, band_class):
    res = class_entropy_check(collar, band_class)
    assert res.verdict and len(set(res.sizes)) == 1 and res.sizes[0] > 1


def test_class_entropy_trivial(collar):
    cls = quotient_class(collar, collar.tangent(0.0, 0.0, 1.2), scan=(1.0, 1e-2), T=300.0)
    res = class_entropy_check(collar, cls, n_grid=(1, 5))
    assert res.sizes == (1, 1) and res.verdict


def test_spanning_grows_off_band(collar):
    # transversal family through the hyperbolic region spreads apart
    from flatstrip.strips import transversal_states
    th = collar.tangent(1.5, 0.0, 0.3)
    s = transversal_states(collar, th, np.linspace(-0.05, 0.05, 41))
    n1, n5 = spanning_size(collar, s, 1, 0.05), spanning_size(collar, s, 5, 0.05)
    assert n5 > n1


def test_ruelle_low_T_grid_skips_systole(M, table85):
    # default grid for T = 5 would start at T = 1, below the shortest orbit
    res = ruelle_check(nu_T(M, table85, 5.0), M)
    assert res.h_surrogate == pytest.approx(math.log(2), abs=1e-12) and res.verdict
