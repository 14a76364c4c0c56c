import math

import numpy as np
import pytest

from flatstrip.errors import (EndpointUnstableError, PseudoOrbitError, UnsupportedModelError)
from flatstrip.flow import flow_states
from flatstrip.hyperbolic import GroupWord, enumerate_conjugacy_classes, translation_length
from flatstrip.shadowing import (axis_tangent, close_periodic, enumerate_periodic_orbits,
                                 make_pseudo_orbit, shadow_search, skeleton, transverse_jump)
from flatstrip.surfaces import sasaki_arrays, sasaki_quotient


def random_start(rng):
    return np.array([rng.uniform(-0.4, 0.4), rng.uniform(0.7, 1.4), rng.uniform(0, 2 * np.pi)])


# ---------------------------------------------------------------- pseudo-orbits

def test_transverse_jump_size_exact(M):
    rng = np.random.default_rng(0)
    for _ in range(10):
        s = random_start(rng)
        for size in (0.01, 0.07):
            for sign in (1, -1):
                j = transverse_jump(M, s, size, sign)
                assert float(sasaki_arrays(M, s, j)) == pytest.approx(size, rel=1e-9)


def test_pseudo_orbit_validation(M):
    s = np.array([0.0, 1.0, 1.0])
    end = flow_states(M, s[None], 2.0)[0]
    far = transverse_jump(M, end, 0.1)
    with pytest.raises(PseudoOrbitError) as err:
        make_pseudo_orbit(M, [(s, 2.0), (far, 2.0)], 0.05)
    assert err.value.index == 0 and err.value.jump == pytest.approx(0.1, rel=1e-6)
    with pytest.raises(PseudoOrbitError):
        make_pseudo_orbit(M, [(s, 0.5), (end, 2.0)], 0.05, a=1.0)
    with pytest.raises(ValueError):
        make_pseudo_orbit(M, [], 0.1)
    po = make_pseudo_orbit(M, [(s, 2.0), (end, 3.0)], 0.05)
    assert po.delta_actual < 1e-9 and po.total_time == 5.0 and len(po) == 2


def test_skeleton_jumps(M):
    po = skeleton(M, np.array([0.1, 1.1, 0.5]), 0.04, n_segments=4)
    assert len(po) == 4
    assert np.allclose(po.jumps, 0.036, rtol=1e-8)


# ---------------------------------------------------------------- tracing

def test_shadow_unperturbed_orbit(M):
    s = np.array([0.2, 0.9, 2.0])
    segs, cur = [], s
    for _ in range(3):
        segs.append((cur, 3.0))
        cur = flow_states(M, cur[None], 3.0)[0]
    res = shadow_search(M, make_pseudo_orbit(M, segs, 0.01))
    assert res.eps_achieved < 1e-8
    assert res.reparam_dev < 1e-8


def test_shadow_delta_halving(M):
    rng = np.random.default_rng(7)
    for _ in range(3):
        start = random_start(rng)
        signs = rng.choice([-1.0, 1.0], size=3)
        eps, devs = [], []
        for delta in (0.08, 0.04, 0.02):
            res = shadow_search(M, skeleton(M, start, delta, signs=signs))
            eps.append(res.eps_achieved)
            devs.append(res.reparam_dev)
            assert res.eps_achieved < delta
        assert eps[0] > eps[1] > eps[2]
        assert all(d <= e for d, e in zip(devs, eps))


def test_shadow_table_monotone(M):
    res = shadow_search(M, skeleton(M, np.array([0.0, 1.0, 1.0]), 0.05))
    tab = res.table()
    assert np.all(np.diff(tab["alpha"]) >= 0)
    assert np.max(tab["dist"]) == pytest.approx(res.eps_achieved)


def test_shadow_errors(M, collar):
    s = np.array([0.0, 1.0, 1.0])
    short = make_pseudo_orbit(M, [(s, 0.5), (flow_states(M, s[None], 0.5)[0], 2.0)], 0.01)
    with pytest.raises(EndpointUnstableError):
        shadow_search(M, short)
    with pytest.raises(UnsupportedModelError):
        shadow_search(collar, make_pseudo_orbit(collar, [(collar.band_circle().as_array(), 1.0)], 0.1))
    with pytest.raises(UnsupportedModelError):
        transverse_jump(collar, np.zeros(3), 0.1)


# ---------------------------------------------------------------- closing

def test_close_single_generator(M, G):
    m = G.generators["a"]
    ell = translation_length(m)
    s = axis_tangent(m)
    po = make_pseudo_orbit(M, [(s, ell)], 1e-6, periodic=True)
    rec = close_periodic(M, po)
    assert rec.period == pytest.approx(ell, abs=1e-9)
    assert rec.closure_residual(M) < 1e-8
    assert GroupWord(rec.word).canonical() == GroupWord("a").canonical()
    assert rec.primitive


def test_close_perturbed_chain(M, G):
    m = G.evaluate("ab")
    ell = translation_length(m)
    s = axis_tangent(m)
    half = flow_states(M, s[None], ell / 2)[0]
    kicked = transverse_jump(M, half, 0.002)
    po = make_pseudo_orbit(M, [(s, ell / 2), (kicked, ell / 2)], 0.05, periodic=True)
    rec = close_periodic(M, po)
    assert rec.closure_residual(M) < 1e-8
    assert GroupWord(rec.word).canonical() == GroupWord("ab").canonical()
    assert rec.diagnostics["period_gap"] < 0.05
    assert rec.diagnostics["eps_achieved"] < 0.05


def test_close_collar_band(collar):
    s = np.array([0.1, 0.0, math.pi / 2 + 1e-3])
    po = make_pseudo_orbit(collar, [(s, 2 * math.pi)], 0.01, periodic=True)
    rec = close_periodic(collar, po)
    assert rec.period == pytest.approx(2 * math.pi, abs=1e-6)
    assert rec.closure_residual(collar) < 1e-7


def test_close_requires_periodic(M):
    s = np.array([0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        close_periodic(M, make_pseudo_orbit(M, [(s, 2.0)], 0.1))


# ---------------------------------------------------------------- tables

def test_periodic_table(M, G):
    tab = enumerate_periodic_orbits(M, 5.0)
    cls = enumerate_conjugacy_classes(G, 5.0)
    assert len(tab) == len(cls) == 24
    assert tab.count(4.0) == 12
    assert np.all(np.diff(tab.periods()) >= -1e-9)
    for rec in tab:
        assert rec.closure_residual(M) < 1e-8
        assert rec.samples.speed_residual() < 1e-12
    text = tab.to_csv()
    assert text.splitlines()[0] == "word,period,x,y,angle,primitive"
    assert len(text.splitlines()) == 25


def test_periodic_orbits_distinct(M):
    tab = enumerate_periodic_orbits(M, 4.0)
    init = np.array([r.initial.as_array() for r in tab])
    # no orbit passes through the initial tangent of another class
    for k in range(len(init)):
        others = np.delete(init, k, axis=0)
        for s in tab[k].samples.states[::8]:
            assert sasaki_quotient(M, np.repeat(s[None], len(others), 0), others).min() > 1e-3


def test_enumeration_constant_only(collar):
    with pytest.raises(UnsupportedModelError):
        enumerate_periodic_orbits(collar, 5.0)
