import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatstrip.errors import ConfigError, InvalidProfileError, UnsupportedModelError
from flatstrip.flow import flow_states
from flatstrip.hyperbolic import HPoint, mobius_tangent, orbit_ball
from flatstrip.surfaces import (Collar, CollarPoint, ConstantNegative, UnitTangent, as_states,
                                build_collar, curvature_at, dump_model_spec, model_from_dict,
                                parse_model_spec, sasaki_arrays, sasaki_distance,
                                sasaki_quotient, wrap_angle)


def random_states(rng, n, box=1.5):
    return np.stack([rng.uniform(-box, box, n), np.exp(rng.uniform(-1, 1, n)),
                     rng.uniform(0, 2 * np.pi, n)], axis=-1)


# ---------------------------------------------------------------- tangents

def test_unit_tangent_normalizes_angle():
    t = UnitTangent(HPoint(0, 1), 7.0)
    assert 0 <= t.angle < 2 * math.pi
    assert t.reversed().reversed().angle == pytest.approx(t.angle)
    assert CollarPoint(0.0, -1.0).phi == pytest.approx(2 * math.pi - 1)
    with pytest.raises(ValueError):
        UnitTangent(HPoint(0, 1), float("nan"))


def test_as_states_round_trip(M, collar):
    for model, t in ((M, M.tangent(0.2, 1.3, 0.4)), (collar, collar.tangent(0.1, 2.0, 1.0))):
        arr = as_states(t)
        assert arr.shape == (1, 3)
        assert UnitTangent.from_array(model, arr[0]) == t


def test_wrap_angle():
    a = np.array([0.0, math.pi, -math.pi, 3 * math.pi, 0.5])
    assert np.allclose(wrap_angle(a), [0, math.pi, math.pi, math.pi, 0.5])


# ---------------------------------------------------------------- collar profile

def test_collar_profile_c2(collar):
    p = collar.profile
    r = np.linspace(-2.5, 2.5, 20001)
    h = r[1] - r[0]
    f = p.f(r)
    assert np.max(np.abs(np.gradient(f, h) - p.df(r))[1:-1]) < 1e-6
    assert np.max(np.abs(np.gradient(p.df(r), h) - p.d2f(r))[1:-1]) < 5e-3
    # no jumps in the second derivative at the ramp ends
    for r0 in (0.25, 0.75, -0.25, -0.75):
        lo, hi = p.d2f(r0 - 1e-7), p.d2f(r0 + 1e-7)
        assert abs(lo - hi) < 1e-5


def test_collar_curvature_regions(collar):
    p = collar.profile
    assert np.all(p.curvature(np.linspace(-0.25, 0.25, 101)) == 0)
    far = np.linspace(0.75, 6, 101)
    assert np.allclose(p.curvature(far), -1, atol=1e-12)
    assert np.allclose(p.curvature(-far), -1, atol=1e-12)
    ramp = np.linspace(0.26, 0.74, 101)
    assert np.all(p.curvature(ramp) < 0)
    # K = -f''/f against finite differences
    r = np.linspace(0.3, 2.0, 50)
    h = 1e-4
    fd = (p.f(r + h) - 2 * p.f(r) + p.f(r - h)) / h ** 2
    assert np.allclose(-fd / p.f(r), p.curvature(r), atol=1e-5)


def test_collar_beyond_ramp_is_cosh():
    p = build_collar(1.3, 0.5, 0.5).profile
    r = np.linspace(1.0, 3.0, 9)
    m0 = p.m_derivs(0.75)[0]
    assert np.allclose(p.f(r), 1.3 * np.cosh(m0 + r - 0.75), rtol=1e-12)


@pytest.mark.parametrize("bad", [(0, 0.5, 0.5), (1, -0.1, 0.5), (1, 0.5, 0), (1, float("nan"), 1)])
def test_collar_rejects_bad_profile(bad):
    with pytest.raises(InvalidProfileError):
        build_collar(*bad)


def test_curvature_at(M, collar):
    assert curvature_at(M, HPoint(0, 1)) == -1
    assert curvature_at(collar, CollarPoint(0.0, 0.0)) == 0
    assert curvature_at(collar, CollarPoint(2.0, 0.0)) == pytest.approx(-1)
    with pytest.raises(UnsupportedModelError):
        curvature_at(object(), None)


def test_band_circle_period(collar):
    assert collar.band_period() == pytest.approx(2 * math.pi)
    s = collar.band_circle(0.1).as_array()
    back = flow_states(collar, s[None], collar.band_period())[0]
    assert abs(back[0] - s[0]) < 1e-8
    assert np.allclose(wrap_angle(back[1:] - s[1:]), 0, atol=1e-8)


# ---------------------------------------------------------------- Sasaki proxy

def test_sasaki_zero_and_symmetric(M):
    rng = np.random.default_rng(0)
    a, b = random_states(rng, 200), random_states(rng, 200)
    assert np.all(sasaki_arrays(M, a, a) == 0)
    assert np.allclose(sasaki_arrays(M, a, b), sasaki_arrays(M, b, a), atol=1e-10)


def test_sasaki_along_geodesic_is_time(M, collar):
    t = np.array([0.05, 0.3, 1.0, 2.0])
    s0 = np.array([[0.3, 0.8, 1.1]])
    s = np.stack([flow_states(M, s0, tt)[0] for tt in t])
    assert np.allclose(sasaki_arrays(M, s0, s), t, atol=1e-9)
    # radial geodesic on the collar: no angle change after transport
    r0 = np.array([[0.0, 1.0, 0.0]])
    s = np.stack([flow_states(collar, r0, tt)[0] for tt in t])
    assert np.allclose(sasaki_arrays(collar, r0, s), t, atol=1e-7)
    # band circle: the chord is the arc inside the flat band
    b0 = collar.band_circle(0.0, 1.0).as_array()[None]
    s = np.stack([flow_states(collar, b0, tt)[0] for tt in t])
    assert np.allclose(sasaki_arrays(collar, b0, s), t, atol=1e-7)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.3, 3), st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 2 ** 31))
def test_sasaki_isometry_invariant(a, b, c, seed):
    M = ConstantNegative()
    rng = np.random.default_rng(seed)
    s1, s2 = random_states(rng, 5), random_states(rng, 5)
    m = np.array([[a, b], [c, (1 + b * c) / a]])
    z1, a1 = mobius_tangent(m, s1[:, 0] + 1j * s1[:, 1], s1[:, 2])
    z2, a2 = mobius_tangent(m, s2[:, 0] + 1j * s2[:, 1], s2[:, 2])
    t1 = np.stack([z1.real, z1.imag, a1], -1)
    t2 = np.stack([z2.real, z2.imag, a2], -1)
    d0 = sasaki_arrays(M, s1, s2)
    assert np.allclose(sasaki_arrays(M, t1, t2), d0, atol=1e-7 * (1 + d0.max()))


def test_sasaki_small_separation_branch(M):
    s1 = np.array([0.1, 1.2, 0.4])
    for h in (1e-5, 1e-7):
        s2 = s1 + np.array([h, 0.3 * h, 2 * h])
        d = sasaki_arrays(M, s1, s2)
        # base length ~ |dz|/y, angle gap ~ 2h + dx/y after transport
        base = math.hypot(h, 0.3 * h) / 1.2
        ang = 2 * h + h / 1.2
        assert d == pytest.approx(math.hypot(base, ang), rel=1e-3)


def test_quotient_not_larger_than_cover(M):
    rng = np.random.default_rng(1)
    a, b = random_states(rng, 100, box=0.6), random_states(rng, 100, box=0.6)
    q = sasaki_quotient(M, a, b)
    assert np.all(q <= sasaki_arrays(M, a, b) + 1e-9)


def test_quotient_deck_invariant(M, G):
    rng = np.random.default_rng(2)
    s = random_states(rng, 20, box=0.5)
    mats = orbit_ball(G, 5.0).matrices
    g = mats[rng.integers(len(mats), size=20)]
    z, ang = mobius_tangent(g, s[:, 0] + 1j * s[:, 1], s[:, 2])
    t = np.stack([z.real, z.imag, ang], -1)
    assert np.allclose(sasaki_quotient(M, s, t), 0, atol=1e-7)


def test_sasaki_distance_wrapper(M, collar):
    a, b = M.tangent(0, 1, 0.3), M.tangent(0.2, 1.1, 0.5)
    assert sasaki_distance(M, a, b) == pytest.approx(float(sasaki_arrays(M, a.as_array(), b.as_array())))
    assert sasaki_distance(M, a, b, quotient=True) <= sasaki_distance(M, a, b) + 1e-12
    c1, c2 = collar.tangent(0, 0, 0), collar.tangent(0, 2 * math.pi - 0.1, 0)
    assert sasaki_distance(collar, c1, c2) == pytest.approx(0.1, abs=1e-12)


# ---------------------------------------------------------------- model specs

def test_model_spec_round_trip(M, collar):
    for model in (M, collar):
        again = model_from_dict(parse_model_spec(dump_model_spec(model)))
        assert again.model_id == model.model_id
    assert isinstance(model_from_dict({"kind": "collar", "c": "1", "w": "0.5", "s": "0.5"}), Collar)


def test_model_spec_errors():
    with pytest.raises(ConfigError):
        parse_model_spec("kind constant")
    with pytest.raises(ConfigError):
        model_from_dict({"kind": "torus"})
    with pytest.raises(ConfigError):
        model_from_dict({"kind": "collar", "c": "1"})
    with pytest.raises(ConfigError):
        model_from_dict({"kind": "collar", "c": "1", "w": "0.5", "s": "-1"})
