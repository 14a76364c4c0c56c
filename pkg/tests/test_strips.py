import json
import math

import numpy as np
import pytest

from flatstrip.errors import UnsupportedModelError
from flatstrip.flow import flow_states
from flatstrip.strips import (QuotientPoint, detect_strip, equivalence_check, expansivity_probe,
                              hausdorff, q_config, quotient_class, quotient_distance,
                              quotient_flow, semiconjugacy_check, transversal_states)
from flatstrip.surfaces import UnitTangent

FAST = dict(scan=(1.0, 1e-2), T=300.0)


# ---------------------------------------------------------------- transversals

def test_transversal_collar_is_perpendicular(collar):
    th = collar.band_circle(0.0, 1.0)
    s = transversal_states(collar, th, [-0.1, 0.0, 0.2])
    assert np.allclose(s[:, 0], [-0.1, 0.0, 0.2])
    assert np.allclose(s[:, 1], 1.0) and np.allclose(s[:, 2], th.angle)


def test_transversal_constant_is_horocycle(M):
    th = M.tangent(0.0, 1.0, math.pi / 2)
    s = transversal_states(M, th, [-0.5, 0.5])
    # the stable horocycle of an upward vector is the horizontal line y = 1
    assert np.allclose(s[:, 1], 1.0) and np.allclose(s[:, 0], [-0.5, 0.5])
    assert np.allclose(s[:, 2], math.pi / 2)


# ---------------------------------------------------------------- detection

def test_band_strip_width(band_class):
    st = band_class.members
    assert st.width == pytest.approx(0.5, abs=1e-3)
    assert st.lo == pytest.approx(-0.25, abs=1e-3) and st.hi == pytest.approx(0.25, abs=1e-3)
    assert not band_class.trivial and not st.indeterminate
    rec = json.loads(band_class.to_json())
    assert rec["width"] == pytest.approx(st.width) and rec["trivial"] is False


def test_off_centre_band_circle_same_strip(collar):
    s = detect_strip(collar, collar.band_circle(0.1), **FAST)
    assert s.lo == pytest.approx(-0.35, abs=1e-2) and s.hi == pytest.approx(0.15, abs=1e-2)
    assert s.width == pytest.approx(0.5, abs=1e-2)


def test_transversal_geodesic_trivial(collar):
    s = detect_strip(collar, collar.tangent(0.0, 0.0, 1.2), **FAST)
    assert s.trivial and s.width == 0 and len(s.members) == 1


def test_constant_strips_trivial(M):
    rng = np.random.default_rng(5)
    for x, y, a in zip(rng.uniform(-0.5, 0.5, 20), rng.uniform(0.6, 1.6, 20), rng.uniform(0, 6, 20)):
        cls = quotient_class(M, M.tangent(x, y, a), scan=(1.0, 1e-3))
        assert cls.trivial and cls.members.width == 0


def test_strip_width_scales_with_band():
    from flatstrip.surfaces import build_collar
    wide = build_collar(1.0, 0.8, 0.5)
    s = detect_strip(wide, wide.band_circle(0.0), **FAST)
    assert s.width == pytest.approx(0.8, abs=1e-2)


def test_q_config(M):
    assert q_config(M) == 1.0
    assert q_config(M, widths=[0.2, 0.5]) == 1.0
    assert q_config(M, widths=[2.0]) == pytest.approx(3.0)


# ---------------------------------------------------------------- equivalence

def test_equivalence_constant(M):
    th = M.tangent(0.1, 1.1, 0.8)
    assert equivalence_check(M, th, th)
    later = UnitTangent.from_array(M, flow_states(M, th.as_array()[None], 0.3)[0])
    assert not equivalence_check(M, th, later)
    other = M.tangent(0.1, 1.1, 0.9)
    assert not equivalence_check(M, th, other)


def test_equivalence_collar(collar):
    a = collar.band_circle(0.0, 1.0)
    assert equivalence_check(collar, a, collar.band_circle(0.2, 1.0), T=300.0)
    # same circle, shifted along the flow: not on the same stable leaf
    assert not equivalence_check(collar, a, collar.band_circle(0.2, 1.3), T=300.0)
    assert not equivalence_check(collar, a, collar.tangent(0.0, 1.0, 1.2), T=300.0)


def test_equivalence_is_symmetric(collar):
    a, b = collar.band_circle(-0.1, 2.0), collar.band_circle(0.15, 2.0)
    assert equivalence_check(collar, a, b, T=300.0) == equivalence_check(collar, b, a, T=300.0)


def test_unsupported_model():
    with pytest.raises(UnsupportedModelError):
        transversal_states(object(), None, [0.0])


# ---------------------------------------------------------------- quotient metric and flow

def test_hausdorff_properties(M):
    rng = np.random.default_rng(0)
    A = np.stack([rng.uniform(-0.3, 0.3, 5), rng.uniform(0.8, 1.2, 5), rng.uniform(0, 6, 5)], -1)
    B = A + 0.01
    assert hausdorff(M, A, A) == 0
    assert hausdorff(M, A, B) == pytest.approx(hausdorff(M, B, A))
    assert hausdorff(M, A[:1], A[:1]) == 0


def test_quotient_points_identified(collar):
    c1 = quotient_class(collar, collar.band_circle(0.0, 1.0), **FAST)
    c2 = quotient_class(collar, collar.band_circle(0.2, 1.0), **FAST)
    assert quotient_distance(collar, c1, c2) < 0.03
    assert QuotientPoint(c1).equals(QuotientPoint(c2), tol=0.03)
    c3 = quotient_class(collar, collar.band_circle(0.0, 2.0), **FAST)
    assert quotient_distance(collar, c1, c3) > 0.5


def test_quotient_flow_on_band(collar):
    cls = quotient_class(collar, collar.band_circle(0.0, 0.0), **FAST)
    img = quotient_flow(collar, cls, 1.5, **FAST)
    assert img.members.width == pytest.approx(0.5, abs=2e-2)
    assert img.representative.base.phi == pytest.approx(1.5, abs=1e-6)
    assert quotient_flow(collar, cls, 0.0) is cls


def test_semiconjugacy_band(collar):
    assert all(semiconjugacy_check(collar, collar.band_circle(0.05, 0.5), 2.0, n_members=5, **FAST))


def test_semiconjugacy_constant(M):
    assert all(semiconjugacy_check(M, M.tangent(0.0, 1.0, 1.0), 3.0))


# ---------------------------------------------------------------- expansivity

def test_expansivity_constant_model(M):
    th = M.tangent(0.0, 1.0, 1.0)
    pairs = [(th, M.tangent(0.0, 1.0, 1.0 + d)) for d in (0.01, 0.05)]
    pairs.append((th, th))
    rep = expansivity_probe(M, "original", 0.2, pairs, T=10.0)
    assert rep.violators == [] and rep.checked == 3
    with pytest.raises(ValueError):
        expansivity_probe(M, "other", 0.2, pairs)


def test_expansivity_collapse_small(collar):
    pairs = [(collar.band_circle(0.0, 0.0), collar.band_circle(h, 0.0)) for h in (0.05, 0.1)]
    orig = expansivity_probe(collar, "original", 0.2, pairs, T=10.0)
    assert len(orig.violators) == 2
    quo = expansivity_probe(collar, "quotient", 0.2, pairs, T=10.0, equiv_kw={"T": 300.0})
    assert quo.violators == [] and quo.skipped_identified == 2
    assert rec_ok(quo.to_record())


def rec_ok(rec):
    return set(rec) >= {"flow", "eps", "checked", "violators", "partial"}
