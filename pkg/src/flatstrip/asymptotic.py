"""Busemann functions, ideal endpoints, asymptoticity and connectors.

The constant model has an explicit ideal boundary (the real line plus
infinity), so endpoint questions are answered exactly. On the collar the
forward behaviour of a geodesic is read off the Clairaut integral
``p = f(r) sin(a)``: with ``|p| < c`` the geodesic crosses the waist, with
``|p| > c`` it turns back, and ``|p| = c`` inside the band gives the closed
band circles. Bi-asymptoticity on the collar is decided from sampled orbit
distances under a monotone time matching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (EndpointTimeoutError, IndeterminateError, NoConnectorError,
                     UnsupportedModelError)
from .flow import (DEFAULT_TOL, _collar_rhs, _integrate, endpoints_constant,
                   flow_samples, frame_matrices)
from .hyperbolic import HPoint, distance, geodesic_isometry, mobius, to_disk
from .surfaces import (Collar, ConstantNegative, UnitTangent, as_states, sasaki_arrays,
                       wrap_angle)

ENDPOINT_TOL = 1e-9
INDETERMINATE_BAND = 0.1


# ---------------------------------------------------------------- Busemann

@dataclass(frozen=True)
class BusemannValue:
    value: float
    T_used: float
    error_bound: float

    def __float__(self):
        return self.value


def _point(x):
    if isinstance(x, HPoint):
        return x.z
    if isinstance(x, complex):
        return x
    x = np.asarray(x, dtype=float)
    return complex(x[0], x[1])


def busemann(M, theta: UnitTangent, x, T: float = 20.0) -> BusemannValue:
    """``d(x, gamma_theta(T)) - T`` with a comparison against ``T/2``."""
    if not T > 0:
        raise ValueError("T must be positive")
    if not isinstance(M, ConstantNegative):
        raise UnsupportedModelError("Busemann values need a true distance; constant model only")
    s = as_states(theta)
    g = flow_samples(M, s, np.array([T / 2, T]))[:, 0, :]
    z = _point(x)
    vals = distance(z, g[:, 0] + 1j * g[:, 1]) - np.array([T / 2, T])
    return BusemannValue(float(vals[1]), float(T), float(abs(vals[1] - vals[0])))


def busemann_states(M, theta, pts, T=20.0):
    """Vectorised finite-T Busemann values at complex points ``pts``."""
    s = as_states(theta)
    g = flow_samples(M, s, np.array([T]))[0, 0]
    return distance(np.asarray(pts), g[0] + 1j * g[1]) - T


# ---------------------------------------------------------------- ideal points

@dataclass(frozen=True)
class IdealPoint:
    """Boundary point (constant model) or asymptotic datum (collar).

    Constant model: ``value`` is a real number or ``inf``. Collar: ``label``
    is ``'+'``/``'-'`` for the end reached (``r -> +-inf``) or ``'band'``;
    ``clairaut`` is ``f sin a``; ``value`` holds the limiting angle ``phi``
    for geodesics that escape (``nan`` for the band).
    """

    value: float
    label: str = "boundary"
    clairaut: float = math.nan

    def disk(self) -> complex:
        if math.isinf(self.value):
            return 1.0 + 0j
        return complex(to_disk(complex(self.value, 0.0)))

    def same_as(self, other: "IdealPoint", tol: float = ENDPOINT_TOL) -> bool:
        if self.label != other.label:
            return False
        if self.label == "boundary":
            return abs(self.disk() - other.disk()) < tol
        if self.label == "band":
            return abs(abs(self.clairaut) - abs(other.clairaut)) < tol
        return abs(float(wrap_angle(self.value - other.value))) < tol


def _collar_endpoint(M: Collar, s, tol, budget=None):
    prof = M.profile
    r, phi, a = s
    p = float(prof.f(r) * math.sin(a))
    c = prof.c
    if abs(abs(p) - c) <= 1e-12 * c:
        if abs(r) <= M.band_halfwidth:
            return IdealPoint(math.nan, "band", p)
        if math.cos(a) * r < 0:
            # heading inward with the band-edge momentum: approaches the band circle
            return IdealPoint(math.nan, "band", p)
    if abs(p) < c:
        label = "+" if math.cos(a) > 0 else "-"
    else:
        label = "+" if r > 0 else "-"
    # integrate until the remaining angular drift is negligible
    r_target = M.band_halfwidth + prof.s + 40.0
    t, y = 0.0, np.array(s, dtype=float)
    for _ in range(200):
        if abs(y[0]) >= r_target and math.cos(y[2]) * y[0] > 0:
            return IdealPoint(float(np.mod(y[1], 2 * math.pi)), label, p)
        _, Y = _integrate(_collar_rhs(prof), y, 50.0, tol, budget=budget)
        y = Y[-1]
        t += 50.0
    raise EndpointTimeoutError("geodesic did not leave the collar core",
                               evidence={"t": t, "state": y.tolist(), "clairaut": p})


def forward_endpoint(M, theta: UnitTangent, tol=DEFAULT_TOL) -> IdealPoint:
    s = as_states(theta)
    if isinstance(M, ConstantNegative):
        _, fwd = endpoints_constant(s)
        return IdealPoint(float(fwd[0]))
    if isinstance(M, Collar):
        return _collar_endpoint(M, s[0], tol)
    raise UnsupportedModelError(type(M).__name__)


def backward_endpoint(M, theta: UnitTangent, tol=DEFAULT_TOL) -> IdealPoint:
    s = as_states(theta)
    if isinstance(M, ConstantNegative):
        bwd, _ = endpoints_constant(s)
        return IdealPoint(float(bwd[0]))
    rev = s[0].copy()
    rev[2] += math.pi
    return forward_endpoint(M, rev[None, :], tol)


# ---------------------------------------------------------------- matching

@dataclass
class MatchResult:
    """Monotone nearest-sample matching of orbit 1 against orbit 2.

    ``index[k]`` is the sample of orbit 2 matched to sample ``k`` of orbit 1,
    ``shift[k] = t2[index[k]] - t1[k]`` and ``dist[k]`` the matched distance.
    """

    dist: np.ndarray
    index: np.ndarray
    shift: np.ndarray

    @property
    def sup(self) -> float:
        return float(self.dist.max())

    @property
    def reparam_dev(self) -> float:
        return float(np.abs(self.shift).max())


def _pair_distance(M, s1, s2, metric):
    if metric == "sasaki":
        return sasaki_arrays(M, s1, s2)
    if isinstance(M, ConstantNegative):
        return distance(s1[..., 0] + 1j * s1[..., 1], s2[..., 0] + 1j * s2[..., 1])
    s1 = np.array(s1, copy=True)
    s2 = np.array(s2, copy=True)
    s1[..., 2] = 0.0
    s2[..., 2] = 0.0
    return sasaki_arrays(M, s1, s2)


def matched_distance(M, s1, s2, times, max_shift=1.0, metric="base") -> MatchResult:
    """Match samples of two orbits on a common time grid.

    Each sample of ``s1`` is paired with the nearest sample of ``s2`` whose
    time differs by at most ``max_shift``; the pairing is then made monotone
    by a running maximum of matched indices.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    times = np.asarray(times, dtype=float)
    n = len(times)
    dt = float(np.min(np.diff(times))) if n > 1 else 1.0
    W = int(math.floor(max_shift / dt + 1e-9))
    offs = np.arange(-W, W + 1)
    idx = np.clip(np.arange(n)[None, :] + offs[:, None], 0, n - 1)
    d = _pair_distance(M, s1[None, :, :], s2[idx], metric)
    # prefer the unshifted match on ties
    d = d + 1e-15 * np.abs(offs)[:, None]
    best = idx[np.argmin(d, axis=0), np.arange(n)]
    best = np.maximum.accumulate(best)
    dist = _pair_distance(M, s1, s2[best], metric)
    return MatchResult(dist, best, times[best] - times)


# ---------------------------------------------------------------- bi-asymptoticity

@dataclass(frozen=True)
class BiasymptoticEvidence:
    sup: float
    windows_forward: tuple
    windows_backward: tuple
    C: float
    decided: object

    @property
    def margin(self):
        return self.sup - self.C


def dyadic_windows(T):
    return [(T / 8, T / 4), (T / 4, T / 2), (T / 2, T)]


def _window_sups(times, dist, T):
    fwd, bwd = [], []
    for lo, hi in dyadic_windows(T):
        m = (times >= lo) & (times <= hi)
        fwd.append(float(dist[m].max()))
        m = (times <= -lo) & (times >= -hi)
        bwd.append(float(dist[m].max()))
    return tuple(fwd), tuple(bwd)


def decide_biasymptotic(times, dist, T, C, slack=1e-6):
    """Three-valued decision from sampled matched distances.

    Returns ``True``/``False`` or raises :class:`IndeterminateError`.
    """
    sup = float(dist.max())
    fwd, bwd = _window_sups(times, dist, T)
    trend = all(w[k + 1] <= w[k] + slack for w in (fwd, bwd) for k in range(2))
    if not trend and sup > slack:
        return False, BiasymptoticEvidence(sup, fwd, bwd, C, False)
    if sup <= (1 - INDETERMINATE_BAND) * C:
        return True, BiasymptoticEvidence(sup, fwd, bwd, C, True)
    if sup > (1 + INDETERMINATE_BAND) * C:
        return False, BiasymptoticEvidence(sup, fwd, bwd, C, False)
    ev = BiasymptoticEvidence(sup, fwd, bwd, C, None)
    raise IndeterminateError(f"sup distance {sup:.4g} within 10% of C={C:.4g}",
                             margin=sup - C, details=ev.__dict__)


def sample_grid(T, dt):
    n = int(round(T / dt))
    return np.linspace(-n * dt, n * dt, 2 * n + 1)


def are_biasymptotic(M, theta, eta, T=1500.0, C=1.0, dt=0.25, max_shift=1.0,
                     tol=DEFAULT_TOL, evidence=False):
    """Bounded distance in both time directions.

    Constant model: exact, both endpoints coincide. Collar: sampled sup of
    the matched base distance over ``[-T, T]`` at most ``C`` and per-window
    sups non-increasing over the last three dyadic windows on each side;
    a sup within 10% of ``C`` raises :class:`IndeterminateError`.
    """
    if not (T > 0 and C > 0):
        raise ValueError("T and C must be positive")
    if isinstance(M, ConstantNegative):
        s = np.vstack([as_states(theta), as_states(eta)])
        bwd, fwd = endpoints_constant(s)
        same = all(IdealPoint(float(e[0])).same_as(IdealPoint(float(e[1])))
                   for e in (bwd, fwd))
        return (same, None) if evidence else same
    if not isinstance(M, Collar):
        raise UnsupportedModelError(type(M).__name__)
    times = sample_grid(T, dt)
    S = flow_samples(M, np.vstack([as_states(theta), as_states(eta)]), times, tol)
    res = matched_distance(M, S[:, 0], S[:, 1], times, max_shift)
    ok, ev = decide_biasymptotic(times, res.dist, T, C, slack=1e-6 + 10 * tol)
    return (ok, ev) if evidence else ok


# ---------------------------------------------------------------- connectors and horocycles

def tangent_on_geodesic(xi_minus, xi_plus, near: complex):
    """Unit tangent of the geodesic ``xi_minus -> xi_plus`` at its point closest to ``near``."""
    g = geodesic_isometry(xi_minus, xi_plus)
    q = mobius(g.inverse().array, near)
    foot = 1j * abs(q)
    z = complex(mobius(g.array, foot))
    # push the upward direction forward: angle' = pi/2 - 2 arg(c w + d)
    ang = 0.5 * math.pi - 2.0 * np.angle(g.c * foot + g.d)
    return np.array([z.real, z.imag, float(np.mod(ang, 2 * math.pi))])


def heteroclinic_connector(M, theta, eta) -> UnitTangent:
    """Geodesic from the backward end of ``theta`` to the forward end of ``eta``."""
    if not isinstance(M, ConstantNegative):
        raise UnsupportedModelError("connectors are built on the constant model")
    xm = backward_endpoint(M, theta)
    xp = forward_endpoint(M, eta)
    if xm.same_as(xp):
        raise NoConnectorError("backward endpoint of theta equals forward endpoint of eta")
    s = as_states(theta)[0]
    return UnitTangent.from_array(M, tangent_on_geodesic(xm.value, xp.value,
                                                         complex(s[0], s[1])))


def horocycle_states(M, theta, offsets):
    """Stable horocycle of ``theta`` at signed arc-length ``offsets``."""
    m = frame_matrices(as_states(theta))[0]
    x = np.asarray(offsets, dtype=float)
    w = x + 1j
    den = m[1, 0] * w + m[1, 1]
    z = (m[0, 0] * w + m[0, 1]) / den
    ang = np.mod(0.5 * math.pi - 2.0 * np.angle(den), 2 * math.pi)
    return np.stack([z.real, z.imag, ang], axis=-1)


def horocycle_sample(M, theta, arc: float, n: int):
    """``n`` tangents on the stable horocycle, spaced by ``arc/n``, centred on ``theta``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not isinstance(M, ConstantNegative):
        raise UnsupportedModelError("horocycles are sampled on the constant model")
    offsets = (np.arange(n) - (n - 1) / 2) * (arc / n)
    return [UnitTangent.from_array(M, s) for s in horocycle_states(M, theta, offsets)]
