"""Surface models: the genus-2 hyperbolic surface and a flat-band collar.

Unit tangents are stored as ``(..., 3)`` float arrays throughout the
package: ``[x, y, angle]`` in the half-plane chart for
:class:`ConstantNegative`, ``[r, phi, angle]`` for :class:`Collar`. The
angle is measured in the orthonormal chart frame (``y d/dx, y d/dy`` resp.
``d/dr, f(r)^-1 d/dphi``), so every encoded velocity has unit length.
:class:`UnitTangent` is the scalar wrapper used at the public surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidProfileError, UnsupportedModelError
from .hyperbolic import (CIRCUMRADIUS, FuchsianGroup, HPoint, build_genus2_group,
                         distance, mobius_tangent, orbit_ball, reduce_points)

TWO_PI = 2.0 * math.pi


def wrap_angle(a):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), TWO_PI)


@dataclass(frozen=True)
class CollarPoint:
    r: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and math.isfinite(self.phi)):
            raise ValueError("collar coordinates must be finite")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


@dataclass(frozen=True)
class UnitTangent:
    base: object
    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise ValueError("angle must be finite")
        object.__setattr__(self, "angle", float(self.angle) % TWO_PI)

    def as_array(self) -> np.ndarray:
        if isinstance(self.base, HPoint):
            return np.array([self.base.x, self.base.y, self.angle])
        return np.array([self.base.r, self.base.phi, self.angle])

    @classmethod
    def from_array(cls, model, arr) -> "UnitTangent":
        u, v, a = (float(x) for x in np.asarray(arr, dtype=float)[:3])
        if isinstance(model, Collar):
            return cls(CollarPoint(u, v), a)
        return cls(HPoint(u, v), a)

    def reversed(self) -> "UnitTangent":
        return UnitTangent(self.base, self.angle + math.pi)


def as_states(thetas) -> np.ndarray:
    """Stack UnitTangents (or pass arrays through) into an ``(n, 3)`` array."""
    if isinstance(thetas, UnitTangent):
        return thetas.as_array()[None, :]
    if isinstance(thetas, np.ndarray):
        return np.atleast_2d(thetas).astype(float)
    return np.array([t.as_array() if isinstance(t, UnitTangent) else np.asarray(t, float)
                     for t in thetas], dtype=float).reshape(-1, 3)


# ---------------------------------------------------------------- models

@dataclass(frozen=True)
class ConstantNegative:
    """Compact genus-2 surface of curvature -1, via its universal cover."""

    group: FuchsianGroup = field(default_factory=build_genus2_group)
    kind: str = "constant"

    @property
    def model_id(self) -> str:
        return "constant:genus2-octagon"

    def curvature(self, states):
        return -np.ones(np.shape(states)[:-1])

    def tangent(self, x, y, angle) -> UnitTangent:
        return UnitTangent(HPoint(x, y), angle)

    def reduce(self, states):
        """Move states into the fundamental octagon (unit tangent bundle of M)."""
        s = as_states(states)
        z, a, _ = reduce_points(self.group, s[:, 0] + 1j * s[:, 1], s[:, 2])
        return np.stack([z.real, z.imag, a], axis=-1)

    def to_dict(self):
        return {"kind": "constant"}


@dataclass(frozen=True)
class CollarProfile:
    """Warped profile ``f(r) = c cosh(m(r))``.

    ``m`` vanishes on the band ``|r| <= w/2``; on the ramp of width ``s``
    its slope rises as ``2u - u^2`` (``u`` the normalised ramp coordinate)
    and is 1 beyond, so the curvature is exactly -1 for ``|r| >= w/2 + s``.
    ``f`` is C^2 and ``f'' >= 0`` everywhere.
    """

    c: float
    w: float
    s: float

    def _u(self, r):
        return (np.abs(r) - 0.5 * self.w) / self.s

    def m_derivs(self, r):
        """Return ``(m, m', m'')`` elementwise."""
        r = np.asarray(r, dtype=float)
        u = self._u(r)
        sgn = np.sign(r)
        uc = np.clip(u, 0.0, 1.0)
        m = self.s * (uc ** 2 - uc ** 3 / 3.0) + np.maximum(u - 1.0, 0.0) * self.s
        m1 = sgn * (2 * uc - uc ** 2)
        m2 = np.where((u > 0) & (u < 1), (2.0 - 2.0 * uc) / self.s, 0.0)
        return m, m1, m2

    def f(self, r):
        m, _, _ = self.m_derivs(r)
        # capped far out so products with small angle differences stay finite
        return np.where(m < 300, self.c * np.cosh(np.minimum(m, 300)),
                        np.exp(np.minimum(self.log_f(r), 700.0)))

    def log_f(self, r):
        m, _, _ = self.m_derivs(r)
        m = np.abs(m)
        # log cosh m without overflow
        return math.log(self.c) + m + np.log1p(np.exp(-2 * m)) - math.log(2.0)

    def df_over_f(self, r):
        m, m1, _ = self.m_derivs(r)
        return np.tanh(m) * m1

    def curvature(self, r):
        m, m1, m2 = self.m_derivs(r)
        return -(m1 ** 2 + np.tanh(m) * m2)

    def df(self, r):
        return self.f(r) * self.df_over_f(r)

    def d2f(self, r):
        return -self.f(r) * self.curvature(r)


@dataclass(frozen=True)
class Collar:
    """Complete cylinder ``dr^2 + f(r)^2 dphi^2`` with a flat band around r = 0."""

    profile: CollarProfile
    kind: str = "collar"

    @property
    def model_id(self) -> str:
        p = self.profile
        return f"collar:c={p.c!r},w={p.w!r},s={p.s!r}"

    @property
    def band_halfwidth(self) -> float:
        return 0.5 * self.profile.w

    def curvature(self, states):
        return self.profile.curvature(np.asarray(states)[..., 0])

    def tangent(self, r, phi, angle) -> UnitTangent:
        return UnitTangent(CollarPoint(r, phi), angle)

    def band_circle(self, r0=0.0, phi0=0.0, orientation=1) -> UnitTangent:
        """Tangent to the circle ``r = r0`` (a closed geodesic inside the band)."""
        return self.tangent(r0, phi0, math.pi / 2 if orientation > 0 else 3 * math.pi / 2)

    def band_period(self) -> float:
        return TWO_PI * self.profile.c

    def reduce(self, states):
        s = as_states(states).copy()
        s[:, 1] = np.mod(s[:, 1], TWO_PI)
        s[:, 2] = np.mod(s[:, 2], TWO_PI)
        return s

    def to_dict(self):
        p = self.profile
        return {"kind": "collar", "c": p.c, "w": p.w, "s": p.s}


def build_collar(c: float, w: float, s: float, grid: int = 10_000) -> Collar:
    if not (c > 0 and w >= 0 and s > 0) or not all(map(math.isfinite, (c, w, s))):
        raise InvalidProfileError(f"need c > 0, w >= 0, s > 0; got c={c}, w={w}, s={s}")
    prof = CollarProfile(float(c), float(w), float(s))
    r = np.linspace(-(w / 2 + 4 * s + 2), w / 2 + 4 * s + 2, grid)
    if np.any(prof.d2f(r) < -1e-12 * prof.f(r)):
        raise InvalidProfileError("profile is not convex")
    return Collar(prof)


def curvature_at(M, p) -> float:
    if isinstance(M, ConstantNegative):
        return -1.0
    if isinstance(M, Collar):
        r = p.r if isinstance(p, CollarPoint) else (p[0] if np.ndim(p) else p)
        return float(M.profile.curvature(r))
    raise UnsupportedModelError(type(M).__name__)


# ---------------------------------------------------------------- Sasaki proxy

def _collar_base_distance(M: Collar, s1, s2):
    r1, r2 = s1[..., 0], s2[..., 0]
    # f at the point of [r1, r2] closest to the waist
    r_near = np.where(r1 * r2 <= 0, 0.0, np.where(np.abs(r1) < np.abs(r2), r1, r2))
    fmin = M.profile.f(r_near)
    return np.hypot(r2 - r1, fmin * wrap_angle(s2[..., 1] - s1[..., 1]))


def _uhp_direction(z_from, z_to):
    """Chart angle at ``z_from`` of the geodesic heading to ``z_to``."""
    # the affine map z -> (z - x)/y sends z_from to i without rotating the frame;
    # at i the Cayley map turns directions by -pi/2 and geodesics through 0 are diameters
    w = (z_to - z_from.real) / z_from.imag
    return 0.5 * np.pi + np.angle((w - 1j) / (w + 1j))


def transported_angle_gap(M, s1, s2):
    """Angle of ``s2`` minus the parallel transport of ``s1`` along the base geodesic."""
    raw = s2[..., 2] - s1[..., 2]
    if isinstance(M, Collar):
        # parallel fields obey d(angle) = -f'(r) dphi; midpoint rule, exact on the band
        dphi = wrap_angle(s2[..., 1] - s1[..., 1])
        return wrap_angle(raw + M.profile.df(0.5 * (s1[..., 0] + s2[..., 0])) * dphi)
    z1 = s1[..., 0] + 1j * s1[..., 1]
    z2 = s2[..., 0] + 1j * s2[..., 1]
    d = distance(z1, z2)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = wrap_angle(raw - (_uhp_direction(z2, z1) + np.pi) + _uhp_direction(z1, z2))
    # first order for nearly coincident base points: d(angle) = -dx/y
    near = wrap_angle(raw + (z2.real - z1.real) * 2.0 / (z1.imag + z2.imag))
    return np.where(d < 1e-6, near, out)


def sasaki_arrays(M, s1, s2):
    """Vectorised Sasaki proxy on the cover (constant model) or the collar.

    ``sqrt(d_base^2 + dangle^2)`` where ``dangle`` compares the angles after
    parallel transport along the base geodesic, so the constant-model value
    is invariant under every isometry.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if isinstance(M, ConstantNegative):
        base = distance(s1[..., 0] + 1j * s1[..., 1], s2[..., 0] + 1j * s2[..., 1])
    elif isinstance(M, Collar):
        base = _collar_base_distance(M, s1, s2)
    else:
        raise UnsupportedModelError(type(M).__name__)
    return np.hypot(base, np.abs(transported_angle_gap(M, s1, s2)))


_QUOTIENT_CACHE = {}


def _quotient_neighbors(M: ConstantNegative):
    key = id(M.group)
    if key not in _QUOTIENT_CACHE:
        # two points of the closed octagon are joined by a shortest path
        # whose lift stays within 4 circumradii of the centre
        _QUOTIENT_CACHE[key] = orbit_ball(M.group, 4 * CIRCUMRADIUS + 1e-6).matrices
    return _QUOTIENT_CACHE[key]


def sasaki_quotient(M: ConstantNegative, s1, s2):
    """Sasaki proxy on the compact quotient: minimum over deck translates."""
    a = M.reduce(s1)
    b = M.reduce(s2)
    mats = _quotient_neighbors(M)
    out = np.empty(len(a))
    for k in range(len(a)):
        z2, a2 = mobius_tangent(mats, b[k, 0] + 1j * b[k, 1], b[k, 2])
        out[k] = np.min(sasaki_arrays(M, a[k], np.stack([z2.real, z2.imag, a2], axis=-1)))
    return out


def sasaki_distance(M, theta1: UnitTangent, theta2: UnitTangent, quotient=False) -> float:
    """``sqrt(base distance^2 + transported angle difference^2)``.

    ``quotient=True`` measures on the compact surface rather than its cover
    (constant model only; the collar is its own surface).
    """
    s1 = as_states(theta1)
    s2 = as_states(theta2)
    if quotient and isinstance(M, ConstantNegative):
        return float(sasaki_quotient(M, s1, s2)[0])
    return float(sasaki_arrays(M, s1, s2)[0])


# ---------------------------------------------------------------- model spec files

def parse_model_spec(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.removeprefix("model.")] = v
    return out


def model_from_dict(d: dict):
    kind = str(d.get("kind", "")).strip()
    if kind == "constant":
        return ConstantNegative()
    if kind == "collar":
        try:
            return build_collar(float(d["c"]), float(d["w"]), float(d["s"]))
        except KeyError as e:
            raise ConfigError(f"collar model needs key {e.args[0]!r}") from None
        except ValueError as e:
            raise ConfigError(str(e)) from None
    raise ConfigError(f"unknown model kind {kind!r} (expected 'constant' or 'collar')")


def load_model_spec(path):
    with open(path) as fh:
        return model_from_dict(parse_model_spec(fh.read()))


def dump_model_spec(M) -> str:
    return "".join(f"{k} = {v!r}\n" if not isinstance(v, str) else f"{k} = {v}\n"
                   for k, v in M.to_dict().items())
