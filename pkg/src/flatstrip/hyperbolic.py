"""Constant curvature geometry in the upper half-plane.

Points are complex numbers ``x + iy`` with ``y > 0`` (wrapped as
:class:`HPoint` at the public surface), isometries are unit determinant
real 2x2 matrices acting by Moebius transformations. The genus-2 group is
the side-pairing group of the regular octagon with interior angles pi/4
(the Bolza surface); opposite sides are paired by hyperbolic translations.

Vectorised helpers (prefixed ``mobius_``/``reduce_``) work on numpy arrays
and are what the flow, shadowing and ergodic modules use internally.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import DisjointSet
from scipy.spatial import cKDTree

from .errors import (IncompleteEnumerationWarning, InvalidIsometryError,
                     NotHyperbolicError, ReductionFailedError)

LETTERS = "abcdABCD"
_INVERSE = {c: c.swapcase() for c in LETTERS}

#: distance from the octagon centre to a side midpoint
INRADIUS = math.acosh(1.0 + math.sqrt(2.0))
#: distance from the octagon centre to a vertex
CIRCUMRADIUS = math.acosh((1.0 + math.sqrt(2.0)) ** 2)

DET_TOL = 1e-12
RENORMALIZE_EVERY = 32


@dataclass(frozen=True)
class HPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (self.y > 0 and math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"not a point of the upper half-plane: ({self.x}, {self.y})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z) -> "HPoint":
        return cls(float(z.real), float(z.imag))


CENTER = HPoint(0.0, 1.0)


def _unimodular_scale(a, b, c, d) -> float:
    """sqrt(det), or 1 when the determinant is lost in rounding (huge products)."""
    det = a * d - b * c
    noise = 8 * np.finfo(float).eps * (abs(a * d) + abs(b * c))
    if abs(det) <= noise:
        return 1.0
    if not det > 0:
        raise InvalidIsometryError(f"determinant {det!r} is not positive")
    return math.sqrt(det)


@dataclass(frozen=True)
class IsometryMatrix:
    """Element of SL(2,R); the sign is irrelevant for the action."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        scale = max(1.0, self.a ** 2 + self.b ** 2 + self.c ** 2 + self.d ** 2)
        if not abs(det - 1.0) <= DET_TOL * scale:
            raise InvalidIsometryError(f"determinant {det!r} is not 1")

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def normalized(cls, a, b, c, d) -> "IsometryMatrix":
        """Rescale a positive-determinant matrix to unit determinant."""
        s = _unimodular_scale(a, b, c, d)
        return cls(a / s, b / s, c / s, d / s)

    @classmethod
    def from_array(cls, m) -> "IsometryMatrix":
        m = np.asarray(m, dtype=float)
        return cls.normalized(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other: "IsometryMatrix") -> "IsometryMatrix":
        return IsometryMatrix.normalized(
            self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d)

    def inverse(self) -> "IsometryMatrix":
        return IsometryMatrix(self.d, -self.b, -self.c, self.a)

    def conjugate_by(self, p: "IsometryMatrix") -> "IsometryMatrix":
        return p @ self @ p.inverse()

    def close_to(self, other: "IsometryMatrix", tol=1e-8) -> bool:
        """Equality in PSL(2,R)."""
        x, y = self.array, other.array
        return min(np.abs(x - y).max(), np.abs(x + y).max()) < tol


def apply_isometry(m: IsometryMatrix, z: HPoint) -> HPoint:
    if not isinstance(m, IsometryMatrix):
        m = IsometryMatrix(*np.asarray(m, dtype=float).ravel())
    w = z.z
    return HPoint.from_complex((m.a * w + m.b) / (m.c * w + m.d))


def hyperbolic_distance(z1: HPoint, z2: HPoint) -> float:
    return float(distance(z1.z, z2.z))


def distance(z1, z2):
    """Vectorised half-plane distance between complex arrays."""
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    return 2.0 * np.arcsinh(np.abs(z1 - z2) / (2.0 * np.sqrt(z1.imag * z2.imag)))


def distance_to_center(z):
    return distance(z, 1j)


def translation_length(m: IsometryMatrix) -> float:
    t = abs(m.trace if isinstance(m, IsometryMatrix) else np.trace(m))
    if not t > 2.0 + 1e-12:
        raise NotHyperbolicError(f"|trace| = {t!r} <= 2: element is not hyperbolic")
    return 2.0 * math.acosh(t / 2.0)


def mobius(mats, z):
    """Apply a stack of matrices ``(..., 2, 2)`` to complex points ``z``."""
    mats = np.asarray(mats, dtype=float)
    a, b, c, d = mats[..., 0, 0], mats[..., 0, 1], mats[..., 1, 0], mats[..., 1, 1]
    return (a * z + b) / (c * z + d)


def mobius_tangent(mats, z, angle):
    """Push forward unit tangents ``(z, angle)``; returns ``(z', angle')``."""
    mats = np.asarray(mats, dtype=float)
    a, b, c, d = mats[..., 0, 0], mats[..., 0, 1], mats[..., 1, 0], mats[..., 1, 1]
    den = c * z + d
    return (a * z + b) / den, angle - 2.0 * np.angle(den)


def to_disk(z):
    return (z - 1j) / (z + 1j)


def from_disk(w):
    return 1j * (1 + w) / (1 - w)


def _eig_axis(m):
    """Eigenpairs ``(lam_att, v_att), (lam_rep, v_rep)`` of a hyperbolic matrix."""
    m = np.asarray(m.array if isinstance(m, IsometryMatrix) else m, dtype=float).reshape(2, 2)
    if abs(np.trace(m)) <= 2.0:
        raise NotHyperbolicError("no axis: element is not hyperbolic")
    if np.trace(m) < 0:
        m = -m
    lam, vec = np.linalg.eig(m)
    lam, vec = lam.real, vec.real
    k = int(np.argmax(lam))
    return (lam[k], vec[:, k]), (lam[1 - k], vec[:, 1 - k])


def _vec_to_boundary(v):
    if abs(v[1]) <= 1e-14 * abs(v[0]):
        return math.inf
    return float(v[0] / v[1])


def axis_endpoints(m):
    """Return ``(repelling, attracting)`` fixed points of a hyperbolic element.

    ``math.inf`` stands for the point at infinity.
    """
    (_, va), (_, vr) = _eig_axis(m)
    return _vec_to_boundary(vr), _vec_to_boundary(va)


def geodesic_isometry(xi_minus, xi_plus) -> IsometryMatrix:
    """An isometry sending 0 to ``xi_minus`` and infinity to ``xi_plus``."""
    if xi_minus == xi_plus:
        raise ValueError("endpoints coincide")
    if math.isinf(xi_plus):
        return IsometryMatrix(1.0, xi_minus, 0.0, 1.0)
    if math.isinf(xi_minus):
        return IsometryMatrix(xi_plus, -1.0, 1.0, 0.0)
    if xi_plus > xi_minus:
        return IsometryMatrix.normalized(xi_plus, xi_minus, 1.0, 1.0)
    return IsometryMatrix.normalized(xi_plus, -xi_minus, 1.0, -1.0)


# ---------------------------------------------------------------- words

def _free_reduce(s: str) -> str:
    out = []
    for ch in s:
        if out and out[-1] == _INVERSE[ch]:
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def _min_rotation(s: str) -> str:
    return min((s[i:] + s[:i] for i in range(len(s))), default="")


@dataclass(frozen=True)
class GroupWord:
    """Freely reduced word over ``a b c d`` (upper case = inverse)."""

    letters: str = ""

    def __post_init__(self):
        bad = set(self.letters) - set(LETTERS)
        if bad:
            raise ValueError(f"letters {sorted(bad)} not in alphabet {LETTERS!r}")
        object.__setattr__(self, "letters", _free_reduce(self.letters))

    def __str__(self):
        return self.letters

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord(self.letters + other.letters)

    def __pow__(self, k: int) -> "GroupWord":
        if k < 0:
            return self.inverse() ** (-k)
        return GroupWord(self.letters * k)

    def inverse(self) -> "GroupWord":
        return GroupWord("".join(_INVERSE[c] for c in reversed(self.letters)))

    def cyclically_reduced(self) -> "GroupWord":
        s = self.letters
        while len(s) > 1 and s[0] == _INVERSE[s[-1]]:
            s = s[1:-1]
        return GroupWord(s)

    def canonical(self) -> str:
        """Least rotation of the cyclic reduction or of its inverse."""
        w = self.cyclically_reduced()
        return min(_min_rotation(w.letters), _min_rotation(w.inverse().letters))

    def root(self) -> tuple["GroupWord", int]:
        """Shortest ``u`` with ``cyclic(self) = u**k`` (free group sense)."""
        s = self.cyclically_reduced().letters
        n = len(s)
        for p in range(1, n + 1):
            if n % p == 0 and s[:p] * (n // p) == s:
                return GroupWord(s[:p]), n // p
        return GroupWord(""), 1


# ---------------------------------------------------------------- the group

@dataclass(frozen=True)
class FuchsianGroup:
    generators: dict
    relation: GroupWord
    octagon_vertices: tuple
    center: HPoint = CENTER
    _stack: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        stack = np.array([self.generators[c].array for c in LETTERS])
        stack.setflags(write=False)
        object.__setattr__(self, "_stack", stack)

    @property
    def matrix_stack(self) -> np.ndarray:
        """Generator matrices in the order of :data:`LETTERS`, shape (8, 2, 2)."""
        return self._stack

    def evaluate(self, word) -> IsometryMatrix:
        if isinstance(word, str):
            word = GroupWord(word)
        m = np.eye(2)
        for k, ch in enumerate(word.letters, 1):
            m = m @ self.generators[ch].array
            if k % RENORMALIZE_EVERY == 0:
                m = m / _unimodular_scale(*m.ravel())
        return IsometryMatrix.from_array(m)

    @property
    def systole_bound(self) -> float:
        """Shortest translation length among single generators."""
        return min(translation_length(self.generators[c]) for c in "abcd")

    def vertices_uhp(self) -> np.ndarray:
        return from_disk(np.asarray(self.octagon_vertices))


def _disk_translation(direction, length):
    c, s = math.cosh(length / 2), math.sinh(length / 2)
    t = np.array([[c, s], [s, c]], dtype=complex)
    r = np.diag([np.exp(0.5j * direction), np.exp(-0.5j * direction)])
    return r @ t @ np.linalg.inv(r)


def build_genus2_group() -> FuchsianGroup:
    """Side-pairing group of the regular octagon with angles pi/4.

    Vertex ``k`` sits at ``r exp(i k pi/4)`` in the disk; generator ``k``
    (``a..d`` for k = 0..3) translates by twice the inradius along the
    diameter through the midpoint of side ``k`` and maps side ``k+4`` onto
    side ``k``.
    """
    cayley = np.array([[1j, 1j], [-1, 1]])
    cayley_inv = np.linalg.inv(cayley)
    gens = {}
    for k, name in enumerate("abcd"):
        m = cayley @ _disk_translation((k + 0.5) * math.pi / 4, 2 * INRADIUS) @ cayley_inv
        m = m / np.sqrt(np.linalg.det(m))
        if np.abs(m.imag).max() > np.abs(m.real).max():
            m = m * 1j
        g = IsometryMatrix.from_array(m.real)
        gens[name] = g
        gens[name.upper()] = g.inverse()
    r = math.tanh(CIRCUMRADIUS / 2)
    vertices = tuple(complex(r * np.exp(1j * k * math.pi / 4)) for k in range(8))
    return FuchsianGroup(gens, GroupWord("aBcDAbCd"), vertices)


def side_pairing_residuals(G: FuchsianGroup) -> np.ndarray:
    """Hyperbolic distance between ``g(vertex)`` and its expected image.

    Generator ``k`` must send vertex ``k+4`` to ``k+1`` and ``k+5`` to ``k``.
    """
    v = G.vertices_uhp()
    res = []
    for k, name in enumerate("abcd"):
        g = G.generators[name].array
        for src, dst in ((k + 4, k + 1), (k + 5, k)):
            res.append(distance(mobius(g, v[src % 8]), v[dst % 8]))
            ginv = G.generators[name.upper()].array
            res.append(distance(mobius(ginv, v[dst % 8]), v[src % 8]))
    return np.array(res, dtype=float)


def vertex_angles(G: FuchsianGroup) -> np.ndarray:
    """Interior angle of the octagon at each vertex."""
    w = np.asarray(G.octagon_vertices)
    out = []
    for k in range(8):
        p = w[k]
        dirs = []
        for q in (w[(k - 1) % 8], w[(k + 1) % 8]):
            # move p to the origin; geodesics through 0 are diameters
            q0 = (q - p) / (1 - np.conj(p) * q)
            dirs.append(np.angle(q0))
        diff = abs(dirs[0] - dirs[1]) % (2 * math.pi)
        out.append(min(diff, 2 * math.pi - diff))
    return np.array(out)


def in_fundamental_domain(z, G: FuchsianGroup, tol=1e-9):
    """Closed Dirichlet domain test (the octagon is the Dirichlet domain of i)."""
    z = np.asarray(z.z if isinstance(z, HPoint) else z, dtype=complex)
    d0 = distance_to_center(z)
    imgs = mobius(G.matrix_stack[:, None, :, :], z[None, ...]) if z.ndim else mobius(G.matrix_stack, z)
    return np.all(distance_to_center(imgs) >= d0 - tol, axis=0)


def reduce_points(G: FuchsianGroup, z, angle=None, return_words=False, max_iter=10_000):
    """Greedy Dirichlet reduction of many points (and tangent angles).

    Returns ``(z_red, angle_red, words)`` where ``words[k]`` is a string
    ``w`` with ``G.evaluate(w)`` mapping the reduced point back to ``z[k]``;
    ``angle_red``/``words`` are ``None`` when not requested.
    """
    z = np.array(z, dtype=complex, ndmin=1)
    ang = None if angle is None else np.array(angle, dtype=float, ndmin=1).copy()
    stack = G.matrix_stack
    a, b, c, d = (stack[:, 0, 0][:, None], stack[:, 0, 1][:, None],
                  stack[:, 1, 0][:, None], stack[:, 1, 1][:, None])
    applied = [[] for _ in range(len(z))] if return_words else None
    active = np.arange(len(z))
    for _ in range(max_iter):
        if active.size == 0:
            break
        za = z[active]
        d0 = distance_to_center(za)
        den = c * za + d
        img = (a * za + b) / den
        dist = distance_to_center(img)
        k = np.argmin(dist, axis=0)
        cols = np.arange(active.size)
        move = dist[k, cols] < d0 - 1e-12
        if not move.any():
            active = active[:0]
            break
        idx = active[move]
        z[idx] = img[k[move], cols[move]]
        if ang is not None:
            ang[idx] -= 2.0 * np.angle(den[k[move], cols[move]])
        if applied is not None:
            for i, kk in zip(idx, k[move]):
                applied[i].append(LETTERS[kk])
        active = idx
    else:
        raise ReductionFailedError(f"reduction did not terminate in {max_iter} steps")
    words = None
    if applied is not None:
        words = [_free_reduce("".join(_INVERSE[ch] for ch in seq)) for seq in applied]
    if ang is not None:
        ang = np.mod(ang, 2 * math.pi)
    return z, ang, words


def reduce_to_fundamental_domain(z: HPoint, G: FuchsianGroup, max_iter=10_000):
    """Reduce ``z`` into the closed octagon.

    Returns ``(reduced, word)`` with ``apply_isometry(G.evaluate(word), reduced) == z``.
    """
    zr, _, words = reduce_points(G, [z.z], return_words=True, max_iter=max_iter)
    return HPoint.from_complex(zr[0]), GroupWord(words[0])


# ---------------------------------------------------------------- orbit balls

def _hyperboloid(z):
    x, y = z.real, z.imag
    r2 = x * x + y * y
    return np.stack([(r2 + 1) / (2 * y), (r2 - 1) / (2 * y), x / y], axis=-1)


def _ball_size_estimate(radius):
    return (math.cosh(radius) - 1.0) / 2.0


@dataclass
class OrbitBall:
    """All group elements ``g`` with ``d(i, g i) <= radius``."""

    radius: float
    matrices: np.ndarray
    words: list
    points: np.ndarray

    def __len__(self):
        return len(self.words)

    def lookup(self, mats, tol=1e-6):
        """Index of each matrix's element in the ball, or -1."""
        pts = mobius(mats, 1j)
        tree = self._tree()
        _, idx = tree.query(_hyperboloid(np.atleast_1d(pts)))
        idx = np.atleast_1d(idx)
        ok = distance(np.atleast_1d(pts), self.points[idx]) < tol
        return np.where(ok, idx, -1)

    def _tree(self):
        if not hasattr(self, "_kd"):
            self._kd = cKDTree(_hyperboloid(self.points))
        return self._kd


def orbit_ball(G: FuchsianGroup, radius: float) -> OrbitBall:
    """Breadth-first enumeration of the orbit of i inside a hyperbolic ball.

    Left multiplication by generators suffices: a Dirichlet-domain argument
    gives, for every ``g != 1`` in the ball, a generator ``h`` with ``h g``
    strictly closer to the centre.
    """
    stack = G.matrix_stack
    mats = [np.eye(2)[None]]
    words = [""]
    points = [np.array([1j])]
    frontier, frontier_words = mats[0], [""]
    known = np.array([1j])
    while len(frontier):
        new = np.einsum("gij,njk->ngik", stack, frontier).reshape(-1, 2, 2)
        new_words = [LETTERS[g] + frontier_words[n]
                     for n in range(len(frontier_words)) for g in range(8)]
        pts = mobius(new, 1j)
        keep = np.nonzero(distance_to_center(pts) <= radius)[0]
        if keep.size == 0:
            break
        new, pts = new[keep], pts[keep]
        new_words = [new_words[k] for k in keep]
        # drop duplicates within the new layer
        tree = cKDTree(_hyperboloid(pts))
        drop = set()
        for i, j in tree.query_pairs(r=1e-6 * math.cosh(radius)):
            if distance(pts[i], pts[j]) < 1e-6:
                drop.add(max(i, j))
        keep_mask = np.ones(len(pts), bool)
        if drop:
            keep_mask[list(drop)] = False
        new, pts = new[keep_mask], pts[keep_mask]
        new_words = [w for w, m in zip(new_words, keep_mask) if m]
        ktree = cKDTree(_hyperboloid(known))
        _, idx = ktree.query(_hyperboloid(pts))
        fresh = distance(pts, known[idx]) >= 1e-6
        new, pts = new[fresh], pts[fresh]
        new_words = [_free_reduce(w) for w, m in zip(new_words, fresh) if m]
        if not len(new):
            break
        # renormalise determinant drift
        det = np.linalg.det(new)
        new = new / np.sqrt(det)[:, None, None]
        mats.append(new)
        words.extend(new_words)
        points.append(pts)
        known = np.concatenate([known, pts])
        frontier, frontier_words = new, new_words
    return OrbitBall(radius, np.concatenate(mats), words, np.concatenate(points))


def neighbor_elements(G: FuchsianGroup) -> OrbitBall:
    """Elements whose translate of the octagon touches the octagon (plus 1)."""
    return orbit_ball(G, 2 * CIRCUMRADIUS + 1e-6)


# ---------------------------------------------------------------- conjugacy classes

@dataclass(frozen=True)
class ConjugacyClass:
    word: GroupWord
    length: float
    matrix: IsometryMatrix = field(compare=False, repr=False, default=None)

    def __iter__(self):
        # behaves like the (word, length) pair
        yield self.word
        yield self.length


@dataclass(frozen=True)
class ClassEnumeration:
    """Primitive classes sorted by (length, canonical word).

    ``certified_length`` is the length up to which the list is provably
    complete; it equals ``L_max`` unless the element budget was hit.
    """

    classes: tuple
    L_max: float
    certified_length: float
    oriented: bool = False

    def __iter__(self):
        return iter(self.classes)

    def __len__(self):
        return len(self.classes)

    def __getitem__(self, k):
        return self.classes[k]

    @property
    def complete(self) -> bool:
        return self.certified_length >= self.L_max

    def lengths(self) -> np.ndarray:
        return np.array([c.length for c in self.classes])

    def count(self, T: float) -> int:
        return int(np.sum(self.lengths() <= T + 1e-12))


def _axis_distance_to_center(mats, lengths):
    # cosh d(p, g p) = cosh(l) cosh^2(r) - sinh^2(r) for p at distance r from the axis
    dp = distance_to_center(mobius(mats, 1j))
    cosh_r2 = (np.cosh(dp) + 1.0) / (np.cosh(lengths) + 1.0)
    return np.arccosh(np.sqrt(np.maximum(cosh_r2, 1.0)))


def _endpoint_key(mats):
    """Disk-model angles of (repelling, attracting) fixed points, as unit vectors."""
    keys = np.empty((len(mats), 4))
    for n, m in enumerate(mats):
        rep, att = axis_endpoints(m)
        for j, xi in enumerate((rep, att)):
            w = 1.0 if math.isinf(xi) else to_disk(complex(xi, 0.0))
            keys[n, 2 * j] = np.real(w)
            keys[n, 2 * j + 1] = np.imag(w)
    return keys


def enumerate_conjugacy_classes(G: FuchsianGroup, L_max: float, oriented=False,
                                max_elements=3_000_000) -> ClassEnumeration:
    """Primitive hyperbolic conjugacy classes with translation length <= L_max.

    Every class of length ``l`` has a representative whose axis meets the
    octagon, hence moves the centre by at most ``l + 2 * CIRCUMRADIUS``;
    those representatives are found by :func:`orbit_ball`. Representatives
    of one class are linked by conjugation with single generators (walking
    the closed geodesic from one octagon crossing to the next), which is how
    classes are grouped. Unless ``oriented``, a class and its inverse are
    merged.
    """
    if not L_max > 0:
        raise ValueError("L_max must be positive")
    certified = L_max
    radius = L_max + 2 * CIRCUMRADIUS
    if _ball_size_estimate(radius) > max_elements:
        radius = math.acosh(2 * max_elements + 1)
        certified = radius - 2 * CIRCUMRADIUS
        warnings.warn(
            f"element budget {max_elements} too small for L_max={L_max}; "
            f"enumeration certified complete only up to {certified:.4f}",
            IncompleteEnumerationWarning, stacklevel=2)
    ball = orbit_ball(G, radius)
    mats = ball.matrices
    tr = np.abs(mats[:, 0, 0] + mats[:, 1, 1])
    hyper = tr > 2.0 + 1e-9
    lengths = np.zeros(len(mats))
    lengths[hyper] = 2.0 * np.arccosh(tr[hyper] / 2.0)
    sel = hyper & (lengths <= certified + 1e-12)
    if not sel.any():
        return ClassEnumeration((), L_max, certified, oriented)
    sel[sel] = _axis_distance_to_center(mats[sel], lengths[sel]) <= CIRCUMRADIUS + 1e-9
    idx = np.nonzero(sel)[0]
    cand = mats[idx]
    cand_len = lengths[idx]
    cand_words = [ball.words[k] for k in idx]
    # primitivity: a proper power shares both fixed points with a shorter element
    keys = _endpoint_key(cand)
    tree = cKDTree(keys)
    primitive = np.ones(len(idx), bool)
    for i, nbrs in enumerate(tree.query_ball_point(keys, r=1e-7)):
        if any(cand_len[j] < cand_len[i] - 1e-9 for j in nbrs):
            primitive[i] = False
    cand, cand_len = cand[primitive], cand_len[primitive]
    cand_words = [w for w, p in zip(cand_words, primitive) if p]
    sub = OrbitBall(radius, cand, cand_words, mobius(cand, 1j))
    ds = DisjointSet(range(len(cand)))
    stack = G.matrix_stack
    inv_stack = stack[[LETTERS.index(_INVERSE[c]) for c in LETTERS]]
    for k in range(8):
        conj = np.einsum("ij,njk,kl->nil", inv_stack[k], cand, stack[k])
        hit = sub.lookup(conj)
        for n in np.nonzero(hit >= 0)[0]:
            ds.merge(int(n), int(hit[n]))
    if not oriented:
        inv = np.stack([cand[:, 1, 1], -cand[:, 0, 1], -cand[:, 1, 0], cand[:, 0, 0]],
                       axis=-1).reshape(-1, 2, 2)
        hit = sub.lookup(inv)
        for n in np.nonzero(hit >= 0)[0]:
            ds.merge(int(n), int(hit[n]))
    classes = []
    for members in ds.subsets():
        members = sorted(members)

        def rank(j):
            w = GroupWord(cand_words[j]).cyclically_reduced()
            return (len(w), w.canonical(), w.letters)

        best = min(members, key=rank)
        word = GroupWord(cand_words[best])
        classes.append(ConjugacyClass(word, float(cand_len[best]),
                                      IsometryMatrix.from_array(cand[best])))
    classes.sort(key=lambda c: (round(c.length, 9), c.word.canonical(), c.word.letters))
    return ClassEnumeration(tuple(classes), L_max, certified, oriented)


def _root_matrix(m, k: int) -> np.ndarray:
    """The hyperbolic ``k``-th root along the same axis."""
    (la, va), (lr, vr) = _eig_axis(m)
    p = np.stack([va, vr], axis=1)
    r = p @ np.diag([la ** (1.0 / k), lr ** (1.0 / k)]) @ np.linalg.inv(p)
    return r / math.sqrt(np.linalg.det(r))


def group_contains(G: FuchsianGroup, m, tol=1e-7) -> bool:
    """Whether ``m`` (up to sign) is an element of ``G``."""
    m = np.asarray(m.array if isinstance(m, IsometryMatrix) else m, dtype=float)
    z = mobius(m, 1j)
    ang = 0.5 * math.pi - 2.0 * np.angle(m[1, 0] * 1j + m[1, 1])
    zr, ar, _ = reduce_points(G, [z], [ang])
    # the group acts freely, so the orbit of (i, up) meets the octagon once
    d = abs(np.angle(np.exp(1j * (ar[0] - 0.5 * math.pi))))
    return bool(distance(zr[0], 1j) < tol and d < tol)


def is_primitive(G: FuchsianGroup, m) -> bool:
    """A hyperbolic element of ``G`` is primitive iff none of its roots lies in ``G``."""
    m = np.asarray(m.array if isinstance(m, IsometryMatrix) else m, dtype=float)
    ell = translation_length(IsometryMatrix.from_array(m))
    kmax = int(ell / (G.systole_bound - 1e-9))
    return not any(group_contains(G, _root_matrix(m, k)) for k in range(2, kmax + 1))
