"""Flat strips, the strip-collapsing equivalence, and the quotient flow.

A strip through ``theta`` is scanned along a transversal: the stable
horocycle on the constant model, the perpendicular geodesic direction on
the collar. The offsets whose geodesics are bi-asymptotic to ``theta`` form
an interval (flat convexity); its length is the strip width. The quotient
identifies ``theta`` with ``eta`` when ``eta`` lies on the strong stable
leaf of ``theta`` and the two geodesics are bi-asymptotic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._budget import as_budget
from .asymptotic import (IdealPoint, decide_biasymptotic, horocycle_states,
                         matched_distance, sample_grid)
from .errors import IndeterminateError, UnsupportedModelError
from .flow import DEFAULT_TOL, endpoints_constant, flow_samples, frame_matrices
from .hyperbolic import mobius
from .surfaces import (Collar, ConstantNegative, UnitTangent, as_states, sasaki_arrays,
                       wrap_angle)

DEFAULT_T = 1500.0
DEFAULT_STEP = 1e-3
COARSE_STEP = 0.05
Q_FLOOR = 1.0


# ---------------------------------------------------------------- transversals

def transversal_states(M, theta, offsets):
    """Tangents at signed transversal ``offsets`` from ``theta``."""
    offsets = np.asarray(offsets, dtype=float)
    if isinstance(M, ConstantNegative):
        return horocycle_states(M, theta, offsets)
    if not isinstance(M, Collar):
        raise UnsupportedModelError(type(M).__name__)
    r, phi, a = as_states(theta)[0]
    beta = a - 0.5 * math.pi
    f = M.profile.f(r)
    out = np.empty((len(offsets), 3))
    out[:, 0] = r + offsets * math.cos(beta)
    out[:, 1] = np.mod(phi + offsets * math.sin(beta) / f, 2 * math.pi)
    out[:, 2] = a
    return out


# ---------------------------------------------------------------- data types

@dataclass
class Strip:
    base: UnitTangent
    lo: float
    hi: float
    offsets: np.ndarray
    members: list
    uncertainty: float
    model_id: str
    width_tol: float = 2 * DEFAULT_STEP
    indeterminate: bool = False

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def trivial(self) -> bool:
        return self.width < self.width_tol

    def member_states(self):
        return as_states(self.members)

    def to_record(self):
        return {"model": self.model_id, "base": self.base.as_array().tolist(),
                "width": self.width, "lo": self.lo, "hi": self.hi,
                "members": len(self.members), "uncertainty": self.uncertainty,
                "indeterminate_boundary": self.indeterminate}


def midpoint_member(strip: Strip, M) -> UnitTangent:
    """Member at the centre of the cross-section interval."""
    mid = 0.5 * (strip.lo + strip.hi)
    if mid == 0.0:
        return strip.base
    return UnitTangent.from_array(M, transversal_states(M, strip.base, [mid])[0])


@dataclass
class QuotientClass:
    members: Strip
    representative: UnitTangent
    model: object = field(repr=False, default=None)

    @property
    def trivial(self) -> bool:
        return self.members.trivial

    def to_record(self):
        rec = self.members.to_record()
        rec["representative"] = self.representative.as_array().tolist()
        rec["trivial"] = self.trivial
        return rec

    def to_json(self):
        return json.dumps(self.to_record(), sort_keys=True)


@dataclass(frozen=True)
class QuotientPoint:
    cls: QuotientClass

    def equals(self, other: "QuotientPoint", tol=None) -> bool:
        a, b = self.cls.members, other.cls.members
        tol = tol if tol is not None else max(a.uncertainty, b.uncertainty, 1e-9)
        return quotient_distance(self.cls.model, self.cls, other.cls) <= tol


# ---------------------------------------------------------------- Q

def q_config(M, widths=None, **detect_kw) -> float:
    """``1.5 x`` the largest observed strip width, never below 1.

    Without ``widths`` the collar's band circle is measured, iterating once
    if the estimate grows (detection uses ``Q`` as its bi-asymptotic bound).
    """
    if widths is not None:
        return max(Q_FLOOR, 1.5 * max(widths, default=0.0))
    if isinstance(M, ConstantNegative):
        return Q_FLOOR
    Q = Q_FLOOR
    for _ in range(3):
        s = detect_strip(M, M.band_circle(0.0), scan=(Q, detect_kw.pop("step", DEFAULT_STEP)),
                         C=Q, **detect_kw)
        newQ = max(Q_FLOOR, 1.5 * s.width)
        if newQ <= Q:
            return Q
        Q = newQ
    return Q


# ---------------------------------------------------------------- detection

def _decide_batch(M, theta, states, T, C, dt, max_shift, tol):
    """Three-valued bi-asymptotic status of each state against ``theta``."""
    times = sample_grid(T, dt)
    S = flow_samples(M, np.vstack([as_states(theta), states]), times, tol)
    out = []
    for k in range(len(states)):
        res = matched_distance(M, S[:, 0], S[:, k + 1], times, max_shift)
        try:
            ok, _ = decide_biasymptotic(times, res.dist, T, C, slack=1e-6 + 10 * tol)
        except IndeterminateError:
            ok = None
        out.append(ok)
    return out


def _constant_status(M, theta, states):
    s = np.vstack([as_states(theta), states])
    bwd, fwd = endpoints_constant(s)
    ref_b, ref_f = IdealPoint(float(bwd[0])), IdealPoint(float(fwd[0]))
    return [ref_b.same_as(IdealPoint(float(b))) and ref_f.same_as(IdealPoint(float(f)))
            for b, f in zip(bwd[1:], fwd[1:])]


def _refine(status_fn, inside, outside, step, per_round=7):
    """Shrink the bracket ``[inside, outside]`` (signed) to length <= step."""
    indeterminate = False
    while abs(outside - inside) > step:
        pts = np.linspace(inside, outside, per_round + 2)[1:-1]
        st = status_fn(pts)
        new_in, new_out = inside, outside
        for p, s in zip(pts, st):
            if s is True:
                new_in = p
            else:
                indeterminate |= s is None
                new_out = p
                break
        inside, outside = new_in, new_out
    return inside, outside, indeterminate


def detect_strip(M, theta, scan=(None, DEFAULT_STEP), T=DEFAULT_T, C=None,
                 coarse=COARSE_STEP, dt=0.25, max_shift=1.0, tol=DEFAULT_TOL,
                 n_members=21) -> Strip:
    """Maximal interval of bi-asymptotic transversal offsets around ``theta``.

    ``scan = (Q, step)`` covers offsets in ``[-Q, Q]``; boundaries are found
    on a coarse grid and refined to brackets of length ``step/2``. The
    reported boundary is the bracket midpoint; members are spread over the
    inner bracket ends, which were verified bi-asymptotic.
    """
    Q, step = scan
    Q = Q if Q is not None else Q_FLOOR
    C = C if C is not None else Q
    theta = theta if isinstance(theta, UnitTangent) else UnitTangent.from_array(M, theta)
    if isinstance(M, ConstantNegative):
        def status(offs):
            return _constant_status(M, theta, transversal_states(M, theta, offs))
    elif isinstance(M, Collar):
        def status(offs):
            return _decide_batch(M, theta, transversal_states(M, theta, offs),
                                 T, C, dt, max_shift, tol)
    else:
        raise UnsupportedModelError(type(M).__name__)
    n = int(math.floor(Q / coarse + 1e-9))
    grid = coarse * np.arange(-n, n + 1)
    if grid[-1] < Q - 1e-12:
        grid = np.concatenate([[-Q], grid, [Q]])
    st = status(grid)
    i0 = int(np.argmin(np.abs(grid)))
    st[i0] = True
    bounds, certified, indet = [], [], False
    for direction in (-1, 1):
        k = i0
        while 0 <= k + direction < len(grid) and st[k + direction] is True:
            k += direction
        if not 0 <= k + direction < len(grid):
            bounds.append(grid[k])
            certified.append(grid[k])
            continue
        indet |= st[k + direction] is None
        inside, outside, ind = _refine(status, grid[k], grid[k + direction], step / 2)
        indet |= ind
        bounds.append(0.5 * (inside + outside))
        certified.append(inside)
    lo, hi = min(bounds[0], 0.0), max(bounds[1], 0.0)
    if hi - lo < 2 * step:
        lo = hi = 0.0
        certified = [0.0, 0.0]
    # members only at offsets verified bi-asymptotic; the midpoints may lie just outside
    c_lo, c_hi = min(certified[0], 0.0), max(certified[1], 0.0)
    offsets = np.linspace(c_lo, c_hi, n_members) if c_hi > c_lo else np.array([0.0])
    members = [UnitTangent.from_array(M, s) for s in transversal_states(M, theta, offsets)]
    unc = step + (step if indet else 0.0)
    return Strip(theta, float(lo), float(hi), offsets, members, unc, M.model_id,
                 width_tol=2 * step, indeterminate=indet)


def quotient_class(M, theta, **detect_kw) -> QuotientClass:
    """The class ``[theta]``: its strip and the midpoint representative."""
    strip = detect_strip(M, theta, **detect_kw)
    return QuotientClass(strip, midpoint_member(strip, M), M)


# ---------------------------------------------------------------- equivalence

def _busemann_exact(M, theta, z):
    m = frame_matrices(as_states(theta))[0]
    minv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    return -math.log(mobius(minv, z).imag)


def along_track_offset(M, s_theta, s_eta):
    """Displacement of ``eta`` from ``theta`` along ``theta``'s direction (collar chart)."""
    r, phi, a = s_theta
    f = float(M.profile.f(r))
    dr = s_eta[0] - r
    dy = f * float(wrap_angle(s_eta[1] - phi))
    return dr * math.cos(a) + dy * math.sin(a)


def equivalence_check(M, theta, eta, T=DEFAULT_T, C=Q_FLOOR, dt=0.25, max_shift=1.0,
                      tol=DEFAULT_TOL, offset_tol=1e-6) -> bool:
    """``eta ~ theta``: same strong stable leaf and bi-asymptotic.

    Raises :class:`IndeterminateError` when bi-asymptoticity is undecided.
    """
    s1, s2 = as_states(theta)[0], as_states(eta)[0]
    if isinstance(M, ConstantNegative):
        bwd, fwd = endpoints_constant(np.vstack([s1, s2]))
        same_f = IdealPoint(float(fwd[0])).same_as(IdealPoint(float(fwd[1])))
        same_b = IdealPoint(float(bwd[0])).same_as(IdealPoint(float(bwd[1])))
        level = abs(_busemann_exact(M, s1, complex(s2[0], s2[1]))) < 1e-9
        return bool(same_f and same_b and level)
    if not isinstance(M, Collar):
        raise UnsupportedModelError(type(M).__name__)
    times = sample_grid(T, dt)
    S = flow_samples(M, np.vstack([s1, s2]), times, tol)
    # strong stable: synchronised forward distance bounded and non-increasing
    fwd = times >= 0
    sync = sasaki_arrays(M, S[fwd, 0] * [1, 1, 0], S[fwd, 1] * [1, 1, 0])
    n = len(sync)
    tail = sync[n // 2:]
    if tail.max() > sync[: n // 2 + 1].max() + 1e-6 + 10 * tol:
        return False
    if abs(along_track_offset(M, s1, s2)) > offset_tol + 10 * tol:
        return False
    res = matched_distance(M, S[:, 0], S[:, 1], times, max_shift)
    ok, _ = decide_biasymptotic(times, res.dist, T, C, slack=1e-6 + 10 * tol)
    return bool(ok)


# ---------------------------------------------------------------- metric and flow

def hausdorff(M, A, B) -> float:
    A = as_states(A)
    B = as_states(B)
    D = sasaki_arrays(M, A[:, None, :], B[None, :, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def quotient_distance(M, c1: QuotientClass, c2: QuotientClass) -> float:
    """Hausdorff distance between the sampled member sets."""
    return hausdorff(M, c1.members.member_states(), c2.members.member_states())


def quotient_flow(M, cls: QuotientClass, t: float, **detect_kw) -> QuotientClass:
    """``psi_t([theta]) = [phi_t(theta)]``: flow the representative, re-detect."""
    if t == 0:
        return cls
    tol = detect_kw.get("tol", DEFAULT_TOL)
    rep = flow_samples(M, as_states(cls.representative), np.array([t]), tol)[0, 0]
    return quotient_class(M, UnitTangent.from_array(M, rep), **detect_kw)


def semiconjugacy_check(M, theta, t, cls=None, n_members=10, **kw):
    """Check ``chi(phi_t eta) = psi_t(chi theta)`` for members ``eta`` of ``[theta]``.

    Returns a list of booleans, one per tested member.
    """
    detect_kw = {k: v for k, v in kw.items() if k in ("scan", "T", "C", "coarse", "dt", "tol")}
    eq_kw = {k: v for k, v in kw.items() if k in ("T", "C", "dt", "tol")}
    cls = cls or quotient_class(M, theta, **detect_kw)
    image = quotient_flow(M, cls, t, **detect_kw) if not cls.trivial else None
    states = cls.members.member_states()
    pick = np.unique(np.linspace(0, len(states) - 1, min(n_members, len(states))).astype(int))
    tol = kw.get("tol", DEFAULT_TOL)
    moved = flow_samples(M, states[pick], np.array([t]), tol)[0]
    rep_t = (image.representative.as_array() if image is not None else
             flow_samples(M, as_states(cls.representative), np.array([t]), tol)[0, 0])
    return [equivalence_check(M, rep_t, s, **eq_kw) for s in moved]


# ---------------------------------------------------------------- expansivity

@dataclass
class ExpansivityReport:
    flow: str
    eps: float
    violators: list
    checked: int
    skipped_identified: int
    partial: bool
    threshold: float

    def to_record(self):
        return {"flow": self.flow, "eps": self.eps, "checked": self.checked,
                "skipped_identified": self.skipped_identified, "partial": self.partial,
                "empirical_threshold": self.threshold,
                "violators": [{"pair": int(i), "sup": float(s)} for i, s in self.violators]}


def expansivity_probe(M, flow: str, eps: float, pairs, T: float = 20.0, dt=0.05,
                      max_shift=0.5, tol=DEFAULT_TOL, equiv_kw=None, budget=None):
    """Pairs whose (matched) orbits stay within ``eps`` over ``[-T, T]``.

    ``flow='original'`` compares Sasaki distances of the orbits themselves.
    ``flow='quotient'`` first discards identified pairs (``eta ~ theta``)
    and compares the remaining classes by the Hausdorff distance of their
    flowed member sets. Pairs on a common orbit (matched sup below 1e-6)
    are never violations. ``threshold`` is the smallest sup distance seen
    among non-identified pairs.
    """
    if not (eps > 0 and T > 0):
        raise ValueError("eps and T must be positive")
    if flow not in ("original", "quotient"):
        raise ValueError("flow must be 'original' or 'quotient'")
    budget = as_budget(budget)
    equiv_kw = equiv_kw or {}
    times = sample_grid(T, dt)
    violators, checked, skipped, partial = [], 0, 0, False
    threshold = math.inf
    for i, (th, et) in enumerate(pairs):
        if budget.exhausted:
            partial = True
            break
        s = np.vstack([as_states(th), as_states(et)])
        if flow == "quotient" and not isinstance(M, ConstantNegative):
            try:
                same = equivalence_check(M, s[0], s[1], tol=tol, **equiv_kw)
            except IndeterminateError:
                same = False
            if same:
                skipped += 1
                checked += 1
                continue
        S = flow_samples(M, s, times, tol)
        res = matched_distance(M, S[:, 0], S[:, 1], times, max_shift, metric="sasaki")
        sup = res.sup
        if flow == "quotient" and not isinstance(M, ConstantNegative):
            sup = _class_orbit_sup(M, s, times, res, tol)
        checked += 1
        if sup < 1e-6:
            continue
        threshold = min(threshold, sup)
        if sup <= eps:
            violators.append((i, sup))
    violators.sort()
    return ExpansivityReport(flow, eps, violators, checked, skipped, partial, threshold)


def _class_orbit_sup(M, s, times, res, tol, T_detect=300.0):
    """Sup over time of the Hausdorff distance between flowed classes."""
    c1 = quotient_class(M, s[0], scan=(Q_FLOOR, 1e-2), T=T_detect, tol=tol, n_members=5)
    c2 = quotient_class(M, s[1], scan=(Q_FLOOR, 1e-2), T=T_detect, tol=tol, n_members=5)
    if c1.trivial and c2.trivial:
        return res.sup
    A = flow_samples(M, c1.members.member_states(), times, tol)
    B = flow_samples(M, c2.members.member_states(), times, tol)
    B = B[res.index]
    D = sasaki_arrays(M, A[:, :, None, :], B[:, None, :, :])
    haus = np.maximum(D.min(axis=2).max(axis=1), D.min(axis=1).max(axis=1))
    return float(haus.max())
