"""Pseudo-orbits, shadowing, periodic closing and periodic-orbit tables.

On the constant model a finite pseudo-orbit is lifted to the universal
cover segment by segment (each jump is realised by the closest deck
translate). The tracing orbit is the geodesic joining the backward end of
the first segment to the forward end of the last one; for periodic chains
the lifts accumulate a deck transformation whose axis is the closed orbit.
On the collar, closed orbits are found by damped Newton shooting.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._budget import as_budget
from .asymptotic import tangent_on_geodesic
from .errors import (BudgetExhausted, ClosingFailedError, EndpointUnstableError,
                     NotHyperbolicError, PseudoOrbitError, UnsupportedModelError)
from .flow import (DEFAULT_TOL, Trajectory, _constant_flow, endpoints_constant, flow_samples,
                   flow_states)
from .hyperbolic import (GroupWord, IsometryMatrix, axis_endpoints,
                         enumerate_conjugacy_classes, is_primitive, mobius_tangent,
                         reduce_points, translation_length)
from .surfaces import (Collar, ConstantNegative, UnitTangent, _quotient_neighbors, as_states,
                       sasaki_arrays, sasaki_quotient, wrap_angle)

MIN_END_SEGMENT = 1.0


# ---------------------------------------------------------------- pseudo-orbits

@dataclass
class PseudoOrbit:
    points: np.ndarray
    times: np.ndarray
    delta: float
    a: float
    periodic: bool = False
    jumps: np.ndarray = None

    @property
    def delta_actual(self) -> float:
        return float(self.jumps.max()) if self.jumps is not None and len(self.jumps) else 0.0

    @property
    def total_time(self) -> float:
        return float(np.sum(self.times))

    def __len__(self):
        return len(self.times)


def _jump_distances(M, ends, starts):
    if isinstance(M, ConstantNegative):
        return sasaki_quotient(M, ends, starts)
    return sasaki_arrays(M, ends, starts)


def make_pseudo_orbit(M, segments, delta_target, a=None, periodic=False,
                      tol=DEFAULT_TOL) -> PseudoOrbit:
    """Validate a chain of ``(tangent, duration)`` segments.

    Jumps are Sasaki distances between the end of one segment and the start
    of the next (measured on the compact surface for the constant model);
    each must be below ``delta_target``.
    """
    if not segments:
        raise ValueError("need at least one segment")
    pts = as_states([s for s, _ in segments])
    times = np.array([float(t) for _, t in segments])
    a = float(times.min()) if a is None else float(a)
    if np.any(times < a):
        k = int(np.argmin(times))
        raise PseudoOrbitError(f"segment {k} has duration {times[k]} < a = {a}", index=k)
    ends = np.array([flow_states(M, p[None, :], t, tol)[0] for p, t in zip(pts, times)])
    nxt = np.roll(pts, -1, axis=0) if periodic else pts[1:]
    jumps = _jump_distances(M, ends if periodic else ends[:-1], nxt) if len(nxt) else np.zeros(0)
    bad = np.nonzero(jumps >= delta_target)[0]
    if bad.size:
        k = int(bad[0])
        raise PseudoOrbitError(f"jump after segment {k} is {jumps[k]:.3g} >= delta {delta_target}",
                               index=k, jump=float(jumps[k]))
    return PseudoOrbit(pts, times, float(delta_target), a, periodic, jumps)


def transverse_jump(M, state, size, sign=1.0):
    """Sasaki kick of length ``size``: 0.8 sideways along a geodesic, 0.6 in angle."""
    if not isinstance(M, ConstantNegative):
        raise UnsupportedModelError("transverse jumps are built on the constant model")
    e = np.array(state, dtype=float)
    # flowing the rotated vector and rotating back is parallel transport
    e[2] += 0.5 * math.pi
    e = flow_states(M, e[None, :], 0.8 * size * sign)[0]
    e[2] += -0.5 * math.pi + 0.6 * size * sign
    return e


def skeleton(M, start, delta, n_segments=3, duration=5.0, signs=None, fill=0.9):
    """Chain of ``n_segments`` true orbit pieces joined by transverse jumps of ``fill * delta``."""
    signs = np.ones(n_segments) if signs is None else np.asarray(signs, dtype=float)
    cur = as_states(start)[0]
    segs = []
    for k in range(n_segments):
        segs.append((cur.copy(), float(duration)))
        end = flow_states(M, cur[None, :], duration)[0]
        cur = transverse_jump(M, end, fill * delta, signs[k])
    return make_pseudo_orbit(M, segs, delta)


# ---------------------------------------------------------------- lifting (constant model)

def _closest_translate(M, target, state):
    """Deck translate of ``state`` closest to ``target``: ``(lift, matrix, word)``."""
    G = M.group
    zt, at, wt = reduce_points(G, [complex(target[0], target[1])], [target[2]],
                               return_words=True)
    zs, as_, ws = reduce_points(G, [complex(state[0], state[1])], [state[2]],
                                return_words=True)
    mats = _quotient_neighbors(M)
    z2, a2 = mobius_tangent(mats, zs[0], as_[0])
    d = sasaki_arrays(M, np.array([zt[0].real, zt[0].imag, at[0]]),
                      np.stack([z2.real, z2.imag, a2], axis=-1))
    k = int(np.argmin(d))
    W = G.evaluate(wt[0]).array
    g = W @ mats[k]
    lift_z, lift_a = mobius_tangent(g, zs[0], as_[0])
    return np.array([lift_z.real, lift_z.imag, float(np.mod(lift_a, 2 * math.pi))]), g


def lift_chain(M, po: PseudoOrbit, tol=DEFAULT_TOL):
    """Lift the chain to the cover; returns lifted starts and the closing deck element."""
    pts = M.reduce(po.points)
    lifts = [pts[0]]
    for k in range(len(po) - 1):
        end = flow_states(M, lifts[-1][None, :], po.times[k], tol)[0]
        lift, _ = _closest_translate(M, end, pts[k + 1])
        lifts.append(lift)
    closing = None
    if po.periodic:
        end = flow_states(M, lifts[-1][None, :], po.times[-1], tol)[0]
        _, g = _closest_translate(M, end, pts[0])
        closing = g
    return np.array(lifts), closing


def chain_samples(M, lifts, durations, dt, tol=DEFAULT_TOL):
    """Chain times and states sampled every ``dt`` along each lifted segment."""
    ts, ss = [], []
    t0 = 0.0
    for k, (p, tau) in enumerate(zip(lifts, durations)):
        n = max(2, int(math.ceil(tau / dt)) + 1)
        loc = np.linspace(0.0, tau, n)
        if k < len(lifts) - 1:
            loc = loc[:-1]
        ts.append(t0 + loc)
        ss.append(flow_samples(M, p[None, :], loc, tol)[:, 0, :])
        t0 += tau
    return np.concatenate(ts), np.concatenate(ss)


# ---------------------------------------------------------------- tracing

@dataclass
class ShadowingResult:
    orbit: UnitTangent
    eps_achieved: float
    reparam_dev: float
    matched: dict = field(repr=False)

    def table(self):
        return self.matched


def _refined_match(M, y, chain_t, chain_s, dt, max_shift):
    """Continuous monotone matching of chain samples against the orbit of ``y``."""
    grid = np.arange(chain_t[0] - max_shift, chain_t[-1] + max_shift + dt / 2, dt)
    orb = flow_samples(M, y[None, :], grid)[:, 0, :]
    # coarse: nearest grid sample, then golden-section on [t_j - dt, t_j + dt]
    W = int(math.ceil(max_shift / dt))
    base = np.clip(np.searchsorted(grid, chain_t), 0, len(grid) - 1)
    offs = np.arange(-W, W + 1)
    idx = np.clip(base[None, :] + offs[:, None], 0, len(grid) - 1)
    d = sasaki_arrays(M, chain_s[None, :, :], orb[idx])
    j = idx[np.argmin(d, axis=0), np.arange(len(chain_t))]
    lo, hi = grid[j] - dt, grid[j] + dt
    ys = np.repeat(y[None, :], len(chain_t), axis=0)

    def dist_at(t):
        return sasaki_arrays(M, chain_s, _constant_flow(ys, t))

    gr = 0.5 * (math.sqrt(5) - 1)
    for _ in range(50):
        c1, c2 = hi - gr * (hi - lo), lo + gr * (hi - lo)
        left = dist_at(c1) < dist_at(c2)
        hi = np.where(left, c2, hi)
        lo = np.where(left, lo, c1)
    alpha = np.maximum.accumulate(0.5 * (lo + hi))
    return alpha, dist_at(alpha)


def trace_report(M, y, chain_t, chain_s, dt=0.05, max_shift=1.0):
    alpha, dist = _refined_match(M, y, chain_t, chain_s, dt, max_shift)
    table = {"t": chain_t, "alpha": alpha, "dist": dist}
    return float(dist.max()), float(np.abs(alpha - chain_t).max()), table


def shadow_search(M, po: PseudoOrbit, budget=None, dt=0.05, max_shift=1.0) -> ShadowingResult:
    """Tracing orbit of a finite pseudo-orbit by the endpoint (Morse) method."""
    if not isinstance(M, ConstantNegative):
        raise UnsupportedModelError("shadow_search runs on the constant model")
    if po.periodic:
        raise ValueError("use close_periodic for periodic pseudo-orbits")
    budget = as_budget(budget)
    if po.times[0] < MIN_END_SEGMENT or po.times[-1] < MIN_END_SEGMENT:
        raise EndpointUnstableError(
            f"first and last segments must last at least {MIN_END_SEGMENT} to fix the "
            f"endpoints; increase a")
    lifts, _ = lift_chain(M, po)
    bwd, _ = endpoints_constant(lifts[:1])
    last_end = flow_states(M, lifts[-1:], po.times[-1])
    _, fwd = endpoints_constant(last_end)
    if budget.exhausted:
        raise BudgetExhausted("budget exhausted before tracing", partial={"lifts": lifts})
    y = tangent_on_geodesic(float(bwd[0]), float(fwd[0]), complex(lifts[0][0], lifts[0][1]))
    chain_t, chain_s = chain_samples(M, lifts, po.times, dt)
    eps, dev, table = trace_report(M, y, chain_t, chain_s, dt, max_shift)
    return ShadowingResult(UnitTangent.from_array(M, y), eps, dev, table)


# ---------------------------------------------------------------- periodic orbits

@dataclass
class PeriodicOrbitRecord:
    source: object
    period: float
    initial: UnitTangent
    samples: Trajectory = field(repr=False, default=None)
    primitive: bool = True
    matrix: IsometryMatrix = field(repr=False, default=None)
    diagnostics: dict = field(repr=False, default_factory=dict)

    @property
    def word(self) -> str:
        return str(self.source) if isinstance(self.source, GroupWord) else ""

    def closure_residual(self, M) -> float:
        """Sasaki distance between ``phi_period(initial)`` and ``initial`` on the surface."""
        s = self.initial.as_array()[None, :]
        end = flow_states(M, s, self.period)
        if isinstance(M, ConstantNegative):
            return float(sasaki_quotient(M, end, s)[0])
        return float(sasaki_arrays(M, end, s)[0])


def axis_tangent(m, near=1j):
    """Tangent on the axis of ``m`` at the point closest to ``near``, toward the attractor."""
    rep, att = axis_endpoints(m)
    return tangent_on_geodesic(rep, att, near)


def _record_from_matrix(M, m, word, n_samples=64, diagnostics=None, near=1j):
    ell = translation_length(m)
    init = axis_tangent(m, near)
    times = np.linspace(0.0, ell, n_samples)
    traj = Trajectory(times, flow_samples(M, init[None, :], times)[:, 0, :], M)
    return PeriodicOrbitRecord(word, ell, UnitTangent.from_array(M, init), traj,
                               is_primitive(M.group, m.array), m, diagnostics or {})


def _close_constant(M, po, budget, dt=0.05, max_shift=1.0):
    lifts, g = lift_chain(M, po)
    m = IsometryMatrix.from_array(g * np.sign(np.trace(g)) if np.trace(g) != 0 else g)
    try:
        translation_length(m)
    except NotHyperbolicError as e:
        raise ClosingFailedError(f"accumulated deck element is not hyperbolic: {e}",
                                 residual=abs(m.trace)) from None
    near = complex(lifts[0][0], lifts[0][1])
    rec = _record_from_matrix(M, m, _word_of(M, m), diagnostics={}, near=near)
    y = rec.initial.as_array()
    chain_t, chain_s = chain_samples(M, lifts, po.times, dt)
    eps, dev, table = trace_report(M, y, chain_t, chain_s, dt, max_shift)
    rec.diagnostics.update({"eps_achieved": eps, "reparam_dev": dev,
                            "period_gap": abs(rec.period - po.total_time),
                            "segments": len(po)})
    return rec


def _word_of(M, m):
    """A word for the deck element ``m`` (via reduction of its image of (i, up))."""
    a = m.array
    z, ang = mobius_tangent(a, 1j, 0.5 * math.pi)
    _, _, words = reduce_points(M.group, [z], [ang], return_words=True)
    return GroupWord(words[0])


def _close_collar(M: Collar, po, budget, tol=1e-11, max_iter=40):
    budget = as_budget(budget)
    x0 = po.points[0]
    phi0 = x0[1]
    p = np.array([x0[0], x0[2], po.total_time])

    def residual(q):
        s = np.array([[q[0], phi0, q[1]]])
        e = flow_states(M, s, q[2], tol)[0]
        return np.array([e[0] - q[0], float(wrap_angle(e[1] - phi0)),
                         float(wrap_angle(e[2] - q[1]))])

    F = residual(p)
    lam = 1.0
    for it in range(max_iter):
        nF = float(np.linalg.norm(F))
        if nF < 1e-10:
            break
        if budget.exhausted:
            raise ClosingFailedError("budget exhausted during shooting", residual=nF)
        h = 1e-6
        J = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            J[:, j] = (residual(p + e) - residual(p - e)) / (2 * h)
        step = np.linalg.lstsq(J, -F, rcond=1e-10)[0]
        while True:
            q = p + lam * step
            Fq = residual(q)
            if np.linalg.norm(Fq) < nF or lam < 1e-6:
                break
            lam *= 0.5
        if np.linalg.norm(Fq) >= nF:
            raise ClosingFailedError("shooting stalled", residual=nF)
        p, F = q, Fq
        lam = min(1.0, 2 * lam)
    nF = float(np.linalg.norm(F))
    if nF > 1e-8:
        raise ClosingFailedError("shooting did not converge", residual=nF)
    init = np.array([p[0], phi0, np.mod(p[1], 2 * math.pi)])
    times = np.linspace(0.0, p[2], 128)
    traj = Trajectory(times, flow_samples(M, init[None, :], times, tol)[:, 0, :], M, tol)
    return PeriodicOrbitRecord("shooting", float(p[2]), UnitTangent.from_array(M, init), traj,
                               True, None, {"residual": nF, "iterations": it,
                                            "period_gap": abs(p[2] - po.total_time)})


def close_periodic(M, po: PseudoOrbit, budget=None) -> PeriodicOrbitRecord:
    """Closed orbit shadowing a periodic pseudo-orbit."""
    if not po.periodic:
        raise ValueError("pseudo-orbit is not periodic")
    if isinstance(M, ConstantNegative):
        return _close_constant(M, po, budget)
    if isinstance(M, Collar):
        return _close_collar(M, po, budget)
    raise UnsupportedModelError(type(M).__name__)


def enumerate_periodic_orbits(M, T: float, oriented=False, n_samples=64):
    """Primitive closed geodesics of length at most ``T``, sorted by (period, word)."""
    if not isinstance(M, ConstantNegative):
        raise UnsupportedModelError("periodic-orbit enumeration runs on the constant model")
    table = enumerate_conjugacy_classes(M.group, T, oriented=oriented)
    recs = []
    for cls in table:
        m = cls.matrix
        init = axis_tangent(m)
        times = np.linspace(0.0, cls.length, n_samples)
        traj = Trajectory(times, flow_samples(M, init[None, :], times)[:, 0, :], M)
        recs.append(PeriodicOrbitRecord(cls.word, cls.length, UnitTangent.from_array(M, init),
                                        traj, True, m))
    recs.sort(key=lambda r: (round(r.period, 9), r.word))
    return PeriodicTable(recs, table.certified_length, T)


@dataclass
class PeriodicTable:
    records: list
    certified_length: float
    T: float

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, k):
        return self.records[k]

    def periods(self):
        return np.array([r.period for r in self.records])

    def count(self, T):
        return int(np.sum(self.periods() <= T + 1e-12))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["word", "period", "x", "y", "angle", "primitive"])
        for r in self.records:
            s = r.initial.as_array()
            w.writerow([r.word, repr(float(r.period))] + [repr(float(v)) for v in s]
                       + [int(r.primitive)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text
