"""Entropy, periodic-orbit measures and maximal-entropy diagnostics.

Separated sets are built greedily and therefore bound the true maximal
cardinality from below; every entropy number derived from them is a
lower-bound estimate. Separation is measured on the compact surface: two
orbits are compared through the deck translate that is closest at time 0,
which is exact as long as ``eps`` is below the injectivity radius.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._budget import as_budget
from .errors import IncompleteTableError, UnsupportedModelError
from .flow import DEFAULT_TOL, _constant_flow, dphi_growth, flow_samples
from .hyperbolic import CIRCUMRADIUS, INRADIUS, distance, from_disk, mobius_tangent, orbit_ball
from .surfaces import Collar, ConstantNegative, UnitTangent, as_states, sasaki_arrays

GENUS2_AREA = 4.0 * math.pi
RELIABLE_RESIDUAL = 0.05


# ---------------------------------------------------------------- samplers

def make_rng(seed, key=()):
    """Counter-based generator; ``key`` separates independent streams."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def octagon_boundary_radius(psi):
    """Hyperbolic distance from the centre to the octagon side in direction ``psi``."""
    delta = np.mod(psi, math.pi / 4) - math.pi / 8
    return np.arctanh(math.tanh(INRADIUS) / np.cos(delta))


def _polar_to_uhp(rho, psi):
    return from_disk(np.tanh(rho / 2) * np.exp(1j * psi))


@dataclass
class Sampler:
    """Deterministic stream of unit tangents."""

    kind: str
    params: dict
    seed: int
    model: object = field(repr=False, default=None)

    @property
    def descriptor(self):
        if self.kind == "states":
            return {"kind": "states", "n": int(self.params["n"])}
        return {"kind": self.kind, "seed": self.seed, **self.params}

    def draw(self, n: int) -> np.ndarray:
        rng = make_rng(self.seed, (0,))
        if self.kind == "ball":
            cx, cy, ca = self.params["center"]
            rad = self.params["radius"]
            out = []
            while sum(len(o) for o in out) < n:
                m = 2 * n
                u = rng.uniform(-1, 1, size=(m, 3)) * rad
                keep = np.linalg.norm(u, axis=1) <= rad
                u = u[keep]
                # exponential map: walk rho = |(u0, u1)| along the direction psi and
                # carry the angle offset ca - psi along (geodesic tangents are parallel)
                psi = np.arctan2(u[:, 1], u[:, 0])
                rho = np.hypot(u[:, 0], u[:, 1])
                start = np.stack([np.full(len(u), cx), np.full(len(u), cy), psi], axis=-1)
                end = _constant_flow(start, rho)
                ang = end[:, 2] + (ca - psi) + u[:, 2]
                out.append(np.stack([end[:, 0], end[:, 1], np.mod(ang, 2 * math.pi)], axis=-1))
            return np.concatenate(out)[:n]
        if self.kind == "bundle":
            out = []
            while sum(len(o) for o in out) < n:
                m = 2 * n
                psi = rng.uniform(0, 2 * math.pi, m)
                u = rng.uniform(0, 1, m)
                rho = np.arccosh(1 + u * (math.cosh(CIRCUMRADIUS) - 1))
                ang = rng.uniform(0, 2 * math.pi, m)
                keep = rho <= octagon_boundary_radius(psi)
                z = _polar_to_uhp(rho[keep], psi[keep])
                out.append(np.stack([z.real, z.imag, ang[keep]], axis=-1))
            return np.concatenate(out)[:n]
        if self.kind == "states":
            s = np.asarray(self.params["states"], dtype=float)
            return s[:n]
        raise ValueError(f"unknown sampler kind {self.kind!r}")


def ball_sampler(M, center=(0.0, 1.0, math.pi / 2), radius=0.05, seed=0) -> Sampler:
    """Uniform coordinates in the Sasaki ball of ``radius`` about ``center`` (constant model)."""
    return Sampler("ball", {"center": tuple(float(c) for c in center), "radius": float(radius)},
                   int(seed), M)


def bundle_sampler(M, seed=0) -> Sampler:
    """Liouville-uniform tangents over the fundamental octagon."""
    return Sampler("bundle", {}, int(seed), M)


def states_sampler(states) -> Sampler:
    s = as_states(states)
    return Sampler("states", {"states": s, "n": len(s)}, 0)


# ---------------------------------------------------------------- separated sets

@dataclass(frozen=True)
class SeparationCount:
    T: float
    eps: float
    M: int
    seeds: dict
    step: float = 0.1
    candidates: int = 0
    lower_bound_only: bool = True
    budget_exhausted: bool = False

    @property
    def n_iterates(self) -> float:
        return self.T / self.step


_LOCAL_CACHE = {}


def _local_translates(M, eps):
    key = (id(M.group), round(eps, 12))
    if key not in _LOCAL_CACHE:
        # translates that can bring a point of the octagon within eps of the octagon
        _LOCAL_CACHE[key] = orbit_ball(M.group, 2 * CIRCUMRADIUS + eps + 1e-6).matrices
    return _LOCAL_CACHE[key]


def count_separated(M, Z, T, eps, budget=None, step=0.1, n_candidates=4000,
                    tol=DEFAULT_TOL) -> SeparationCount:
    """Greedy ``(T, eps)``-separated subset of the sampled set ``Z``.

    Orbits are compared at times ``0, step, ..., T`` by the Sasaki proxy; a
    candidate is accepted when its orbit is ``eps``-apart at some sample time
    from every accepted orbit. The count is a lower bound for ``M(T, eps)``.
    """
    if not (T > 0 and eps > 0):
        raise ValueError("T and eps must be positive")
    budget = as_budget(budget)
    sampler = Z if isinstance(Z, Sampler) else states_sampler(Z)
    cand = as_states(sampler.draw(n_candidates))
    n_t = int(round(T / step))
    times = step * np.arange(n_t + 1)
    if isinstance(M, ConstantNegative):
        cand = M.reduce(cand)
        mats = _local_translates(M, eps)
    elif isinstance(M, Collar):
        mats = None
    else:
        raise UnsupportedModelError(type(M).__name__)
    orbits = flow_samples(M, cand, times, tol).transpose(1, 0, 2)  # (n, n_t, 3)
    acc_idx = []
    acc_translates = []  # per accepted orbit: (K, 3) start states of translates
    exhausted, k = False, 0
    for k in range(len(cand)):
        if budget.exhausted:
            exhausted = True
            break
        budget.tick()
        x = cand[k]
        separated = True
        if acc_idx:
            if mats is None:
                starts = cand[acc_idx]
                d0 = sasaki_arrays(M, x[None, :], starts)
                near = np.nonzero(d0 < eps)[0]
                for j in near:
                    d = sasaki_arrays(M, orbits[k], orbits[acc_idx[j]])
                    if d.max() < eps:
                        separated = False
                        break
            else:
                tr = np.concatenate(acc_translates)
                d0 = sasaki_arrays(M, x[None, :], tr)
                near = np.nonzero(d0 < eps)[0]
                for j in near:
                    orb = flow_samples(M, tr[j][None, :], times, tol)[:, 0, :]
                    d = sasaki_arrays(M, orbits[k], orb)
                    if d.max() < eps:
                        separated = False
                        break
        if separated:
            acc_idx.append(k)
            if mats is not None:
                z, a = mobius_tangent(mats, x[0] + 1j * x[1], x[2])
                acc_translates.append(np.stack([z.real, z.imag, np.mod(a, 2 * math.pi)], axis=-1))
    processed = k if exhausted else len(cand)
    return SeparationCount(float(T), float(eps), len(acc_idx), sampler.descriptor,
                           float(step), int(processed), True, exhausted)


# ---------------------------------------------------------------- entropy fits

@dataclass
class EntropyEstimate:
    h: float
    per_eps: dict
    T_grid: tuple
    caveats: list
    h_map: float = math.nan
    step: float = math.nan

    def to_record(self):
        return {"h": self.h, "h_map": self.h_map, "step": self.step,
                "per_eps": {repr(k): {"slope": v[0], "residual": v[1], "slope_map": v[2]}
                            for k, v in self.per_eps.items()},
                "T_grid": list(self.T_grid), "caveats": list(self.caveats)}

    def to_json(self):
        return json.dumps(self.to_record(), sort_keys=True)


def _fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res ** 2)))


def entropy_estimate(counts) -> EntropyEstimate:
    """Least-squares slope of ``log M`` against ``T`` for each ``eps``.

    ``h`` is the slope at the smallest ``eps`` whose fit residual is below
    0.05; ``h_map`` is the same slope against the number of iterates
    ``T/step`` (the entropy of the time-``step`` map).
    """
    by_eps = {}
    for c in counts:
        by_eps.setdefault(c.eps, []).append(c)
    per, caveats = {}, ["lower-bound estimate (greedy packing)"]
    steps = set()
    for eps, cs in sorted(by_eps.items()):
        cs = sorted(cs, key=lambda c: c.T)
        Ts = np.array([c.T for c in cs])
        if len(np.unique(Ts)) < 3:
            raise ValueError(f"need at least 3 distinct T for eps={eps}")
        Ms = np.array([max(c.M, 1) for c in cs], dtype=float)
        if np.any(np.diff(Ms) < 0):
            caveats.append(f"degraded fit: non-monotone counts at eps={eps}")
        if any(c.budget_exhausted for c in cs):
            caveats.append(f"budget exhausted at eps={eps}: counts are partial")
        slope, resid = _fit(Ts, np.log(Ms))
        n = np.array([c.n_iterates for c in cs])
        slope_map, _ = _fit(n, np.log(Ms))
        per[eps] = (slope, resid, slope_map)
        steps.update(c.step for c in cs)
    reliable = [e for e in sorted(per) if per[e][1] < RELIABLE_RESIDUAL]
    if reliable:
        e = reliable[0]
    else:
        e = min(per)
        caveats.append("no eps with fit residual below 0.05")
    T_grid = tuple(sorted({c.T for c in counts}))
    step = steps.pop() if len(steps) == 1 else math.nan
    return EntropyEstimate(per[e][0], per, T_grid, caveats, per[e][2], step)


def abramov_ratio(est_a: EntropyEstimate, est_b: EntropyEstimate) -> float:
    """Ratio of map entropies; Abramov predicts ``step_b / step_a``."""
    return est_b.h_map / est_a.h_map


# ---------------------------------------------------------------- periodic counts

@dataclass(frozen=True)
class GrowthReport:
    slope: float
    corrected_slope: float
    counts: tuple
    T_grid: tuple


def _per_counts(table, T_grid):
    T_grid = np.asarray(sorted(T_grid), dtype=float)
    if len(T_grid) < 2:
        raise ValueError("need at least two T values")
    certified = getattr(table, "certified_length", math.inf)
    if T_grid[-1] > certified + 1e-12:
        raise IncompleteTableError(
            f"table certified complete only up to {certified:.4f} < {T_grid[-1]}",
            certified=certified)
    periods = np.array([r.period if hasattr(r, "period") else r.length for r in table])
    counts = np.array([np.sum(periods <= T + 1e-12) for T in T_grid])
    if np.any(counts == 0):
        raise ValueError("T grid reaches below the systole (empty count)")
    return T_grid, counts


def growth_rate_per(records, T_grid) -> float:
    """Least-squares slope of ``log #Per(T)`` against ``T``."""
    T, n = _per_counts(records, T_grid)
    return _fit(T, np.log(n))[0]


def growth_rate_report(records, T_grid) -> GrowthReport:
    """Raw slope plus the slope of ``log(T #Per(T))`` (prime-geodesic prefactor removed)."""
    T, n = _per_counts(records, T_grid)
    return GrowthReport(_fit(T, np.log(n))[0], _fit(T, np.log(T * n))[0],
                        tuple(int(v) for v in n), tuple(float(t) for t in T))


# ---------------------------------------------------------------- observables

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3 - 2 * x)


@dataclass
class Observable:
    """Bounded function on unit tangents of the surface."""

    name: str
    fn: object = field(repr=False)
    bounds: tuple = (-math.inf, math.inf)
    modulus: str = ""

    def __call__(self, states):
        return self.fn(as_states(states))


def constant_observable(value=1.0) -> Observable:
    return Observable(f"const_{value:g}", lambda s: np.full(len(s), float(value)),
                      (value, value), "0")


def curvature_observable(M) -> Observable:
    return Observable("curvature", lambda s: M.curvature(s), (-1.0, 0.0),
                      "Lipschitz in the base point")


def _quotient_dist_to(M, p0: complex):
    # translates of p0 that can be nearest to a point of the octagon
    mats = orbit_ball(M.group, 2 * CIRCUMRADIUS + float(distance(p0, 1j)) + 1e-6).matrices
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    imgs = (a * p0 + b) / (c * p0 + d)

    def dist(states):
        red = M.reduce(states)
        z = red[:, 0] + 1j * red[:, 1]
        out = np.empty(len(z))
        for lo in range(0, len(z), 4096):
            out[lo:lo + 4096] = distance(z[lo:lo + 4096, None], imgs[None, :]).min(axis=1)
        return out
    return dist


def center_distance_observable(M) -> Observable:
    """Distance on the surface from the base point to the octagon centre."""
    dist = _quotient_dist_to(M, 1j)
    return Observable("center_distance", dist, (0.0, CIRCUMRADIUS), "1-Lipschitz")


def ball_observable(M, center=1j, radius=1.0, width=0.4, name=None) -> Observable:
    """Smoothed indicator of the surface ball of ``radius`` about ``center``."""
    dist = _quotient_dist_to(M, complex(center))

    def fn(states):
        return 1.0 - _smoothstep((dist(states) - (radius - width / 2)) / width)
    return Observable(name or f"ball_r{radius:g}", fn, (0.0, 1.0),
                      f"Lipschitz constant {1.5 / width:g}")


GENERIC_POINT = complex(from_disk(0.3 * np.exp(0.2j)))


def builtin_observables(M):
    """Three standard test functions on the constant model."""
    # the octagon vertex is an image of the centre under a surface symmetry,
    # so the second ball sits at a point with trivial stabiliser instead
    return [center_distance_observable(M),
            ball_observable(M, 1j, 1.0, 0.4, "ball_center"),
            ball_observable(M, GENERIC_POINT, 0.8, 0.4, "ball_generic")]


# ---------------------------------------------------------------- orbit measures

@dataclass
class OrbitMeasure:
    atoms: list
    normalization: str
    model: object = field(repr=False, default=None)
    T: float = math.nan
    window: float = math.nan
    source_table: object = field(repr=False, default=None)

    def __post_init__(self):
        total = sum(w for _, w in self.atoms)
        if self.atoms and abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total}, not 1")

    def __len__(self):
        return len(self.atoms)


def uniform_measure(M, records, normalization="uniform", **kw) -> OrbitMeasure:
    recs = list(records)
    if not recs:
        raise ValueError("no periodic orbits in range")
    w = 1.0 / len(recs)
    return OrbitMeasure([(r, w) for r in recs], normalization, M, **kw)


def nu_T(M, table, T) -> OrbitMeasure:
    """Uniform over primitive closed orbits of period at most ``T``."""
    return uniform_measure(M, [r for r in table if r.period <= T + 1e-12], "uniform",
                           T=float(T), source_table=table)


def nu_hat(M, table, T, window=0.5) -> OrbitMeasure:
    """Uniform over closed orbits with period in ``[T - window, T + window]``."""
    if getattr(table, "certified_length", math.inf) < T + window - 1e-12:
        raise IncompleteTableError("table too short for the window",
                                   certified=table.certified_length)
    return uniform_measure(M, [r for r in table if abs(r.period - T) <= window + 1e-12],
                           "window", T=float(T), window=float(window), source_table=table)


def strip_boundary_measure(M, cls) -> OrbitMeasure:
    """Time average on the ``lo`` boundary geodesic of a closed collar strip."""
    from .shadowing import PeriodicOrbitRecord
    from .strips import transversal_states

    if not isinstance(M, Collar):
        raise UnsupportedModelError("strip measures are defined on the collar")
    st = transversal_states(M, cls.members.base, [cls.members.lo])[0]
    if abs(math.cos(st[2])) > 1e-12:
        raise ValueError("strip is not made of parallel circles")
    # the detected edge carries the scan uncertainty; snap to the last closed circle
    h = M.band_halfwidth
    if abs(st[0]) > h + cls.members.uncertainty + 1e-12:
        raise ValueError("strip boundary is not a closed circle")
    st[0] = float(np.clip(st[0], -h, h))
    r = st[0]
    rec = PeriodicOrbitRecord("strip-boundary", float(2 * math.pi * M.profile.f(r)),
                              UnitTangent.from_array(M, st))
    return OrbitMeasure([(rec, 1.0)], "strip-boundary", M)


def orbit_average(M, record, f, n=None, tol=DEFAULT_TOL):
    """``(1/l) int_0^l f(phi_t x) dt`` by the periodic midpoint rule."""
    ell = record.period
    n = n or max(64, int(math.ceil(ell / 0.02)))
    t = (np.arange(n) + 0.5) * ell / n
    s = flow_samples(M, as_states(record.initial), t, tol)[:, 0, :]
    return float(np.mean(f(s)))


def orbit_measure_integrate(mu: OrbitMeasure, f, n=None) -> float:
    return float(sum(w * orbit_average(mu.model, r, f, n) for r, w in mu.atoms))


def liouville_average(M, f, n_psi=1000, n_rho=1000, n_angle=1) -> float:
    """Normalised Liouville integral over the unit tangent bundle of the octagon.

    Geodesic polar coordinates about the centre: Gauss-Legendre in the
    direction on each of the 8 sectors (the boundary radius is smooth there
    but sharply peaked towards the vertices), midpoint rule in the radius.
    The angle grid matters only for direction-dependent observables.
    """
    if not isinstance(M, ConstantNegative):
        raise UnsupportedModelError("Liouville quadrature is implemented on the constant model")
    per = max(1, n_psi // 8)
    x, wx = np.polynomial.legendre.leggauss(per)
    sector = math.pi / 4
    psi = np.concatenate([k * sector + 0.5 * sector * (x + 1) for k in range(8)])
    wpsi = np.tile(0.5 * sector * wx, 8)
    rb = octagon_boundary_radius(psi)
    frac = (np.arange(n_rho) + 0.5) / n_rho
    total, weight = 0.0, 0.0
    for k in range(0, len(psi), 50):
        ps = psi[k:k + 50, None]
        rho = rb[k:k + 50, None] * frac[None, :]
        w = np.sinh(rho) * (rb[k:k + 50, None] / n_rho) * wpsi[k:k + 50, None]
        z = _polar_to_uhp(rho, ps).ravel()
        vals = 0.0
        for a in (np.arange(n_angle) + 0.5) * 2 * math.pi / n_angle:
            st = np.stack([z.real, z.imag, np.full(z.shape, a)], axis=-1)
            vals = vals + f(st)
        vals = np.asarray(vals).reshape(w.shape) / n_angle
        total += float(np.sum(vals * w))
        weight += float(np.sum(w))
    return total / weight


# ---------------------------------------------------------------- maximal entropy diagnostics

@dataclass
class MMEReport:
    T_grid: tuple
    values: dict
    liouville: dict
    hat_values: dict
    window: float

    def differences(self, name):
        v = np.array(self.values[name])
        return np.abs(np.diff(v))

    def final_gap(self, name):
        return abs(self.values[name][-1] - self.liouville[name])

    def hat_gap(self, name):
        return abs(self.hat_values[name] - self.values[name][-1])

    def differences_decreasing(self, name, slack=0.0):
        d = self.differences(name)
        return bool(np.all(d[1:] <= d[:-1] + slack))

    def rows(self):
        out = []
        for name, vals in self.values.items():
            prev = None
            for T, v in zip(self.T_grid, vals):
                out.append((T, name, v, math.nan if prev is None else v - prev))
                prev = v
        return out

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "observable", "value", "difference"])
        for T, name, v, d in self.rows():
            w.writerow([repr(float(T)), name, repr(float(v)), "" if math.isnan(d) else repr(float(d))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_record(self):
        return {"T_grid": list(self.T_grid), "window": self.window,
                "liouville": self.liouville, "hat": self.hat_values,
                "values": self.values,
                "final_gap": {k: self.final_gap(k) for k in self.values}}


def mme_diagnostics(M, T_grid, observables=None, window=0.5, table=None,
                    liouville_cells=(1000, 1000)) -> MMEReport:
    """Periodic-orbit averages against Liouville averages along ``T_grid``."""
    from .shadowing import enumerate_periodic_orbits

    if not isinstance(M, ConstantNegative):
        raise UnsupportedModelError("MME diagnostics run on the constant model")
    T_grid = tuple(sorted(float(t) for t in T_grid))
    observables = observables or builtin_observables(M)
    Tmax = T_grid[-1]
    table = table or enumerate_periodic_orbits(M, Tmax + window)
    averages = {}
    recs = [r for r in table if r.period <= Tmax + window + 1e-12]
    for ob in observables:
        averages[ob.name] = np.array([orbit_average(M, r, ob) for r in recs])
    periods = np.array([r.period for r in recs])
    if not np.any(periods <= T_grid[0] + 1e-12):
        raise ValueError(f"no closed orbit of period <= {T_grid[0]}")
    values = {}
    for ob in observables:
        a = averages[ob.name]
        values[ob.name] = [float(a[periods <= T + 1e-12].mean()) for T in T_grid]
    hat = {}
    sel = np.abs(periods - Tmax) <= window + 1e-12
    for ob in observables:
        hat[ob.name] = float(averages[ob.name][sel].mean())
    liou = {ob.name: liouville_average(M, ob, *liouville_cells) for ob in observables}
    return MMEReport(T_grid, values, liou, hat, window)


# ---------------------------------------------------------------- Ruelle

@dataclass(frozen=True)
class RuelleResult:
    h_surrogate: float
    lambda_integral: float
    verdict: bool
    per_atom: tuple = ()


def orbit_lyapunov(M, record, tol=DEFAULT_TOL) -> float:
    """``(1/l) log dphi_growth`` over one period."""
    return math.log(dphi_growth(M, record.initial, record.period, tol)) / record.period


def ruelle_check(mu: OrbitMeasure, M, h_surrogate=None, T_grid=None, tol=0.05) -> RuelleResult:
    """``h <= lambda(mu) + tol`` for an orbit measure.

    Single-orbit measures have entropy 0. Otherwise ``h_surrogate`` defaults
    to the periodic growth rate of the supporting table over ``T_grid``.
    """
    lams = tuple(orbit_lyapunov(M, r) for r, _ in mu.atoms)
    lam = float(sum(w * l for (_, w), l in zip(mu.atoms, lams)))
    if h_surrogate is None:
        if len(mu.atoms) == 1:
            h_surrogate = 0.0
        else:
            table = mu.source_table if mu.source_table is not None else [r for r, _ in mu.atoms]
            top = mu.T if math.isfinite(mu.T) else max(r.period for r, _ in mu.atoms)
            shortest = min(r.period for r in table)
            grid = T_grid or [t for t in np.arange(math.ceil(top) - 4, math.floor(top) + 1)
                              if t >= shortest]
            h_surrogate = growth_rate_per(table, grid)
    return RuelleResult(float(h_surrogate), lam, bool(h_surrogate <= lam + tol), lams)


# ---------------------------------------------------------------- class entropy

@dataclass(frozen=True)
class ClassEntropyResult:
    n_grid: tuple
    eps: float
    sizes: tuple
    verdict: bool


def spanning_size(M, states, n, eps, dt=0.1, tol=DEFAULT_TOL) -> int:
    """Greedy ``(n, eps)``-spanning subset size of a finite member set."""
    states = as_states(states)
    times = np.arange(0.0, n + dt / 2, dt)
    orb = flow_samples(M, states, times, tol).transpose(1, 0, 2)
    D = np.zeros((len(states), len(states)))
    for i in range(len(states)):
        D[i] = sasaki_arrays(M, orb[i][None, :, :], orb).max(axis=1)
    uncovered = np.ones(len(states), bool)
    count = 0
    while uncovered.any():
        i = int(np.argmax(uncovered))
        uncovered &= ~(D[i] <= eps)
        count += 1
    return count


def class_entropy_check(M, cls, n_grid=(1, 5, 10, 20), eps=0.05, n_members=101,
                        tol=DEFAULT_TOL) -> ClassEntropyResult:
    """Spanning counts of the class cross-section are constant in ``n``."""
    from .strips import transversal_states

    strip = cls.members
    if strip.trivial:
        states = as_states(cls.representative)
    else:
        states = transversal_states(M, strip.base, np.linspace(strip.offsets[0], strip.offsets[-1],
                                                               n_members))
    sizes = tuple(spanning_size(M, states, n, eps, tol=tol) for n in n_grid)
    return ClassEntropyResult(tuple(n_grid), float(eps), sizes, len(set(sizes)) == 1)
