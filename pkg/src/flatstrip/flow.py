"""Geodesic flow, Jacobi fields, unstable slopes and Lyapunov exponents.

On the constant model the flow is exact: every unit tangent is the image of
the upward vector at ``i`` under a unique isometry ``M_theta``, and the orbit
is ``M_theta(i e^t)``. On the collar the geodesic equations

    r' = cos a,   phi' = sin a / f(r),   a' = -(f'/f)(r) sin a

are integrated with scipy's Dormand-Prince 5(4) pair. The angle
parametrisation keeps the speed identically 1, so no renormalisation drift
can occur.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ._budget import as_budget
from .errors import IntegrationError, RiccatiBlowUpError, UnsupportedModelError
from .surfaces import Collar, ConstantNegative, UnitTangent, as_states

DEFAULT_TOL = 1e-9
CHUNK = 250.0


# ---------------------------------------------------------------- constant model

def frame_matrices(states) -> np.ndarray:
    """``M_theta`` with ``M_theta(i) = base`` and ``dM_theta(up) = theta``."""
    s = np.atleast_2d(np.asarray(states, dtype=float))
    x, y, a = s[:, 0], s[:, 1], s[:, 2]
    sy = np.sqrt(y)
    half = 0.5 * (a - 0.5 * math.pi)
    co, si = np.cos(half), np.sin(half)
    out = np.empty((len(s), 2, 2))
    out[:, 0, 0] = sy * co - x / sy * si
    out[:, 0, 1] = sy * si + x / sy * co
    out[:, 1, 0] = -si / sy
    out[:, 1, 1] = co / sy
    return out


def _constant_flow(states, t):
    """Exact flow; ``t`` broadcasts against the leading axis of ``states``."""
    s = np.atleast_2d(np.asarray(states, dtype=float))
    m = frame_matrices(s)
    t = np.asarray(t, dtype=float)
    a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    w = 1j * np.exp(t)
    den = c * w + d
    z = (a * w + b) / den
    ang = np.mod(0.5 * math.pi - 2.0 * np.angle(den), 2 * math.pi)
    return np.stack(np.broadcast_arrays(z.real, z.imag, ang), axis=-1)


def endpoints_constant(states):
    """(backward, forward) ideal endpoints; ``inf`` for the point at infinity."""
    m = frame_matrices(states)
    a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    with np.errstate(divide="ignore"):
        fwd = np.where(np.abs(c) > 1e-300, a / np.where(c == 0, 1, c), np.inf)
        bwd = np.where(np.abs(d) > 1e-300, b / np.where(d == 0, 1, d), np.inf)
    return bwd, fwd


# ---------------------------------------------------------------- collar model

def _collar_rhs(prof):
    def rhs(_t, y):
        n = y.size // 3
        r, a = y[:n], y[2 * n:]
        inv_f = np.exp(-prof.log_f(r))
        return np.concatenate([np.cos(a), np.sin(a) * inv_f, -prof.df_over_f(r) * np.sin(a)])
    return rhs


def _collar_aug_rhs(prof, extra):
    """Geodesic equations for one orbit plus scalar equations driven by K."""
    def rhs(t, y):
        r, _, a = y[0], y[1], y[2]
        k = float(prof.curvature(r))
        inv_f = math.exp(-float(prof.log_f(r)))
        geo = [math.cos(a), math.sin(a) * inv_f, -float(prof.df_over_f(r)) * math.sin(a)]
        return geo + extra(k, y[3:])
    return rhs


def _integrate(rhs, y0, t_end, tol, t_eval=None, budget=None, max_step=np.inf):
    """solve_ivp in chunks; returns (t, Y) with Y shape (len(t), dim)."""
    budget = as_budget(budget)
    y0 = np.asarray(y0, dtype=float)
    if t_end == 0:
        return np.array([0.0]), y0[None, :]
    sgn = 1.0 if t_end > 0 else -1.0
    chunk = max(CHUNK, abs(t_end) / 16)
    ts, ys = [np.array([0.0])], [y0[None, :]]
    t0, y = 0.0, y0
    while sgn * (t_end - t0) > 0:
        t1 = t0 + sgn * min(chunk, abs(t_end - t0))
        if t_eval is not None:
            sel = t_eval[(sgn * (t_eval - t0) > 0) & (sgn * (t_eval - t1) <= 0)]
            ev = np.unique(np.concatenate([sel, [t1]]))
            if sgn < 0:
                ev = ev[::-1]
        else:
            ev = None
        sol = solve_ivp(rhs, (t0, t1), y, method="RK45", rtol=tol, atol=tol,
                        t_eval=ev, max_step=max_step)
        if sol.status != 0:
            partial = (np.concatenate(ts + [sol.t]),
                       np.concatenate(ys + [sol.y.T]) if sol.y.size else np.concatenate(ys))
            raise IntegrationError(f"integration failed at t={sol.t[-1] if sol.t.size else t0}: "
                                   f"{sol.message}", partial=partial)
        if t_eval is not None:
            keep = np.isin(sol.t, sel)
            ts.append(sol.t[keep])
            ys.append(sol.y.T[keep])
        else:
            ts.append(sol.t[1:])
            ys.append(sol.y.T[1:])
        t0, y = t1, sol.y[:, -1]
        if budget.exhausted:
            raise IntegrationError("time budget exhausted", partial=(np.concatenate(ts), np.concatenate(ys)))
    t = np.concatenate(ts)
    Y = np.concatenate(ys)
    if t_eval is None or t_end in t_eval:
        if t[-1] != t_end:
            t = np.append(t, t_end)
            Y = np.vstack([Y, y])
    return t, Y


def _collar_flow(M: Collar, states, t, tol, budget=None):
    s = np.atleast_2d(np.asarray(states, dtype=float))
    n = len(s)
    y0 = np.concatenate([s[:, 0], s[:, 1], s[:, 2]])
    _, Y = _integrate(_collar_rhs(M.profile), y0, float(t), tol, budget=budget)
    y = Y[-1]
    out = np.stack([y[:n], np.mod(y[n:2 * n], 2 * math.pi), np.mod(y[2 * n:], 2 * math.pi)], axis=-1)
    return out


def flow_states(M, states, t, tol=DEFAULT_TOL, budget=None):
    """Flow an ``(n, 3)`` state array by a common time ``t``."""
    if isinstance(M, ConstantNegative):
        return _constant_flow(states, t)
    if isinstance(M, Collar):
        return _collar_flow(M, states, t, tol, budget)
    raise UnsupportedModelError(type(M).__name__)


def flow_samples(M, states, times, tol=DEFAULT_TOL, budget=None):
    """States at each of ``times`` (any order, may be negative).

    Returns an array of shape ``(len(times), n, 3)``.
    """
    s = np.atleast_2d(np.asarray(states, dtype=float))
    times = np.asarray(times, dtype=float)
    if isinstance(M, ConstantNegative):
        return _constant_flow(s[None, :, :].repeat(len(times), 0).reshape(-1, 3),
                              np.repeat(times, len(s))).reshape(len(times), len(s), 3)
    if not isinstance(M, Collar):
        raise UnsupportedModelError(type(M).__name__)
    n = len(s)
    out = np.empty((len(times), n, 3))
    y0 = np.concatenate([s[:, 0], s[:, 1], s[:, 2]])
    rhs = _collar_rhs(M.profile)
    for sgn in (1.0, -1.0):
        mask = (times > 0) if sgn > 0 else (times < 0)
        if not mask.any():
            continue
        tv = np.unique(times[mask])
        t, Y = _integrate(rhs, y0, float(tv[-1] if sgn > 0 else tv[0]), tol,
                          t_eval=tv, budget=budget)
        lookup = dict(zip(t.tolist(), Y))
        for k in np.nonzero(mask)[0]:
            y = lookup[float(times[k])]
            out[k] = np.stack([y[:n], y[n:2 * n], y[2 * n:]], axis=-1)
    zero = times == 0
    out[zero] = s
    out[..., 1] = np.mod(out[..., 1], 2 * math.pi)
    out[..., 2] = np.mod(out[..., 2], 2 * math.pi)
    return out


# ---------------------------------------------------------------- trajectories

@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    model: object = field(repr=False)
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 3)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def samples(self):
        return [(float(t), UnitTangent.from_array(self.model, s))
                for t, s in zip(self.times, self.states)]

    def __len__(self):
        return len(self.times)

    def speed_residual(self) -> float:
        """Max deviation of the chart velocity's g-norm from 1."""
        s = self.states
        if isinstance(self.model, ConstantNegative):
            # dx/dt = y cos a, dy/dt = y sin a; g-norm divides by y
            vx, vy = s[:, 1] * np.cos(s[:, 2]), s[:, 1] * np.sin(s[:, 2])
            norm = np.hypot(vx, vy) / s[:, 1]
        else:
            f = self.model.profile.f(s[:, 0])
            dr, dphi = np.cos(s[:, 2]), np.sin(s[:, 2]) / f
            norm = np.hypot(dr, f * dphi)
        return float(np.max(np.abs(norm - 1.0)))

    def header(self):
        return ["t", "x", "y", "angle"] if isinstance(self.model, ConstantNegative) \
            else ["t", "r", "phi", "angle"]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for t, s in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in s])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def geodesic_flow(M, theta: UnitTangent, t: float, tol: float = DEFAULT_TOL,
                  trajectory=False, n_samples=201, budget=None):
    """Flow ``theta`` for time ``t``.

    With ``trajectory=True`` also return a :class:`Trajectory` sampled on
    ``n_samples`` equally spaced times between 0 and ``t``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    s = as_states(theta)
    end = UnitTangent.from_array(M, flow_states(M, s, t, tol, budget)[0])
    if not trajectory:
        return end
    times = np.linspace(min(0.0, t), max(0.0, t), n_samples) if t != 0 else np.array([0.0])
    states = flow_samples(M, s, times, tol, budget)[:, 0, :]
    return end, Trajectory(times, states, M, tol)


# ---------------------------------------------------------------- Jacobi fields

@dataclass(frozen=True)
class JacobiState:
    J: float
    Jp: float

    @property
    def norm(self) -> float:
        return math.hypot(self.J, self.Jp)


def _jacobi_extra(k, y):
    return [y[1], -k * y[0]]


def jacobi_evolve(M, theta: UnitTangent, T: float, init: JacobiState,
                  tol: float = DEFAULT_TOL) -> JacobiState:
    """Solve ``J'' + K(gamma(t)) J = 0`` along the geodesic of ``theta``."""
    if not math.isfinite(T):
        raise ValueError("T must be finite")
    if isinstance(M, ConstantNegative):
        ch, sh = math.cosh(T), math.sinh(T)
        return JacobiState(init.J * ch + init.Jp * sh, init.J * sh + init.Jp * ch)
    if not isinstance(M, Collar):
        raise UnsupportedModelError(type(M).__name__)
    s = as_states(theta)[0]
    y0 = np.concatenate([s, [init.J, init.Jp]])
    _, Y = _integrate(_collar_aug_rhs(M.profile, _jacobi_extra), y0, float(T), tol)
    return JacobiState(float(Y[-1, 3]), float(Y[-1, 4]))


def jacobi_profile(M, theta, times, init: JacobiState, tol=DEFAULT_TOL):
    """``J`` and ``J'`` sampled at increasing nonnegative ``times``."""
    times = np.asarray(times, dtype=float)
    if isinstance(M, ConstantNegative):
        ch, sh = np.cosh(times), np.sinh(times)
        return init.J * ch + init.Jp * sh, init.J * sh + init.Jp * ch
    s = as_states(theta)[0]
    y0 = np.concatenate([s, [init.J, init.Jp]])
    t, Y = _integrate(_collar_aug_rhs(M.profile, _jacobi_extra), y0, float(times[-1]), tol,
                      t_eval=times[times > 0])
    J = np.interp(times, t, Y[:, 3])
    Jp = np.interp(times, t, Y[:, 4])
    return J, Jp


# ---------------------------------------------------------------- Riccati / unstable bundle

@dataclass(frozen=True)
class SlopeResult:
    u: float
    T_back: float
    change: float
    converged: bool


def _riccati_extra(k, y):
    return [-k - y[0] * y[0]]


def _riccati_once(M, s, T_back, tol, u0=1.0):
    if isinstance(M, ConstantNegative):
        # u' = 1 - u^2 has the closed form u = tanh(t + atanh u0) for |u0| < 1
        if u0 == 1.0:
            return 1.0
        if abs(u0) < 1:
            return math.tanh(T_back + math.atanh(u0))
        return 1.0 / math.tanh(T_back + math.atanh(1.0 / u0))
    start = flow_states(M, s[None, :], -T_back, tol)[0]
    y0 = np.concatenate([start, [u0]])
    try:
        _, Y = _integrate(_collar_aug_rhs(M.profile, _riccati_extra), y0, T_back, tol)
    except IntegrationError as e:
        raise RiccatiBlowUpError(f"Riccati integration failed: {e}") from e
    u = float(Y[-1, 3])
    if not math.isfinite(u) or u < -1e6:
        raise RiccatiBlowUpError("Riccati solution diverged (Jacobi field vanished)")
    return u


def riccati_slope(M, theta, T_back=20.0, tol=DEFAULT_TOL, conv_tol=1e-7,
                  T_cap=1e7, u0=1.0) -> SlopeResult:
    """Unstable slope ``u = J'/J`` at ``theta`` with a convergence diagnostic.

    Integrates ``u' = -K - u^2`` from ``-T_back`` (initial value ``u0``) to 0,
    doubling ``T_back`` until successive values differ by less than
    ``conv_tol`` or ``T_cap`` is reached.
    """
    if not T_back > 0:
        raise ValueError("T_back must be positive")
    s = as_states(theta)[0]
    u_prev = None
    T = float(T_back)
    blowups = 0
    while True:
        try:
            u = _riccati_once(M, s, T, tol, u0)
        except RiccatiBlowUpError:
            blowups += 1
            if 2 * T > T_cap:
                raise
            T *= 2
            continue
        if conv_tol is None:
            return SlopeResult(u, T, math.nan, False)
        if u_prev is not None:
            change = abs(u - u_prev)
            if change < conv_tol:
                return SlopeResult(u, T, change, True)
            if 2 * T > T_cap:
                return SlopeResult(u, T, change, False)
        u_prev = u
        T *= 2


def unstable_slope(M, theta, T_back=20.0, tol=DEFAULT_TOL, conv_tol=None) -> float:
    """``u(0)`` of the Riccati equation started with slope 1 at ``-T_back``."""
    return riccati_slope(M, theta, T_back, tol, conv_tol).u


def dphi_growth(M, theta, T, tol=DEFAULT_TOL, slope=None) -> float:
    """``|(J, J')(T)|`` for the unit unstable initial condition ``(1, u)/|(1, u)|``."""
    if not T > 0:
        raise ValueError("T must be positive")
    u = riccati_slope(M, theta, tol=tol).u if slope is None else slope
    n0 = math.hypot(1.0, u)
    return jacobi_evolve(M, theta, T, JacobiState(1.0 / n0, u / n0), tol).norm


def lyapunov_exponent(M, theta, T, tol=DEFAULT_TOL) -> float:
    """Finite-time estimate ``log(dphi_growth) / T``."""
    return math.log(dphi_growth(M, theta, T, tol)) / T


# ---------------------------------------------------------------- rank

@dataclass(frozen=True)
class RankLabel:
    label: str
    min_abs_K: float
    max_abs_K: float
    lyapunov: float
    tol: float

    @property
    def evidence(self):
        return (self.min_abs_K, self.lyapunov)


def curvature_along(M, theta, T, tol=DEFAULT_TOL, step=0.02):
    """Curvature sampled along the orbit on [-T, T]."""
    n = int(math.ceil(2 * T / step)) + 1
    times = np.linspace(-T, T, n)
    samples = flow_samples(M, as_states(theta), times, tol)[:, 0, :]
    return times, M.curvature(samples), samples


def rank_classify(M, theta, T, tol=None, lyap_T=None) -> RankLabel:
    """``Higher`` iff the sampled curvature vanishes along ``[-T, T]``."""
    if not T > 0:
        raise ValueError("T must be positive")
    _, K, samples = curvature_along(M, theta, T)
    absK = np.abs(K)
    if tol is None:
        in_band = isinstance(M, Collar) and np.all(np.abs(samples[:, 0]) <= M.band_halfwidth)
        tol = 1e-9 if in_band else 1e-6
    lam = lyapunov_exponent(M, theta, lyap_T or T)
    label = "Higher" if absK.max() < tol else "RankOne"
    return RankLabel(label, float(absK.min()), float(absK.max()), lam, tol)
