"""``flatstrip`` command-line workbench.

Each subcommand reads a flat key-value config, writes CSV or JSON data
files into ``--out`` and finishes with ``manifest.json``. Data files depend
only on the config (seed included); timings live in the manifest only.

Exit codes: 0 ok, 2 config error, 3 budget exhausted, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
import warnings
from importlib import metadata

import numpy as np

from ._budget import Budget
from .asymptotic import busemann
from .config import ExperimentConfig
from .ergodic import (OrbitMeasure, ball_sampler, bundle_sampler, class_entropy_check,
                      constant_observable, count_separated, entropy_estimate,
                      growth_rate_report, make_rng, mme_diagnostics, nu_T,
                      orbit_measure_integrate, ruelle_check, strip_boundary_measure)
from .errors import BudgetExhausted, ConfigError, FlatStripError
from .flow import JacobiState, flow_samples, geodesic_flow, jacobi_evolve, rank_classify
from .hyperbolic import side_pairing_residuals
from .shadowing import (close_periodic, enumerate_periodic_orbits, make_pseudo_orbit,
                        shadow_search, skeleton)
from .strips import _busemann_exact, detect_strip, expansivity_probe, quotient_class
from .surfaces import Collar, ConstantNegative, UnitTangent

SUBCOMMANDS = ("flow", "jacobi", "busemann", "strips", "quotient", "shadow", "periodic",
               "entropy", "mme", "checks")
EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_NUMERIC = 0, 2, 3, 4


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def fmt(v):
    """Shortest round-trip text for numbers; plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


class Run:
    """Output directory, format, budget and the per-subcommand random stream."""

    def __init__(self, sub, cfg: ExperimentConfig, out, fmt_="csv", budget=None):
        self.sub = sub
        self.cfg = cfg
        self.out = out
        self.format = fmt_
        self.budget = Budget(seconds=budget)
        self.files = []
        self.partial = False
        self.rng = make_rng(cfg.seed, (SUBCOMMANDS.index(sub),))
        os.makedirs(out, exist_ok=True)

    def _write(self, name, text):
        path = os.path.join(self.out, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.files.append(name)

    def table(self, name, header, rows):
        if self.format == "json":
            recs = [dict(zip(header, (_jsonable(v) for v in r))) for r in rows]
            self._write(name + ".json", json.dumps(recs, indent=1, sort_keys=True) + "\n")
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
        self._write(name + ".csv", buf.getvalue())

    def record(self, name, obj):
        self._write(name + ".json", json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n")

    def seed_int(self):
        return int(self.rng.integers(0, 2 ** 62))

    def check_budget(self, what):
        if self.budget.exhausted:
            self.partial = True
            raise BudgetExhausted(f"budget exhausted during {what}")

    def manifest(self, status, wall, message=""):
        files = []
        for name in self.files:
            with open(os.path.join(self.out, name), "rb") as fh:
                files.append({"name": name, "sha256": hashlib.sha256(fh.read()).hexdigest()})
        man = {"subcommand": self.sub, "config_hash": self.cfg.hash, "seed": self.cfg.seed,
               "code_version": _version(), "wall_time": round(wall, 3),
               "budget": self.budget.summary(), "status": status, "partial": self.partial,
               "message": message, "outputs": files,
               "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")}
        with open(os.path.join(self.out, "manifest.json"), "w") as fh:
            json.dump(man, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return man


# ---------------------------------------------------------------- helpers

def random_states(M, rng, n):
    """Seeded tangents: Liouville on the octagon, or a box around the collar band."""
    if n <= 0:
        return np.zeros((0, 3))
    if isinstance(M, ConstantNegative):
        return bundle_sampler(M, int(rng.integers(0, 2 ** 62))).draw(n)
    p = M.profile
    R = p.w / 2 + p.s + 1.0
    return np.stack([rng.uniform(-R, R, n), rng.uniform(0, 2 * math.pi, n),
                     rng.uniform(0, 2 * math.pi, n)], axis=-1)


def _coord_names(M):
    return ("x", "y") if isinstance(M, ConstantNegative) else ("r", "phi")


def _needs_constant(M, sub):
    if not isinstance(M, ConstantNegative):
        raise ConfigError(f"subcommand {sub!r} needs model.kind = constant")


def _tol(cfg, sub):
    return cfg.get_float(f"{sub}.tol", 1e-9)


# ---------------------------------------------------------------- subcommands

def cmd_flow(run: Run, M):
    cfg = run.cfg
    n = cfg.get_int("flow.n", 4)
    T = cfg.get_float("flow.T", 10.0)
    k = cfg.get_int("flow.n_samples", 101)
    tol = _tol(cfg, "flow")
    states = random_states(M, run.rng, n)
    times = np.linspace(0.0, T, k)
    rows = []
    for i, s in enumerate(states):
        run.check_budget("flow")
        S = flow_samples(M, s[None, :], times, tol)[:, 0, :]
        rows += [(i, t, *x) for t, x in zip(times, S)]
    u, v = _coord_names(M)
    run.table("trajectories", ["orbit", "t", u, v, "angle"], rows)


def cmd_jacobi(run: Run, M):
    cfg = run.cfg
    n = cfg.get_int("jacobi.n", 4)
    T = cfg.get_float("jacobi.T", 20.0)
    states = random_states(M, run.rng, n)
    if isinstance(M, Collar):
        states = np.vstack([M.band_circle().as_array(), states])
    rows = []
    for i, s in enumerate(states):
        run.check_budget("jacobi")
        lab = rank_classify(M, UnitTangent.from_array(M, s), T)
        rows.append((i, *s, lab.lyapunov, lab.label, lab.min_abs_K, lab.max_abs_K))
    u, v = _coord_names(M)
    run.table("rank", ["idx", u, v, "angle", "lyapunov", "label", "min_abs_K", "max_abs_K"], rows)
    J = jacobi_evolve(M, UnitTangent.from_array(M, states[0]), 1.0, JacobiState(0.0, 1.0))
    run.record("jacobi_unit", {"T": 1.0, "J": J.J, "Jp": J.Jp, "initial": states[0]})


def cmd_busemann(run: Run, M):
    _needs_constant(M, "busemann")
    cfg = run.cfg
    n = cfg.get_int("busemann.n", 6)
    T = cfg.get_float("busemann.T", 20.0)
    states = random_states(M, run.rng, n)
    pts = random_states(M, run.rng, n)
    rows = []
    for i, (s, p) in enumerate(zip(states, pts)):
        run.check_budget("busemann")
        z = complex(p[0], p[1])
        b = busemann(M, UnitTangent.from_array(M, s), z, T)
        rows.append((i, *s, p[0], p[1], b.value, _busemann_exact(M, s, z), b.error_bound))
    run.table("busemann", ["idx", "x", "y", "angle", "px", "py", "value", "exact",
                           "error_bound"], rows)


def cmd_strips(run: Run, M):
    cfg = run.cfg
    n = cfg.get_int("strips.n", 2)
    step = cfg.get_float("strips.step", 1e-3)
    T = cfg.get_float("strips.T", 1500.0)
    Q = cfg.get_float("strips.Q", 1.0)
    states = random_states(M, run.rng, n)
    if isinstance(M, Collar):
        states = np.vstack([M.band_circle().as_array(), states])
    rows = []
    for i, s in enumerate(states):
        run.check_budget("strips")
        st = detect_strip(M, s, scan=(Q, step), T=T)
        rows.append((i, *s, st.lo, st.hi, st.width, st.uncertainty, st.indeterminate))
    u, v = _coord_names(M)
    run.table("strips", ["idx", u, v, "angle", "lo", "hi", "width", "uncertainty",
                         "indeterminate"], rows)


def cmd_quotient(run: Run, M):
    cfg = run.cfg
    n = cfg.get_int("quotient.n", 2)
    eps = cfg.get_float("quotient.eps", 0.2)
    T = cfg.get_float("quotient.T", 20.0)
    states = random_states(M, run.rng, n)
    if isinstance(M, Collar):
        states = np.vstack([M.band_circle().as_array(), states])
    classes = []
    for s in states:
        run.check_budget("quotient classes")
        classes.append(quotient_class(M, s, scan=(1.0, 1e-2), T=300.0).to_record())
    run.record("classes", classes)
    if isinstance(M, Collar):
        # pairs of band circles at different heights plus one transversal pair
        h = M.band_halfwidth
        offs = np.linspace(-0.8 * h, 0.8 * h, 4)
        band = [M.band_circle(r).as_array() for r in offs]
        pairs = [(band[i], band[j]) for i in range(len(band)) for j in range(i + 1, len(band))]
    else:
        base = random_states(M, run.rng, 3)
        pairs = [(b, b + [0.0, 0.0, 0.05]) for b in base]
    reports = {}
    for flow in ("original", "quotient"):
        rep = expansivity_probe(M, flow, eps, pairs, T=T, budget=run.budget)
        reports[flow] = rep.to_record()
        if rep.partial:
            run.partial = True
    run.record("expansivity", reports)
    if run.partial:
        raise BudgetExhausted("budget exhausted during expansivity probe")


def cmd_shadow(run: Run, M):
    _needs_constant(M, "shadow")
    cfg = run.cfg
    n = cfg.get_int("shadow.skeletons", 3)
    deltas = cfg.get_floats("shadow.deltas", (0.08, 0.04, 0.02))
    k = cfg.get_int("shadow.segments", 3)
    dur = cfg.get_float("shadow.duration", 5.0)
    starts = random_states(M, run.rng, n)
    signs = run.rng.choice([-1.0, 1.0], size=(n, k))
    rows = []
    for i in range(n):
        for d in deltas:
            run.check_budget("shadow")
            po = skeleton(M, starts[i], d, k, dur, signs[i])
            res = shadow_search(M, po, budget=run.budget)
            rows.append((i, d, po.delta_actual, res.eps_achieved, res.reparam_dev))
    run.table("shadowing", ["skeleton", "delta", "delta_actual", "eps_achieved",
                            "reparam_dev"], rows)


def cmd_periodic(run: Run, M):
    _needs_constant(M, "periodic")
    cfg = run.cfg
    T = cfg.get_float("periodic.T", 8.0)
    grid = cfg.get_floats("periodic.T_grid", [t for t in range(4, int(T) + 1)])
    table = enumerate_periodic_orbits(M, T)
    rows = [(r.word, r.period, *r.initial.as_array(), r.primitive) for r in table]
    run.table("periodic", ["word", "period", "x", "y", "angle", "primitive"], rows)
    crow = []
    for j in range(len(grid)):
        sub = grid[: j + 1]
        count = table.count(grid[j])
        if j == 0:
            crow.append((grid[j], count, math.log(count), math.nan, math.nan))
        else:
            rep = growth_rate_report(table, sub)
            crow.append((grid[j], count, math.log(count), rep.slope, rep.corrected_slope))
    run.table("periodic_counts", ["T", "count", "log_count", "slope", "corrected_slope"], crow)


def cmd_entropy(run: Run, M):
    _needs_constant(M, "entropy")
    cfg = run.cfg
    T_grid = cfg.get_floats("entropy.T_grid", (2, 4, 6))
    eps_list = cfg.get_floats("entropy.eps", (0.1,))
    step = cfg.get_float("entropy.step", 0.1)
    ncand = cfg.get_int("entropy.candidates", 4000)
    radius = cfg.get_float("entropy.radius", 0.05)
    Z = ball_sampler(M, radius=radius, seed=run.seed_int())
    counts, rows = [], []
    for eps in eps_list:
        for T in T_grid:
            c = count_separated(M, Z, T, eps, budget=run.budget, step=step, n_candidates=ncand)
            counts.append(c)
            rows.append((T, eps, c.M, c.step, c.candidates, c.budget_exhausted))
            if c.budget_exhausted:
                run.partial = True
    run.table("separated_counts", ["T", "eps", "M", "step", "candidates",
                                   "budget_exhausted"], rows)
    if run.partial:
        raise BudgetExhausted("budget exhausted during separated-set counting")
    est = entropy_estimate(counts)
    run.record("entropy", {**est.to_record(), "sampler": Z.descriptor})


def cmd_mme(run: Run, M):
    _needs_constant(M, "mme")
    cfg = run.cfg
    T_grid = cfg.get_floats("mme.T_grid", (4, 6, 8))
    window = cfg.get_float("mme.window", 0.5)
    cells = cfg.get_int("mme.cells", 1000)
    rep = mme_diagnostics(M, T_grid, window=window, liouville_cells=(cells, cells))
    run.table("mme", ["T", "observable", "value", "difference"],
              [(T, name, v, "" if math.isnan(d) else d) for T, name, v, d in rep.rows()])
    run.record("mme_report", rep.to_record())


def _checks(run: Run, M):
    """Lightweight invariant suite; returns rows ``(name, value, passed)``."""
    out = []

    def add(name, value, ok):
        out.append((name, value, bool(ok)))
        run.check_budget(f"checks ({name})")

    C = ConstantNegative()
    add("side_pairing_residual", max(side_pairing_residuals(C.group)),
        max(side_pairing_residuals(C.group)) < 1e-10)
    J = jacobi_evolve(C, C.tangent(0.0, 1.0, math.pi / 2), 1.0, JacobiState(0.0, 1.0))
    err = max(abs(J.J - math.sinh(1)), abs(J.Jp - math.cosh(1)))
    add("jacobi_closed_form", err, err < 1e-8)
    th = C.tangent(0.3, 1.1, 0.4)
    lab = rank_classify(C, th, 20.0)
    add("constant_lyapunov", lab.lyapunov, abs(lab.lyapunov - 1) < 1e-3)
    y = geodesic_flow(C, C.tangent(0.0, 1.0, math.pi / 2), 2.0)
    b = busemann(C, C.tangent(0.0, 1.0, math.pi / 2), complex(y.base.x, y.base.y), 20.0)
    add("busemann_cocycle", b.value, abs(b.value + 2.0) < 1e-6)
    table = enumerate_periodic_orbits(C, 7.0)
    counts = [table.count(t) for t in (4, 5, 6, 7)]
    add("periodic_counts_increasing", counts[-1], all(np.diff(counts) > 0))
    mu = nu_T(C, table, 6.0)
    one = orbit_measure_integrate(mu, constant_observable(1.0))
    add("measure_normalised", one, abs(one - 1) < 1e-12)
    r = ruelle_check(OrbitMeasure([(table[0], 1.0)], "single", C), C)
    add("ruelle_single_orbit", r.lambda_integral, r.verdict)
    po = make_pseudo_orbit(C, [(th, 3.0), (geodesic_flow(C, th, 3.0), 3.0)], 0.01)
    sh = shadow_search(C, po)
    add("shadow_unperturbed", sh.eps_achieved, sh.eps_achieved < 1e-8)
    if isinstance(M, Collar):
        band = M.band_circle()
        lab = rank_classify(M, band, 20.0)
        add("band_rank_higher", lab.lyapunov, lab.label == "Higher" and abs(lab.lyapunov) < 1e-3)
        po = make_pseudo_orbit(M, [(band, M.band_period())], 0.01, periodic=True)
        rec = close_periodic(M, po)
        add("band_closing_period", rec.period, abs(rec.period - M.band_period()) < 1e-8)
        cls = quotient_class(M, band, scan=(1.0, 1e-2), T=300.0)
        add("band_strip_width", cls.members.width, abs(cls.members.width - M.profile.w) < 2e-2)
        ce = class_entropy_check(M, cls, (1, 5, 10), 0.05, n_members=21)
        add("band_class_entropy_zero", ce.sizes[-1], ce.verdict)
        rr = ruelle_check(strip_boundary_measure(M, cls), M)
        add("band_ruelle_equality", rr.lambda_integral,
            rr.h_surrogate == 0 and abs(rr.lambda_integral) < 1e-3)
    return out


def cmd_checks(run: Run, M):
    rows = _checks(run, M)
    run.table("checks", ["check", "value", "passed"], rows)
    failed = [r[0] for r in rows if not r[2]]
    if failed:
        raise _NumericFailure("failed checks: " + ", ".join(failed))


class _NumericFailure(FlatStripError):
    pass


COMMANDS = {"flow": cmd_flow, "jacobi": cmd_jacobi, "busemann": cmd_busemann,
            "strips": cmd_strips, "quotient": cmd_quotient, "shadow": cmd_shadow,
            "periodic": cmd_periodic, "entropy": cmd_entropy, "mme": cmd_mme,
            "checks": cmd_checks}


# ---------------------------------------------------------------- entry point

def build_parser():
    p = argparse.ArgumentParser(prog="flatstrip", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", help="output directory (default: out/<subcommand>)")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--budget", type=float, help="wall-time budget in seconds")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def run(subcommand, cfg: ExperimentConfig, out, fmt_="csv", budget=None) -> int:
    """Execute one subcommand; always writes a manifest. Returns the exit status."""
    r = Run(subcommand, cfg, out, fmt_, budget)
    t0 = time.monotonic()
    status, msg = EXIT_OK, ""
    try:
        M = cfg.model() if "model.kind" in cfg.values else ConstantNegative()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            COMMANDS[subcommand](r, M)
    except ConfigError as e:
        status, msg = EXIT_CONFIG, str(e)
    except BudgetExhausted as e:
        r.partial = True
        status, msg = EXIT_BUDGET, str(e)
    except (FlatStripError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        status, msg = EXIT_NUMERIC, f"{type(e).__name__}: {e}"
    r.manifest(status, time.monotonic() - t0, msg)
    if msg:
        print(f"flatstrip {subcommand}: {msg}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig({})
        cfg = cfg.with_overrides(seed=args.seed, budget=args.budget)
        budget = args.budget if args.budget is not None else (
            cfg.get_float("budget") if "budget" in cfg.values else None)
    except ConfigError as e:
        print(f"flatstrip: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.get("out") or os.path.join("out", args.subcommand)
    return run(args.subcommand, cfg, out, args.format, budget)


if __name__ == "__main__":
    sys.exit(main())
