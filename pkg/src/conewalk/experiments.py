"""Experiment runners behind scenario files.

Each runner takes a validated :class:`~conewalk.scenario.Scenario` and a
worker count and returns an :class:`Outcome`: the text of every output file,
a JSON-ready summary, and the list of acceptance checks with their verdicts.
Runners never touch the filesystem; :func:`run_scenario` does that.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .decomposition import decompose_trajectory, residual_moment_report, v_atoms
from .errors import ConewalkError, ParseError
from .geometry import (QUADRANT, LyapunovParams, contour_axis_intercept, directional_derivative_h,
                       h_nu, in_gamma)
from .kernels import enumerate_onestep, normalize_a1_prime, site_environment, verify_assumptions
from .results import (batch_csv, fmt_coords, fmt_float, json_text, table_csv, trace_csv,
                      write_text)
from .rng import RandomStream, derive_key
from .scenario import Scenario, lyapunov_from, parse_scenario
from .simulate import (Experiment, StopRule, TruncatedLyapunov, angle_between, batch,
                       concentration_checks, empirical_conditional_drift, gamma_census_states,
                       supermartingale_census, tune_lyapunov, tuned_radius)
from .stats import chi_square_gof, quantiles, wilson_interval

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_ACCEPTANCE = 2
OUT_ENV = "CONEWALK_OUT"


@dataclass
class Check:
    name: str
    passed: bool
    observed: object
    threshold: object
    detail: str = ""


@dataclass
class Outcome:
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name, passed, observed, threshold, detail=""):
        self.checks.append(Check(name, bool(passed), observed, threshold, detail))


def _workers(sc: Scenario, workers: int | None) -> int:
    return workers if workers is not None else sc.get("run", "workers", 1)


def _x0(sc: Scenario) -> tuple:
    return tuple(sc.get("run", "x0"))


def _timed(out: Outcome, t0: float, sc: Scenario):
    elapsed = time.perf_counter() - t0
    out.summary["seconds"] = elapsed
    limit = sc.get("acceptance", "max_seconds")
    if limit is not None:
        out.check("runtime", elapsed < limit, elapsed, limit, "wall-clock seconds")


# --------------------------------------------------------------------------


def run_exit_cone(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    kernel = sc.kernel_spec()
    cone = sc.cone()
    exp = Experiment(_x0(sc), StopRule.cone_exit(cone), sc.get("run", "horizon"), label=sc.name)
    res = batch(kernel, exp, sc.get("run", "n_runs"), sc.master_seed, _workers(sc, workers))
    out = Outcome({"batch.csv": batch_csv(res)})
    out.summary = dict(res.summary, kernel=kernel.kernel_id, x0=list(exp.x0),
                       cone_axis=list(cone.axis), cone_half_angle=cone.half_angle,
                       horizon=exp.horizon)
    need = sc.get("acceptance", "min_stop_fraction")
    if need is not None:
        frac = res.summary["stop_fraction"]
        lo, hi = res.summary["censoring_wilson95"]
        out.check("stop_fraction", frac >= need, frac, need,
                  f"{res.summary['censored']} of {res.n_runs} runs censored at horizon "
                  f"{exp.horizon}; censoring Wilson95 [{lo:.4f}, {hi:.4f}]")
    _timed(out, t0, sc)
    return out


def run_direction(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    kernel = sc.kernel_spec()
    cps = tuple(sorted(sc.get("run", "checkpoints")))
    horizon = sc.get("run", "horizon", cps[-1])
    exp = Experiment(_x0(sc), StopRule.never(), horizon, cps, sc.name)
    n = sc.get("run", "n_runs")
    res = batch(kernel, exp, n, sc.master_seed, _workers(sc, workers))
    pos, mincos = res.checkpoint_states, res.checkpoint_mincos
    rows = []
    for i in range(n):
        for j, c in enumerate(cps):
            rows.append([i, c, fmt_coords(pos[i, j].astype(np.int64).tolist()), fmt_float(mincos[i, j])])
    out = Outcome({"batch.csv": batch_csv(res),
                   "directions.csv": table_csv(["run_id", "t", "coords", "min_cos_to_next"], rows)})
    medians = []
    for j in range(len(cps) - 1):
        ang = [angle_between(pos[i, j], pos[i, j + 1]) for i in range(n)
               if np.any(pos[i, j] != 0) and np.any(pos[i, j + 1] != 0)]
        medians.append(float(np.median(ang)) if ang else float("nan"))
    stay_angle = sc.get("geometry", "stay_angle", 0.2)
    stay = float(np.mean(mincos[:, -2] >= math.cos(stay_angle))) if len(cps) >= 2 else float("nan")
    factor = sc.get("geometry", "growth_factor", 10.0)
    x0n = math.sqrt(sum(v * v for v in exp.x0))
    growth = float(np.mean([r.final_norm >= factor * x0n for r in res.records]))
    out.summary = {"kernel": kernel.kernel_id, "x0": list(exp.x0), "checkpoints": list(cps),
                   "n_runs": n, "median_angle_between_checkpoints": medians,
                   "stay_angle": stay_angle, "stay_fraction": stay, "growth_factor": factor,
                   "growth_fraction": growth}
    if sc.get("acceptance", "median_decrease", False) and len(medians) >= 2:
        out.check("median_angle_decreases", medians[-1] < medians[-2], medians[-1], medians[-2],
                  f"median angle {cps[-2]}->{cps[-1]} vs {cps[-3]}->{cps[-2]}")
    need = sc.get("acceptance", "min_stay_fraction")
    if need is not None:
        out.check("stay_fraction", stay >= need, stay, need,
                  f"runs within angle {stay_angle} of their t={cps[-2]} direction through t={cps[-1]}")
    need = sc.get("acceptance", "min_growth_fraction")
    if need is not None:
        out.check("growth_fraction", growth >= need, growth, need,
                  f"final norm at least {factor} times the start norm")
    _timed(out, t0, sc)
    return out


def run_decompose(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    kernel = sc.kernel_spec()
    params = sc.assumption_params()
    n, T = sc.get("run", "n_runs"), sc.get("run", "T")
    d = kernel.dim

    def one(i):
        return decompose_trajectory(kernel, params, _x0(sc), T,
                                    RandomStream(derive_key(sc.master_seed, i, "decompose")))

    w = _workers(sc, workers)
    if w == 1:
        traces = [one(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=w) as pool:
            traces = list(pool.map(one, range(n)))
    mism = sum(tr.identity_mismatches() for tr in traces)
    excl = sum(tr.exclusivity_violations() for tr in traces)
    atoms = [tuple(a) for a in v_atoms(d, params.k)]
    cats = [(0,) * d] + atoms
    counts = dict.fromkeys(cats, 0)
    for tr in traces:
        vs, c = np.unique(tr.v, axis=0, return_counts=True)
        for v, m in zip(map(tuple, vs.tolist()), c.tolist()):
            counts[v] += m
    observed = [counts[c] for c in cats]
    probs = [1 - 2 * d * params.kappa] + [params.kappa] * (2 * d)
    gof = chi_square_gof(observed, probs)
    moments = residual_moment_report(traces, params.B0, params.n0)
    n_trace = min(n, sc.get("run", "trace_runs", 1))
    text = "".join(trace_csv(traces[i], i) if i == 0 else trace_csv(traces[i], i).split("\n", 1)[1]
                   for i in range(n_trace))
    out = Outcome({"trace.csv": text,
                   "v_counts.csv": table_csv(["v", "count", "expected_prob"],
                                             [[fmt_coords(c), m, p] for c, m, p in zip(cats, observed, probs)])})
    out.summary = {"kernel": kernel.kernel_id, "n_runs": n, "T": T, "kappa": params.kappa,
                   "identity_mismatches": mism, "exclusivity_violations": excl,
                   "v_draws": int(sum(observed)), "v_chi2": gof.statistic, "v_chi2_dof": gof.dof,
                   "v_chi2_p": gof.p_value,
                   "residual_moment_bound": moments.bound,
                   "residual_moment_bins": [[b.lo, b.hi, b.n, b.mean, b.se, b.flagged] for b in moments.bins]}
    out.check("identity", mism == 0, mism, 0, "times with xi*_t - xi*_0 != Y_t + Z_t")
    out.check("exclusivity", excl == 0, excl, 0, "steps with V and zeta both nonzero")
    p_min = sc.get("acceptance", "p_min")
    if p_min is not None:
        out.check("v_law", gof.p_value > p_min, gof.p_value, p_min,
                  f"chi-square on {sum(observed)} V draws, {gof.dof} dof")
    _timed(out, t0, sc)
    return out


def _lyapunov(sc: Scenario, kernel, out: Outcome):
    p = lyapunov_from(sc)
    n_states = sc.get("geometry", "census_states", 10**4)
    seed = derive_key(sc.master_seed, "tune")
    if p is None:
        tr = tune_lyapunov(kernel, n_states, seed)
        out.summary["tuning_tried"] = [list(t) for t in tr.tried]
        if tr.params is None:
            raise ConewalkError("grid search found no (nu, s) with a nonpositive census")
        return tr.params, tr.radius, tr.census
    radius = tuned_radius(kernel, p)
    census = supermartingale_census(kernel, p, n_states, radius,
                                    RandomStream.from_seed(seed, "census", p.nu, p.s),
                                    sc.get("geometry", "census_span", 1e4))
    return p, radius, census


def run_supermartingale(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    kernel = sc.kernel_spec()
    out = Outcome()
    p, radius, census = _lyapunov(sc, kernel, out)
    out.summary.update({"kernel": kernel.kernel_id, "nu": p.nu, "s": p.s, "radius": radius,
                        "n_states": census.n_states, "max_drift": census.max_drift,
                        "positive_states": len(census.positive)})
    out.files["positive_states.csv"] = table_csv(["state", "drift"], [list(x) for x in census.positive])
    out.check("census_nonpositive", census.passed, census.max_drift, 0.0,
              f"exact one-step drift of min(h, 1) at {census.n_states} states of the sublevel set "
              f"beyond radius {radius:g}")
    _timed(out, t0, sc)
    return out


def run_escape_bound(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    kernel = sc.kernel_spec()
    out = Outcome()
    p, radius, census = _lyapunov(sc, kernel, out)
    K = sc.get("geometry", "K")
    inner = LyapunovParams(p.nu, p.s / K)
    x0 = sc.get("run", "x0")
    if x0 is None:
        x0 = (int(math.ceil(2 * contour_axis_intercept(inner.nu, inner.s))), 0)
    x0 = tuple(x0)
    if not in_gamma(inner, x0):
        raise ConewalkError(f"start {x0} is not in the sublevel set {{h < s/K}}")
    forbidden = sc.get("geometry", "forbidden", "quadrant")
    stop = StopRule.cone_exit(QUADRANT) if forbidden == "quadrant" else StopRule.leave_gamma(p)
    n_pre = sc.get("run", "precheck_states", 1000)
    pre = gamma_census_states(p, n_pre, radius, radius * 1e4,
                              RandomStream.from_seed(sc.master_seed, "precheck"))
    g = TruncatedLyapunov(p.nu)
    est = empirical_conditional_drift(kernel, g, None, pre)
    n = sc.get("run", "n_runs")
    horizon = sc.get("run", "horizon")
    out.summary.update({"kernel": kernel.kernel_id, "nu": p.nu, "s": p.s, "K": K,
                        "x0": list(x0), "h_x0": h_nu(p.nu, x0), "forbidden": forbidden,
                        "precheck_states": n_pre, "precheck_max_drift": est.max_mean,
                        "supermartingale_bound": h_nu(p.nu, x0) / p.s, "target_bound": 1.0 / K})
    if not est.nonpositive:
        out.check("precheck", False, est.max_mean, 0.0, "supermartingale precheck failed; refusing")
        _timed(out, t0, sc)
        return out
    res = batch(kernel, Experiment(x0, stop, horizon), n, sc.master_seed, _workers(sc, workers))
    out.files["batch.csv"] = batch_csv(res)
    hits = sum(r.stopped for r in res.records)
    ci = wilson_interval(hits, n)
    slack = sc.get("acceptance", "slack", 0.02)
    out.summary.update({"hits": hits, "n_runs": n, "hit_fraction": hits / n,
                        "wilson95": [ci.lower, ci.upper], "censored": n - hits,
                        "outcomes": res.summary["outcomes"]})
    out.check("escape_bound", ci.upper <= 1.0 / K + slack, ci.upper, 1.0 / K + slack,
              f"Wilson95 upper bound on {forbidden} exits: {hits} of {n} runs")
    _timed(out, t0, sc)
    return out


def run_concentration(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    a = sc.sections["assumptions"]
    d = sc.get("kernel", "dim", 2)
    rep = concentration_checks(a["kappa"], a.get("k", 1), d, sc.get("run", "grid"),
                               sc.get("run", "n_runs"), sc.master_seed,
                               maximal_t=sc.get("run", "maximal_t"), workers=_workers(sc, workers))
    rows = [["maxbound", r.t, r.level, r.empirical, r.bound, r.sigma, r.passed] for r in rep.maxbound]
    rows += [["maximal", r.t, r.level, r.empirical, r.bound, r.sigma, r.passed] for r in rep.maximal]
    out = Outcome({"bounds.csv": table_csv(["check", "t", "level", "empirical", "bound", "sigma",
                                            "passed"], rows)})
    out.summary = {"n_runs": sc.get("run", "n_runs"), "rows": len(rows),
                   "failing_rows": [r for r in rows if not r[-1]]}
    out.check("maxbound", all(r.passed for r in rep.maxbound),
              sum(not r.passed for r in rep.maxbound), 0, "failing (t, r) rows")
    if rep.maximal:
        out.check("maximal_inequality", all(r.passed for r in rep.maximal),
                  sum(not r.passed for r in rep.maximal), 0, "failing levels")
    _timed(out, t0, sc)
    return out


def run_hit_ball(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    kernel = sc.kernel_spec()
    d = kernel.dim
    x0 = tuple(sc.get("run", "x0", (0,) * d))
    offset = sc.get("geometry", "ball_offset", (0.5,) + (0.0,) * (d - 1))
    rfac = sc.get("geometry", "ball_radius_factor", 0.25)
    ofac = sc.get("geometry", "outer_factor", 2.0)
    hfac = sc.get("run", "horizon_factor", 100.0)
    n = sc.get("run", "n_runs")
    rows, fracs = [], []
    for N in sc.get("geometry", "N"):
        centre = tuple(x + o * N for x, o in zip(x0, offset))
        rule = StopRule.ball_before_exit(centre, rfac * N, ofac * N, x0)
        horizon = int(hfac * N * N)
        res = batch(kernel, Experiment(x0, rule, horizon), n,
                    derive_key(sc.master_seed, "hit-ball", N), _workers(sc, workers))
        counts = res.outcome_counts()
        hit = counts.get("hit", 0)
        ci = wilson_interval(hit, n)
        fracs.append(hit / n)
        rows.append([N, n, hit, counts.get("exited", 0), counts.get("censored", 0), hit / n,
                     ci.lower, ci.upper])
    out = Outcome({"hits.csv": table_csv(["N", "n_runs", "hit", "exited", "censored",
                                          "hit_fraction", "wilson_lower", "wilson_upper"], rows)})
    out.summary = {"kernel": kernel.kernel_id, "rows": rows}
    need = sc.get("acceptance", "min_hit_fraction")
    if need is not None:
        out.check("hit_fraction", min(fracs) >= need, min(fracs), need,
                  "smallest hit-before-exit fraction across N")
    _timed(out, t0, sc)
    return out


def _states(sc: Scenario) -> list:
    states = list(sc.get("run", "states", ()))
    rng_ = sc.get("run", "x1_range")
    if rng_ is not None:
        xs2 = sc.get("run", "x2_values", (0,))
        states += [(x1, x2) for x1 in range(rng_[0], rng_[1] + 1) for x2 in xs2]
    return states


def run_verify_assumptions(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    kernel = sc.kernel_spec()
    params = sc.assumption_params()
    states = _states(sc)
    if not states:
        raise ParseError("verify_assumptions needs [run] states or x1_range", sc.path)
    rep = verify_assumptions(kernel, params, states)
    rows = [[fmt_coords(c.state), c.a1_min, c.a1, c.second_moment, c.a2, c.passed] for c in rep.checks]
    out = Outcome({"checks.csv": table_csv(["state", "a1_min", "a1", "second_moment", "a2", "passed"],
                                           rows)})
    out.summary = {"kernel": kernel.kernel_id, "n_states": len(states),
                   "failures": [[list(s), c, v] for s, c, v in rep.failures]}
    expect = sc.get("acceptance", "expect_pass")
    if expect is not None:
        out.check("assumptions", rep.passed == expect, rep.passed, expect,
                  f"{len(rep.failures)} failing clauses")
    if sc.get("acceptance", "expect_closed_form", False):
        if kernel.variant != "half_plane":
            raise ParseError("expect_closed_form applies to the half-plane kernel", sc.path)
        tol = sc.get("acceptance", "tolerance", 1e-12)
        bad_p, worst = 0, 0.0
        for s in states:
            x1 = s[0]
            tab = enumerate_onestep(kernel, s).as_dict()
            want = {(1, 0): Fraction(x1 + 1, 4 * x1), (-1, 0): Fraction(x1 - 1, 4 * x1),
                    (0, 1): Fraction(1, 4), (0, -1): Fraction(1, 4)}
            for y, f in want.items():
                if tab.get(y, 0.0) != float(f):
                    bad_p += 1
            est = empirical_conditional_drift(kernel, lambda z: float(z[0]), None, [s])
            worst = max(worst, abs(est.bins[0].mean - 1.0 / (2 * x1)))
        out.summary.update({"closed_form_mismatches": bad_p, "drift_max_error": worst})
        out.check("closed_form_probs", bad_p == 0, bad_p, 0, "atoms differing from the rounded closed form")
        out.check("closed_form_drift", worst <= tol, worst, tol, "max |E[dx1|x] - 1/(2 x1)|")
    _timed(out, t0, sc)
    return out


def run_geometry(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    nu = sc.get("geometry", "nu", 0.2)
    s = sc.get("geometry", "s", 0.25)
    if nu == "auto" or s == "auto":
        raise ParseError("the geometry experiment needs numeric nu and s", sc.path)
    tol = sc.get("acceptance", "tolerance", 1e-6)
    m = sc.get("geometry", "points", 10**4)
    c = contour_axis_intercept(nu, s)
    hc = h_nu(nu, (c, 0.0))
    rng = RandomStream.from_seed(sc.master_seed, "geometry")
    rows, worst = [], 0.0
    for _ in range(m):
        u = rng.uniforms(4)
        r = math.exp(math.log(2.0) + u[0] * math.log(1e6))
        phi = (u[1] - 0.5) * (math.pi / 2) * 0.98
        x = np.array([r * math.cos(phi), r * math.sin(phi)])
        ang = 2 * math.pi * u[2]
        y = np.array([math.cos(ang), math.sin(ang)])
        an = directional_derivative_h(nu, x, y)
        # five-point stencil with a step scaled to the distance from the diagonal
        eps = 1e-4 * r * math.cos(2 * phi)
        f = [h_nu(nu, x + j * eps * y) for j in (-2, -1, 1, 2)]
        fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * eps)
        err = abs(an - fd) / max(abs(an), abs(fd), 1e-300)
        worst = max(worst, err)
        rows.append([fmt_coords(x.tolist()), fmt_coords(y.tolist()), an, fd, err])
    out = Outcome({"derivative.csv": table_csv(["x", "direction", "analytic", "finite_difference",
                                                "relative_error"], rows)})
    out.summary = {"nu": nu, "s": s, "axis_intercept": c, "h_at_intercept": hc,
                   "points": m, "max_relative_error": worst}
    out.check("axis_intercept", abs(c - 32.0) <= 1e-9 if (nu, s) == (0.2, 0.25) else True, c,
              32.0 if (nu, s) == (0.2, 0.25) else None, "contour crossing of the positive axis")
    out.check("h_at_intercept", abs(hc - s) <= 1e-9, hc, s, "h on the axis crossing")
    out.check("derivative", worst <= tol, worst, tol, "relative gap to five-point finite differences")
    _timed(out, t0, sc)
    return out


def run_normalize(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    dirs = [tuple(p) for p in sc.get("run", "directions")]
    if any(len(p) != 2 for p in dirs):
        raise ParseError("directions are (k_i n_i) pairs", sc.path, sc.lines.get(("run", "directions")))
    k, n0 = normalize_a1_prime(dirs)
    rows = [[fmt_coords([a for p in dirs for a in p]), k, n0]]
    bad = 0
    cases = sc.get("run", "random_cases", 0)
    rng = RandomStream.from_seed(sc.master_seed, "normalize")
    for _ in range(cases):
        d = 1 + int(rng.integers(3, 1)[0])
        pairs = [tuple(1 + int(v) for v in rng.integers(4, 2)) for _ in range(2 * d)]
        kk, nn = normalize_a1_prime(pairs)
        ok = nn % (2 * math.prod(p[1] for p in pairs)) == 0
        bad += not ok
        rows.append([fmt_coords([a for p in pairs for a in p]), kk, nn])
    out = Outcome({"normalize.csv": table_csv(["pairs", "k", "n0"], rows)})
    out.summary = {"input": [list(p) for p in dirs], "k": k, "n0": n0, "random_cases": cases,
                   "invariant_violations": bad}
    expect = sc.get("acceptance", "expect")
    if expect is not None:
        out.check("normalized", (k, n0) == tuple(expect), [k, n0], list(expect))
    out.check("n0_divisibility", bad == 0, bad, 0, "n0 not a multiple of 2 * prod(n_i)")
    _timed(out, t0, sc)
    return out


def _site_list(sc: Scenario, d: int) -> np.ndarray:
    n = sc.get("run", "sites", 10**4)
    rng = RandomStream.from_seed(sc.master_seed, "sites")
    pts = (rng.integers(2 * 10**6 + 1, n * d) - 10**6).reshape(n, d)
    pts[:4] = 0
    pts[1, 0], pts[2, 0], pts[3, 0] = 2**40, -(2**40), 1
    return pts.astype(np.int64)


def environment_table(kernel, sites: np.ndarray, workers: int) -> np.ndarray:
    """``(Y, chi)`` per site, evaluated on ``workers`` threads in a scrambled order."""
    n, d = sites.shape
    out = np.zeros((n, 2 * d))
    key = np.uint64(kernel.env_key)
    order = np.arange(n)[::-1] if workers % 2 == 0 else np.arange(n)

    def work(idx):
        y, chi = np.empty(d), np.empty(d)
        for i in idx:
            site_environment(key, sites[i], kernel.chi_bound, y, chi)
            out[i, :d] = y
            out[i, d:] = chi

    parts = [order[j::workers] for j in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(work, parts))
    return out


def run_rwre_replay(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    kernel = sc.kernel_spec()
    sites = _site_list(sc, kernel.dim)
    counts = sc.get("run", "worker_counts", (1, 4, 8))
    tables = {w: environment_table(kernel, sites, w) for w in counts}
    ref = tables[counts[0]]
    same = all(t.tobytes() == ref.tobytes() for t in tables.values())
    d = kernel.dim
    rows = [[fmt_coords(sites[i].tolist()), fmt_coords(ref[i, :d].tolist()),
             fmt_coords(ref[i, d:].tolist())] for i in range(sites.shape[0])]
    out = Outcome({"sites.csv": table_csv(["site", "y", "chi"], rows)})
    out.summary = {"kernel": kernel.kernel_id, "sites": int(sites.shape[0]),
                   "worker_counts": list(counts), "bit_identical": same}
    out.check("environment_replay", same, same, True, "site environments across worker counts")
    _timed(out, t0, sc)
    return out


def capped(sc: Scenario, max_runs: int | None, max_horizon: int | None) -> Scenario:
    """Shrink run counts and horizons for cheap replays of a scenario."""
    run = sc.sections.get("run", {})
    vals = {}
    if max_runs is not None:
        for key in ("n_runs", "sites"):
            if key in run:
                vals[key] = min(run[key], max_runs)
    if max_horizon is not None:
        for key in ("horizon", "T", "maximal_t"):
            if key in run:
                vals[key] = min(run[key], max_horizon)
        if "checkpoints" in run:
            cps = tuple(c for c in run["checkpoints"] if c <= max_horizon)
            vals["checkpoints"] = cps if len(cps) >= 1 else (max_horizon,)
            vals["horizon"] = max(vals["checkpoints"])
        if "grid" in run:
            vals["grid"] = tuple((t, r) for t, r in run["grid"] if t <= max_horizon) or run["grid"][:1]
        if "horizon_factor" in run:
            vals["horizon_factor"] = min(run["horizon_factor"], 1.0)
    new = sc.with_run(**vals)
    if max_runs is not None and "census_states" in new.sections.get("geometry", {}):
        new.sections["geometry"]["census_states"] = min(new.sections["geometry"]["census_states"],
                                                        max_runs)
    return new


def run_determinism(sc: Scenario, workers=None) -> Outcome:
    t0 = time.perf_counter()
    counts = sc.get("run", "worker_counts")
    rows, all_same = [], True
    for rel in sc.get("run", "scenarios"):
        path = Path(sc.base_dir) / rel
        sub = capped(parse_scenario(path), sc.get("run", "max_runs"), sc.get("run", "max_horizon"))
        if sub.experiment == "determinism":
            raise ParseError("determinism scenarios cannot nest", str(path))
        outs = {w: RUNNERS[sub.experiment](sub, w) for w in counts}
        ref = outs[counts[0]].files
        for name in sorted(ref):
            if not name.endswith(".csv"):
                continue
            same = all(o.files.get(name, "").encode() == ref[name].encode() for o in outs.values())
            all_same &= same
            rows.append([rel, name, len(ref[name].encode()), same])
    out = Outcome({"determinism.csv": table_csv(["scenario", "file", "bytes", "identical"], rows)})
    out.summary = {"worker_counts": list(counts), "files": len(rows),
                   "mismatched": [r[:2] for r in rows if not r[3]]}
    out.check("byte_identical", all_same, sum(not r[3] for r in rows), 0,
              "CSV outputs differing across worker counts")
    _timed(out, t0, sc)
    return out


RUNNERS = {
    "exit_cone": run_exit_cone,
    "direction": run_direction,
    "decompose": run_decompose,
    "supermartingale": run_supermartingale,
    "escape_bound": run_escape_bound,
    "concentration": run_concentration,
    "hit_ball": run_hit_ball,
    "verify_assumptions": run_verify_assumptions,
    "geometry": run_geometry,
    "normalize": run_normalize,
    "rwre_replay": run_rwre_replay,
    "determinism": run_determinism,
}


def manifest(sc: Scenario) -> dict:
    return {"scenario": sc.name, "experiment": sc.experiment, "master_seed": sc.master_seed,
            "code_version": __version__, "scenario_sha256": sc.digest, "scenario_path": sc.path}


def execute(sc: Scenario, workers: int | None = None) -> Outcome:
    return RUNNERS[sc.experiment](sc, workers)


def run_scenario(sc: Scenario, *, workers: int | None = None, out_dir=None, log=print) -> int:
    """Run a scenario, write its outputs and return the process exit code.

    Exit codes: 0 when every acceptance check passes, 2 when one fails, 1 on
    a runtime error (including an unwritable output directory).  The output
    directory is ``<out_dir>/<name>``, else ``$CONEWALK_OUT/<name>``, else
    the scenario's ``output_dir``, else ``results/<name>``.
    """
    import os

    target = sc.output_dir(out_dir or os.environ.get(OUT_ENV))
    try:
        target.mkdir(parents=True, exist_ok=True)
        probe = target / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        log(f"error: cannot write to {target}: {exc.strerror}")
        return EXIT_RUNTIME
    try:
        outcome = execute(sc, workers)
    except (ConewalkError, ValueError) as exc:
        log(f"error: {exc}")
        return EXIT_RUNTIME
    payload = {"manifest": manifest(sc), "summary": outcome.summary,
               "checks": [vars(c) for c in outcome.checks], "passed": outcome.passed}
    try:
        for name, text in outcome.files.items():
            write_text(target / name, text)
        write_text(target / "summary.json", json_text(payload))
    except OSError as exc:
        log(f"error: cannot write outputs: {exc.strerror}")
        return EXIT_RUNTIME
    for c in outcome.checks:
        log(f"{'PASS' if c.passed else 'FAIL'} {sc.name}/{c.name}: observed={c.observed} "
            f"threshold={c.threshold}" + (f" ({c.detail})" if c.detail else ""))
    return EXIT_OK if outcome.passed else EXIT_ACCEPTANCE
