"""Trajectories, stopping times and batch Monte Carlo.

Built-in kernels with built-in stop rules run entirely in compiled code; a
custom kernel or a Python predicate falls back to a pure-Python loop that
consumes the random stream in the same way (one uniform per step), so both
paths give identical trajectories for the same stream.

Batches derive the stream of run ``i`` from ``(master_seed, i)`` and are
split across a thread pool; results are reassembled by run index and so do
not depend on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _engine as eng
from .decomposition import _decompose_nn
from .errors import DomainError, EmptyReportError, PreconditionError, UsageError
from .geometry import (Cone, LyapunovParams, cone_contains, contour_axis_intercept,
                       h_nu_truncated, h_nu_truncated_increment, in_gamma)
from .kernels import COORD_LIMIT, KernelSpec, as_point, enumerate_onestep, sample_increment
from .rng import RandomStream, derive_key
from .stats import quantiles, wilson_interval

# --------------------------------------------------------------------------
# stop rules


@dataclass(frozen=True)
class StopRule:
    """A state predicate, optionally backed by a compiled code.

    ``holds(x)`` returns 0 (keep going), 1 (stopped / target hit) or 2
    (exited, for the two-sided rule).
    """

    name: str
    code: int = -1
    params: tuple = ()
    fn: Callable | None = field(default=None, compare=False)

    @property
    def compiled(self) -> bool:
        return self.code >= 0

    def holds(self, x) -> int:
        if self.compiled:
            return int(eng.stop_status(self.code, np.asarray(self.params, dtype=np.float64),
                                       as_point(x)))
        return int(self.fn(tuple(int(v) for v in x)))

    @classmethod
    def never(cls) -> "StopRule":
        return cls("never", eng.STOP_NEVER)

    @classmethod
    def cone_exit(cls, cone: Cone) -> "StopRule":
        return cls(f"exit cone(half_angle={cone.half_angle:.6g})", eng.STOP_CONE_EXIT,
                   (cone.cos_half_angle,) + tuple(cone.axis))

    @classmethod
    def ball_hit(cls, centre, radius: float) -> "StopRule":
        """Enter the open ball ``|x - centre| < radius``."""
        return cls("hit ball", eng.STOP_BALL_HIT, (float(radius),) + tuple(float(c) for c in centre))

    @classmethod
    def radius_exit(cls, r: float) -> "StopRule":
        return cls("radius exit", eng.STOP_RADIUS_EXIT, (float(r),))

    @classmethod
    def ball_before_exit(cls, centre, radius: float, outer: float, origin) -> "StopRule":
        return cls("ball before exit", eng.STOP_BALL_BEFORE_EXIT,
                   (float(radius), float(outer)) + tuple(float(c) for c in centre)
                   + tuple(float(c) for c in origin))

    @classmethod
    def leave_gamma(cls, p: LyapunovParams, alpha: float | None = None) -> "StopRule":
        """Leave the sublevel set ``{h < s}``, or its image in the wedge of half-angle ``alpha``."""
        a1 = a2 = 1.0
        if alpha is not None:
            a1, a2 = 1.0 / math.cos(alpha), 1.0 / math.sin(alpha)
        return cls(f"leave gamma(nu={p.nu:g},s={p.s:g})", eng.STOP_LEAVE_GAMMA, (p.nu, p.s, a1, a2))

    @classmethod
    def predicate(cls, fn: Callable, name: str = "custom") -> "StopRule":
        """Wrap ``fn(state_tuple) -> bool``."""
        return cls(name, -1, (), lambda x: 1 if fn(x) else 0)


# --------------------------------------------------------------------------
# records


@dataclass
class StoppingRecord:
    """Outcome of one run: stopped at ``time`` or censored at the horizon."""

    outcome: str  # stopped | censored | hit | exited
    time: int
    final_state: tuple
    horizon: int
    trajectory: np.ndarray | None = None
    stride: int = 0

    @property
    def stopped(self) -> bool:
        return self.outcome != "censored"

    @property
    def censored(self) -> bool:
        return self.outcome == "censored"

    @property
    def final_norm(self) -> float:
        return float(np.linalg.norm(np.asarray(self.final_state, dtype=float)))

    @property
    def final_direction(self) -> np.ndarray | None:
        n = self.final_norm
        if n == 0:
            return None
        return np.asarray(self.final_state, dtype=float) / n


def _outcome(status: int, two_sided: bool) -> str:
    if status == 0:
        return "censored"
    if two_sided:
        return "hit" if status == 1 else "exited"
    return "stopped"


def _guard(x0, horizon: int):
    if np.max(np.abs(np.asarray(x0, dtype=np.float64))) + horizon > COORD_LIMIT:
        raise OverflowError("start point plus horizon could exceed +-2**62")


def run_until(kernel: KernelSpec, x0, stop: StopRule, horizon: int, rng: RandomStream,
              keep_every: int = 0) -> StoppingRecord:
    """Run until ``stop`` holds (checked from time 0) or ``horizon`` steps pass.

    With ``keep_every = m > 0`` the state at times ``0, m, 2m, ...`` is kept.
    The stream advances by the number of steps taken.
    """
    if horizon < 1:
        raise UsageError("horizon must be at least 1")
    x = kernel.check_state(x0)
    _guard(x, horizon)
    d = kernel.dim
    two_sided = stop.code == eng.STOP_BALL_BEFORE_EXIT
    if kernel.compiled and stop.compiled:
        rows = horizon // keep_every + 1 if keep_every > 0 else 1
        traj = np.zeros((rows, d), dtype=np.int64)
        status, t = eng.run_one(kernel.code, kernel.kparams, kernel.env_key, x, stop.code,
                                np.asarray(stop.params, dtype=np.float64), horizon,
                                np.uint64(rng.key), np.uint64(rng.counter), keep_every, traj,
                                np.zeros(0, dtype=np.int64), np.zeros((0, d)), np.zeros(0))
        rng.counter += int(t)
        kept = traj[: t // keep_every + 1].copy() if keep_every > 0 else None
        return StoppingRecord(_outcome(int(status), two_sided), int(t), tuple(int(v) for v in x),
                              horizon, kept, keep_every)
    kept = []
    t = 0
    while True:
        if keep_every > 0 and t % keep_every == 0:
            kept.append(x.copy())
        status = stop.holds(x)
        if status or t >= horizon:
            break
        x = x + sample_increment(kernel, x, rng)
        t += 1
    arr = np.array(kept, dtype=np.int64) if keep_every > 0 else None
    return StoppingRecord(_outcome(status, two_sided), t, tuple(int(v) for v in x), horizon, arr,
                          keep_every)


def exit_time_cone(kernel, x0, cone: Cone, horizon: int, rng, keep_every: int = 0) -> StoppingRecord:
    """First time the walk is outside the open cone."""
    if not cone_contains(cone, x0):
        raise PreconditionError(f"start point {tuple(x0)} is not inside the cone")
    return run_until(kernel, x0, StopRule.cone_exit(cone), horizon, rng, keep_every)


def hit_set_time(kernel, x0, target, horizon: int, rng) -> StoppingRecord:
    """First time the walk is in ``target`` (a :class:`StopRule` or a predicate)."""
    rule = target if isinstance(target, StopRule) else StopRule.predicate(target, "hit set")
    return run_until(kernel, x0, rule, horizon, rng)


def radius_exit_time(kernel, x0, r: float, horizon: int, rng) -> StoppingRecord:
    """First time ``|x| >= r``."""
    return run_until(kernel, x0, StopRule.radius_exit(r), horizon, rng)


def _check_ball_geometry(x0, centre, radius, outer):
    offset = float(np.linalg.norm(np.asarray(centre, dtype=float) - np.asarray(x0, dtype=float)))
    if not offset + radius < outer:
        raise PreconditionError("target ball must lie strictly inside the outer ball around the start")


def hit_ball_before_exit(kernel, x0, target_center, target_radius: float, outer_radius: float,
                         horizon: int, rng) -> str:
    """``'hit'`` if the target ball is entered before ``|x - x0| >= outer_radius``, else ``'exited'`` or ``'censored'``."""
    _check_ball_geometry(x0, target_center, target_radius, outer_radius)
    rule = StopRule.ball_before_exit(target_center, target_radius, outer_radius, x0)
    return run_until(kernel, x0, rule, horizon, rng).outcome


# --------------------------------------------------------------------------
# batches


@dataclass(frozen=True)
class Experiment:
    """Start point, stop rule, horizon and optional checkpoints for a batch."""

    x0: tuple
    stop: StopRule
    horizon: int
    checkpoints: tuple = ()
    label: str = ""


@dataclass
class BatchResult:
    n_runs: int
    records: list
    master_seed: int
    kernel_id: str
    experiment: Experiment
    seeds: list
    checkpoint_states: np.ndarray | None = None
    checkpoint_mincos: np.ndarray | None = None
    summary: dict = field(default_factory=dict)

    @property
    def stop_fraction(self) -> float:
        return sum(r.stopped for r in self.records) / self.n_runs

    def outcome_counts(self) -> dict:
        out: dict = {}
        for r in self.records:
            out[r.outcome] = out.get(r.outcome, 0) + 1
        return out


def run_key(master_seed: int, i: int) -> int:
    return derive_key(master_seed, i, "walk")


def summarize(records: Sequence[StoppingRecord]) -> dict:
    n = len(records)
    stopped = [r.time for r in records if r.stopped]
    cens = n - len(stopped)
    ci = wilson_interval(cens, n)
    qs = [0.1, 0.25, 0.5, 0.75, 0.9]
    out = {
        "n_runs": n,
        "stopped": len(stopped),
        "censored": cens,
        "stop_fraction": len(stopped) / n,
        "censoring_fraction": cens / n,
        "censoring_wilson95": [ci.lower, ci.upper],
        "stop_time_quantiles": (dict(zip([str(q) for q in qs], quantiles(stopped, qs).tolist()))
                                if stopped else {}),
    }
    counts: dict = {}
    for r in records:
        counts[r.outcome] = counts.get(r.outcome, 0) + 1
    out["outcomes"] = dict(sorted(counts.items()))
    return out


def _chunks(n: int, workers: int) -> list:
    size = max(1, math.ceil(n / max(1, workers * 4)))
    return [(lo, min(n, lo + size)) for lo in range(0, n, size)]


def batch(kernel: KernelSpec, experiment: Experiment, n_runs: int, master_seed: int,
          workers: int = 1) -> BatchResult:
    """Run ``n_runs`` independent copies of ``experiment``.

    Run ``i`` draws from the stream keyed by ``(master_seed, i)``, so the
    records are bit-identical for any ``workers``.
    """
    if n_runs < 1:
        raise UsageError("n_runs must be at least 1")
    if workers < 1:
        raise UsageError("workers must be at least 1")
    x0 = kernel.check_state(experiment.x0)
    _guard(x0, experiment.horizon)
    d = kernel.dim
    keys = [run_key(master_seed, i) for i in range(n_runs)]
    cps = np.asarray(sorted(experiment.checkpoints), dtype=np.int64)
    if cps.size and (cps[0] < 0 or cps[-1] > experiment.horizon):
        raise UsageError("checkpoints must lie in [0, horizon]")
    stop = experiment.stop
    two_sided = stop.code == eng.STOP_BALL_BEFORE_EXIT
    status = np.zeros(n_runs, dtype=np.int64)
    times = np.zeros(n_runs, dtype=np.int64)
    finals = np.zeros((n_runs, d), dtype=np.int64)
    cp_pos = np.zeros((n_runs, cps.size, d), dtype=np.float64)
    cp_min = np.full((n_runs, cps.size), np.nan)
    if kernel.compiled and stop.compiled:
        x0s = np.tile(x0, (n_runs, 1))
        ukeys = np.array(keys, dtype=np.uint64)
        sp = np.asarray(stop.params, dtype=np.float64)

        def work(bounds):
            eng.run_range(kernel.code, kernel.kparams, kernel.env_key, x0s, stop.code, sp,
                          experiment.horizon, ukeys, bounds[0], bounds[1], status, times,
                          finals, cps, cp_pos, cp_min)
    else:
        if cps.size:
            raise UsageError("checkpoints need a compiled kernel and stop rule")

        def work(bounds):
            for i in range(*bounds):
                rec = run_until(kernel, x0, stop, experiment.horizon, RandomStream(keys[i]))
                status[i] = {"censored": 0, "stopped": 1, "hit": 1, "exited": 2}[rec.outcome]
                times[i] = rec.time
                finals[i] = rec.final_state

    chunks = _chunks(n_runs, workers)
    if workers == 1:
        for c in chunks:
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, chunks))
    records = [StoppingRecord(_outcome(int(status[i]), two_sided), int(times[i]),
                              tuple(int(v) for v in finals[i]), experiment.horizon)
               for i in range(n_runs)]
    if cps.size:
        # checkpoints after a stop were never reached
        unreached = cps[None, :] > times[:, None]
        cp_min[unreached] = np.nan
        cp_pos[unreached] = np.nan
    res = BatchResult(n_runs, records, master_seed, kernel.kernel_id, experiment, keys,
                      cp_pos if cps.size else None, cp_min if cps.size else None)
    res.summary = summarize(records)
    return res


def direction_series(kernel: KernelSpec, x0, checkpoints, horizon: int, rng: RandomStream) -> list:
    """Unit direction of the walk at each checkpoint (``None`` at the origin)."""
    cps = list(checkpoints)
    if cps != sorted(cps) or (cps and cps[-1] > horizon):
        raise UsageError("checkpoints must be sorted and no larger than the horizon")
    if not kernel.compiled:
        x = kernel.check_state(x0)
        out, t = [], 0
        for c in cps:
            while t < c:
                x = x + sample_increment(kernel, x, rng)
                t += 1
            n = np.linalg.norm(x.astype(float))
            out.append((c, x / n if n > 0 else None))
        return out
    x = kernel.check_state(x0)
    _guard(x, horizon)
    d = kernel.dim
    cpa = np.asarray(cps, dtype=np.int64)
    pos = np.zeros((cpa.size, d))
    mincos = np.zeros(cpa.size)
    eng.run_one(kernel.code, kernel.kparams, kernel.env_key, x, eng.STOP_NEVER, np.zeros(1),
                horizon, np.uint64(rng.key), np.uint64(rng.counter), 0, np.zeros((1, d), np.int64),
                cpa, pos, mincos)
    rng.counter += horizon
    out = []
    for c, p in zip(cps, pos):
        n = np.linalg.norm(p)
        out.append((c, p / n if n > 0 else None))
    return out


def angle_between(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(min(1.0, max(-1.0, c)))


# --------------------------------------------------------------------------
# conditional drift


@dataclass
class DriftBin:
    description: str
    n: int
    mean: float
    se: float


@dataclass
class DriftEstimate:
    bins: list

    @property
    def max_mean(self) -> float:
        return max(b.mean for b in self.bins)

    @property
    def nonpositive(self) -> bool:
        return all(b.mean <= 0.0 for b in self.bins)

    def positive_bins(self) -> list:
        return [b for b in self.bins if b.mean > 0.0]


def _increment_fn(g):
    inc = getattr(g, "increment", None)
    if inc is not None:
        return inc
    return lambda x, y: g(tuple(a + b for a, b in zip(x, y))) - g(x)


def empirical_conditional_drift(kernel: KernelSpec, g, state_filter, states, plan: str = "exact",
                                n_draws: int = 1000, rng: RandomStream | None = None) -> DriftEstimate:
    """Estimate ``E[g(X_1) - g(X_0) | X_0 = x]`` at each filtered state.

    ``plan='exact'`` sums over the one-step atom table (zero standard
    error); ``plan='mc'`` averages ``n_draws`` sampled increments.  ``g`` may
    carry an ``increment(x, y)`` method for a cancellation-free difference.
    """
    inc = _increment_fn(g)
    chosen = [tuple(int(v) for v in s) for s in states if state_filter is None or state_filter(tuple(s))]
    if not chosen:
        raise EmptyReportError("no sampled state passes the filter")
    bins = []
    for s in chosen:
        if plan == "exact":
            table = enumerate_onestep(kernel, s)
            mean = 0.0
            for y, p in table:
                if p > 0:
                    mean += p * inc(s, y)
            bins.append(DriftBin(str(s), 1, mean, 0.0))
        elif plan == "mc":
            if rng is None:
                raise UsageError("the Monte Carlo plan needs a random stream")
            vals = np.array([inc(s, tuple(sample_increment(kernel, s, rng))) for _ in range(n_draws)])
            se = float(vals.std(ddof=1) / math.sqrt(n_draws)) if n_draws > 1 else 0.0
            bins.append(DriftBin(str(s), n_draws, float(vals.mean()), se))
        else:
            raise UsageError("plan must be 'exact' or 'mc'")
    return DriftEstimate(bins)


class TruncatedLyapunov:
    """``min(h, 1)`` as a state functional with a stable increment."""

    def __init__(self, nu: float):
        self.nu = nu

    def __call__(self, x) -> float:
        return h_nu_truncated(self.nu, x)

    def increment(self, x, y) -> float:
        return h_nu_truncated_increment(self.nu, x, y)


def gamma_census_states(p: LyapunovParams, n_states: int, r_min: float, r_max: float,
                        rng: RandomStream, boundary_share: float = 0.5) -> list:
    """Lattice points of ``{h < s}`` with log-uniform radius in ``[r_min, r_max]``.

    A share of the points is pushed to the outer edge of the admissible angle
    range, where the supermartingale inequality is tightest.
    """
    out = []
    lo, hi = math.log(r_min), math.log(r_max)
    while len(out) < n_states:
        u = rng.uniforms(4)
        r = math.exp(lo + (hi - lo) * u[0])
        arg = r ** (-2 * p.nu) / p.s
        if arg >= 1:
            continue
        phimax = 0.5 * math.acos(arg)
        if u[1] < boundary_share:
            phi = phimax * (1.0 - 1e-3 * u[2])
        else:
            phi = phimax * u[2]
        if u[3] < 0.5:
            phi = -phi
        x = (int(round(r * math.cos(phi))), int(round(r * math.sin(phi))))
        if in_gamma(p, x) and math.hypot(*x) >= r_min:
            out.append(x)
    return out


@dataclass
class CensusReport:
    params: LyapunovParams
    radius: float
    n_states: int
    max_drift: float
    positive: list

    @property
    def passed(self) -> bool:
        return not self.positive


def supermartingale_census(kernel: KernelSpec, p: LyapunovParams, n_states: int, radius: float,
                           rng: RandomStream, radius_span: float = 1e4) -> CensusReport:
    """Exact ``E[delta min(h,1) | x]`` at ``n_states`` lattice points of ``{h < s}`` beyond ``radius``."""
    states = gamma_census_states(p, n_states, radius, radius * radius_span, rng)
    est = empirical_conditional_drift(kernel, TruncatedLyapunov(p.nu), None, states)
    pos = [(b.description, b.mean) for b in est.bins if b.mean > 0.0]
    return CensusReport(p, radius, n_states, est.max_mean, pos)


NU_GRID = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45)
S_GRID = (0.5, 0.25, 0.1, 0.05)


@dataclass
class TuneResult:
    params: LyapunovParams | None
    radius: float | None
    census: CensusReport | None
    tried: list


def tuned_radius(kernel: KernelSpec, p: LyapunovParams) -> float:
    """Start of the census: the sublevel set's axis intercept or the drift no-clamp radius."""
    return max(contour_axis_intercept(p.nu, p.s), kernel.no_clamp_radius)


def tune_lyapunov(kernel: KernelSpec, n_states: int = 10**4, seed: int = 0,
                  nus=NU_GRID, ss=S_GRID) -> TuneResult:
    """Grid search for ``(nu, s)``: increasing ``nu``, then decreasing ``s``; the first pair
    whose exact census has no positive drift wins."""
    tried = []
    for nu in nus:
        for s in ss:
            p = LyapunovParams(nu, s)
            radius = tuned_radius(kernel, p)
            rep = supermartingale_census(kernel, p, n_states, radius,
                                         RandomStream.from_seed(seed, "census", nu, s))
            tried.append((nu, s, rep.max_drift, rep.passed))
            if rep.passed:
                return TuneResult(p, radius, rep, tried)
    return TuneResult(None, None, None, tried)


# --------------------------------------------------------------------------
# bound checks


@dataclass
class EscapeReport:
    refused: bool
    reason: str
    hits: int
    n_runs: int
    bound: float
    slack: float
    wilson_upper: float | None
    censored: int

    @property
    def passed(self) -> bool:
        return (not self.refused) and self.wilson_upper is not None and \
            self.wilson_upper <= self.bound + self.slack


def escape_probability_check(kernel: KernelSpec, g, forbidden: StopRule, x0, n_runs: int,
                             horizon: int, master_seed: int, *, g0: float, precheck_states,
                             workers: int = 1, slack: float = 0.02) -> EscapeReport:
    """Monte Carlo check of ``P[hit A] <= g(x0) / g0`` for a supermartingale ``g >= 0``.

    ``g0`` must lower-bound ``g`` on ``A``.  The supermartingale property is
    first checked exactly on ``precheck_states``; any positive drift makes the
    check refuse.  Censored runs count as non-hits, which can only
    undercount hits.
    """
    est = empirical_conditional_drift(kernel, g, None, precheck_states)
    bound = float(g(tuple(x0))) / g0
    if not est.nonpositive:
        return EscapeReport(True, f"positive drift at {len(est.positive_bins())} prechecked states",
                            0, n_runs, bound, slack, None, 0)
    res = batch(kernel, Experiment(tuple(x0), forbidden, horizon), n_runs, master_seed, workers)
    hits = sum(r.stopped for r in res.records)
    ci = wilson_interval(hits, n_runs)
    return EscapeReport(False, "", hits, n_runs, bound, slack, ci.upper,
                        sum(r.censored for r in res.records))


@dataclass
class BoundRow:
    t: int
    level: float
    empirical: float
    bound: float
    sigma: float

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + 3.0 * self.sigma


@dataclass
class ConcentrationReport:
    maxbound: list
    maximal: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.maxbound + self.maximal)


def _parallel(n: int, workers: int, fn):
    chunks = _chunks(n, workers)
    if workers == 1:
        for c in chunks:
            fn(c)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fn, chunks))


def v_walk_maxima(d: int, kappa: float, k: int, t: int, n_runs: int, master_seed: int,
                  workers: int = 1) -> np.ndarray:
    """``max_{s <= t} |Y_s|`` for ``n_runs`` walks with increments of law ``V``."""
    keys = np.array([derive_key(master_seed, i, "v-walk") for i in range(n_runs)], dtype=np.uint64)
    out = np.zeros(n_runs)
    _parallel(n_runs, workers, lambda b: eng.v_walk_max_norms(d, kappa, k, t, keys, b[0], b[1], out))
    return out


def residual_sq_maxima(kernel: KernelSpec, kappa: float, x0, t: int, n_runs: int, master_seed: int,
                       workers: int = 1) -> np.ndarray:
    """``max_{s <= t} |Z_s|^2`` of the residual partial sums (unit steps, ``n0 = k = 1``)."""
    if not kernel.compiled:
        raise UsageError("residual maxima need a built-in kernel")
    x = kernel.check_state(x0)
    d = kernel.dim
    out = np.zeros(n_runs)

    def work(b):
        states = np.zeros((t + 1, d), dtype=np.int64)
        v = np.zeros((t, d), dtype=np.int64)
        zeta = np.zeros((t, d), dtype=np.int64)
        for i in range(*b):
            key = np.uint64(derive_key(master_seed, i, "decompose"))
            status = _decompose_nn(kernel.code, kernel.kparams, kernel.env_key, x, t, kappa, key,
                                   np.uint64(0), states, v, zeta)
            if status != -1:
                raise PreconditionError("isotropy bound fails along a residual path")
            z = np.cumsum(zeta, axis=0)
            out[i] = float(np.max(np.sum(z * z, axis=1))) if t else 0.0

    _parallel(n_runs, workers, work)
    return out


def maxbound_value(d: int, k: int, t: int, r: float) -> float:
    """``4 d exp(-r^2 / (2 d k^2 t))``."""
    if t == 0:
        return 0.0 if r > 0 else 1.0
    return 4.0 * d * math.exp(-r * r / (2.0 * d * k * k * t))


def concentration_checks(kappa: float, k: int, d: int, grid, n_runs: int, master_seed: int, *,
                         maximal_levels=(2.0, 4.0, 8.0, 16.0), maximal_t: int | None = None,
                         b: float = 1.0, y0: float = 0.0, workers: int = 1) -> ConcentrationReport:
    """Compare empirical maximal probabilities with their exponential and Markov-type bounds.

    ``grid`` is a list of ``(t, [r, ...])``.  The exponential bound is
    checked for ``max |Y_s|`` of the symmetric ``V`` walk.  The Markov-type
    bound ``(b t + y0) / x`` is checked for ``max |Z_s|^2`` of the residual
    walk of the lazy symmetric kernel, with ``x`` running over
    ``maximal_levels`` multiples of ``b t``.  Each row passes when the
    empirical frequency is at most the bound plus three binomial standard
    deviations evaluated at the bound.
    """
    maxrows, mrows = [], []
    for t, radii in grid:
        m = v_walk_maxima(d, kappa, k, t, n_runs, derive_key(master_seed, "maxbound", t), workers)
        for r in radii:
            emp = float(np.mean(m >= r)) if t > 0 else (1.0 if r <= 0 else 0.0)
            bnd = maxbound_value(d, k, t, r)
            pb = min(bnd, 1.0)
            maxrows.append(BoundRow(t, r, emp, bnd, math.sqrt(pb * (1 - pb) / n_runs)))
    if maximal_t is not None and k == 1:
        zk = KernelSpec.zero_drift(d)
        m = residual_sq_maxima(zk, kappa, (0,) * d, maximal_t, n_runs,
                               derive_key(master_seed, "maximal"), workers)
        for lev in maximal_levels:
            x = lev * b * maximal_t
            emp = float(np.mean(m >= x))
            bnd = (b * maximal_t + y0) / x
            pb = min(bnd, 1.0)
            mrows.append(BoundRow(maximal_t, x, emp, bnd, math.sqrt(pb * (1 - pb) / n_runs)))
    return ConcentrationReport(maxrows, mrows)
