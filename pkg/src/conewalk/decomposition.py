"""Splitting skeleton jumps into a symmetric atom and a residual.

Watch the walk every ``n0`` steps (the skeleton).  If every state puts mass
at least ``kappa`` on each of the ``2d`` displacements ``+-k e_i`` after
``n0`` steps, each skeleton jump can be generated in two stages:

1. draw ``V`` from the fixed law ``P[V = 0] = 1 - 2 d kappa``,
   ``P[V = +-k e_i] = kappa``;
2. if ``V != 0`` the jump is ``V`` and the residual ``zeta`` is zero,
   otherwise the jump is drawn from the residual law
   ``q(z) = (p(z) - kappa 1{z = +-k e_i}) / (1 - 2 d kappa)`` and
   ``zeta`` equals the jump.

The jump then has law ``p`` exactly, and the partial sums ``Y_t`` of ``V``
and ``Z_t`` of ``zeta`` satisfy ``xi*_t - xi*_0 = Y_t + Z_t`` in integer
arithmetic.  Every step consumes exactly two uniforms (one per stage), in
both the Python and the compiled path.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import EmptyReportError, InconsistencyError, PreconditionError, UsageError
from .kernels import (HALF_PLANE, RWRE, AssumptionParams, AtomTable, KernelSpec, _drift_probs,
                      _half_plane_probs, _rwre_probs, draw_atom,
                      max_valid_kappa, n_step_atoms)
from .rng import RandomStream, uniform_at
from .stats import quantiles

RESIDUAL_CACHE_SIZE = 10**6


def skeleton(kernel: KernelSpec, n0: int, x) -> AtomTable:
    """Exact law of the ``n0``-step displacement from ``x``."""
    return n_step_atoms(kernel, x, n0)


def v_atoms(d: int, k: int) -> np.ndarray:
    """The ``2d`` nonzero atoms of ``V`` in canonical order."""
    out = np.zeros((2 * d, d), dtype=np.int64)
    for i in range(d):
        out[i, i] = -k
        out[2 * d - 1 - i, i] = k
    return out


@dataclass(frozen=True)
class ResidualLaw:
    """The residual law ``q`` paired with the ``V`` law for one skeleton table."""

    displacements: np.ndarray
    probs: np.ndarray  # q; all zeros when 1 - 2 d kappa = 0
    v_zero_prob: float
    kappa: float
    k: int


def residual_law(table: AtomTable, kappa: float, k: int) -> ResidualLaw:
    """Build ``q`` from a skeleton table, checking the isotropy bound."""
    disps, probs = table.displacements, table.probs
    d = disps.shape[1]
    if not kappa > 0:
        raise UsageError("kappa must be positive")
    if 2 * d * kappa > 1 + 1e-15:
        raise InconsistencyError(f"kappa={kappa} exceeds 1/(2d)")
    lookup = {tuple(int(v) for v in y): i for i, y in enumerate(disps)}
    q = probs.astype(np.float64).copy()
    for atom in v_atoms(d, k):
        i = lookup.get(tuple(int(v) for v in atom))
        p = probs[i] if i is not None else 0.0
        if p < kappa:
            raise PreconditionError(
                f"atom {tuple(int(v) for v in atom)} has probability {p:.6g} < kappa={kappa:.6g}")
        q[i] -= kappa
    q = np.clip(q, 0.0, None)
    v0 = 1.0 - 2 * d * kappa
    if v0 <= 1e-15:
        if q.sum() > 1e-12:
            raise InconsistencyError("1 - 2d kappa = 0 but the table has residual mass")
        return ResidualLaw(disps, np.zeros_like(q), 0.0, kappa, k)
    return ResidualLaw(disps, q / v0, v0, kappa, k)


@dataclass(frozen=True)
class DecompositionStep:
    v: tuple
    zeta: tuple
    skeleton_increment: tuple


def _v_index(u: float, v0: float, kappa: float, nd: int) -> int:
    """-1 for ``V = 0``, else the index of the nonzero atom."""
    if u < v0:
        return -1
    return min(int((u - v0) / kappa), nd - 1)


def sample_decomposed_step(skeleton_atoms, kappa: float, k: int, rng: RandomStream) -> DecompositionStep:
    """Draw ``(V, zeta)`` for one skeleton jump; two uniforms are consumed."""
    law = skeleton_atoms if isinstance(skeleton_atoms, ResidualLaw) else residual_law(skeleton_atoms, kappa, k)
    d = law.displacements.shape[1]
    u1, u2 = rng.uniform(), rng.uniform()
    j = _v_index(u1, law.v_zero_prob, law.kappa, 2 * d)
    zero = (0,) * d
    if j >= 0:
        v = tuple(int(c) for c in v_atoms(d, law.k)[j])
        return DecompositionStep(v, zero, v)
    a = draw_atom(law.probs, u2)
    z = tuple(int(c) for c in law.displacements[a])
    return DecompositionStep(zero, z, z)


class _LRU:
    def __init__(self, maxsize: int):
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            val = self._data.get(key)
            if val is not None:
                self._data.move_to_end(key)
            return val

    def put(self, key, val):
        with self._lock:
            self._data[key] = val
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)


_residual_cache = _LRU(RESIDUAL_CACHE_SIZE)


def cached_residual_law(kernel: KernelSpec, params: AssumptionParams, state: tuple) -> ResidualLaw:
    key = (kernel, params.kappa, params.k, params.n0, state)
    law = _residual_cache.get(key)
    if law is None:
        try:
            law = residual_law(skeleton(kernel, params.n0, state), params.kappa, params.k)
        except PreconditionError as exc:
            raise PreconditionError(f"at state {state}: {exc}") from None
        _residual_cache.put(key, law)
    return law


@dataclass
class DecompositionTrace:
    """Skeleton path with its ``(V, zeta)`` split and partial sums.

    Arrays have one row per time: ``states``, ``y`` and ``z`` have ``T+1``
    rows (time 0 included), ``v`` and ``zeta`` have ``T``.
    """

    states: np.ndarray
    v: np.ndarray
    zeta: np.ndarray
    n0: int = 1

    @property
    def length(self) -> int:
        return self.v.shape[0]

    @property
    def y(self) -> np.ndarray:
        out = np.zeros_like(self.states)
        np.cumsum(self.v, axis=0, out=out[1:])
        return out

    @property
    def z(self) -> np.ndarray:
        out = np.zeros_like(self.states)
        np.cumsum(self.zeta, axis=0, out=out[1:])
        return out

    @property
    def steps(self) -> list:
        inc = np.diff(self.states, axis=0)
        return [DecompositionStep(tuple(map(int, a)), tuple(map(int, b)), tuple(map(int, c)))
                for a, b, c in zip(self.v, self.zeta, inc)]

    def identity_mismatches(self) -> int:
        """Times at which ``xi*_t - xi*_0 != Y_t + Z_t`` (zero tolerance)."""
        lhs = self.states - self.states[0]
        return int(np.count_nonzero(np.any(lhs != self.y + self.z, axis=1)))

    def exclusivity_violations(self) -> int:
        """Steps where both ``V`` and ``zeta`` are nonzero."""
        both = np.any(self.v != 0, axis=1) & np.any(self.zeta != 0, axis=1)
        return int(np.count_nonzero(both))


@nb.njit(cache=True, nogil=True)
def _decompose_nn(variant, kp, env_key, x0, T, kappa, key, counter0, states, v, zeta):
    """Compiled decomposition for unit-step kernels with ``n0 = k = 1``.

    Returns -1 on success or the time index of the first state violating
    the isotropy bound.
    """
    d = x0.shape[0]
    nd = 2 * d
    probs = np.empty(nd + 1)
    q = np.empty(nd + 1)
    scratch = np.empty(nd)
    x = x0.copy()
    v0 = 1.0 - nd * kappa
    degenerate = v0 <= 1e-15
    for i in range(d):
        states[0, i] = x[i]
    c = np.int64(counter0)
    for t in range(T):
        if variant == RWRE:
            _rwre_probs(kp, env_key, x, probs, scratch)
        elif variant == HALF_PLANE:
            _half_plane_probs(x, probs)
        else:
            _drift_probs(variant, kp, x, probs)
        for a in range(nd + 1):
            q[a] = probs[a]
        for a in range(nd + 1):
            if a != d:
                if probs[a] < kappa:
                    return t
                q[a] = probs[a] - kappa
            if q[a] < 0.0:
                q[a] = 0.0
        if degenerate:
            for a in range(nd + 1):
                if q[a] > 1e-12:
                    return -2 - t
                q[a] = 0.0
        else:
            for a in range(nd + 1):
                q[a] = q[a] / v0
        u1 = uniform_at(key, np.uint64(c))
        u2 = uniform_at(key, np.uint64(c + 1))
        c += 2
        for i in range(d):
            v[t, i] = 0
            zeta[t, i] = 0
        if u1 >= v0:
            j = int((u1 - v0) / kappa)
            if j > nd - 1:
                j = nd - 1
            # V atoms skip the zero displacement of the nearest-neighbour order
            a = j if j < d else j + 1
            coord = a if a < d else nd - a
            sgn = -1 if a < d else 1
            v[t, coord] = sgn
            x[coord] += sgn
        else:
            a = draw_atom(q, u2)
            if a != d:
                coord = a if a < d else nd - a
                sgn = -1 if a < d else 1
                zeta[t, coord] = sgn
                x[coord] += sgn
        for i in range(d):
            states[t + 1, i] = x[i]
    return -1


def decompose_trajectory(kernel: KernelSpec, params: AssumptionParams, x0, T: int,
                         rng: RandomStream) -> DecompositionTrace:
    """Run ``T`` skeleton steps from ``x0``, recording the ``(V, zeta)`` split.

    The isotropy bound is checked lazily at every visited state; a violation
    raises :class:`PreconditionError` naming the state.
    """
    if T < 0:
        raise UsageError("T must be nonnegative")
    x = kernel.check_state(x0)
    d = kernel.dim
    params.check_dim(d)
    states = np.zeros((T + 1, d), dtype=np.int64)
    v = np.zeros((T, d), dtype=np.int64)
    zeta = np.zeros((T, d), dtype=np.int64)
    if kernel.compiled and params.n0 == 1 and params.k == 1:
        status = _decompose_nn(kernel.code, kernel.kparams, kernel.env_key, x, T, params.kappa,
                               np.uint64(rng.key), np.uint64(rng.counter), states, v, zeta)
        if status != -1:
            t = status if status >= 0 else -2 - status
            state = tuple(int(c) for c in states[t])
            # rerun the exact check to produce the diagnostic
            cached_residual_law(kernel, params, state)
            raise InconsistencyError(f"at state {state}: residual mass with 1 - 2d kappa = 0")
        rng.counter += 2 * T
        return DecompositionTrace(states, v, zeta, params.n0)
    states[0] = x
    cur = x.copy()
    atoms = v_atoms(d, params.k)
    for t in range(T):
        law = cached_residual_law(kernel, params, tuple(int(c) for c in cur))
        u1, u2 = rng.uniform(), rng.uniform()
        j = _v_index(u1, law.v_zero_prob, law.kappa, 2 * d)
        if j >= 0:
            v[t] = atoms[j]
            cur = cur + atoms[j]
        else:
            inc = law.displacements[draw_atom(law.probs, u2)]
            zeta[t] = inc
            cur = cur + inc
        states[t + 1] = cur
    return DecompositionTrace(states, v, zeta, params.n0)


def infer_kappa(kernel: KernelSpec, states, k: int = 1, n0: int = 1) -> float:
    """Largest admissible kappa over the given states (min of the ``2d`` atom masses)."""
    return max_valid_kappa(kernel, states, k, n0)


@dataclass
class MomentBin:
    lo: float
    hi: float
    n: int
    mean: float
    se: float
    flagged: bool


@dataclass
class ResidualMomentReport:
    bound: float
    bins: list

    @property
    def flagged(self) -> list:
        return [b for b in self.bins if b.flagged]

    @property
    def passed(self) -> bool:
        return not self.flagged


def residual_moment_report(trace, B0: float, n0: int, n_bins: int = 8,
                           sigmas: float = 3.0) -> ResidualMomentReport:
    """Empirical ``E[|zeta|^2]`` binned by ``|xi*_t|``, against the bound ``n0^2 B0``.

    ``trace`` may be one trace or a list of traces.  A bin is flagged when
    its lower limit ``mean - sigmas * se`` exceeds the bound.
    """
    traces = trace if isinstance(trace, (list, tuple)) else [trace]
    norms = np.concatenate([np.linalg.norm(tr.states[:-1].astype(float), axis=1) for tr in traces])
    sq = np.concatenate([np.sum(tr.zeta.astype(float) ** 2, axis=1) for tr in traces])
    if sq.size == 0:
        raise EmptyReportError("trace has no steps")
    bound = n0 * n0 * B0
    edges = np.unique(quantiles(norms, np.linspace(0, 1, n_bins + 1)))
    if edges.size < 2:
        edges = np.array([norms.min(), norms.max()])
    idx = np.clip(np.searchsorted(edges, norms, side="right") - 1, 0, edges.size - 2)
    bins = []
    for b in range(edges.size - 1):
        vals = sq[idx == b]
        if vals.size == 0:
            continue
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        bins.append(MomentBin(float(edges[b]), float(edges[b + 1]), int(vals.size), mean, se,
                              mean - sigmas * se > bound))
    return ResidualMomentReport(bound, bins)
