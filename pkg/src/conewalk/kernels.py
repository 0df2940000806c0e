"""One-step transition laws on the integer lattice.

Built-in families all move by unit nearest-neighbour steps.  Their atom
probabilities are computed by a single compiled routine, :func:`atom_probs`,
which is shared by exact enumeration here and by the trajectory engine in
:mod:`conewalk.simulate`, so the law that is checked is the law that is
simulated.

Atoms are always listed in lexicographic order of the displacement::

    -e_1, -e_2, ..., -e_d, 0, +e_d, ..., +e_2, +e_1

Drift-field kernels (zero, radial, principal-direction) use the law
``P[+-e_i] = 1/(2d) +- mu_i(x)/2`` with each ``mu_i`` clamped to
``[-1/(2d), 1/(2d)]``; this realizes the drift exactly wherever the clamp is
inactive and keeps every directional probability at least ``1/(4d)``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, NamedTuple, Sequence

import numba as nb
import numpy as np

from .errors import DomainError, PreconditionError, UnsupportedError, UsageError
from .rng import GOLDEN, RandomStream, derive_key, mix64, uniform_at

ZERO_DRIFT = 0
RADIAL_DRIFT = 1
PRINCIPAL_A = 2
PRINCIPAL_B = 3
HALF_PLANE = 4
RWRE = 5
CUSTOM = -1

VARIANTS = {
    "zero": ZERO_DRIFT,
    "radial": RADIAL_DRIFT,
    "principal_a": PRINCIPAL_A,
    "principal_b": PRINCIPAL_B,
    "half_plane": HALF_PLANE,
    "rwre": RWRE,
    "custom": CUSTOM,
}

COORD_LIMIT = 2**62
PATH_CAP = 10**7
_SITE_OFFSET = np.int64(2**62)


# --------------------------------------------------------------------------
# compiled core


@nb.njit(cache=True, nogil=True)
def atom_displacement(a, d):
    """(coordinate, sign) of atom ``a``; sign 0 marks the zero displacement."""
    if a < d:
        return a, -1
    if a == d:
        return 0, 0
    return 2 * d - a, 1


@nb.njit(cache=True, nogil=True)
def site_environment(env_key, x, chi_bound, y_out, chi_out):
    d = x.shape[0]
    k = env_key
    for i in range(d):
        k = mix64(k ^ (np.uint64(x[i] + _SITE_OFFSET) * GOLDEN + np.uint64(i + 1)))
    total = 0.0
    for j in range(d):
        e = -math.log(1.0 - uniform_at(k, np.uint64(j)))
        y_out[j] = e
        total += e
    for j in range(d):
        y_out[j] = y_out[j] / total
        chi_out[j] = chi_bound * (2.0 * uniform_at(k, np.uint64(d + j)) - 1.0)


@nb.njit(cache=True, nogil=True, inline="always")
def _half_plane_probs(x, out):
    d = x.shape[0]
    out[d] = 0.0
    x1 = float(x[0])
    out[0] = (x1 - 1.0) / (4.0 * x1)
    out[2 * d] = (x1 + 1.0) / (4.0 * x1)
    out[1] = 0.25
    out[2 * d - 1] = 0.25


@nb.njit(cache=True, nogil=True)
def _rwre_probs(kp, env_key, x, out, scratch):
    d = x.shape[0]
    out[d] = 0.0
    r2 = 0.0
    for i in range(d):
        r2 += float(x[i]) * float(x[i])
    r = math.sqrt(r2)
    y = scratch[:d]
    chi = scratch[d:]
    site_environment(env_key, x, kp[2], y, chi)
    lo = 1.0 / (4.0 * d)
    hi = 1.0 - lo
    for i in range(d):
        base = lo + y[i] / 4.0
        p = base
        m = base
        if r > 0.0:
            p = base + chi[i] / r
            m = base - chi[i] / r
            if p < lo or p > hi or m < lo or m > hi:
                p = base
                m = base
        out[2 * d - i] = p
        out[i] = m


@nb.njit(cache=True, nogil=True, inline="always")
def _drift_probs(variant, kp, x, out):
    d = x.shape[0]
    half = 1.0 / (2.0 * d)
    out[d] = 0.0
    if variant == ZERO_DRIFT:
        for i in range(d):
            out[i] = half
            out[2 * d - i] = half
        return
    c = kp[0]
    beta = kp[1]
    # mu_i = scale * x_i for the radial field, mu_1 = scale otherwise
    scale = 0.0
    if variant == PRINCIPAL_B:
        if x[0] >= 1:
            scale = c * float(x[0]) ** (-beta)
    else:
        r2 = 0.0
        for i in range(d):
            r2 += float(x[i]) * float(x[i])
        if r2 > 0.0:
            inv = 1.0 / math.sqrt(r2)
            if beta == 1.0:
                scale = c * inv
            elif beta == 0.5:
                scale = c * math.sqrt(inv)
            else:
                scale = c * r2 ** (-0.5 * beta)
            if variant == RADIAL_DRIFT:
                scale *= inv
    for i in range(d):
        mu = 0.0
        if variant == RADIAL_DRIFT:
            mu = scale * float(x[i])
        elif i == 0:
            mu = scale
        if mu > half:
            mu = half
        elif mu < -half:
            mu = -half
        out[2 * d - i] = half + 0.5 * mu
        out[i] = half - 0.5 * mu


@nb.njit(cache=True, nogil=True)
def atom_probs(variant, kp, env_key, x, out, scratch):
    """Fill ``out`` (length 2d+1) with the atom probabilities at ``x``.

    ``kp`` holds ``(c, beta, chi_bound)``; ``scratch`` needs length ``2d``.
    The trajectory engine repeats this dispatch inline in its step loop.
    """
    if variant == RWRE:
        _rwre_probs(kp, env_key, x, out, scratch)
    elif variant == HALF_PLANE:
        _half_plane_probs(x, out)
    else:
        _drift_probs(variant, kp, x, out)


@nb.njit(cache=True, nogil=True, inline="always")
def draw_atom(probs, u):
    """Inverse-CDF draw; atoms of probability zero are never returned.

    The index is the number of partial sums not exceeding ``u``, which
    avoids a data-dependent branch per atom.  If rounding leaves ``u`` above
    the total mass the last atom of positive probability is returned.
    """
    n = probs.shape[0]
    cum = 0.0
    a = 0
    for b in range(n - 1):
        cum += probs[b]
        a += u >= cum
    if probs[a] > 0.0:
        return a
    while a > 0 and probs[a] <= 0.0:
        a -= 1
    return a


# --------------------------------------------------------------------------
# Python surface


class AtomTable(NamedTuple):
    """Displacements (rows of an int64 array) with their probabilities."""

    displacements: np.ndarray
    probs: np.ndarray

    def __iter__(self) -> Iterator:
        for y, p in zip(self.displacements, self.probs):
            yield tuple(int(v) for v in y), float(p)

    def __len__(self):
        return len(self.probs)

    def as_dict(self) -> dict:
        return dict(iter(self))

    def prob(self, displacement) -> float:
        return self.as_dict().get(tuple(int(v) for v in displacement), 0.0)

    def mean(self) -> np.ndarray:
        return self.probs @ self.displacements.astype(np.float64)

    def second_moment(self) -> float:
        sq = np.sum(self.displacements.astype(np.float64) ** 2, axis=1)
        return float(self.probs @ sq)


def _sorted_table(disps, probs) -> AtomTable:
    disps = np.asarray(disps, dtype=np.int64).reshape(len(probs), -1)
    probs = np.asarray(probs, dtype=np.float64)
    order = np.lexsort(disps.T[::-1])
    return AtomTable(disps[order], probs[order])


def nn_displacements(d: int) -> np.ndarray:
    """The 2d+1 nearest-neighbour displacements in canonical order."""
    out = np.zeros((2 * d + 1, d), dtype=np.int64)
    for a in range(2 * d + 1):
        i, s = atom_displacement(a, d)
        if s:
            out[a, i] = s
    return out


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Validate and convert a lattice point to an int64 array."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise UsageError(f"lattice point must be one-dimensional, got shape {arr.shape}")
    if arr.dtype.kind == "f":
        if not np.all(arr == np.round(arr)):
            raise DomainError(f"lattice point must have integer coordinates, got {x}")
    if np.any(np.abs(arr.astype(np.float64)) > COORD_LIMIT):
        raise OverflowError(f"coordinate beyond +-2**62 in {x}")
    arr = arr.astype(np.int64)
    if dim is not None and arr.shape[0] != dim:
        raise UsageError(f"expected a point of dimension {dim}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class SiteEnvironment:
    """Quenched environment at one site: simplex weights ``y`` and biases ``chi``."""

    y: tuple
    chi: tuple


@dataclass(frozen=True)
class KernelSpec:
    """A one-step transition law on Z^d.

    Use the constructors (:meth:`zero_drift`, :meth:`radial`, ...) rather
    than building instances directly.
    """

    variant: str
    dim: int = 2
    c: float = 0.0
    beta: float = 1.0
    env_seed: int = 0
    chi_bound: float = 0.125
    atoms_fn: Callable | None = None  # compared by identity, so caches never mix custom kernels
    sampler_fn: Callable | None = None
    support_radius: float | None = 1.0
    state_predicate: Callable | None = None
    name: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise UsageError(f"unknown kernel variant {self.variant!r}")
        if self.dim < 2:
            raise UsageError("lattice dimension must be at least 2")
        if self.variant == "half_plane" and self.dim != 2:
            raise UsageError("the half-plane excursion is defined here for d = 2 only")
        if self.variant in ("radial", "principal_a", "principal_b") and self.beta <= 0:
            raise DomainError("drift exponent beta must be positive")
        if self.variant == "rwre" and not 0 < self.chi_bound <= 0.125:
            raise DomainError("chi_bound must lie in (0, 1/8]")
        if self.variant == "custom" and self.atoms_fn is None and self.sampler_fn is None:
            raise UsageError("custom kernels need an atom table provider or a sampler")

    # constructors ---------------------------------------------------------

    @classmethod
    def zero_drift(cls, dim: int = 2) -> "KernelSpec":
        return cls("zero", dim)

    @classmethod
    def radial(cls, c: float, beta: float, dim: int = 2) -> "KernelSpec":
        """Drift ``c |x|^-beta x_hat``."""
        return cls("radial", dim, c=float(c), beta=float(beta))

    @classmethod
    def principal_a(cls, c: float, beta: float, dim: int = 2) -> "KernelSpec":
        """Drift ``c |x|^-beta e_1``."""
        return cls("principal_a", dim, c=float(c), beta=float(beta))

    @classmethod
    def principal_b(cls, c: float, beta: float, dim: int = 2) -> "KernelSpec":
        """Drift ``c x_1^-beta e_1`` for ``x_1 >= 1`` and zero elsewhere."""
        return cls("principal_b", dim, c=float(c), beta=float(beta))

    @classmethod
    def half_plane(cls) -> "KernelSpec":
        return cls("half_plane", 2)

    @classmethod
    def rwre(cls, env_seed: int, chi_bound: float = 0.125, dim: int = 2) -> "KernelSpec":
        return cls("rwre", dim, env_seed=int(env_seed), chi_bound=float(chi_bound))

    @classmethod
    def custom(cls, atoms_fn=None, dim: int = 2, *, sampler_fn=None, support_radius=1.0,
               state_predicate=None, name="custom") -> "KernelSpec":
        """Wrap a Python atom-table provider ``atoms_fn(x) -> [(y, p), ...]``.

        ``support_radius=None`` declares unbounded support; such kernels can
        only be sampled (through ``sampler_fn(x, rng)``), never enumerated.
        """
        return cls("custom", dim, atoms_fn=atoms_fn, sampler_fn=sampler_fn,
                   support_radius=support_radius, state_predicate=state_predicate, name=name)

    # properties -----------------------------------------------------------

    @property
    def code(self) -> int:
        return VARIANTS[self.variant]

    @property
    def compiled(self) -> bool:
        return self.code != CUSTOM

    @property
    def kparams(self) -> np.ndarray:
        return np.array([self.c, self.beta, self.chi_bound], dtype=np.float64)

    @property
    def env_key(self) -> np.uint64:
        return np.uint64(derive_key("rwre-environment", self.env_seed))

    @property
    def kernel_id(self) -> str:
        if self.name:
            return self.name
        v = self.variant
        if v in ("radial", "principal_a", "principal_b"):
            return f"{v}(c={self.c:g},beta={self.beta:g})"
        if v == "rwre":
            return f"rwre(seed={self.env_seed},chi={self.chi_bound:g})"
        return v

    @property
    def no_clamp_radius(self) -> float:
        """Radius beyond which no drift clamp can fire (drift-field kernels)."""
        if self.variant in ("radial", "principal_a"):
            if self.c == 0:
                return 0.0
            return (2.0 * self.dim * abs(self.c)) ** (1.0 / self.beta)
        if self.variant == "principal_b":
            return float("inf") if self.c else 0.0
        if self.variant == "rwre":
            # a site with tiny y_i clamps at any radius
            return float("inf")
        return 0.0

    def in_state_space(self, x) -> bool:
        x = np.asarray(x)
        if self.variant == "half_plane":
            return bool(x[0] >= 1)
        if self.state_predicate is not None:
            return bool(self.state_predicate(tuple(int(v) for v in x)))
        return True

    def check_state(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        if not self.in_state_space(x):
            raise DomainError(f"state {tuple(x)} is outside the state space of {self.kernel_id}")
        return x

    # laws -----------------------------------------------------------------

    def atoms(self, x) -> AtomTable:
        x = self.check_state(x)
        if self.compiled:
            d = self.dim
            out = np.empty(2 * d + 1)
            atom_probs(self.code, self.kparams, self.env_key, x, out, np.empty(2 * d))
            return AtomTable(nn_displacements(d), out)
        if self.support_radius is None or self.atoms_fn is None:
            raise UnsupportedError(
                f"{self.kernel_id} has unbounded or undeclared support and cannot be enumerated")
        pairs = list(self.atoms_fn(tuple(int(v) for v in x)))
        disps = [p[0] for p in pairs]
        probs = [p[1] for p in pairs]
        table = _sorted_table(disps, probs)
        if np.any(table.probs < 0) or abs(table.probs.sum() - 1.0) > 1e-12:
            raise DomainError(f"atom table of {self.kernel_id} at {tuple(x)} is not a distribution")
        if np.any(np.linalg.norm(table.displacements, axis=1) > self.support_radius + 1e-12):
            raise DomainError(f"atom of {self.kernel_id} outside declared support radius")
        return table


@functools.lru_cache(maxsize=1 << 16)
def _cached_atoms(kernel: KernelSpec, state: tuple) -> AtomTable:
    return kernel.atoms(state)


def enumerate_onestep(kernel: KernelSpec, x) -> AtomTable:
    """Exact one-step atom table at ``x``, sorted lexicographically."""
    return kernel.atoms(x)


def mean_drift(kernel: KernelSpec, x) -> np.ndarray:
    """The realized one-step mean drift ``sum_y p(y) y`` at ``x``."""
    return enumerate_onestep(kernel, x).mean()


def sample_increment(kernel: KernelSpec, x, rng: RandomStream) -> np.ndarray:
    """Draw one displacement from the kernel at ``x`` (one uniform per draw)."""
    if kernel.variant == "custom" and (kernel.support_radius is None or kernel.atoms_fn is None):
        x = kernel.check_state(x)
        return as_point(kernel.sampler_fn(tuple(int(v) for v in x), rng), kernel.dim)
    table = enumerate_onestep(kernel, x)
    a = draw_atom(table.probs, rng.uniform())
    return table.displacements[a].copy()


def rwre_site(env_seed: int, x, chi_bound: float = 0.125) -> SiteEnvironment:
    """The environment ``(Y, chi)`` at site ``x``; a pure function of its inputs."""
    x = as_point(x)
    d = x.shape[0]
    y = np.empty(d)
    chi = np.empty(d)
    site_environment(np.uint64(derive_key("rwre-environment", env_seed)), x, float(chi_bound), y, chi)
    return SiteEnvironment(tuple(y.tolist()), tuple(chi.tolist()))


def rwre_transition(env: SiteEnvironment, x) -> AtomTable:
    """Nearest-neighbour law at ``x`` given its site environment, with the origin clamp."""
    x = as_point(x, len(env.y))
    d = x.shape[0]
    r = float(np.sqrt(np.sum(x.astype(np.float64) ** 2)))
    lo = 1.0 / (4.0 * d)
    hi = 1.0 - lo
    probs = np.zeros(2 * d + 1)
    for i in range(d):
        base = lo + env.y[i] / 4.0
        p = m = base
        if r > 0.0:
            p = base + env.chi[i] / r
            m = base - env.chi[i] / r
            if p < lo or p > hi or m < lo or m > hi:
                p = m = base
        probs[2 * d - i] = p
        probs[i] = m
    return AtomTable(nn_displacements(d), probs)


# --------------------------------------------------------------------------
# n-step laws and assumption checks


def n_step_atoms(kernel: KernelSpec, x, n: int, *, path_cap: int = PATH_CAP) -> AtomTable:
    """Exact distribution of the displacement after ``n`` steps from ``x``.

    Computed by dynamic programming over reachable displacements, memoizing
    one-step tables by state.  Raises :class:`UnsupportedError` when the naive
    path count ``support**n`` exceeds ``path_cap``.
    """
    if n < 1:
        raise UsageError("number of steps must be at least 1")
    x = kernel.check_state(x)
    first = _cached_atoms(kernel, tuple(int(v) for v in x))
    if n == 1:
        return first
    support = len(first)
    if float(support) ** n > path_cap:
        raise UnsupportedError(
            f"{support}**{n} paths exceed the enumeration cap {path_cap}; lower n0")
    dist = {tuple([0] * kernel.dim): 1.0}
    for _ in range(n):
        nxt: dict = {}
        for w, pw in dist.items():
            state = tuple(int(a + b) for a, b in zip(x, w))
            for y, q in _cached_atoms(kernel, state):
                if q <= 0.0:
                    continue
                z = tuple(a + b for a, b in zip(w, y))
                nxt[z] = nxt.get(z, 0.0) + pw * q
        dist = nxt
    keys = list(dist)
    return _sorted_table(keys, [dist[k] for k in keys])


@dataclass(frozen=True)
class AssumptionParams:
    """Constants of the isotropy, moment and drift conditions.

    ``kappa, k, n0`` belong to the weak isotropy condition, ``B0`` (and
    optionally ``eps_plus``) to the increment moment bound, and
    ``beta, c, delta, A0`` to the radial/transverse drift conditions of the
    limiting-direction regime.
    """

    kappa: float
    k: int = 1
    n0: int = 1
    B0: float = 1.0
    eps_plus: float | None = None
    beta: float | None = None
    c: float | None = None
    delta: float | None = None
    A0: float | None = None
    transverse_cap: float | None = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError("kappa must be positive")
        if self.k < 1 or self.n0 < 1:
            raise DomainError("k and n0 must be positive integers")
        if not self.B0 > 0:
            raise DomainError("B0 must be positive")
        if self.beta is not None and not 0 < self.beta < 1:
            raise DomainError("beta must lie in (0, 1)")

    def check_dim(self, d: int):
        if 2 * d * self.kappa > 1 + 1e-15:
            raise DomainError(f"kappa={self.kappa} exceeds 1/(2d) = {1 / (2 * d)}")


@dataclass
class StateCheck:
    state: tuple
    a1_min: float
    a1: bool
    second_moment: float
    a2: bool
    a2_plus: bool | None = None
    radial_value: float | None = None
    radial: bool | None = None
    transverse_value: float | None = None
    transverse: bool | None = None

    @property
    def passed(self) -> bool:
        return all(v is not False for v in (self.a1, self.a2, self.a2_plus, self.radial, self.transverse))


@dataclass
class AssumptionReport:
    kernel_id: str
    params: AssumptionParams
    checks: list
    failures: list  # (state, clause, value)

    @property
    def passed(self) -> bool:
        return not self.failures

    def failing_states(self, clause_prefix: str = "") -> list:
        return sorted({s for s, c, _ in self.failures if c.startswith(clause_prefix)})

    @property
    def transverse_sup(self) -> float | None:
        vals = [c.transverse_value for c in self.checks if c.transverse_value is not None]
        return max(vals) if vals else None

    def summary(self) -> str:
        head = f"{self.kernel_id}: {len(self.checks)} states, {len(self.failures)} failing clauses"
        lines = [head] + [f"  {s} {c} value={v:.6g}" for s, c, v in self.failures[:20]]
        return "\n".join(lines)


def verify_assumptions(kernel: KernelSpec, params: AssumptionParams, states) -> AssumptionReport:
    """Check the assumption clauses exactly at each listed state.

    Isotropy uses the exact ``n0``-step atom probabilities at ``+-k e_i``;
    moments use the exact one-step table; the radial and transverse drift
    conditions are evaluated only at states with ``|x| > A0``.
    """
    states = [tuple(int(v) for v in kernel.check_state(s)) for s in states]
    if not states:
        raise UsageError("no states to verify")
    d = kernel.dim
    params.check_dim(d)
    targets = []
    for i in range(d):
        for sgn in (-1, 1):
            y = [0] * d
            y[i] = sgn * params.k
            label = f"A1[{'-' if sgn < 0 else '+'}{params.k}e{i + 1}]"
            targets.append((tuple(y), label))
    checks, failures = [], []
    for s in states:
        table = n_step_atoms(kernel, s, params.n0).as_dict()
        a1_vals = [(table.get(y, 0.0), lab) for y, lab in targets]
        a1_ok = True
        for v, lab in a1_vals:
            if v < params.kappa:
                a1_ok = False
                failures.append((s, lab, v))
        one = _cached_atoms(kernel, s)
        m2 = one.second_moment()
        a2_ok = m2 <= params.B0 + 1e-12
        if not a2_ok:
            failures.append((s, "A2", m2))
        chk = StateCheck(s, min(v for v, _ in a1_vals), a1_ok, m2, a2_ok)
        if params.eps_plus is not None:
            norms = np.linalg.norm(one.displacements.astype(float), axis=1)
            mp = float(one.probs @ norms ** (2 + params.eps_plus))
            chk.a2_plus = mp <= params.B0 + 1e-12
            if not chk.a2_plus:
                failures.append((s, "A2+", mp))
        r = math.sqrt(sum(v * v for v in s))
        if params.A0 is not None and r > params.A0 and params.beta is not None:
            mu = one.mean()
            xhat = np.asarray(s, dtype=float) / r
            radial = float(mu @ xhat)
            if params.c is not None:
                chk.radial_value = r ** params.beta * radial
                # the condition is an equality for exact drift fields; allow rounding
                chk.radial = chk.radial_value >= params.c - 1e-12 * abs(params.c)
                if not chk.radial:
                    failures.append((s, "radial", chk.radial_value))
            if params.delta is not None:
                perp = float(np.linalg.norm(mu - radial * xhat))
                chk.transverse_value = r ** (params.beta + params.delta) * perp
                cap = params.transverse_cap
                chk.transverse = math.isfinite(chk.transverse_value) and (
                    cap is None or chk.transverse_value <= cap)
                if not chk.transverse:
                    failures.append((s, "transverse", chk.transverse_value))
        checks.append(chk)
    return AssumptionReport(kernel.kernel_id, params, checks, failures)


def max_valid_kappa(kernel: KernelSpec, states, k: int = 1, n0: int = 1) -> float:
    """Largest kappa satisfying the isotropy bound over the given states."""
    d = kernel.dim
    best = 1.0 / (2 * d)
    for s in states:
        table = n_step_atoms(kernel, s, n0).as_dict()
        for i in range(d):
            for sgn in (-1, 1):
                y = [0] * d
                y[i] = sgn * k
                best = min(best, table.get(tuple(y), 0.0))
    return best


# --------------------------------------------------------------------------
# (k_i, n_i) -> (k, n0)


def _direction_map(directions, d=None) -> dict:
    if isinstance(directions, Mapping):
        out = {int(i): (int(v[0]), int(v[1])) for i, v in directions.items()}
    else:
        seq = list(directions)
        if len(seq) % 2:
            raise UsageError("need one (k_i, n_i) pair for each of the 2d signed directions")
        half = len(seq) // 2
        out = {}
        for j, (k_i, n_i) in enumerate(seq):
            idx = j + 1 if j < half else -(j - half + 1)
            out[idx] = (int(k_i), int(n_i))
    d = max(abs(i) for i in out)
    if set(out) != {s * i for i in range(1, d + 1) for s in (1, -1)}:
        raise UsageError("directions must be indexed by +-1, ..., +-d")
    if any(k < 1 or n < 1 for k, n in out.values()):
        raise DomainError("all k_i and n_i must be positive integers")
    return out


def normalize_a1_prime(directions) -> tuple:
    """Turn per-direction isotropy constants into a common ``(k, n0)``.

    ``directions`` maps each signed index ``i in {+-1, ..., +-d}`` to
    ``(k_i, n_i)``: displacement ``k_i sgn(i) e_|i|`` is reachable in
    ``n_i`` steps.  A plain sequence is read in the order ``+1..+d, -1..-d``.

    The construction first equalizes step counts within each axis
    (``n_i n_-i`` steps), then step sizes (``(k_i + k_-i) k_i k_-i`` in
    ``n (k_i + k_-i) max(k_i, k_-i)`` steps), then returns
    ``k = 2r, n0 = 2nr`` with ``n`` the product of all step counts and
    ``r`` the product of all step sizes.
    """
    dirs = _direction_map(directions)
    d = max(dirs)
    for i in range(1, d + 1):
        (kp, np_), (km, nm) = dirs[i], dirs[-i]
        if np_ != nm:
            dirs[i], dirs[-i] = (kp * nm, np_ * nm), (km * np_, np_ * nm)
    for i in range(1, d + 1):
        (kp, n), (km, _) = dirs[i], dirs[-i]
        if kp != km:
            size = (kp + km) * kp * km
            steps = n * (kp + km) * max(kp, km)
            dirs[i] = dirs[-i] = (size, steps)
    n = math.prod(v[1] for v in dirs.values())
    r = math.prod(v[0] for v in dirs.values())
    return 2 * r, 2 * n * r
