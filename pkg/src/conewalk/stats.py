"""Proportion intervals, goodness-of-fit tests, quantiles and bootstrap medians."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, kolmogorov, ndtri

from .errors import DomainError, UsageError


@dataclass(frozen=True)
class ProportionCI:
    successes: int
    trials: int
    level: float
    lower: float
    upper: float

    @property
    def estimate(self) -> float:
        return self.successes / self.trials


@dataclass(frozen=True)
class GofReport:
    statistic: float
    dof: int
    p_value: float


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> ProportionCI:
    """Wilson score interval for a binomial proportion.

    Examples
    --------
    >>> ci = wilson_interval(50, 100)
    >>> round(ci.lower, 3), round(ci.upper, 3)
    (0.404, 0.596)
    """
    if trials < 1:
        raise UsageError("need at least one trial")
    if not 0 <= successes <= trials:
        raise UsageError("successes must lie in [0, trials]")
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    z = float(ndtri(0.5 + level / 2))
    n = float(trials)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return ProportionCI(int(successes), int(trials), level, min(lo, p), max(hi, p))


def chi2_sf(statistic: float, dof: int) -> float:
    """Upper tail of the chi-square law, via the regularized incomplete gamma function."""
    if dof < 1:
        raise UsageError("dof must be at least 1")
    if statistic <= 0:
        return 1.0
    return float(gammaincc(dof / 2.0, statistic / 2.0))


def chi_square_gof(observed, expected_probs, min_expected: float = 5.0) -> GofReport:
    """Pearson goodness of fit with ``categories - 1`` degrees of freedom."""
    obs = np.asarray(observed, dtype=np.float64)
    p = np.asarray(expected_probs, dtype=np.float64)
    if obs.shape != p.shape or obs.ndim != 1 or obs.size < 2:
        raise UsageError("observed and expected must be matching 1-d arrays with >= 2 categories")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("expected probabilities must be nonnegative and sum to 1")
    n = obs.sum()
    exp = n * p
    if np.any(exp < min_expected):
        raise UsageError(f"expected counts below {min_expected}; draw more samples or merge categories")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = obs.size - 1
    return GofReport(stat, dof, chi2_sf(stat, dof))


def ks_uniform(samples, a: float = 0.0, b: float = 1.0) -> GofReport:
    """One-sample Kolmogorov-Smirnov test against uniform on ``[a, b]`` (asymptotic p-value)."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n < 50:
        raise UsageError("KS test needs at least 50 samples for the asymptotic law")
    if not b > a:
        raise DomainError("need b > a")
    u = np.clip((x - a) / (b - a), 0.0, 1.0)
    i = np.arange(1, n + 1)
    stat = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    return GofReport(stat, n, float(kolmogorov(math.sqrt(n) * stat)))


def quantiles(values, probs) -> np.ndarray:
    """Empirical quantiles; the median of an even sample averages the central pair."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise UsageError("no values")
    return np.quantile(v, np.asarray(probs, dtype=np.float64), method="midpoint")


def bootstrap_median_ci(values, level: float, resamples: int, rng) -> tuple:
    """Percentile bootstrap interval for the median."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise UsageError("bootstrap needs at least two values")
    if resamples < 10:
        raise UsageError("use at least 10 resamples")
    idx = rng.integers(v.size, resamples * v.size).reshape(resamples, v.size)
    meds = np.quantile(v[idx], 0.5, axis=1, method="midpoint")
    lo, hi = quantiles(meds, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)
