import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps
from statsmodels.stats.proportion import proportion_confint

from conewalk.errors import UsageError
from conewalk.rng import RandomStream
from conewalk.stats import (bootstrap_median_ci, chi2_sf, chi_square_gof, ks_uniform, quantiles,
                            wilson_interval)


@given(st.integers(1, 5000).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))),
       st.sampled_from([0.9, 0.95, 0.99]))
def test_wilson_matches_statsmodels(kn, level):
    k, n = kn
    ci = wilson_interval(k, n, level)
    lo, hi = proportion_confint(k, n, alpha=1 - level, method="wilson")
    assert ci.lower == pytest.approx(lo, abs=1e-12)
    assert ci.upper == pytest.approx(hi, abs=1e-12)
    assert ci.lower <= k / n <= ci.upper


def test_wilson_edges():
    assert wilson_interval(0, 10).lower == 0.0
    assert wilson_interval(10, 10).upper == 1.0
    with pytest.raises(UsageError):
        wilson_interval(3, 2)


@given(st.floats(0.01, 200), st.integers(1, 40))
def test_chi2_sf_matches_reference(x, k):
    assert chi2_sf(x, k) == pytest.approx(sps.chi2.sf(x, k), rel=1e-9, abs=1e-300)


def test_gof_known_value():
    rep = chi_square_gof([18, 22, 20, 40], [0.25] * 4)
    assert rep.statistic == pytest.approx(12.32)
    assert rep.dof == 3
    assert rep.p_value == pytest.approx(sps.chi2.sf(12.32, 3))


def test_gof_rejects_sparse_cells():
    with pytest.raises(UsageError):
        chi_square_gof([1, 2, 3], [0.98, 0.01, 0.01])


def test_ks_matches_scipy_asymptotic():
    x = RandomStream.from_seed(9).uniforms(400) ** 1.1
    rep = ks_uniform(x)
    ref = sps.kstest(x, "uniform", method="asymp")
    assert rep.statistic == pytest.approx(ref.statistic)
    assert rep.p_value == pytest.approx(ref.pvalue, rel=1e-6)


def test_quantiles_even_median_averages():
    assert quantiles([1, 2, 3, 4], [0.5])[0] == 2.5


def test_bootstrap_median_brackets_median():
    v = RandomStream.from_seed(1).normals(301)
    lo, hi = bootstrap_median_ci(v, 0.95, 500, RandomStream.from_seed(2))
    assert lo <= np.median(v) <= hi
    assert math.isfinite(lo) and hi - lo < 0.5
