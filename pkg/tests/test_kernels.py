import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conewalk.errors import DomainError, UnsupportedError, UsageError
from conewalk.kernels import (AssumptionParams, KernelSpec, SiteEnvironment, enumerate_onestep,
                              max_valid_kappa, mean_drift, n_step_atoms, normalize_a1_prime,
                              rwre_site, rwre_transition, sample_increment, verify_assumptions)
from conewalk.rng import RandomStream
from conewalk.stats import ks_uniform

BUILTINS = [
    KernelSpec.zero_drift(2), KernelSpec.zero_drift(3), KernelSpec.radial(1, 1), KernelSpec.radial(-2, 0.5, 3),
    KernelSpec.principal_a(0.7, 0.5), KernelSpec.principal_b(1, 0.3), KernelSpec.rwre(3),
    KernelSpec.rwre(4, 0.05, 3),
]
coords = st.integers(-10**9, 10**9)


def _point(kernel, data):
    x = [data.draw(coords) for _ in range(kernel.dim)]
    return x


@pytest.mark.parametrize("kernel", BUILTINS, ids=lambda k: f"{k.kernel_id}-d{k.dim}")
def test_atom_tables_are_distributions(kernel):
    rng = RandomStream.from_seed(1, kernel.kernel_id, kernel.dim)
    pts = (rng.integers(2001, 10**4 * kernel.dim) - 1000).reshape(-1, kernel.dim)
    for x in pts:
        t = enumerate_onestep(kernel, x)
        assert np.all(t.probs >= 0)
        assert abs(t.probs.sum() - 1) <= 1e-12
        assert np.all(np.abs(t.displacements).sum(axis=1) <= 1)
        assert t.second_moment() <= 1 + 1e-12
        assert np.allclose(mean_drift(kernel, x), (t.probs[:, None] * t.displacements).sum(0), atol=1e-12)


def test_half_plane_table_examples():
    k = KernelSpec.half_plane()
    t = enumerate_onestep(k, (1, 5)).as_dict()
    assert t[(1, 0)] == 0.5 and t[(-1, 0)] == 0 and t[(0, 1)] == 0.25 and t[(0, -1)] == 0.25
    t = enumerate_onestep(k, (2, 0)).as_dict()
    assert t[(1, 0)] == 3 / 8 and t[(-1, 0)] == 1 / 8
    assert np.allclose(mean_drift(k, (4, 9)), (0.125, 0))
    with pytest.raises(DomainError):
        enumerate_onestep(k, (0, 3))


@given(st.integers(1, 10**6), st.integers(-10**6, 10**6))
def test_half_plane_closed_form(x1, x2):
    t = enumerate_onestep(KernelSpec.half_plane(), (x1, x2)).as_dict()
    assert t[(1, 0)] == float(Fraction(x1 + 1, 4 * x1))
    assert t[(-1, 0)] == float(Fraction(x1 - 1, 4 * x1))
    assert t[(0, 0)] == 0.0


def test_table_sorted_lexicographically():
    t = enumerate_onestep(KernelSpec.zero_drift(2), (0, 0))
    rows = [tuple(r) for r in t.displacements]
    assert rows == sorted(rows)


def test_drift_examples():
    assert np.allclose(mean_drift(KernelSpec.radial(1, 1), (3, 4)), (0.12, 0.16), atol=1e-15)
    assert np.array_equal(mean_drift(KernelSpec.zero_drift(3), (5, -1, 2)), (0, 0, 0))
    assert np.array_equal(mean_drift(KernelSpec.radial(1, 1), (0, 0)), (0, 0))


@given(st.data(), st.sampled_from([(1.0, 1.0), (-1.0, 1.0), (1.0, 0.5), (3.0, 0.7)]), st.integers(2, 4))
def test_radial_field_realized_exactly_off_clamp(data, cb, d):
    c, beta = cb
    k = KernelSpec.radial(c, beta, d)
    x = np.array([data.draw(st.integers(-10**6, 10**6)) for _ in range(d)])
    r = np.linalg.norm(x)
    if r <= k.no_clamp_radius:
        return
    want = c * r ** (-beta) * x / r
    assert np.allclose(mean_drift(k, x), want, rtol=1e-12, atol=1e-15)


@given(st.integers(1, 10**6), st.integers(-10**6, 10**6))
def test_principal_drifts(x1, x2):
    a = KernelSpec.principal_a(1.0, 0.5)
    r = math.hypot(x1, x2)
    if r > a.no_clamp_radius:
        assert np.allclose(mean_drift(a, (x1, x2)), (r ** -0.5, 0), rtol=1e-12)
    b = KernelSpec.principal_b(0.1, 0.5)
    assert np.allclose(mean_drift(b, (x1, x2)), (min(0.1 * x1 ** -0.5, 0.25), 0), rtol=1e-12)
    assert np.array_equal(mean_drift(b, (-x1, x2)), (0, 0))


def test_drift_clamp_keeps_probabilities_valid():
    k = KernelSpec.radial(100, 1)
    t = enumerate_onestep(k, (1, 0)).as_dict()
    assert t[(-1, 0)] >= 1 / 8 - 1e-15 and t[(1, 0)] <= 3 / 8 + 1e-15


def test_sample_increment_respects_zero_atom():
    k = KernelSpec.half_plane()
    rng = RandomStream.from_seed(3)
    draws = np.array([sample_increment(k, (1, 0), rng) for _ in range(10**5)])
    assert not np.any((draws == (-1, 0)).all(axis=1))


def test_sample_increment_mean_zero():
    k = KernelSpec.zero_drift(2)
    rng = RandomStream.from_seed(4)
    draws = np.array([sample_increment(k, (0, 0), rng) for _ in range(10**5)])
    se = draws.std(axis=0) / math.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0)) <= 3 * se)


def test_sample_increment_deterministic():
    k = KernelSpec.radial(1, 0.5)
    a = [tuple(sample_increment(k, (5, 5), RandomStream.from_seed(9, i))) for i in range(50)]
    b = [tuple(sample_increment(k, (5, 5), RandomStream.from_seed(9, i))) for i in range(50)]
    assert a == b


def test_custom_kernel_checks():
    k = KernelSpec.custom(lambda x: [((1, 0), 0.5), ((0, 1), 0.5)])
    assert enumerate_onestep(k, (0, 0)).prob((1, 0)) == 0.5
    bad = KernelSpec.custom(lambda x: [((1, 0), 0.5), ((0, 1), 0.4)])
    with pytest.raises(DomainError):
        enumerate_onestep(bad, (0, 0))
    far = KernelSpec.custom(lambda x: [((3, 0), 1.0)])
    with pytest.raises(DomainError):
        enumerate_onestep(far, (0, 0))
    unbounded = KernelSpec.custom(None, sampler_fn=lambda x, rng: (1, 0), support_radius=None)
    with pytest.raises(UnsupportedError):
        enumerate_onestep(unbounded, (0, 0))
    with pytest.raises(UsageError):
        KernelSpec("half_plane", 3)


# --------------------------------------------------------------------------
# random environment


def test_rwre_site_is_pure():
    assert rwre_site(7, (3, -4)) == rwre_site(7, (3, -4))
    assert rwre_site(7, (3, -4)) != rwre_site(8, (3, -4))


def test_rwre_site_simplex_and_bounds():
    rng = RandomStream.from_seed(5, "sites")
    pts = rng.integers(2 * 10**6, 2 * 10**4).reshape(-1, 2) - 10**6
    for x in pts:
        env = rwre_site(1, x, 0.1)
        assert abs(sum(env.y) - 1) <= 1e-12 and min(env.y) >= 0
        assert max(abs(c) for c in env.chi) <= 0.1


def test_rwre_chi_uniform_ks():
    rng = RandomStream.from_seed(6, "ks")
    pts = rng.integers(2 * 10**7, 2 * 10**5).reshape(-1, 2) - 10**7
    chi = np.array([rwre_site(2, x, 0.125).chi[0] for x in pts])
    assert ks_uniform(chi, -0.125, 0.125).p_value > 0.01


def test_rwre_transition_examples():
    t = rwre_transition(SiteEnvironment((0.5, 0.5), (0.0, 0.0)), (9, 2)).as_dict()
    assert all(t[y] == pytest.approx(0.25) for y in [(1, 0), (-1, 0), (0, 1), (0, -1)])
    env = SiteEnvironment((0.3, 0.7), (0.1, -0.05))
    t = rwre_transition(env, (30, 40)).as_dict()
    assert t[(1, 0)] - t[(-1, 0)] == pytest.approx(2 * 0.1 / 50, abs=1e-15)
    assert t[(0, 1)] - t[(0, -1)] == pytest.approx(2 * -0.05 / 50, abs=1e-15)
    clamp = rwre_transition(SiteEnvironment((0.0, 1.0), (0.125, 0.0)), (1, 0)).as_dict()
    assert clamp[(1, 0)] == clamp[(-1, 0)] == pytest.approx(1 / 8)


def test_rwre_kernel_uses_site_environment():
    k = KernelSpec.rwre(12, 0.1)
    for x in [(5, 7), (-3, 100), (0, 1)]:
        a = enumerate_onestep(k, x)
        b = rwre_transition(rwre_site(12, x, 0.1), x)
        assert np.array_equal(a.displacements, b.displacements)
        assert np.array_equal(a.probs, b.probs)


# --------------------------------------------------------------------------
# assumptions


def test_n_step_examples():
    z = KernelSpec.zero_drift(2)
    assert np.array_equal(n_step_atoms(z, (0, 0), 1).probs, enumerate_onestep(z, (0, 0)).probs)
    two = n_step_atoms(z, (0, 0), 2)
    assert two.prob((2, 0)) == pytest.approx(1 / 16)
    assert abs(two.probs.sum() - 1) < 1e-12
    d = two.as_dict()
    assert all(d[y] == pytest.approx(d[tuple(-v for v in y)]) for y in d)


def test_verify_examples():
    z = KernelSpec.zero_drift(2)
    rep = verify_assumptions(z, AssumptionParams(0.125), [(0, 0), (5, -3), (100, 100)])
    assert rep.passed
    for n0 in (1, 3):
        hp = verify_assumptions(KernelSpec.half_plane(), AssumptionParams(0.01, n0=n0),
                                [(1, 0), (2, 0), (5, 5)])
        assert hp.failing_states("A1[-") == [(1, 0)]
    rad = KernelSpec.radial(1, 0.5)
    states = [(x, y) for x in range(-40, 41, 7) for y in range(-40, 41, 9)]
    params = AssumptionParams(0.05, beta=0.5, c=1.0, delta=0.5, A0=rad.no_clamp_radius)
    rep = verify_assumptions(rad, params, states)
    assert rep.passed
    assert rep.transverse_sup is not None and rep.transverse_sup < 1e-10
    # inside the clamp radius the realized drift is weaker than the field
    near = verify_assumptions(rad, AssumptionParams(0.05, beta=0.5, c=1.0, A0=10), states)
    bad = near.failing_states("radial")
    assert bad and all(10 < math.hypot(*s) <= rad.no_clamp_radius for s in bad)


def test_verify_reports_moment_and_kappa_failures():
    rep = verify_assumptions(KernelSpec.zero_drift(2), AssumptionParams(0.25, B0=0.5), [(0, 0)])
    clauses = {c for _, c, _ in rep.failures}
    assert "A2" in clauses
    assert max_valid_kappa(KernelSpec.zero_drift(2), [(0, 0)]) == 0.25


def test_path_cap():
    with pytest.raises(UnsupportedError):
        n_step_atoms(KernelSpec.zero_drift(3), (0, 0, 0), 12, path_cap=1000)


def test_normalize_examples():
    assert normalize_a1_prime([(1, 1)] * 4) == (2, 2)
    assert normalize_a1_prime([(1, 1), (1, 2), (1, 1), (1, 2)]) == (2, 8)


@given(st.integers(1, 3).flatmap(lambda d: st.lists(st.tuples(st.integers(1, 4), st.integers(1, 4)),
                                                     min_size=2 * d, max_size=2 * d)))
def test_normalize_structure(pairs):
    k, n0 = normalize_a1_prime(pairs)
    assert k % 2 == 0 and n0 % 2 == 0
    assert n0 % (2 * math.prod(n for _, n in pairs)) == 0


def test_distinct_custom_kernels_do_not_share_tables():
    a = KernelSpec.custom(lambda x: [((1, 0), 1.0)])
    b = KernelSpec.custom(lambda x: [((0, 1), 1.0)])
    assert a != b
    assert enumerate_onestep(a, (0, 0)).prob((1, 0)) == 1.0
    assert enumerate_onestep(b, (0, 0)).prob((1, 0)) == 0.0
