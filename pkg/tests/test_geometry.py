import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conewalk.errors import DomainError, UsageError
from conewalk.geometry import (QUADRANT, Cone, LyapunovParams, cone_contains, cone_cover,
                               contour_axis_intercept, contour_distance, contour_point,
                               cover_is_verified, directional_derivative_h, h_nu, h_nu_truncated,
                               h_nu_truncated_increment, in_gamma, in_quadrant, inner_cone_angle,
                               perp2, project, unit_vector, wedge_map)
from conewalk.rng import RandomStream

nus = st.floats(0.02, 0.98)
angles = st.floats(-0.99 * math.pi / 4, 0.99 * math.pi / 4)
radii = st.floats(1.0, 1e8)


def polar(r, phi):
    return np.array([r * math.cos(phi), r * math.sin(phi)])


def test_unit_vector_examples():
    assert np.allclose(unit_vector((3, 4)), (0.6, 0.8))
    assert np.allclose(unit_vector((0, -2)), (0, -1))
    with pytest.raises(DomainError):
        unit_vector((0, 0))
    assert np.array_equal(perp2((1, 2)), (-2, 1))


def test_cone_contains_examples():
    c = Cone.around((1, 0), math.pi / 4)
    assert cone_contains(c, (1, 0))
    assert not cone_contains(c, (1, 1))
    assert not cone_contains(c, (0, 0))
    with pytest.raises(UsageError):
        cone_contains(c, (1, 0, 0))


def test_half_plane_cone_boundary_is_exact():
    c = Cone.around((1, 0), math.pi / 2)
    assert cone_contains(c, (1, 10**9))
    assert not cone_contains(c, (0, 5))


@given(st.floats(0.05, 3.0), st.lists(st.integers(-50, 50), min_size=3, max_size=3))
def test_cone_contains_matches_angle(alpha, x):
    assume(any(x))
    c = Cone.around((1, 1, 0), alpha)
    cosang = np.dot(c.axis, x) / np.linalg.norm(x)
    assume(abs(cosang - math.cos(alpha)) > 1e-9)
    assert cone_contains(c, x) == (cosang > math.cos(alpha))


def test_h_examples():
    assert h_nu(0.2, (32, 0)) == pytest.approx(0.25, abs=1e-9)
    assert h_nu(0.5, (4, 0)) == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(DomainError):
        h_nu(0.2, (1, 1))
    assert h_nu_truncated(0.3, (-5, 2)) == 1.0
    assert h_nu_truncated(0.5, (1, 0)) == 1.0
    assert h_nu_truncated(0.2, (32, 0)) == pytest.approx(0.25, abs=1e-9)


def test_gamma_examples():
    assert in_gamma(LyapunovParams(0.2, 0.5), (32, 0))
    assert not in_gamma(LyapunovParams(0.2, 0.2), (32, 0))
    assert not in_gamma(LyapunovParams(0.2, 0.5), (0, 1))


def test_intercept_examples():
    assert contour_axis_intercept(0.2, 0.25) == pytest.approx(32, abs=1e-9)
    assert contour_axis_intercept(0.37, 1.0) == 1.0
    assert contour_axis_intercept(0.5, 0.25) == pytest.approx(4.0)
    with pytest.raises(DomainError):
        contour_axis_intercept(0.2, 0.0)


@given(nus, st.floats(1e-3, 10))
def test_h_at_intercept(nu, c):
    x0 = contour_axis_intercept(nu, c)
    assume(x0 < 1e300)
    assert h_nu(nu, (x0, 0)) == pytest.approx(c, rel=1e-9)


@given(nus, st.floats(0.01, 1.0), st.floats(1.0, 1e4), radii, angles)
def test_gamma_nesting(nu, s, factor, r, phi):
    x = polar(r, phi)
    small, big = LyapunovParams(nu, s), LyapunovParams(nu, s * factor)
    if in_gamma(small, x):
        assert in_gamma(big, x)
        assert in_quadrant(x)


@given(nus, radii, angles)
def test_truncation_range(nu, r, phi):
    x = polar(r, phi)
    t = h_nu_truncated(nu, x)
    assert 0 <= t <= 1
    h = h_nu(nu, x)
    if h < 1:
        assert t == h


def test_truncated_infimum_off_gamma():
    # min(h, 1) over points just outside {h < s} approaches min(1, s)
    rng = RandomStream.from_seed(5, "inf")
    for nu, s in [(0.2, 0.25), (0.1, 0.5), (0.3, 2.0)]:
        vals = []
        for u in rng.uniforms(2000).reshape(-1, 2):
            r = contour_axis_intercept(nu, min(s, 1.0)) * (1 + 50 * u[0])
            if s < 1:
                c = contour_point(nu, s, r)
                p = polar(r, math.atan2(c[1], c[0]) + 1e-9)
            else:
                p = np.array([r * math.cos(math.pi / 4 * (1 - 1e-9)), r * math.sin(math.pi / 4 * (1 - 1e-9))])
            if not in_gamma(LyapunovParams(nu, s), p):
                vals.append(h_nu_truncated(nu, p))
        assert min(vals) == pytest.approx(min(1.0, s), rel=1e-6)
        assert min(vals) >= min(1.0, s) * (1 - 1e-9)


def _h_mp(nu, x):
    x1, x2 = mpmath.mpf(x[0]), mpmath.mpf(x[1])
    if not x1 > abs(x2):
        return mpmath.mpf(1)
    return min((x1 * x1 + x2 * x2) ** (1 - mpmath.mpf(nu)) / (x1 * x1 - x2 * x2), mpmath.mpf(1))


@given(st.floats(0.02, 0.5), st.integers(2, 10**12), st.floats(-0.99, 0.99),
       st.sampled_from([(1, 0), (-1, 0), (0, 1), (0, -1), (0, 0), (2, -1)]))
def test_truncated_increment_matches_high_precision(nu, r, frac, y):
    with mpmath.workdps(60):
        x = (r, int(round(r * math.tan(math.pi / 4 * frac))))
        want = _h_mp(nu, (x[0] + y[0], x[1] + y[1])) - _h_mp(nu, x)
        got = h_nu_truncated_increment(nu, x, y)
        assert abs(got - float(want)) <= 1e-12 * abs(float(want)) + 1e-300


def test_derivative_examples():
    assert directional_derivative_h(0.5, (2, 0), (1, 0)) == pytest.approx(-0.25)
    assert directional_derivative_h(0.5, (2, 0), (0, 1)) == pytest.approx(0.0, abs=1e-15)
    x, y = np.array([10.0, 3.0]), np.array([1.0, 1.0])
    eps = 1e-5 * np.linalg.norm(x)
    fd = (h_nu(0.2, x + eps * y) - h_nu(0.2, x - eps * y)) / (2 * eps)
    assert directional_derivative_h(0.2, x, y) == pytest.approx(fd, rel=1e-6)


@given(nus, st.floats(2.0, 1e6), st.floats(-math.pi / 8, math.pi / 8), st.floats(0, 2 * math.pi))
def test_derivative_central_differences(nu, r, phi, a):
    x, y = polar(r, phi), np.array([math.cos(a), math.sin(a)])
    eps = 1e-5 * r
    fd = (h_nu(nu, x + eps * y) - h_nu(nu, x - eps * y)) / (2 * eps)
    an = directional_derivative_h(nu, x, y)
    grad = math.hypot(directional_derivative_h(nu, x, (1, 0)), directional_derivative_h(nu, x, (0, 1)))
    # measured against the gradient norm: a direction tangent to a level set has derivative ~0
    assert abs(an - fd) <= 1e-6 * grad


def test_contour_divergence_scale():
    # distance between nested level curves grows like |x|^(1 - 2 nu) / 2 * (1/c2 - 1/c1)
    nu, c1, c2 = 0.2, 0.5, 0.25
    for r in (1e4, 1e5, 1e6):
        x = contour_point(nu, c1, r)
        ratio = contour_distance(nu, c2, x) / (0.5 * (1 / c2 - 1 / c1) * r ** (1 - 2 * nu))
        assert ratio == pytest.approx(1.0, rel=0.1)


def test_wedge_map_examples():
    a = math.pi / 6
    assert np.allclose(wedge_map(a, (1, 1)), (math.sqrt(3) / 2, 0.5))
    assert np.allclose(wedge_map(a, (1, 0)), (math.sqrt(3) / 2, 0))
    with pytest.raises(DomainError):
        wedge_map(math.pi / 3, (1, 0))


@given(st.floats(0.01, math.pi / 4 - 0.01), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_wedge_map_roundtrip_and_membership(a, x1, x2):
    x = np.array([x1, x2])
    back = wedge_map(a, wedge_map(a, x), "inverse")
    assert np.allclose(back, x, rtol=1e-12, atol=1e-9)
    z = wedge_map(a, x)
    w = Cone((1.0, 0.0), a)
    # compare away from the boundary, where both tests are well conditioned
    assume(abs(abs(x2) - x1) > 1e-6 * (abs(x1) + abs(x2)) + 1e-9)
    assert in_quadrant(x) == cone_contains(w, z)


def test_project_examples():
    assert np.array_equal(project(1, (7, -2, 5)), (7, -2))
    assert np.array_equal(project(2, (7, -2, 5)), (7, 5))
    with pytest.raises(UsageError):
        project(3, (7, -2, 5))


def test_inner_cone_angle_examples():
    assert inner_cone_angle(0.3, 2) == pytest.approx(0.3)
    assert inner_cone_angle(math.pi / 4, 5) == pytest.approx(math.atan(0.5))
    assert inner_cone_angle(1e-9, 7) < 1e-9


@pytest.mark.parametrize("d,alpha", [(3, 0.5), (5, math.pi / 4), (8, 1.2)])
def test_inner_cone_containment_by_sampling(d, alpha):
    ap = inner_cone_angle(alpha, d)
    rng = RandomStream.from_seed(d, "rect")
    n = 10**5
    u = rng.uniforms(n * (d - 1)).reshape(n, d - 1)
    x = np.column_stack([np.ones(n), (2 * u - 1) * math.tan(ap)])
    cone = Cone.around(np.eye(d)[0], alpha)
    assert all(cone_contains(cone, p) for p in x[:20000])
    cosang = x[:, 0] / np.linalg.norm(x, axis=1)
    assert np.all(cosang > math.cos(alpha))
    for j in range(1, d):
        assert np.all(np.abs(x[:, j]) < x[:, 0] * math.tan(ap))


def test_inner_cone_angle_is_sharp():
    d, alpha = 4, 0.7
    t = math.tan(inner_cone_angle(alpha, d)) * (1 + 1e-6)
    x = np.array([1.0] + [t] * (d - 1))
    assert not cone_contains(Cone.around(np.eye(d)[0], alpha), x)


def test_cone_cover_examples():
    four = cone_cover(2, math.pi / 2)
    assert len(four) == 4
    assert cover_is_verified(four, math.pi / 2)
    tenth = cone_cover(2, 0.1)
    assert len(tenth) == math.ceil(2 * math.pi / 0.1)
    assert cover_is_verified(tenth, 0.1)
    three = cone_cover(3, 0.5)
    assert cover_is_verified(three, 0.5, rng=RandomStream.from_seed(77))
    four_d = cone_cover(4, 0.9)
    assert cover_is_verified(four_d, 0.9, rng=RandomStream.from_seed(78))


def test_quadrant_constant():
    assert cone_contains(QUADRANT, (5, 4)) and not cone_contains(QUADRANT, (5, 5))
