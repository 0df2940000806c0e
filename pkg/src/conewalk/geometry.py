"""Cones, wedges and the quadrant Lyapunov function.

The quadrant is ``Q = {x in R^2 : x_1 > |x_2|}``, the open cone of half-angle
pi/4 about ``e_1``.  On ``Q`` the Lyapunov function is

    h(x) = (x_1^2 + x_2^2)^(1 - nu) / (x_1^2 - x_2^2) = r^(-2 nu) / cos(2 phi)

which blows up at the boundary of ``Q`` and decays along rays inside it.  Its
truncation ``min(h, 1)`` (set to 1 off ``Q``) is bounded, and its sublevel
sets ``{0 < h < s}`` are the regions a walk with outward drift tends to stay
in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import qmc

from ._engine import cone_test
from .errors import DomainError, UsageError
from .rng import RandomStream


def _vec(x, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise UsageError(f"expected a vector of length >= 2, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise UsageError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("vector entries must be finite")
    return arr


def _plane(x) -> tuple:
    arr = _vec(x, 2)
    return float(arr[0]), float(arr[1])


def unit_vector(x) -> np.ndarray:
    """Return ``x / |x|``; the zero vector is rejected."""
    arr = _vec(x)
    n = np.linalg.norm(arr)
    if n == 0:
        raise DomainError("the zero vector has no direction")
    return arr / n


def perp2(x) -> np.ndarray:
    """Rotate a planar vector by +pi/2: ``(x_1, x_2) -> (-x_2, x_1)``."""
    x1, x2 = _plane(x)
    return np.array([-x2, x1])


@dataclass(frozen=True)
class Cone:
    """Open circular cone ``{x : axis . x_hat > cos(half_angle)}``.

    Parameters
    ----------
    axis : array_like
        Unit vector (norm within 1e-12 of one).
    half_angle : float
        Opening half-angle in (0, pi).
    """

    axis: tuple
    half_angle: float

    def __post_init__(self):
        a = _vec(self.axis)
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise DomainError("cone axis must be a unit vector")
        if not 0 < self.half_angle < math.pi:
            raise DomainError("half-angle must lie in (0, pi)")
        object.__setattr__(self, "axis", tuple(float(v) for v in a))

    @classmethod
    def around(cls, direction, half_angle: float) -> "Cone":
        """Cone about the (not necessarily unit) ``direction``."""
        return cls(tuple(unit_vector(direction)), float(half_angle))

    @property
    def dim(self) -> int:
        return len(self.axis)

    @property
    def cos_half_angle(self) -> float:
        c = math.cos(self.half_angle)
        # cos(pi/2) is 6e-17 in floating point; snap so the half-space is exact
        return 0.0 if abs(c) < 1e-15 else c


def cone_contains(cone: Cone, x) -> bool:
    """Strict membership in the open cone; the apex is excluded."""
    arr = _vec(x, cone.dim)
    r2 = float(arr @ arr)
    if r2 == 0.0:
        return False
    return bool(cone_test(float(np.dot(cone.axis, arr)), r2, cone.cos_half_angle))


QUADRANT = Cone((1.0, 0.0), math.pi / 4)


def in_quadrant(x) -> bool:
    x1, x2 = _plane(x)
    return x1 > abs(x2)


# --------------------------------------------------------------------------
# Lyapunov function on the quadrant


@dataclass(frozen=True)
class LyapunovParams:
    """Exponent ``nu`` in (0, 1) and sublevel ``s > 0``."""

    nu: float
    s: float

    def __post_init__(self):
        if not 0 < self.nu < 1:
            raise DomainError("nu must lie in (0, 1)")
        if not self.s > 0:
            raise DomainError("s must be positive")


def _h_parts(x1: float, x2: float, nu: float) -> tuple:
    r2 = x1 * x1 + x2 * x2
    diff = (x1 - x2) * (x1 + x2)
    return r2, diff


def h_nu(nu: float, x) -> float:
    """``(x_1^2 + x_2^2)^(1-nu) / (x_1^2 - x_2^2)`` for ``x`` strictly inside Q."""
    x1, x2 = _plane(x)
    if not x1 > abs(x2):
        raise DomainError(f"h is defined only inside the quadrant, got {(x1, x2)}")
    r2, diff = _h_parts(x1, x2, nu)
    return r2 ** (1.0 - nu) / diff


def h_nu_truncated(nu: float, x) -> float:
    """``min(h, 1)`` inside Q and exactly 1 elsewhere."""
    x1, x2 = _plane(x)
    if not x1 > abs(x2):
        return 1.0
    return min(h_nu(nu, (x1, x2)), 1.0)


def h_nu_truncated_increment(nu: float, x, y) -> float:
    """``min(h,1)(x + y) - min(h,1)(x)`` without cancellation.

    When both endpoints lie in the untruncated region the ratio
    ``h(x+y)/h(x)`` is formed through ``log1p`` and the difference through
    ``expm1``, so the result keeps full relative precision even when the
    increment is many orders of magnitude below ``h(x)``.
    """
    x1, x2 = _plane(x)
    y1, y2 = _plane(y)
    z1, z2 = x1 + y1, x2 + y2
    hx = h_nu_truncated(nu, (x1, x2))
    if hx >= 1.0:
        return h_nu_truncated(nu, (z1, z2)) - hx
    if not z1 > abs(z2):
        return 1.0 - hx
    r2, diff = _h_parts(x1, x2, nu)
    a = (2.0 * (x1 * y1 + x2 * y2) + y1 * y1 + y2 * y2) / r2
    b = (2.0 * (x1 * y1 - x2 * y2) + y1 * y1 - y2 * y2) / diff
    log_ratio = (1.0 - nu) * math.log1p(a) - math.log1p(b)
    if log_ratio >= -math.log(hx):
        return 1.0 - hx
    return hx * math.expm1(log_ratio)


def in_gamma(p: LyapunovParams, x) -> bool:
    """True iff ``x`` is in Q and ``h(x) < s``."""
    x1, x2 = _plane(x)
    if not x1 > abs(x2):
        return False
    return h_nu(p.nu, (x1, x2)) < p.s


def contour_axis_intercept(nu: float, c: float) -> float:
    """Where the level curve ``{h = c}`` crosses the positive ``x_1``-axis."""
    if not c > 0:
        raise DomainError("contour level must be positive")
    if not 0 < nu < 1:
        raise DomainError("nu must lie in (0, 1)")
    return c ** (-1.0 / (2.0 * nu))


def contour_point(nu: float, c: float, r: float) -> np.ndarray:
    """Point of the upper branch of ``{h = c}`` at radius ``r``."""
    r0 = contour_axis_intercept(nu, c)
    if r < r0:
        raise DomainError(f"the level curve has no point at radius {r} < {r0}")
    phi = 0.5 * math.acos(r ** (-2.0 * nu) / c)
    return np.array([r * math.cos(phi), r * math.sin(phi)])


def contour_distance(nu: float, c: float, x) -> float:
    """Euclidean distance from ``x`` to the upper branch of ``{h = c}``."""
    x = _vec(x, 2)
    rx = float(np.linalg.norm(x))
    r0 = contour_axis_intercept(nu, c)
    lo = math.log(r0)
    hi = math.log(max(4.0 * rx, 4.0 * r0))

    def dist(t):
        return float(np.linalg.norm(contour_point(nu, c, max(math.exp(t), r0)) - x))

    centre = min(max(math.log(max(rx, r0)), lo), hi)
    res = minimize_scalar(dist, bounds=(max(lo, centre - 1.0), min(hi, centre + 1.0)),
                          method="bounded", options={"xatol": 1e-13})
    return min(float(res.fun), dist(lo))


def directional_derivative_h(nu: float, x, y) -> float:
    """Derivative of ``h`` at ``x`` in direction ``y`` (closed form)."""
    x1, x2 = _plane(x)
    if not x1 > abs(x2):
        raise DomainError(f"h is differentiable only inside the quadrant, got {(x1, x2)}")
    y = _vec(y, 2)
    r = math.hypot(x1, x2)
    h = h_nu(nu, (x1, x2))
    xhat = np.array([x1, x2]) / r
    xperp = np.array([-x2, x1]) / r
    radial = float(y @ xhat)
    angular = float(y @ xperp)
    inner = radial - 2.0 / nu * x1 * x2 * r ** (2.0 * nu - 2.0) * h * angular
    return -2.0 * nu / r * h * inner


def wedge_map(alpha: float, x, direction: str = "forward") -> np.ndarray:
    """``diag(cos a, sin a)`` (or its inverse); carries Q onto the wedge of half-angle ``a``."""
    if not 0 < alpha < math.pi / 4:
        raise DomainError("wedge angle must lie in (0, pi/4)")
    x1, x2 = _plane(x)
    ca, sa = math.cos(alpha), math.sin(alpha)
    if direction == "forward":
        return np.array([x1 * ca, x2 * sa])
    if direction == "inverse":
        return np.array([x1 / ca, x2 / sa])
    raise UsageError("direction must be 'forward' or 'inverse'")


def project(j: int, x) -> np.ndarray:
    """``(x_1, ..., x_d) -> (x_1, x_{j+1})`` for ``1 <= j <= d-1``."""
    arr = _vec(x)
    if not 1 <= j <= arr.shape[0] - 1:
        raise UsageError(f"projection index must lie in 1..{arr.shape[0] - 1}, got {j}")
    return np.array([arr[0], arr[j]])


def inner_cone_angle(alpha: float, d: int) -> float:
    """Half-angle ``a'`` such that all planar projections inside ``a'`` imply the full cone.

    If ``x_1 > 0`` and ``|x_{j+1}| < x_1 tan a'`` for every ``j`` then ``x``
    lies in the cone of half-angle ``alpha`` about ``e_1``.  The extreme ray
    ``(1, t, ..., t)`` shows the constant ``1/sqrt(d-1)`` is sharp.
    """
    if not 0 < alpha < math.pi / 2:
        raise DomainError("alpha must lie in (0, pi/2)")
    if d < 2:
        raise UsageError("dimension must be at least 2")
    return math.atan(math.tan(alpha) / math.sqrt(d - 1))


# --------------------------------------------------------------------------
# coverings


def random_directions(d: int, n: int, rng: RandomStream) -> np.ndarray:
    g = rng.normals(n * d).reshape(n, d)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def cover_is_verified(dirs: np.ndarray, eps: float, n_samples: int = 10**5,
                      rng: RandomStream | None = None) -> bool:
    """Check by sampling that the open cones of half-angle ``eps`` cover the sphere."""
    dirs = np.asarray(dirs, dtype=np.float64)
    d = dirs.shape[1]
    rng = rng or RandomStream.from_seed(0, "cone-cover-check", d)
    cos_eps = math.cos(eps)
    for start in range(0, n_samples, 10**4):
        u = random_directions(d, min(10**4, n_samples - start), rng)
        best = np.max(u @ dirs.T, axis=1)
        if np.any(best <= cos_eps):
            return False
    return True


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    theta = math.pi * (1.0 + math.sqrt(5.0)) * i
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])


def _qmc_sphere(d: int, n: int) -> np.ndarray:
    from scipy.special import ndtri

    pts = qmc.Sobol(d, scramble=True, seed=12345).random(n)
    g = ndtri(np.clip(pts, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def cone_cover(d: int, eps: float, *, n_samples: int = 10**5, max_directions: int = 2**20) -> np.ndarray:
    """Finite set of axes whose open cones of half-angle ``eps`` cover R^d minus 0.

    Returns a ``(K, d)`` array of unit vectors.  In the plane the axes are
    ``ceil(2 pi / eps)`` equally spaced angles.  In higher dimension a
    near-uniform point set on the sphere is doubled until coverage passes a
    sampling check.
    """
    if not 0 < eps < math.pi / 2 + 1e-15:
        raise DomainError("eps must lie in (0, pi/2]")
    if d < 2:
        raise UsageError("dimension must be at least 2")
    if d == 2:
        k = math.ceil(2 * math.pi / eps - 1e-12)
        ang = 2 * math.pi * np.arange(k) / k
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
        dirs[np.abs(dirs) < 1e-15] = 0.0
        return dirs
    n = 2 * d
    while n <= max_directions:
        dirs = _fibonacci_sphere(n) if d == 3 else _qmc_sphere(d, n)
        if cover_is_verified(dirs, eps, n_samples):
            return dirs
        n *= 2
    raise DomainError(f"no verified cover with at most {max_directions} directions; eps too small")
