"""Compiled trajectory loops.

A run is driven by one stream key; step ``t`` (0-based) consumes the uniform
at counter ``counter0 + t``.  Stop rules are small integer codes with a float
parameter vector so that the whole loop stays inside compiled code.
"""

import math

import numba as nb
import numpy as np

from .kernels import HALF_PLANE, RWRE, _drift_probs, _half_plane_probs, _rwre_probs, draw_atom
from .rng import uniform_at

STOP_NEVER = 0
STOP_CONE_EXIT = 1  # params: cos_a, axis...
STOP_BALL_HIT = 2  # params: radius, centre...
STOP_RADIUS_EXIT = 3  # params: r
STOP_BALL_BEFORE_EXIT = 4  # params: radius, outer, centre..., origin...
STOP_LEAVE_GAMMA = 5  # params: nu, s, a1, a2  (point scaled to (a1 x1, a2 x2) first)

CENSORED = 0
STOPPED = 1
EXITED = 2


@nb.njit(cache=True, nogil=True, inline="always")
def cone_test(dot, r2, cos_a):
    """``dot > cos_a * sqrt(r2)`` without the square root."""
    if cos_a >= 0.0:
        return dot > 0.0 and dot * dot > cos_a * cos_a * r2
    return dot >= 0.0 or dot * dot < cos_a * cos_a * r2


@nb.njit(cache=True, nogil=True, inline="always")
def stop_status(code, sp, x):
    d = x.shape[0]
    if code == STOP_NEVER:
        return 0
    if code == STOP_CONE_EXIT:
        dot = 0.0
        r2 = 0.0
        for i in range(d):
            xi = float(x[i])
            dot += sp[1 + i] * xi
            r2 += xi * xi
        if r2 == 0.0:
            return 1
        return 0 if cone_test(dot, r2, sp[0]) else 1
    if code == STOP_BALL_HIT:
        r2 = 0.0
        for i in range(d):
            dx = float(x[i]) - sp[1 + i]
            r2 += dx * dx
        return 1 if math.sqrt(r2) < sp[0] else 0
    if code == STOP_RADIUS_EXIT:
        r2 = 0.0
        for i in range(d):
            r2 += float(x[i]) * float(x[i])
        return 1 if math.sqrt(r2) >= sp[0] else 0
    if code == STOP_BALL_BEFORE_EXIT:
        r2 = 0.0
        o2 = 0.0
        for i in range(d):
            dx = float(x[i]) - sp[2 + i]
            r2 += dx * dx
            do = float(x[i]) - sp[2 + d + i]
            o2 += do * do
        if math.sqrt(r2) < sp[0]:
            return 1
        if math.sqrt(o2) >= sp[1]:
            return 2
        return 0
    if code == STOP_LEAVE_GAMMA:
        z1 = float(x[0]) * sp[2]
        z2 = float(x[1]) * sp[3]
        if not z1 > abs(z2):
            return 1
        h = (z1 * z1 + z2 * z2) ** (1.0 - sp[0]) / ((z1 - z2) * (z1 + z2))
        return 0 if h < sp[1] else 1
    return 0


@nb.njit(cache=True, nogil=True)
def run_one(variant, kp, env_key, x, code, sp, horizon, key, counter0,
            stride, traj, checkpoints, cp_pos, cp_mincos):
    """Advance ``x`` in place until the stop rule fires or ``horizon`` steps pass.

    Returns ``(status, t)``.  ``traj`` receives the state every ``stride``
    steps when ``stride > 0``.  For each checkpoint ``j`` the state at that
    time goes to ``cp_pos[j]`` and ``cp_mincos[j]`` tracks the smallest
    cosine between later states and it, up to the next checkpoint.
    """
    d = x.shape[0]
    nd = 2 * d
    probs = np.empty(nd + 1)
    scratch = np.empty(nd)
    ncp = checkpoints.shape[0]
    j = 0
    ref = np.zeros(d)
    ref_ok = False
    tracking = -1
    c0 = np.int64(counter0)
    t = 0
    while True:
        if stride > 0 and t % stride == 0:
            row = t // stride
            for i in range(d):
                traj[row, i] = x[i]
        if tracking >= 0 and ref_ok:
            dot = 0.0
            r2 = 0.0
            for i in range(d):
                dot += ref[i] * float(x[i])
                r2 += float(x[i]) * float(x[i])
            cs = dot / math.sqrt(r2) if r2 > 0.0 else -1.0
            if cs < cp_mincos[tracking]:
                cp_mincos[tracking] = cs
        while j < ncp and checkpoints[j] == t:
            r2 = 0.0
            for i in range(d):
                cp_pos[j, i] = x[i]
                r2 += float(x[i]) * float(x[i])
            ref_ok = r2 > 0.0
            if ref_ok:
                rn = math.sqrt(r2)
                for i in range(d):
                    ref[i] = float(x[i]) / rn
            cp_mincos[j] = 1.0 if ref_ok else -1.0
            tracking = j
            j += 1
        s = stop_status(code, sp, x)
        if s != 0:
            return s, t
        if t >= horizon:
            return 0, t
        # same dispatch as kernels.atom_probs, written out so it inlines
        if variant == RWRE:
            _rwre_probs(kp, env_key, x, probs, scratch)
        elif variant == HALF_PLANE:
            _half_plane_probs(x, probs)
        else:
            _drift_probs(variant, kp, x, probs)
        a = draw_atom(probs, uniform_at(key, np.uint64(c0 + t)))
        if a < d:
            x[a] -= 1
        elif a > d:
            x[nd - a] += 1
        t += 1


@nb.njit(cache=True, nogil=True)
def run_range(variant, kp, env_key, x0s, code, sp, horizon, keys, lo, hi,
              status, times, finals, checkpoints, cp_pos, cp_mincos):
    d = x0s.shape[1]
    traj = np.zeros((1, d), dtype=np.int64)
    for r in range(lo, hi):
        x = x0s[r].copy()
        s, t = run_one(variant, kp, env_key, x, code, sp, horizon, keys[r], 0,
                       0, traj, checkpoints, cp_pos[r], cp_mincos[r])
        status[r] = s
        times[r] = t
        for i in range(d):
            finals[r, i] = x[i]


@nb.njit(cache=True, nogil=True)
def v_walk_max_norms(d, kappa, k, t, keys, lo, hi, out):
    """Max over ``s <= t`` of ``|Y_s|`` for the walk with increments of law ``V``."""
    v0 = 1.0 - 2 * d * kappa
    y = np.zeros(d, dtype=np.int64)
    for r in range(lo, hi):
        for i in range(d):
            y[i] = 0
        best = 0
        for s in range(t):
            u = uniform_at(keys[r], np.uint64(s))
            if u >= v0:
                jdx = int((u - v0) / kappa)
                if jdx > 2 * d - 1:
                    jdx = 2 * d - 1
                if jdx < d:
                    y[jdx] -= k
                else:
                    y[2 * d - 1 - jdx] += k
                n2 = 0
                for i in range(d):
                    n2 += y[i] * y[i]
                if n2 > best:
                    best = n2
        out[r] = math.sqrt(float(best))
