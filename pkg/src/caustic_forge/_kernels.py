"""Hot loops: oval evaluation, chord intersection, batched reflection.

Every kernel exists twice.  ``*_jit`` functions are scalar loops compiled by
numba; ``*_np`` functions are the vectorized numpy fallback.  Both follow the
same arithmetic (safeguarded Newton inside a sign bracket, then two polishing
Newton steps) so they agree to rounding.  Dispatch lives in the public
wrappers at the bottom of the module.

An oval reaches the kernels as ``(kind, prm, coeffs, rtab)``:

* kind 0, ellipse: ``prm = [a, b, ox, oy]``, ``gamma(t) = (a cos t - ox, b sin t - oy)``;
* kind 1, implicit ``f(x, y) = sum c x^i y^j = 0`` (rows ``[i, j, c]`` of
  ``coeffs``) parametrized by polar angle about ``(ox, oy)``:
  ``prm = [ox, oy]``, ``rtab`` holds radii on a uniform angle grid used as
  Newton start values.

Coordinates returned by the kernels are relative to ``(ox, oy)`` (the light
source), which is the origin of the line coordinates.
"""

import math

import numpy as np

from . import _accel
from ._accel import njit

ELLIPSE = 0
IMPLICIT = 1

STANDARD = 0
PROJECTIVE = 1
PROJECTIVE_NORMAL = 2

OK = 0
NO_INTERSECTION = 1
TANGENTIAL = 2
FIELD_TANGENT = 3

N_BRACKET = 64
TANGENT_TOL = 1e-12
PHI_TOL = 1e-7
FIELD_TOL = 1e-9
TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# scalar kernels (numba)
# ---------------------------------------------------------------------------


@njit
def _ipow(x, k):
    r = 1.0
    for _ in range(k):
        r *= x
    return r


@njit
def poly_eval_jit(coeffs, x, y):
    """Value, gradient and Hessian of ``sum c x^i y^j``."""
    f = fx = fy = fxx = fxy = fyy = 0.0
    for k in range(coeffs.shape[0]):
        i = int(coeffs[k, 0])
        j = int(coeffs[k, 1])
        c = coeffs[k, 2]
        xi = _ipow(x, i)
        yj = _ipow(y, j)
        f += c * xi * yj
        if i >= 1:
            dxi = i * _ipow(x, i - 1)
            fx += c * dxi * yj
            if j >= 1:
                fxy += c * dxi * j * _ipow(y, j - 1)
            if i >= 2:
                fxx += c * i * (i - 1) * _ipow(x, i - 2) * yj
        if j >= 1:
            fy += c * xi * j * _ipow(y, j - 1)
            if j >= 2:
                fyy += c * xi * j * (j - 1) * _ipow(y, j - 2)
    return f, fx, fy, fxx, fxy, fyy


@njit
def _radius_jit(prm, coeffs, rtab, c, s, theta):
    m = rtab.shape[0]
    u = (theta / TWO_PI) % 1.0 * m
    k = int(u)
    w = u - k
    r = (1.0 - w) * rtab[k % m] + w * rtab[(k + 1) % m]
    ox = prm[0]
    oy = prm[1]
    for _ in range(60):
        f, fx, fy, _a, _b, _c = poly_eval_jit(coeffs, ox + r * c, oy + r * s)
        gr = fx * c + fy * s
        dr = f / gr
        rn = r - dr
        if rn <= 0.0:
            rn = 0.5 * r
        if abs(rn - r) <= 1e-15 * (1.0 + r):
            r = rn
            break
        r = rn
    return r


@njit
def oval_eval_jit(kind, prm, coeffs, rtab, t):
    """Return ``x, y, x', y', x'', y''`` at parameter ``t``."""
    if kind == ELLIPSE:
        a = prm[0]
        b = prm[1]
        ct = math.cos(t)
        st = math.sin(t)
        return a * ct - prm[2], b * st - prm[3], -a * st, b * ct, -a * ct, -b * st
    c = math.cos(t)
    s = math.sin(t)
    r = _radius_jit(prm, coeffs, rtab, c, s, t)
    f, fx, fy, fxx, fxy, fyy = poly_eval_jit(coeffs, prm[0] + r * c, prm[1] + r * s)
    # polar chart: g(r, theta) = f(o + r u), u = (c, s), w = (-s, c)
    gu = fx * c + fy * s
    gw = fx * -s + fy * c
    huu = fxx * c * c + 2.0 * fxy * c * s + fyy * s * s
    huw = -fxx * c * s + fxy * (c * c - s * s) + fyy * s * c
    hww = fxx * s * s - 2.0 * fxy * c * s + fyy * c * c
    g_r = gu
    g_t = r * gw
    g_rr = huu
    g_rt = gw + r * huw
    g_tt = r * r * hww - r * gu
    r1 = -g_t / g_r
    r2 = -(g_tt + 2.0 * g_rt * r1 + g_rr * r1 * r1) / g_r
    x = r * c
    y = r * s
    dx = r1 * c - r * s
    dy = r1 * s + r * c
    ddx = r2 * c - 2.0 * r1 * s - r * c
    ddy = r2 * s + 2.0 * r1 * c - r * s
    return x, y, dx, dy, ddx, ddy


@njit
def _fval_jit(mode, kind, prm, coeffs, rtab, ca, sa, p, t):
    x, y, dx, dy, ddx, ddy = oval_eval_jit(kind, prm, coeffs, rtab, t)
    if mode == 0:
        # derivative of the support functional det(gamma, e)
        return dx * sa - dy * ca, ddx * sa - ddy * ca
    return x * sa - y * ca - p, dx * sa - dy * ca


@njit
def _solve_jit(mode, kind, prm, coeffs, rtab, ca, sa, p, lo, hi):
    flo, _d = _fval_jit(mode, kind, prm, coeffs, rtab, ca, sa, p, lo)
    t = 0.5 * (lo + hi)
    for _ in range(200):
        f, df = _fval_jit(mode, kind, prm, coeffs, rtab, ca, sa, p, t)
        if f == 0.0:
            break
        # converged: stop before rounding noise in f can flip the bracket
        if df != 0.0 and abs(f / df) <= 1e-15 * (1.0 + abs(t)):
            t = t - f / df
            break
        if (f > 0.0) == (flo > 0.0):
            lo = t
            flo = f
        else:
            hi = t
        tn = 0.5 * (lo + hi)
        if df != 0.0:
            tn = t - f / df
        if not ((tn - lo) * (tn - hi) < 0.0):
            tn = 0.5 * (lo + hi)
        if abs(tn - t) <= 1e-15 * (1.0 + abs(t)) or abs(hi - lo) < 1e-13:
            t = tn
            break
        t = tn
    for _ in range(2):
        f, df = _fval_jit(mode, kind, prm, coeffs, rtab, ca, sa, p, t)
        if df != 0.0:
            t = t - f / df
    return t


@njit
def _chord_jit(kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, alpha, p):
    """Entry and exit parameters of the line ``(alpha, p)``; status code."""
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    m = tgrid.shape[0]
    kmax = -1
    kmin = -1
    for k in range(m):
        g0 = dxg[k] * sa - dyg[k] * ca
        g1 = dxg[(k + 1) % m] * sa - dyg[(k + 1) % m] * ca
        if g0 > 0.0 and g1 <= 0.0 and kmax < 0:
            kmax = k
        if g0 < 0.0 and g1 >= 0.0 and kmin < 0:
            kmin = k
    if kmax < 0 or kmin < 0:
        return 0.0, 0.0, TANGENTIAL
    step = TWO_PI / m
    tmax = _solve_jit(0, kind, prm, coeffs, rtab, ca, sa, p, tgrid[kmax], tgrid[kmax] + step)
    tmin = _solve_jit(0, kind, prm, coeffs, rtab, ca, sa, p, tgrid[kmin], tgrid[kmin] + step)
    lmax, _d = _fval_jit(1, kind, prm, coeffs, rtab, ca, sa, p, tmax)
    lmin, _d = _fval_jit(1, kind, prm, coeffs, rtab, ca, sa, p, tmin)
    if lmax < -TANGENT_TOL or lmin > TANGENT_TOL:
        return 0.0, 0.0, NO_INTERSECTION
    if lmax <= TANGENT_TOL or lmin >= -TANGENT_TOL:
        return 0.0, 0.0, TANGENTIAL
    hi = tmin if tmin > tmax else tmin + TWO_PI
    t_exit = _solve_jit(1, kind, prm, coeffs, rtab, ca, sa, p, tmax, hi) % TWO_PI
    hi = tmax if tmax > tmin else tmax + TWO_PI
    t_entry = _solve_jit(1, kind, prm, coeffs, rtab, ca, sa, p, tmin, hi) % TWO_PI
    return t_entry, t_exit, OK


@njit
def _exit_jit(kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, alpha, p):
    """Like :func:`_chord_jit` but only solves for the exit root."""
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    m = tgrid.shape[0]
    step = TWO_PI / m
    # fast path: the grid already brackets the exit root with a clear margin
    kdown = -1
    lhi = -1.0
    llo = 1.0
    for k in range(m):
        l0 = xg[k] * sa - yg[k] * ca - p
        l1 = xg[(k + 1) % m] * sa - yg[(k + 1) % m] * ca - p
        if l0 > lhi:
            lhi = l0
        if l0 < llo:
            llo = l0
        if l0 > 0.0 and l1 <= 0.0:
            kdown = k
    if kdown >= 0 and lhi > TANGENT_TOL and llo < -TANGENT_TOL:
        t = _solve_jit(1, kind, prm, coeffs, rtab, ca, sa, p, tgrid[kdown], tgrid[kdown] + step)
        return t % TWO_PI, OK
    kmax = -1
    kmin = -1
    for k in range(m):
        g0 = dxg[k] * sa - dyg[k] * ca
        g1 = dxg[(k + 1) % m] * sa - dyg[(k + 1) % m] * ca
        if g0 > 0.0 and g1 <= 0.0 and kmax < 0:
            kmax = k
        if g0 < 0.0 and g1 >= 0.0 and kmin < 0:
            kmin = k
    if kmax < 0 or kmin < 0:
        return 0.0, TANGENTIAL
    tmax = _solve_jit(0, kind, prm, coeffs, rtab, ca, sa, p, tgrid[kmax], tgrid[kmax] + step)
    tmin = _solve_jit(0, kind, prm, coeffs, rtab, ca, sa, p, tgrid[kmin], tgrid[kmin] + step)
    lmax, _d = _fval_jit(1, kind, prm, coeffs, rtab, ca, sa, p, tmax)
    lmin, _d = _fval_jit(1, kind, prm, coeffs, rtab, ca, sa, p, tmin)
    if lmax < -TANGENT_TOL or lmin > TANGENT_TOL:
        return 0.0, NO_INTERSECTION
    if lmax <= TANGENT_TOL or lmin >= -TANGENT_TOL:
        return 0.0, TANGENTIAL
    hi = tmin if tmin > tmax else tmin + TWO_PI
    return _solve_jit(1, kind, prm, coeffs, rtab, ca, sa, p, tmax, hi) % TWO_PI, OK


@njit
def _reflect_one_jit(kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, law, fcoeffs, alpha, p):
    t1, status = _exit_jit(kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, alpha, p)
    if status != OK:
        return alpha, p, t1, 0.0, status
    x, y, dx, dy, _a, _b = oval_eval_jit(kind, prm, coeffs, rtab, t1)
    sp = math.sqrt(dx * dx + dy * dy)
    tx = dx / sp
    ty = dy / sp
    ex = math.cos(alpha)
    ey = math.sin(alpha)
    phi = math.atan2(ex * ty - ey * tx, ex * tx + ey * ty)
    if not (PHI_TOL < phi < math.pi - PHI_TOL):
        return alpha, p, t1, phi, TANGENTIAL
    if law == STANDARD:
        # outward normal of a counterclockwise oval
        nx = ty
        ny = -tx
        d = ex * nx + ey * ny
        ux = ex - 2.0 * d * nx
        uy = ey - 2.0 * d * ny
    else:
        if law == PROJECTIVE_NORMAL:
            vx = ty
            vy = -tx
        else:
            if kind == ELLIPSE:
                gx = x + prm[2]
                gy = y + prm[3]
            else:
                gx = x + prm[0]
                gy = y + prm[1]
            _f, vx, vy, _h1, _h2, _h3 = poly_eval_jit(fcoeffs, gx, gy)
        vn = math.sqrt(vx * vx + vy * vy)
        den = tx * vy - ty * vx
        if vn == 0.0 or abs(den) < FIELD_TOL * vn:
            return alpha, p, t1, phi, FIELD_TANGENT
        # e = a tau + b v, outgoing a tau - b v
        a = (ex * vy - ey * vx) / den
        b = (tx * ey - ty * ex) / den
        ux = a * tx - b * vx
        uy = a * ty - b * vy
        un = math.sqrt(ux * ux + uy * uy)
        ux /= un
        uy /= un
    a1 = math.atan2(uy, ux)
    p1 = x * uy - y * ux
    phi1 = math.atan2(tx * uy - ty * ux, tx * ux + ty * uy)
    return a1, p1, t1, phi1, OK


@njit
def reflect_batch_jit(kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, law, fcoeffs, alpha, p, steps):
    n = alpha.shape[0]
    a_out = np.empty(n)
    p_out = np.empty(n)
    t_out = np.empty(n)
    f_out = np.empty(n)
    st_out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        a = alpha[i]
        q = p[i]
        t1 = 0.0
        phi = 0.0
        st = OK
        for _ in range(steps):
            a, q, t1, phi, st = _reflect_one_jit(
                kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, law, fcoeffs, a, q
            )
            if st != OK:
                break
        a_out[i] = a
        p_out[i] = q
        t_out[i] = t1
        f_out[i] = phi
        st_out[i] = st
    return a_out, p_out, t_out, f_out, st_out


@njit
def chord_batch_jit(kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, alpha, p):
    n = alpha.shape[0]
    t0 = np.empty(n)
    t1 = np.empty(n)
    st = np.zeros(n, dtype=np.int64)
    for i in range(n):
        t0[i], t1[i], st[i] = _chord_jit(kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, alpha[i], p[i])
    return t0, t1, st


@njit
def oval_eval_batch_jit(kind, prm, coeffs, rtab, t):
    n = t.shape[0]
    out = np.empty((6, n))
    for i in range(n):
        x, y, dx, dy, ddx, ddy = oval_eval_jit(kind, prm, coeffs, rtab, t[i])
        out[0, i] = x
        out[1, i] = y
        out[2, i] = dx
        out[3, i] = dy
        out[4, i] = ddx
        out[5, i] = ddy
    return out


# ---------------------------------------------------------------------------
# vectorized numpy fallback
# ---------------------------------------------------------------------------


def poly_eval_np(coeffs, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    zero = np.zeros(np.broadcast(x, y).shape)
    f, fx, fy, fxx, fxy, fyy = (zero.copy() for _ in range(6))
    for i, j, c in coeffs:
        i = int(i)
        j = int(j)
        xi = x**i
        yj = y**j
        f += c * xi * yj
        if i >= 1:
            dxi = i * x ** (i - 1)
            fx += c * dxi * yj
            if j >= 1:
                fxy += c * dxi * j * y ** (j - 1)
            if i >= 2:
                fxx += c * i * (i - 1) * x ** (i - 2) * yj
        if j >= 1:
            fy += c * xi * j * y ** (j - 1)
            if j >= 2:
                fyy += c * xi * j * (j - 1) * y ** (j - 2)
    return f, fx, fy, fxx, fxy, fyy


def _radius_np(prm, coeffs, rtab, c, s, theta):
    m = rtab.shape[0]
    u = (theta / TWO_PI) % 1.0 * m
    k = u.astype(np.int64)
    w = u - k
    r = (1.0 - w) * rtab[k % m] + w * rtab[(k + 1) % m]
    active = np.ones(r.shape, dtype=bool)
    for _ in range(60):
        f, fx, fy = poly_eval_np(coeffs, prm[0] + r * c, prm[1] + r * s)[:3]
        rn = r - f / (fx * c + fy * s)
        rn = np.where(rn <= 0.0, 0.5 * r, rn)
        conv = np.abs(rn - r) <= 1e-15 * (1.0 + r)
        r = np.where(active, rn, r)
        active &= ~conv
        if not active.any():
            break
    return r


def oval_eval_np(kind, prm, coeffs, rtab, t):
    t = np.asarray(t, dtype=float)
    if kind == ELLIPSE:
        a, b = prm[0], prm[1]
        ct = np.cos(t)
        st = np.sin(t)
        return a * ct - prm[2], b * st - prm[3], -a * st, b * ct, -a * ct, -b * st
    c = np.cos(t)
    s = np.sin(t)
    r = _radius_np(prm, coeffs, rtab, c, s, t)
    f, fx, fy, fxx, fxy, fyy = poly_eval_np(coeffs, prm[0] + r * c, prm[1] + r * s)
    gu = fx * c + fy * s
    gw = fx * -s + fy * c
    huu = fxx * c * c + 2.0 * fxy * c * s + fyy * s * s
    huw = -fxx * c * s + fxy * (c * c - s * s) + fyy * s * c
    hww = fxx * s * s - 2.0 * fxy * c * s + fyy * c * c
    g_t = r * gw
    g_rt = gw + r * huw
    g_tt = r * r * hww - r * gu
    r1 = -g_t / gu
    r2 = -(g_tt + 2.0 * g_rt * r1 + huu * r1 * r1) / gu
    return (
        r * c,
        r * s,
        r1 * c - r * s,
        r1 * s + r * c,
        r2 * c - 2.0 * r1 * s - r * c,
        r2 * s + 2.0 * r1 * c - r * s,
    )


def _fval_np(mode, ov, ca, sa, p, t):
    x, y, dx, dy, ddx, ddy = oval_eval_np(*ov, t)
    if mode == 0:
        return dx * sa - dy * ca, ddx * sa - ddy * ca
    return x * sa - y * ca - p, dx * sa - dy * ca


def _solve_np(mode, ov, ca, sa, p, lo, hi):
    lo = lo.copy()
    hi = hi.copy()
    flo = _fval_np(mode, ov, ca, sa, p, lo)[0]
    t = 0.5 * (lo + hi)
    active = np.ones(t.shape, dtype=bool)
    for _ in range(200):
        f, df = _fval_np(mode, ov, ca, sa, p, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = f / np.where(df != 0.0, df, 1.0)
        conv = active & (df != 0.0) & (np.abs(newton) <= 1e-15 * (1.0 + np.abs(t)))
        t = np.where(conv, t - newton, t)
        active &= ~conv
        hit = f == 0.0
        same = (f > 0.0) == (flo > 0.0)
        upd = active & ~hit
        lo = np.where(upd & same, t, lo)
        flo = np.where(upd & same, f, flo)
        hi = np.where(upd & ~same, t, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = np.where(df != 0.0, t - f / np.where(df != 0.0, df, 1.0), 0.5 * (lo + hi))
        tn = np.where((tn - lo) * (tn - hi) < 0.0, tn, 0.5 * (lo + hi))
        done = (np.abs(tn - t) <= 1e-15 * (1.0 + np.abs(t))) | (np.abs(hi - lo) < 1e-13)
        t = np.where(upd, tn, t)
        active &= ~(hit | done)
        if not active.any():
            break
    for _ in range(2):
        f, df = _fval_np(mode, ov, ca, sa, p, t)
        t = np.where(df != 0.0, t - f / np.where(df != 0.0, df, 1.0), t)
    return t


def _first_true(mask):
    idx = np.argmax(mask, axis=1)
    return np.where(mask.any(axis=1), idx, -1)


def _extrema_np(ov, tgrid, xg, yg, dxg, dyg, ca, sa, p):
    g = dxg[None, :] * sa[:, None] - dyg[None, :] * ca[:, None]
    g1 = np.roll(g, -1, axis=1)
    kmax = _first_true((g > 0.0) & (g1 <= 0.0))
    kmin = _first_true((g < 0.0) & (g1 >= 0.0))
    bad = (kmax < 0) | (kmin < 0)
    kmax = np.where(kmax < 0, 0, kmax)
    kmin = np.where(kmin < 0, 0, kmin)
    step = TWO_PI / tgrid.shape[0]
    tmax = _solve_np(0, ov, ca, sa, p, tgrid[kmax], tgrid[kmax] + step)
    tmin = _solve_np(0, ov, ca, sa, p, tgrid[kmin], tgrid[kmin] + step)
    lmax = _fval_np(1, ov, ca, sa, p, tmax)[0]
    lmin = _fval_np(1, ov, ca, sa, p, tmin)[0]
    status = np.full(ca.shape, OK, dtype=np.int64)
    status[(lmax <= TANGENT_TOL) | (lmin >= -TANGENT_TOL)] = TANGENTIAL
    status[(lmax < -TANGENT_TOL) | (lmin > TANGENT_TOL)] = NO_INTERSECTION
    status[bad] = TANGENTIAL
    return tmax, tmin, status


def chord_batch_np(kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, alpha, p):
    ov = (kind, prm, coeffs, rtab)
    ca = np.cos(alpha)
    sa = np.sin(alpha)
    tmax, tmin, status = _extrema_np(ov, tgrid, xg, yg, dxg, dyg, ca, sa, p)
    hi = np.where(tmin > tmax, tmin, tmin + TWO_PI)
    t_exit = _solve_np(1, ov, ca, sa, p, tmax, hi) % TWO_PI
    hi = np.where(tmax > tmin, tmax, tmax + TWO_PI)
    t_entry = _solve_np(1, ov, ca, sa, p, tmin, hi) % TWO_PI
    bad = status != OK
    t_exit[bad] = 0.0
    t_entry[bad] = 0.0
    return t_entry, t_exit, status


def _exit_np(ov, tgrid, xg, yg, dxg, dyg, ca, sa, p):
    m = tgrid.shape[0]
    step = TWO_PI / m
    ell = xg[None, :] * sa[:, None] - yg[None, :] * ca[:, None] - p[:, None]
    down = (ell > 0.0) & (np.roll(ell, -1, axis=1) <= 0.0)
    # last down-crossing, as in the compiled loop
    kdown = np.where(down.any(axis=1), m - 1 - np.argmax(down[:, ::-1], axis=1), -1)
    fast = (kdown >= 0) & (ell.max(axis=1) > TANGENT_TOL) & (ell.min(axis=1) < -TANGENT_TOL)
    t1 = np.zeros(ca.shape)
    status = np.full(ca.shape, OK, dtype=np.int64)
    if fast.any():
        lo = tgrid[kdown[fast]]
        t1[fast] = _solve_np(1, ov, ca[fast], sa[fast], p[fast], lo, lo + step) % TWO_PI
    slow = ~fast
    if slow.any():
        tmax, tmin, st = _extrema_np(ov, tgrid, xg, yg, dxg, dyg, ca[slow], sa[slow], p[slow])
        hi = np.where(tmin > tmax, tmin, tmin + TWO_PI)
        t1[slow] = _solve_np(1, ov, ca[slow], sa[slow], p[slow], tmax, hi) % TWO_PI
        status[slow] = st
    return t1, status


def _reflect_once_np(ov, tgrid, xg, yg, dxg, dyg, law, fcoeffs, alpha, p):
    kind, prm = ov[0], ov[1]
    ca = np.cos(alpha)
    sa = np.sin(alpha)
    t1, status = _exit_np(ov, tgrid, xg, yg, dxg, dyg, ca, sa, p)
    x, y, dx, dy = oval_eval_np(*ov, t1)[:4]
    sp = np.sqrt(dx * dx + dy * dy)
    tx = dx / sp
    ty = dy / sp
    phi = np.arctan2(ca * ty - sa * tx, ca * tx + sa * ty)
    status = np.where(
        (status == OK) & ~((phi > PHI_TOL) & (phi < math.pi - PHI_TOL)), TANGENTIAL, status
    )
    if law == STANDARD:
        nx = ty
        ny = -tx
        d = ca * nx + sa * ny
        ux = ca - 2.0 * d * nx
        uy = sa - 2.0 * d * ny
    else:
        if law == PROJECTIVE_NORMAL:
            vx, vy = ty, -tx
        else:
            off = (prm[2], prm[3]) if kind == ELLIPSE else (prm[0], prm[1])
            vx, vy = poly_eval_np(fcoeffs, x + off[0], y + off[1])[1:3]
        vn = np.sqrt(vx * vx + vy * vy)
        den = tx * vy - ty * vx
        ftan = (vn == 0.0) | (np.abs(den) < FIELD_TOL * vn)
        status = np.where((status == OK) & ftan, FIELD_TANGENT, status)
        den = np.where(ftan, 1.0, den)
        a = (ca * vy - sa * vx) / den
        b = (tx * sa - ty * ca) / den
        ux = a * tx - b * vx
        uy = a * ty - b * vy
        un = np.sqrt(ux * ux + uy * uy)
        un = np.where(un == 0.0, 1.0, un)
        ux = ux / un
        uy = uy / un
    a1 = np.arctan2(uy, ux)
    p1 = x * uy - y * ux
    phi1 = np.arctan2(tx * uy - ty * ux, tx * ux + ty * uy)
    ok = status == OK
    a1 = np.where(ok, a1, alpha)
    p1 = np.where(ok, p1, p)
    t1 = np.where(status == NO_INTERSECTION, 0.0, t1)
    phi1 = np.where(ok, phi1, np.where(status == NO_INTERSECTION, 0.0, phi))
    return a1, p1, t1, phi1, status


def reflect_batch_np(kind, prm, coeffs, rtab, tgrid, xg, yg, dxg, dyg, law, fcoeffs, alpha, p, steps):
    ov = (kind, prm, coeffs, rtab)
    a = np.array(alpha, dtype=float)
    q = np.array(p, dtype=float)
    n = a.shape[0]
    t_out = np.zeros(n)
    f_out = np.zeros(n)
    st_out = np.zeros(n, dtype=np.int64)
    live = np.arange(n)
    for _ in range(steps):
        if live.size == 0:
            break
        a1, p1, t1, phi1, st = _reflect_once_np(
            ov, tgrid, xg, yg, dxg, dyg, law, fcoeffs, a[live], q[live]
        )
        a[live] = a1
        q[live] = p1
        t_out[live] = t1
        f_out[live] = phi1
        st_out[live] = st
        live = live[st == OK]
    return a, q, t_out, f_out, st_out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def oval_eval(kind, prm, coeffs, rtab, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if _accel.use_numba():
        return tuple(oval_eval_batch_jit(kind, prm, coeffs, rtab, np.ascontiguousarray(t)))
    return oval_eval_np(kind, prm, coeffs, rtab, t)


def chord_batch(ov, grid, alpha, p):
    alpha = np.ascontiguousarray(alpha, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    fn = chord_batch_jit if _accel.use_numba() else chord_batch_np
    return fn(*ov, *grid, alpha, p)


def reflect_batch(ov, grid, law, fcoeffs, alpha, p, steps):
    alpha = np.ascontiguousarray(alpha, dtype=float)
    p = np.ascontiguousarray(p, dtype=float)
    fn = reflect_batch_jit if _accel.use_numba() else reflect_batch_np
    return fn(*ov, *grid, law, fcoeffs, alpha, p, int(steps))
