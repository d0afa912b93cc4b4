"""Curve shortening flow for closed curves on the flat cylinder ``(alpha, p)``.

Nodes move with the discrete curvature vector ``2 theta_i J c_i / |c_i|^2``
where ``theta_i`` is the turning angle at node ``i``, ``c_i = X_{i+1} -
X_{i-1}`` and ``J`` the quarter turn.  The trapezoid area ``sum p dalpha``
then changes at the rate ``sum theta_i``, which is zero for a closed curve
of winding one, so the explicit Euler scheme conserves the signed area up
to O(dt^2) per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import _accel
from ._accel import njit
from .errors import MaxStepsExceeded, NotAGraph, Pinch, StabilityViolation
from .lines import CylinderCurve, count_sign_changes, periodic_derivatives

TWO_PI = 2.0 * math.pi
CFL = 0.4
KAPPA_MAX = 1e3
CHUNK = 20
SPACING_BAND = (0.25, 4.0)
# resample when spacing drifts this far from the curvature-weighted target
TARGET_BAND = (0.5, 2.0)
# turning per node aimed for; weights are capped so spacing stays in the band
TURN_TARGET = 0.05
WEIGHT_MAX = 3.5
GRAPH_MARGIN = 1e-6


@njit
def _turn(cross, dot):
    # odd series of atan(cross/dot) is below one ulp for |x| < 0.01
    if dot > 0.0 and abs(cross) < 0.01 * dot:
        x = cross / dot
        x2 = x * x
        return x * (1.0 - x2 * (1.0 / 3.0 - x2 * (0.2 - x2 / 7.0)))
    return math.atan2(cross, dot)


@njit
def _flow_chunk_jit(a, p, steps, dt, shift, kcap):
    n = a.shape[0]
    sa = np.empty(n + 1)
    sp = np.empty(n + 1)
    va = np.empty(n)
    vp = np.empty(n)
    k2 = kcap * kcap
    for _ in range(steps):
        # segment i joins node i-1 to node i; segment 0 closes the curve
        for i in range(1, n):
            sa[i] = a[i] - a[i - 1]
            sp[i] = p[i] - p[i - 1]
        sa[0] = a[0] + shift - a[n - 1]
        sp[0] = p[0] - p[n - 1]
        sa[n] = sa[0]
        sp[n] = sp[0]
        for i in range(n):
            e0a = sa[i]
            e0p = sp[i]
            e1a = sa[i + 1]
            e1p = sp[i + 1]
            th = _turn(e0a * e1p - e0p * e1a, e0a * e1a + e0p * e1p)
            ca = e0a + e1a
            cp = e0p + e1p
            c2 = ca * ca + cp * cp
            if 4.0 * th * th > k2 * c2:
                th = math.copysign(0.5 * kcap * math.sqrt(c2), th)
            k = 2.0 * th / c2
            va[i] = -k * cp
            vp[i] = k * ca
        for i in range(n):
            a[i] += dt * va[i]
            p[i] += dt * vp[i]


def _velocity_np(a, p, shift, kcap):
    am = np.roll(a, 1)
    am[0] -= shift
    ap = np.roll(a, -1)
    ap[-1] += shift
    pm = np.roll(p, 1)
    pp = np.roll(p, -1)
    e0a, e0p = a - am, p - pm
    e1a, e1p = ap - a, pp - p
    th = np.arctan2(e0a * e1p - e0p * e1a, e0a * e1a + e0p * e1p)
    ca, cp = ap - am, pp - pm
    c2 = ca * ca + cp * cp
    lim = 0.5 * kcap * np.sqrt(c2)
    k = 2.0 * np.clip(th, -lim, lim) / c2
    return -k * cp, k * ca


def _flow_chunk_np(a, p, steps, dt, shift, kcap):
    for _ in range(steps):
        va, vp = _velocity_np(a, p, shift, kcap)
        a += dt * va
        p += dt * vp


def flow_chunk(a, p, steps, dt, shift=TWO_PI, kcap=KAPPA_MAX):
    """Advance ``steps`` explicit Euler steps in place."""
    fn = _flow_chunk_jit if _accel.use_numba() else _flow_chunk_np
    fn(a, p, int(steps), float(dt), float(shift), float(kcap))


# ---------------------------------------------------------------------------
# state and monitors
# ---------------------------------------------------------------------------


def _segments(a, p, shift=TWO_PI):
    da = np.diff(np.append(a, a[0] + shift))
    dp = np.diff(np.append(p, p[0]))
    return da, dp


def polygon_area(a, p, shift=TWO_PI):
    da, _dp = _segments(a, p, shift)
    return float(np.sum(0.5 * (p + np.roll(p, -1)) * da))


def unsigned_area(a, p, shift=TWO_PI):
    da, _dp = _segments(a, p, shift)
    return float(np.sum(0.5 * np.abs(p + np.roll(p, -1)) * np.abs(da)))


def spacing(a, p, shift=TWO_PI):
    da, dp = _segments(a, p, shift)
    return np.hypot(da, dp)


def turning_curvature(a, p, shift=TWO_PI):
    da, dp = _segments(a, p, shift)
    pa, pp = np.roll(da, 1), np.roll(dp, 1)
    th = np.arctan2(pa * dp - pp * da, pa * da + pp * dp)
    half = 0.5 * (np.hypot(da, dp) + np.hypot(pa, pp))
    return th / half


def flow_indicator(a, p, shift=TWO_PI):
    """Inflection indicator of the polygon, parametrized by cumulative arclength."""
    ds = spacing(a, p, shift)
    s = np.concatenate([[0.0], np.cumsum(ds)[:-1]])
    period = float(ds.sum())
    d1a, d2a = periodic_derivatives(s, a, period, shift)
    d1p, d2p = periodic_derivatives(s, p, period)
    return d1a * d2p - d2a * d1p + d1a**3 * p


def inflection_count(a, p, shift=TWO_PI):
    return count_sign_changes(flow_indicator(a, p, shift), rel_floor=1e-7, min_run=3)


def is_graph(a, shift=TWO_PI, margin=GRAPH_MARGIN):
    return bool(np.all(np.diff(np.append(a, a[0] + shift)) > margin))


@dataclass
class FlowState:
    alpha: np.ndarray
    p: np.ndarray
    time: float = 0.0
    steps: int = 0
    resamples: int = 0
    shift: float = TWO_PI

    def copy(self):
        return FlowState(self.alpha.copy(), self.p.copy(), self.time, self.steps,
                         self.resamples, self.shift)

    @property
    def n(self):
        return self.alpha.shape[0]

    def area(self):
        return polygon_area(self.alpha, self.p, self.shift)

    def unsigned_area(self):
        return unsigned_area(self.alpha, self.p, self.shift)

    def spacing(self):
        return spacing(self.alpha, self.p, self.shift)

    def stable_dt(self):
        return CFL * float(self.spacing().min()) ** 2

    def is_graph(self):
        return is_graph(self.alpha, self.shift)

    def inflections(self):
        return inflection_count(self.alpha, self.p, self.shift)

    def max_p(self):
        return float(np.max(np.abs(self.p)))

    def max_curvature(self):
        return float(np.max(np.abs(turning_curvature(self.alpha, self.p, self.shift))))

    def monitors(self):
        return {
            "time": self.time,
            "area": self.area(),
            "inflections": self.inflections(),
            "max_p": self.max_p(),
            "max_curvature": self.max_curvature(),
        }

    def to_curve(self):
        ds = self.spacing()
        s = np.concatenate([[0.0], np.cumsum(ds)[:-1]])
        return CylinderCurve(s, self.alpha.copy(), self.p.copy(), True, 1, float(ds.sum()))


def node_weights(a, p, shift=TWO_PI):
    """Node density ``1 <= w <= WEIGHT_MAX`` growing with ``|curvature| * mean spacing``."""
    ds = spacing(a, p, shift)
    k = np.abs(turning_curvature(a, p, shift))
    w = np.clip(k * ds.mean() / TURN_TARGET, 1.0, WEIGHT_MAX)
    for _ in range(4):
        w = 0.25 * (np.roll(w, 1) + 2 * w + np.roll(w, -1))
    return w


def target_spacing(a, p, shift=TWO_PI):
    """Spacing the weights ask for, per segment."""
    ds = spacing(a, p, shift)
    w = node_weights(a, p, shift)
    wseg = 0.5 * (w + np.roll(w, -1))
    inv = 1.0 / wseg
    return ds.sum() * inv / inv.sum()


def resample(a, p, n=None, shift=TWO_PI, weighted=True):
    """New nodes on the periodic cubic spline through ``(a, p)``.

    Nodes are equidistributed in ``integral w ds`` with the curvature weights
    of :func:`node_weights` (plain arclength when ``weighted`` is false).
    """
    n = n or a.shape[0]
    ds = spacing(a, p, shift)
    s = np.concatenate([[0.0], np.cumsum(ds)])
    length = s[-1]
    ac = np.append(a, a[0] + shift)
    pc = np.append(p, p[0])
    # alpha minus its linear drift is periodic
    sa = CubicSpline(s, ac - shift * s / length, bc_type="periodic")
    sp = CubicSpline(s, pc, bc_type="periodic")
    if weighted:
        w = node_weights(a, p, shift)
        wc = np.append(w, w[0])
        m = np.concatenate([[0.0], np.cumsum(0.5 * (wc[1:] + wc[:-1]) * ds)])
        u = np.interp(m[-1] * np.arange(n) / n, m, s)
    else:
        u = length * np.arange(n) / n
    return sa(u) + shift * u / length, sp(u)


def state_from_curve(curve, n_nodes=2048):
    if curve.winding != 1:
        raise ValueError("flow needs a curve of winding one")
    a, p = resample(curve.alpha, curve.p, n_nodes, TWO_PI, weighted=False)
    # weights need a polygon to measure curvature on; two passes settle them
    for _ in range(2):
        a, p = resample(a, p, n_nodes, TWO_PI)
    return FlowState(a, p)


def csf_step(state, dt):
    """One explicit step; resamples when the spacing leaves the allowed band."""
    ds = state.spacing()
    if dt > CFL * float(ds.min()) ** 2 * (1 + 1e-12):
        raise StabilityViolation(f"dt={dt:.3g} exceeds {CFL} * min spacing^2")
    out = state.copy()
    flow_chunk(out.alpha, out.p, 1, dt, out.shift)
    out.time += dt
    out.steps += 1
    _maintain(out)
    return out


@njit
def _spacing_health_jit(a, p, shift, turn_target, wmax):
    # same quantities as spacing / node_weights / target_spacing, in one pass
    n = a.shape[0]
    da = np.empty(n)
    dq = np.empty(n)
    ds = np.empty(n)
    for i in range(n - 1):
        da[i] = a[i + 1] - a[i]
        dq[i] = p[i + 1] - p[i]
    da[n - 1] = a[0] + shift - a[n - 1]
    dq[n - 1] = p[0] - p[n - 1]
    total = 0.0
    for i in range(n):
        ds[i] = math.sqrt(da[i] * da[i] + dq[i] * dq[i])
        total += ds[i]
    mean = total / n
    w = np.empty(n)
    j = n - 1
    for i in range(n):
        th = _turn(da[j] * dq[i] - dq[j] * da[i], da[j] * da[i] + dq[j] * dq[i])
        k = abs(th) / (0.5 * (ds[i] + ds[j]))
        w[i] = min(max(k * mean / turn_target, 1.0), wmax)
        j = i
    tmp = np.empty(n)
    for _ in range(4):
        tmp[0] = 0.25 * (w[n - 1] + 2.0 * w[0] + w[1])
        for i in range(1, n - 1):
            tmp[i] = 0.25 * (w[i - 1] + 2.0 * w[i] + w[i + 1])
        tmp[n - 1] = 0.25 * (w[n - 2] + 2.0 * w[n - 1] + w[0])
        w, tmp = tmp, w
    inv_sum = 0.0
    for i in range(n - 1):
        tmp[i] = 2.0 / (w[i] + w[i + 1])
        inv_sum += tmp[i]
    tmp[n - 1] = 2.0 / (w[n - 1] + w[0])
    inv_sum += tmp[n - 1]
    scale = inv_sum / total
    dmin = ds[0]
    dmax = ds[0]
    rmin = math.inf
    rmax = -math.inf
    for i in range(n):
        dmin = min(dmin, ds[i])
        dmax = max(dmax, ds[i])
        r = ds[i] * scale / tmp[i]
        rmin = min(rmin, r)
        rmax = max(rmax, r)
    return dmin, mean, dmax, rmin, rmax


def _spacing_health(a, p, shift):
    """``(min, mean, max)`` of the spacing and the range of spacing / target."""
    if _accel.use_numba():
        return _spacing_health_jit(a, p, shift, TURN_TARGET, WEIGHT_MAX)
    ds = spacing(a, p, shift)
    ratio = ds / target_spacing(a, p, shift)
    return float(ds.min()), float(ds.mean()), float(ds.max()), float(ratio.min()), float(ratio.max())


def _maintain(state):
    """Resample when the spacing leaves its bands; returns the minimum spacing."""
    dmin, mean, dmax, rmin, rmax = _spacing_health(state.alpha, state.p, state.shift)
    if dmin < 1e-9 * mean:
        raise Pinch(f"node spacing collapsed to {dmin:.3g}")
    lo, hi = SPACING_BAND
    tlo, thi = TARGET_BAND
    if dmin < lo * mean or dmax > hi * mean or rmin < tlo or rmax > thi:
        state.alpha, state.p = resample(state.alpha, state.p, state.n, state.shift)
        state.resamples += 1
        return float(state.spacing().min())
    return dmin


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    pass


@dataclass(frozen=True)
class Time:
    T: float


@dataclass(frozen=True)
class Flat:
    tol: float = 1e-3


@dataclass
class FlowRun:
    snapshots: list
    monitors: list
    final: FlowState
    graph_state: FlowState | None = None
    initial_area: float = 0.0
    reference_area: float = 1.0
    stats: dict = field(default_factory=dict)

    @property
    def area_drift(self):
        areas = np.array([m["area"] for m in self.monitors])
        return float(np.max(np.abs(areas - self.initial_area)) / self.reference_area)

    @property
    def inflections(self):
        return [m["inflections"] for m in self.monitors]

    def inflections_nonincreasing(self):
        v = self.inflections
        return all(b <= a for a, b in zip(v, v[1:]))


def _done(state, until):
    if isinstance(until, Graph):
        return state.is_graph()
    if isinstance(until, Time):
        return state.time >= until.T
    return state.max_p() < until.tol


def csf_run(curve, until=Flat(1e-3), n_nodes=2048, snapshot_every=0.05,
            max_steps=5_000_000, state=None):
    """Flow ``curve`` until the stop condition; snapshots every ``snapshot_every`` time units.

    The first snapshot at which the curve is a graph over ``alpha`` is kept as
    ``graph_state``.
    """
    st = state.copy() if state is not None else state_from_curve(curve, n_nodes)
    a0 = st.area()
    ref = max(st.unsigned_area(), 1e-300)
    snaps = [st.copy()]
    mons = [st.monitors()]
    graph = st.copy() if st.is_graph() else None
    next_snap = snapshot_every
    dmin = float(st.spacing().min())
    while not _done(st, until):
        if st.steps >= max_steps:
            raise MaxStepsExceeded(f"no stop after {st.steps} steps")
        dt = CFL * dmin**2
        k = CHUNK
        if isinstance(until, Time):
            left = until.T - st.time
            if left < k * dt:
                k = max(1, int(math.ceil(left / dt)))
                dt = left / k
        flow_chunk(st.alpha, st.p, k, dt, st.shift)
        st.time += k * dt
        st.steps += k
        dmin = _maintain(st)
        if st.time >= next_snap or _done(st, until):
            snaps.append(st.copy())
            mons.append(st.monitors())
            if graph is None and st.is_graph():
                graph = st.copy()
            next_snap = st.time + snapshot_every
    return FlowRun(snaps, mons, st, graph, a0, ref, {"steps": st.steps, "resamples": st.resamples})


# ---------------------------------------------------------------------------
# Fourier check on the graph stage
# ---------------------------------------------------------------------------


@dataclass
class SturmHurwitzReport:
    c0: float
    c1: float
    sign_changes: int
    grid: int
    passed: bool

    def as_dict(self):
        return {"c0": self.c0, "c1": self.c1, "sign_changes": self.sign_changes,
                "grid": self.grid, "passed": self.passed}


def sturm_hurwitz_check(state, grid=1024, fourier_tol=1e-4):
    """Harmonics of ``G = F'' + F`` for the graph ``p = F(alpha)`` of ``state``.

    ``G`` is formed by periodic finite differences on a uniform ``alpha``
    grid, so ``c1`` is a genuine check rather than zero by construction.
    """
    a, p = state.alpha, state.p
    if not is_graph(a):
        raise NotAGraph("alpha is not strictly increasing along the curve")
    # F on a uniform alpha grid by periodic spline in alpha
    base = a[0]
    ac = np.append(a, a[0] + TWO_PI) - base
    spl = CubicSpline(ac, np.append(p, p[0]), bc_type="periodic")
    u = TWO_PI * np.arange(grid) / grid
    F = spl(u)
    h = TWO_PI / grid
    G = (np.roll(F, -1) - 2 * F + np.roll(F, 1)) / h**2 + F
    c = np.fft.rfft(G) / grid
    c0 = float(abs(c[0]))
    c1 = float(2 * abs(c[1]))
    changes = count_sign_changes(G, rel_floor=1e-7, min_run=3)
    return SturmHurwitzReport(c0, c1, changes, grid,
                              c0 < fourier_tol and c1 < fourier_tol and changes >= 4)
