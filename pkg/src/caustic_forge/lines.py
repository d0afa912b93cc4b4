"""Oriented lines in (alpha, p) coordinates and closed curves of lines.

A directed line with direction ``e = (cos alpha, sin alpha)`` is the set of
points ``X`` with ``det(X, e) = p``.  The origin is always the light source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    DegenerateTangent,
    NoIntersection,
    NotClosed,
    Tangential,
    TooFewSamples,
)

TWO_PI = 2.0 * math.pi


def wrap_angle(a):
    """Reduce to ``[0, 2 pi)``."""
    return np.mod(a, TWO_PI)


def wrap_pi(a):
    """Reduce to ``[-pi, pi)``."""
    return np.mod(np.asarray(a) + math.pi, TWO_PI) - math.pi


@dataclass(frozen=True)
class OrientedLine:
    alpha: float
    p: float

    @property
    def direction(self):
        return np.array([math.cos(self.alpha), math.sin(self.alpha)])

    def reversed(self):
        return OrientedLine(self.alpha + math.pi, -self.p)

    def residual(self, point):
        """``det(point, e) - p``; zero iff the point is on the line."""
        e = self.direction
        return float(point[0] * e[1] - point[1] * e[0] - self.p)

    def distance_to(self, point):
        return abs(self.residual(point))

    def same_as(self, other, tol=1e-9):
        da = abs(wrap_pi(self.alpha - other.alpha))
        return da < tol and abs(self.p - other.p) < tol


def line_through_point_dir(point, dir_angle):
    c, s = math.cos(dir_angle), math.sin(dir_angle)
    return OrientedLine(float(dir_angle), float(point[0] * s - point[1] * c))


def spherical_lift(line):
    """Point ``(cos alpha, sin alpha, p)`` on the cylinder around the unit sphere."""
    return np.array([math.cos(line.alpha), math.sin(line.alpha), line.p])


def spherical_lift_curve(alpha, p):
    alpha = np.asarray(alpha, dtype=float)
    return np.stack([np.cos(alpha), np.sin(alpha), np.asarray(p, dtype=float)], axis=-1)


@dataclass
class CylinderCurve:
    """Samples ``(s, alpha(s), p(s))`` of a curve of lines.

    For closed curves the samples do not repeat the first point: the sample
    after the last one is the first, shifted by ``period`` in ``s`` and by
    ``2 pi winding`` in ``alpha``.  ``alpha`` is stored unwrapped.  Optional
    ``dalpha``/``dp`` hold derivatives with respect to ``s``; when present
    :func:`signed_area` integrates cubic Hermite interpolants instead of the
    polygon.
    """

    s: np.ndarray
    alpha: np.ndarray
    p: np.ndarray
    closed: bool = True
    winding: int = 1
    period: float = TWO_PI
    dalpha: np.ndarray | None = None
    dp: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.p = np.asarray(self.p, dtype=float)

    def __len__(self):
        return self.s.shape[0]

    @classmethod
    def from_closed_samples(cls, s, alpha, p, tol=1e-12, **kwargs):
        """Build from samples whose last entry repeats the first one."""
        s = np.asarray(s, dtype=float)
        alpha = np.unwrap(np.asarray(alpha, dtype=float))
        p = np.asarray(p, dtype=float)
        turns = (alpha[-1] - alpha[0]) / TWO_PI
        winding = int(round(turns))
        if abs(turns - winding) > tol or p[-1] != p[0]:
            raise NotClosed("first and last samples differ")
        return cls(
            s[:-1], alpha[:-1], p[:-1], True, winding, float(s[-1] - s[0]), **kwargs
        )

    @classmethod
    def graph(cls, func, n=1024, dfunc=None):
        """Closed graph ``p = func(alpha)`` sampled uniformly, parametrized by alpha."""
        a = np.linspace(0.0, TWO_PI, n, endpoint=False)
        dp = None if dfunc is None else np.asarray(dfunc(a), dtype=float)
        return cls(a, a.copy(), np.asarray(func(a), dtype=float),
                   dalpha=None if dfunc is None else np.ones(n), dp=dp)

    def closed_arrays(self):
        """``s, alpha, p`` with the closing sample appended."""
        if not self.closed:
            return self.s, self.alpha, self.p
        return (
            np.append(self.s, self.s[0] + self.period),
            np.append(self.alpha, self.alpha[0] + TWO_PI * self.winding),
            np.append(self.p, self.p[0]),
        )

    def lines(self):
        return [OrientedLine(float(a), float(q)) for a, q in zip(self.alpha, self.p)]

    def reversed(self):
        """Same lines traversed backwards (``s -> -s``)."""
        s = -self.s[::-1]
        da = None if self.dalpha is None else self.dalpha[::-1].copy()
        dp = None if self.dp is None else self.dp[::-1].copy()
        return CylinderCurve(
            s, self.alpha[::-1].copy(), self.p[::-1].copy(), self.closed,
            -self.winding, self.period, da, dp,
        )

    def to_csv(self, path, header=()):
        write_curve_csv(path, self, header)


def write_curve_csv(path, curve, header=()):
    lines = [f"# {h}" for h in header]
    lines.append("s,alpha,p")
    for s, a, q in zip(curve.s, curve.alpha, curve.p):
        lines.append(f"{s:.17g},{a:.17g},{q:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve_csv(path):
    rows = []
    meta = {}
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if raw.startswith("#"):
                key, _, value = raw[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
                continue
            if not raw or raw.startswith("s,"):
                continue
            rows.append([float(v) for v in raw.split(",")])
    data = np.array(rows)
    return CylinderCurve(data[:, 0], data[:, 1], data[:, 2], meta=meta)


def hermite_segment_integrals(a0, a1, m0, m1, q0, q1, d0, d1, h):
    """Exact integral of ``p dalpha`` for cubic Hermite ``alpha`` and ``p`` on each segment."""
    da = a1 - a0
    return (
        0.5 * da * (q0 + q1)
        + h * (m0 - m1) * (q0 - q1) / 10.0
        + h * da * (d0 - d1) / 10.0
        + h * h * (d1 * m0 - d0 * m1) / 60.0
    )


def signed_area(curve):
    """Line integral of ``p dalpha`` over a closed curve of lines."""
    if not curve.closed:
        raise NotClosed("signed area needs a closed curve")
    s, a, q = curve.closed_arrays()
    if curve.dalpha is None or curve.dp is None:
        return float(np.sum(0.5 * (q[1:] + q[:-1]) * np.diff(a)))
    m = np.append(curve.dalpha, curve.dalpha[0])
    d = np.append(curve.dp, curve.dp[0])
    return float(
        np.sum(
            hermite_segment_integrals(
                a[:-1], a[1:], m[:-1], m[1:], q[:-1], q[1:], d[:-1], d[1:], np.diff(s)
            )
        )
    )


def cumulative_area(s, alpha, p, dalpha, dp, period, winding=1):
    """Running integral of ``p dalpha`` from the first sample, closing sample included."""
    a = np.append(alpha, alpha[0] + TWO_PI * winding)
    q = np.append(p, p[0])
    m = np.append(dalpha, dalpha[0])
    d = np.append(dp, dp[0])
    h = np.diff(np.append(s, s[0] + period))
    seg = hermite_segment_integrals(a[:-1], a[1:], m[:-1], m[1:], q[:-1], q[1:], d[:-1], d[1:], h)
    return np.concatenate([[0.0], np.cumsum(seg)])


def periodic_derivatives(s, f, period, shift=0.0):
    """First and second derivatives by 3-point centered differences on a nonuniform grid.

    ``f(s + period) = f(s) + shift`` closes the stencil at both ends.
    """
    s = np.asarray(s, dtype=float)
    f = np.asarray(f, dtype=float)
    sp = np.concatenate([[s[-1] - period], s, [s[0] + period]])
    fp = np.concatenate([[f[-1] - shift], f, [f[0] + shift]])
    h1 = sp[1:-1] - sp[:-2]
    h2 = sp[2:] - sp[1:-1]
    fm, f0, fpl = fp[:-2], fp[1:-1], fp[2:]
    d1 = (-h2 / (h1 * (h1 + h2))) * fm + ((h2 - h1) / (h1 * h2)) * f0 + (h1 / (h2 * (h1 + h2))) * fpl
    d2 = 2.0 * (fm / (h1 * (h1 + h2)) - f0 / (h1 * h2) + fpl / (h2 * (h1 + h2)))
    return d1, d2


def open_derivatives(s, f):
    s = np.asarray(s, dtype=float)
    f = np.asarray(f, dtype=float)
    h1 = s[1:-1] - s[:-2]
    h2 = s[2:] - s[1:-1]
    fm, f0, fpl = f[:-2], f[1:-1], f[2:]
    d1 = (-h2 / (h1 * (h1 + h2))) * fm + ((h2 - h1) / (h1 * h2)) * f0 + (h1 / (h2 * (h1 + h2))) * fpl
    d2 = 2.0 * (fm / (h1 * (h1 + h2)) - f0 / (h1 * h2) + fpl / (h2 * (h1 + h2)))
    return d1, d2


def indicator_from_jets(da, dda, p, dp, ddp):
    """``det[P, P', P'']`` for the lift ``P = (cos alpha, sin alpha, p)``."""
    return da * ddp - dda * dp + da**3 * p


def inflection_indicator(curve):
    """``D(s) = det[P, P', P'']`` along the spherical lift of ``curve``.

    For a graph ``p = F(alpha)`` parametrized by alpha this is ``F + F''``.
    Closed curves return one value per sample; open curves drop the two
    endpoints.
    """
    n = len(curve)
    if n < 5:
        raise TooFewSamples(f"need at least 5 samples, got {n}")
    if curve.closed:
        da, dda = periodic_derivatives(curve.s, curve.alpha, curve.period, TWO_PI * curve.winding)
        dp, ddp = periodic_derivatives(curve.s, curve.p, curve.period)
        return indicator_from_jets(da, dda, curve.p, dp, ddp)
    da, dda = open_derivatives(curve.s, curve.alpha)
    dp, ddp = open_derivatives(curve.s, curve.p)
    return indicator_from_jets(da, dda, curve.p[1:-1], dp, ddp)


def robust_sign_changes(values, rel_floor=1e-7, min_run=3, periodic=True, abs_floor=0.0):
    """Bracketing index pairs ``(i, j)`` around robust sign changes of ``values``.

    Samples with ``|v| <= max(rel_floor * max|v|, abs_floor)`` carry no sign.
    Runs of one sign shorter than ``min_run`` are treated as noise and
    dropped; the remaining runs are merged and each change between
    consecutive runs yields ``(last index of the run before, first index of
    the run after)``.  For periodic data ``j`` may be smaller than ``i``.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    if n == 0:
        return []
    floor = max(rel_floor * float(np.max(np.abs(v))), abs_floor)
    sign = np.where(v > floor, 1, np.where(v < -floor, -1, 0))
    rot = 0
    if periodic:
        edges = np.nonzero(sign != np.roll(sign, 1))[0]
        if edges.size == 0:
            return []
        rot = int(edges[0])
        sign = np.roll(sign, -rot)
    runs = []
    k = 0
    while k < n:
        if sign[k] == 0:
            k += 1
            continue
        j = k
        while j + 1 < n and sign[j + 1] == sign[k]:
            j += 1
        if j - k + 1 >= min_run:
            if runs and runs[-1][0] == sign[k]:
                runs[-1][2] = j
            else:
                runs.append([sign[k], k, j])
        k = j + 1
    if periodic and len(runs) > 1 and runs[0][0] == runs[-1][0]:
        runs[0][1] = runs[-1][1]
        runs.pop()
    m = len(runs)
    if m < 2:
        return []
    pairs = range(m) if periodic else range(m - 1)
    return [
        ((runs[k][2] + rot) % n, (runs[(k + 1) % m][1] + rot) % n) for k in pairs
    ]


def count_sign_changes(values, **kwargs):
    return len(robust_sign_changes(values, **kwargs))


# ---------------------------------------------------------------------------
# boundary coordinates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChordHit:
    t_entry: float
    t_exit: float
    phi_entry: float
    phi_exit: float


def boundary_to_line(t, phi, oval):
    """Line leaving ``gamma(t)`` at angle ``phi`` from ``gamma'(t)``."""
    x, y, dx, dy = (float(v[0]) for v in oval.evaluate(t)[:4])
    speed = math.hypot(dx, dy)
    if speed < 1e-12:
        raise DegenerateTangent(f"|gamma'({t})| = {speed}")
    alpha = math.atan2(dy, dx) + phi
    return line_through_point_dir((x, y), alpha)


def line_to_boundary(line, oval):
    """Entry/exit parameters and angles of a chord, ordered along the line."""
    t0, t1, st = _kernels.chord_batch(
        oval.kernel, oval.bracket_grid, np.array([line.alpha]), np.array([line.p])
    )
    st = int(st[0])
    if st == _kernels.NO_INTERSECTION:
        raise NoIntersection(f"{line} misses the oval")
    if st != _kernels.OK:
        raise Tangential(f"{line} grazes the oval")
    t0 = float(t0[0])
    t1 = float(t1[0])
    e = line.direction
    out = []
    for t in (t0, t1):
        dx, dy = (float(v[0]) for v in oval.evaluate(t)[2:4])
        out.append((dx, dy))
    (dx0, dy0), (dx1, dy1) = out
    phi_entry = math.atan2(dx0 * e[1] - dy0 * e[0], dx0 * e[0] + dy0 * e[1])
    phi_exit = math.atan2(e[0] * dy1 - e[1] * dx1, e[0] * dx1 + e[1] * dy1)
    return ChordHit(t0, t1, phi_entry, phi_exit)


def cylinder_curve_is_simple(curve):
    """No two non-adjacent segments of the closed curve meet on the cylinder.

    The curve is unrolled over three periods of ``alpha`` and tested as one
    planar polyline, so crossings through the seam are caught too.
    """
    from shapely.geometry import LineString

    s, a, q = curve.closed_arrays()
    shift = TWO_PI * curve.winding
    if curve.winding == 0:
        ring = np.column_stack([a, q])
        from shapely.geometry import LinearRing

        return bool(LinearRing(ring).is_simple)
    pieces = [np.column_stack([a[:-1] + k * shift, q[:-1]]) for k in (-1, 0, 1)]
    pts = np.vstack(pieces + [np.array([[a[-1] + shift, q[-1]]])])
    return bool(LineString(pts).is_simple)


def winding_number(alpha_unwrapped_closed):
    return int(round((alpha_unwrapped_closed[-1] - alpha_unwrapped_closed[0]) / TWO_PI))
