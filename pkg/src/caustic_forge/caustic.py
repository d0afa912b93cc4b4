"""Envelopes of beams (caustics), their cusps, and wave fronts.

A front is stored through its normal family: lines ``(alpha(s), p(s))`` and
a height ``z(s)`` with ``dz = p dalpha``.  The front point on the line ``s``
is ``A = p n - z e`` with ``e = (cos alpha, sin alpha)``, ``n = (sin alpha,
-cos alpha)``, so that ``A' = (p' + z alpha') n``.  Its cooriented curvature
is ``alpha' / (p' + z alpha')``, whose derivative is ``-D / (p' + z alpha')^2``
with ``D`` the inflection indicator of the family: vertices of a front sit
over cusps of the caustic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .beam import JET_H_MIN, Beam, FunctionSource, OvalNormalSource, family_beam
from .errors import DegenerateFamily, NoisyIndicator, NotClosed
from .lines import cumulative_area, robust_sign_changes

TWO_PI = 2.0 * math.pi
D_REL_FLOOR = 1e-7
D_ABS_FLOOR = 1e-12
MIN_RUN = 3
DEGENERATE_TOL = 1e-7
PLATEAU_TOL = 1e-9
CLOSURE_TOL = 1e-6
# root polishing uses wider stencils than the jets: the indicator holds second
# derivatives whose roundoff grows like eps / h^2
LOC_FRACTION = 0.15
LOC_H_MAX = 2e-3


@dataclass
class Cusp:
    s: float
    x: float
    y: float
    kind: str = "sign_change"


@dataclass
class PlanarCurveWithCusps:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    arc_id: np.ndarray
    cusps: list = field(default_factory=list)
    degenerate: bool = False
    point: tuple | None = None
    at_infinity: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def cusp_count(self):
        return len(self.cusps)

    @property
    def points(self):
        return np.column_stack([self.x, self.y])

    def to_csv(self, path, header=()):
        rows = [(float(s), float(x), float(y), 0, int(a))
                for s, x, y, a in zip(self.s, self.x, self.y, self.arc_id)]
        for c in self.cusps:
            k = int(np.searchsorted(self.s, c.s) % max(len(self.s), 1))
            rows.append((c.s, c.x, c.y, 1, int(self.arc_id[k]) if len(self.s) else 0))
        rows.sort(key=lambda r: (r[0], r[3]))
        out = [f"# {h}" for h in header] + ["s,x,y,is_cusp,arc_id"]
        out += [f"{s:.17g},{x:.17g},{y:.17g},{c},{a}" for s, x, y, c, a in rows]
        with open(path, "w") as fh:
            fh.write("\n".join(out) + "\n")


@dataclass
class CuspCensus:
    count: int
    s: list
    points: list


# ---------------------------------------------------------------------------
# envelope and cusps
# ---------------------------------------------------------------------------


def envelope_points(alpha, da, p, dp):
    """``X = p (sin a, -cos a) + (p'/a') (cos a, sin a)``."""
    c, s = np.cos(alpha), np.sin(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = dp / da
    return p * s + r * c, -p * c + r * s


def _scale(beam):
    return beam.oval.scale if beam.oval is not None else max(1.0, float(np.max(np.abs(beam.p))))


def degenerate_caustic(beam, tol=DEGENERATE_TOL):
    """``(point, residual)``: the common point of all lines, or ``None``.

    The least-squares point of ``x sin a - y cos a = p`` is accepted when
    every line passes within ``tol * scale`` of it.
    """
    a, q = beam.alpha_raw, beam.p
    A = np.column_stack([np.sin(a), -np.cos(a)])
    X, *_ = np.linalg.lstsq(A, q, rcond=None)
    resid = float(np.max(np.abs(A @ X - q)))
    if resid <= tol * _scale(beam):
        return (float(X[0]), float(X[1])), resid
    return None, resid


def normalized_indicator(beam):
    j = beam.jets
    speed = np.hypot(j.dalpha, j.dp)
    return beam.indicator() / speed**3


def _local_indicator(beam, h):
    def f(s):
        _a, da, dda, q, dq, ddq = beam.local_jets(np.array([s]), h)
        return float(da[0] * ddq[0] - dda[0] * dq[0] + da[0] ** 3 * q[0])
    return f


def _localization_step(beam, i, j):
    s = beam.s
    gaps = np.diff(np.append(s, s[0] + TWO_PI))
    n = len(s)
    gap = min(gaps[(i - 1) % n], gaps[i], gaps[(j - 1) % n], gaps[j % n])
    return float(np.clip(LOC_FRACTION * gap, JET_H_MIN, LOC_H_MAX))


def _localize(f, lo, hi, xtol=1e-12):
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        return None
    return brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)


def _bracket_roots(beam, values, pairs, func_for):
    """Localize each bracketing pair; falls back to linear interpolation."""
    s = beam.s
    out = []
    for i, j in pairs:
        lo = s[i]
        hi = s[j] if j > i else s[j] + TWO_PI
        root = _localize(func_for(_localization_step(beam, i, j)), lo, hi)
        if root is None:
            w = values[i] / (values[i] - values[j])
            root = lo + w * (hi - lo)
        out.append(float(np.mod(root, TWO_PI)))
    return sorted(out)


def envelope_at(beam, s, h=1e-4):
    a, da, _dda, q, dq, _ddq = beam.local_jets(np.atleast_1d(s), h)
    return envelope_points(a, da, q, dq)


def cusp_census(beam, localize=True, rel_floor=D_REL_FLOOR, min_run=MIN_RUN):
    """Count robust sign changes of the inflection indicator of ``beam``."""
    point, _resid = degenerate_caustic(beam)
    if point is not None:
        raise DegenerateFamily(f"all lines pass through {point}")
    Dn = normalized_indicator(beam)
    if float(np.max(np.abs(Dn))) < D_ABS_FLOOR:
        raise NoisyIndicator("indicator is below the absolute floor")
    pairs = robust_sign_changes(Dn, rel_floor=rel_floor, min_run=min_run)
    if localize:
        roots = _bracket_roots(beam, Dn, pairs, lambda h: _local_indicator(beam, h))
    else:
        roots = sorted(float(beam.s[i]) for i, _j in pairs)
    pts = []
    if roots:
        x, y = envelope_at(beam, np.array(roots))
        pts = list(zip(map(float, x), map(float, y)))
    return CuspCensus(len(pairs), roots, pts)


def envelope(beam, localize=True):
    """The caustic of ``beam`` with its cusps.

    A point family yields a one-point curve flagged ``degenerate``.  Where
    ``alpha'`` changes sign the envelope escapes to infinity; the curve is
    split into arcs there and the crossing parameters are listed in
    ``at_infinity``.
    """
    point, resid = degenerate_caustic(beam)
    n = len(beam)
    if point is not None:
        return PlanarCurveWithCusps(
            beam.s.copy(), np.full(n, point[0]), np.full(n, point[1]), np.zeros(n, dtype=int),
            [], True, point, [], {"degenerate_residual": resid, **beam.provenance()},
        )
    j = beam.jets
    x, y = envelope_points(beam.alpha_raw, j.dalpha, beam.p, j.dp)
    flips = robust_sign_changes(j.dalpha, rel_floor=1e-9, min_run=MIN_RUN)
    arc_id = np.zeros(n, dtype=int)
    at_inf = []
    for _i, k in sorted(flips, key=lambda ij: ij[1]):
        arc_id[k:] += 1
        at_inf.append(float(beam.s[k]))
    if flips:
        arc_id %= len(flips)
    census = cusp_census(beam, localize=localize)
    cusps = [Cusp(s, px, py) for s, (px, py) in zip(census.s, census.points)]
    return PlanarCurveWithCusps(beam.s.copy(), x, y, arc_id, cusps, False, None, at_inf,
                                {"degenerate_residual": resid, **beam.provenance()})


# ---------------------------------------------------------------------------
# fronts
# ---------------------------------------------------------------------------


@dataclass
class Front:
    """A cooriented front ``A(s)`` normal to the lines of ``family``."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    nx: np.ndarray
    ny: np.ndarray
    z: np.ndarray
    family: Beam
    z0: float = 0.0
    closure_gap: float = 0.0
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_family(cls, family, z, z0=0.0, closure_gap=0.0, meta=None):
        a, q = family.alpha_raw, family.p
        e = np.column_stack([np.cos(a), np.sin(a)])
        nvec = np.column_stack([np.sin(a), -np.cos(a)])
        A = q[:, None] * nvec - z[:, None] * e
        return cls(family.s.copy(), A[:, 0], A[:, 1], e[:, 0], e[:, 1], np.asarray(z, float),
                   family, float(z0), float(closure_gap), dict(meta or {}))

    @property
    def points(self):
        return np.column_stack([self.x, self.y])

    def speed(self):
        """Signed speed ``p' + z alpha'`` along ``n``."""
        j = self.family.jets
        return j.dp + self.z * j.dalpha

    def curvature(self):
        j = self.family.jets
        with np.errstate(divide="ignore", invalid="ignore"):
            return j.dalpha / self.speed()

    def cusp_pairs(self):
        sig = self.speed()
        return robust_sign_changes(sig / np.max(np.abs(sig)), rel_floor=1e-9, min_run=MIN_RUN)

    def cusp_parameters(self):
        out = []
        sig = self.speed()
        for i, j in self.cusp_pairs():
            lo = self.s[i]
            hi = self.s[j] if j > i else self.s[j] + TWO_PI
            w = sig[i] / (sig[i] - sig[j])
            out.append(float(np.mod(lo + w * (hi - lo), TWO_PI)))
        return sorted(out)

    def orthogonality_residual(self):
        """Max of ``|<A', e>| / |A'|`` over regular samples.

        ``A'`` comes from centered differences of the sampled points, so this
        is an independent check of the construction.  Samples where the
        front speed drops below a tenth of its median (near cusps) are skipped.
        """
        from .lines import periodic_derivatives

        dx, _ = periodic_derivatives(self.s, self.x, TWO_PI)
        dy, _ = periodic_derivatives(self.s, self.y, TWO_PI)
        sp = np.hypot(dx, dy)
        sig = np.abs(self.speed())
        ok = sig > 0.1 * np.median(sig)
        return float(np.max(np.abs(dx * self.nx + dy * self.ny)[ok] / sp[ok]))

    def to_csv(self, path, vertices=(), header=()):
        flags_v = np.zeros(len(self.s), dtype=int)
        flags_c = np.zeros(len(self.s), dtype=int)
        for sv in vertices:
            flags_v[_nearest(self.s, sv)] = 1
        for sc in self.cusp_parameters():
            flags_c[_nearest(self.s, sc)] = 1
        out = [f"# {h}" for h in header] + ["s,x,y,nx,ny,is_vertex,is_cusp"]
        for k in range(len(self.s)):
            out.append(
                f"{self.s[k]:.17g},{self.x[k]:.17g},{self.y[k]:.17g},"
                f"{self.nx[k]:.17g},{self.ny[k]:.17g},{flags_v[k]},{flags_c[k]}"
            )
        with open(path, "w") as fh:
            fh.write("\n".join(out) + "\n")


def match_circular(a, b):
    """Largest circular distance between sorted parameter lists of equal length,
    minimized over cyclic shifts."""
    a = np.sort(np.mod(a, TWO_PI))
    b = np.sort(np.mod(b, TWO_PI))
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    best = math.inf
    for k in range(a.size):
        d = np.abs(np.mod(a - np.roll(b, k) + math.pi, TWO_PI) - math.pi)
        best = min(best, float(d.max()))
    return best


def _nearest(s, value):
    d = np.abs(np.mod(s - value + math.pi, TWO_PI) - math.pi)
    return int(np.argmin(d))


def normal_front(beam, z0, tol=CLOSURE_TOL):
    """Front normal to ``beam`` obtained by integrating ``dz = p dalpha`` from ``z0``."""
    area = beam.signed_area()
    if abs(area) > tol * _scale(beam) ** 2:
        raise NotClosed(f"signed area {area:.3g} exceeds the closure tolerance")
    j = beam.jets
    z = z0 + cumulative_area(beam.s, beam.alpha, beam.p, j.dalpha, j.dp, TWO_PI, beam.winding)
    return Front.from_family(beam, z[:-1], z0, abs(z[-1] - z[0]),
                             {"z0": float(z0), **beam.provenance()})


def orthotomic(oval, n_samples=2048):
    """Reflections of the source in the tangent lines, cooriented by the reflected rays."""
    def mirror(t):
        x, y, dx, dy = oval.evaluate(t)[:4]
        sp = np.hypot(dx, dy)
        nx, ny = dy / sp, -dx / sp
        k = 2.0 * (x * nx + y * ny)
        return x, y, k * nx, k * ny

    def lines(t):
        # the reflected ray leaves gamma(t) pointing away from the image Z
        x, y, zx, zy = mirror(t)
        ux, uy = x - zx, y - zy
        nrm = np.hypot(ux, uy)
        ux, uy = ux / nrm, uy / nrm
        return np.arctan2(uy, ux), x * uy - y * ux

    fam = family_beam(FunctionSource(lines, "orthotomic_normals"), n_samples, scale=oval.scale)
    _x, _y, zx, zy = mirror(fam.s)
    e = np.column_stack([np.cos(fam.alpha_raw), np.sin(fam.alpha_raw)])
    z = -(zx * e[:, 0] + zy * e[:, 1])
    return Front.from_family(fam, z, meta={"kind": "orthotomic", "oval": oval.descriptor()})


def oval_front(oval, n_samples=2048):
    """The oval itself as a front cooriented by its outward normals."""
    fam = family_beam(OvalNormalSource(oval), n_samples, scale=oval.scale)
    x, y = oval.evaluate(fam.s)[:2]
    z = -(x * np.cos(fam.alpha_raw) + y * np.sin(fam.alpha_raw))
    return Front.from_family(fam, z, meta={"kind": "oval", "oval": oval.descriptor()})


def evolute(front, localize=True):
    """Envelope of the normals of ``front``."""
    return envelope(front.family, localize=localize)


# ---------------------------------------------------------------------------
# vertices
# ---------------------------------------------------------------------------


@dataclass
class VertexCensus:
    count: int
    s: list
    constant_curvature: bool = False


def _plateaus(values, tol):
    """Collapse consecutive samples whose spread stays below ``tol``."""
    groups = []
    start = 0
    lo = hi = values[0]
    for k in range(1, len(values)):
        v = values[k]
        nlo, nhi = min(lo, v), max(hi, v)
        if nhi - nlo < tol:
            lo, hi = nlo, nhi
            continue
        groups.append((start, k - 1, 0.5 * (lo + hi)))
        start, lo, hi = k, v, v
    groups.append((start, len(values) - 1, 0.5 * (lo + hi)))
    return groups


def _extrema(groups, periodic):
    """Indices (group numbers) of strict extrema of a collapsed sequence."""
    vals = [g[2] for g in groups]
    m = len(vals)
    out = []
    rng = range(m) if periodic else range(1, m - 1)
    for k in rng:
        a, b, c = vals[(k - 1) % m], vals[k], vals[(k + 1) % m]
        if (b > a and b > c) or (b < a and b < c):
            out.append(k)
    return out


def vertex_census(front, localize=True, tol=PLATEAU_TOL):
    """Strict extrema of curvature on the smooth arcs of ``front``."""
    kappa = front.curvature()
    n = len(front.s)
    cusp_idx = sorted(j for _i, j in front.cusp_pairs())
    scale_tol = tol * (1.0 + float(np.median(np.abs(kappa[np.isfinite(kappa)]))))
    found = []
    if not cusp_idx:
        groups = _plateaus(kappa, scale_tol)
        # join the seam
        if len(groups) > 1 and abs(groups[0][2] - groups[-1][2]) < scale_tol:
            first = groups.pop(0)
            last = groups.pop()
            groups.append((last[0], first[1] + n, 0.5 * (first[2] + last[2])))
        if len(groups) == 1:
            return VertexCensus(0, [], True)
        for k in _extrema(groups, periodic=True):
            g = groups[k]
            found.append(((g[0] + g[1]) // 2) % n)
    else:
        for a, b in zip(cusp_idx, cusp_idx[1:] + [cusp_idx[0] + n]):
            idx = np.arange(a, b) % n
            if idx.size < 3:
                continue
            groups = _plateaus(kappa[idx], scale_tol)
            for k in _extrema(groups, periodic=False):
                g = groups[k]
                found.append(int(idx[(g[0] + g[1]) // 2]))
    locs = sorted(float(front.s[k]) for k in found)
    if localize and locs:
        locs = sorted(_refine_vertex(front, k) for k in found)
    return VertexCensus(len(found), locs, False)


def _refine_vertex(front, k):
    """Zero of the family's indicator (the curvature derivative) next to sample ``k``."""
    fam = front.family
    n = len(fam.s)
    f = _local_indicator(fam, _localization_step(fam, k, k))
    s0 = fam.s[k]
    for w in (1, 2, 4, 8):
        lo = fam.s[(k - w) % n] - (TWO_PI if k - w < 0 else 0.0)
        hi = fam.s[(k + w) % n] + (TWO_PI if k + w >= n else 0.0)
        root = _localize(f, lo, hi)
        if root is not None:
            return float(np.mod(root, TWO_PI))
    return float(s0)
