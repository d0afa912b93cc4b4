"""Billiard tables: smooth strictly convex closed curves.

All ovals are expressed in coordinates centred at the light source, which is
passed as ``origin`` (in table coordinates) when the oval is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from . import _kernels
from .errors import ConfigError, NotContained, NotConvex, RadialSolveFailed, SelfIntersecting
from .lines import CylinderCurve

TWO_PI = 2.0 * math.pi
CONVEXITY_GRID = 4096
CURVATURE_FLOOR = 1e-9
RADIUS_TABLE = 2048


@dataclass(frozen=True)
class Ellipse:
    a: float
    b: float

    def polynomial(self):
        return np.array([[2, 0, 1.0 / self.a**2], [0, 2, 1.0 / self.b**2], [0, 0, -1.0]])

    def descriptor(self):
        return {"family": "ellipse", "a": self.a, "b": self.b}

    @property
    def foci(self):
        if self.a >= self.b:
            c = math.sqrt(self.a**2 - self.b**2)
            return np.array([[c, 0.0], [-c, 0.0]])
        c = math.sqrt(self.b**2 - self.a**2)
        return np.array([[0.0, c], [0.0, -c]])


@dataclass(frozen=True)
class SuperEllipse4:
    """The curve ``x^4 + y^4 = 1``."""

    def polynomial(self):
        return np.array([[4, 0, 1.0], [0, 4, 1.0], [0, 0, -1.0]])

    def descriptor(self):
        return {"family": "superellipse4"}


@dataclass(frozen=True)
class PerturbedEllipse:
    """``c0 x^2 + (1 + c1 x) y^2 = 1``."""

    c0: float = 0.5
    c1: float = 0.25

    def polynomial(self):
        return np.array([[2, 0, self.c0], [0, 2, 1.0], [1, 2, self.c1], [0, 0, -1.0]])

    def descriptor(self):
        return {"family": "perturbed_ellipse", "c0": self.c0, "c1": self.c1}


@dataclass(frozen=True)
class ImplicitConvex:
    """Zero set of ``sum c x^i y^j``, negative inside; rows ``(i, j, c)``."""

    coeffs: tuple

    def polynomial(self):
        return np.array(self.coeffs, dtype=float).reshape(-1, 3)

    def descriptor(self):
        return {"family": "implicit", "coeffs": [list(map(float, r)) for r in self.coeffs]}


def family_from_descriptor(desc):
    try:
        kind = desc["family"]
        if kind == "ellipse":
            fam = Ellipse(float(desc["a"]), float(desc["b"]))
        elif kind == "circle":
            r = float(desc.get("r", 1.0))
            fam = Ellipse(r, r)
        elif kind == "superellipse4":
            fam = SuperEllipse4()
        elif kind == "perturbed_ellipse":
            fam = PerturbedEllipse(float(desc.get("c0", 0.5)), float(desc.get("c1", 0.25)))
        elif kind == "implicit":
            fam = ImplicitConvex(tuple(tuple(float(v) for v in row) for row in desc["coeffs"]))
        else:
            raise ConfigError(f"unknown oval family {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad oval descriptor {desc!r}: {exc}") from exc
    return fam


@dataclass(frozen=True, eq=False)
class Oval:
    """A validated oval; ``t`` runs over ``[0, 2 pi)`` counterclockwise.

    Use :func:`make_oval` rather than the constructor.
    """

    family: object
    origin: tuple
    kind: int
    prm: np.ndarray
    coeffs: np.ndarray
    rtab: np.ndarray

    @property
    def kernel(self):
        return (self.kind, self.prm, self.coeffs, self.rtab)

    @cached_property
    def bracket_grid(self):
        t = np.linspace(0.0, TWO_PI, _kernels.N_BRACKET, endpoint=False)
        ev = self.evaluate(t)
        return tuple(np.ascontiguousarray(v) for v in (t, ev[0], ev[1], ev[2], ev[3]))

    def evaluate(self, t):
        """``(x, y, x', y', x'', y'')`` arrays at parameters ``t``."""
        return _kernels.oval_eval(*self.kernel, t)

    def point(self, t):
        x, y = self.evaluate(t)[:2]
        return np.column_stack([x, y])

    def curvature(self, t):
        x, y, dx, dy, ddx, ddy = self.evaluate(t)
        return (dx * ddy - dy * ddx) / np.hypot(dx, dy) ** 3

    def speed(self, t):
        dx, dy = self.evaluate(t)[2:4]
        return np.hypot(dx, dy)

    def implicit_value(self, points):
        """Table polynomial at source-relative points (negative inside)."""
        from ._kernels import poly_eval_np

        pts = np.atleast_2d(points)
        poly = self.family.polynomial()
        return poly_eval_np(poly, pts[:, 0] + self.origin[0], pts[:, 1] + self.origin[1])[0]

    def implicit_curvature(self, t):
        """Curvature from the gradient/Hessian of the defining polynomial."""
        from ._kernels import poly_eval_np

        x, y = self.evaluate(t)[:2]
        f, fx, fy, fxx, fxy, fyy = poly_eval_np(
            self.family.polynomial(), x + self.origin[0], y + self.origin[1]
        )
        return (fxx * fy**2 - 2 * fxy * fx * fy + fyy * fx**2) / np.hypot(fx, fy) ** 3

    def contains(self, points, margin=0.0):
        pts = np.atleast_2d(points)
        return self.implicit_value(pts) < -margin

    @cached_property
    def scale(self):
        """Largest distance from the origin to the curve."""
        t = np.linspace(0.0, TWO_PI, 1024, endpoint=False)
        x, y = self.evaluate(t)[:2]
        return float(np.max(np.hypot(x, y)))

    @cached_property
    def perimeter(self):
        return perimeter(self)

    @cached_property
    def _arclength(self):
        n = 4096
        t = np.linspace(0.0, TWO_PI, n + 1)
        # 8-point Gauss-Legendre per panel
        xg, wg = np.polynomial.legendre.leggauss(8)
        h = t[1] - t[0]
        mid = 0.5 * (t[:-1] + t[1:])
        nodes = (mid[:, None] + 0.5 * h * xg[None, :]).ravel()
        sp = self.speed(nodes).reshape(n, 8)
        seg = 0.5 * h * (sp * wg[None, :]).sum(axis=1)
        sigma = np.concatenate([[0.0], np.cumsum(seg)])
        length = sigma[-1]
        # t - 2 pi sigma / L is periodic in sigma
        per = t - TWO_PI * sigma / length
        spline = CubicSpline(sigma, per, bc_type="periodic")
        inverse = CubicSpline(t, sigma - length * t / TWO_PI, bc_type="periodic")
        return length, spline, inverse

    def arclength_of_t(self, t):
        length, _spline, inverse = self._arclength
        t = np.asarray(t, dtype=float)
        tm = np.mod(t, TWO_PI)
        return inverse(tm) + length * tm / TWO_PI + length * np.floor_divide(t, TWO_PI)

    def t_of_arclength(self, sigma):
        length, spline, _inverse = self._arclength
        sigma = np.asarray(sigma, dtype=float)
        return spline(np.mod(sigma, length)) + TWO_PI * np.mod(sigma, length) / length + TWO_PI * np.floor_divide(sigma, length)

    def descriptor(self):
        return self.family.descriptor()

    def translated_origin(self, new_origin):
        return make_oval(self.family, new_origin)


def _radius_table(poly, origin, n=RADIUS_TABLE):
    theta = np.linspace(0.0, TWO_PI, n, endpoint=False)
    c, s = np.cos(theta), np.sin(theta)
    f0 = _kernels.poly_eval_np(poly, np.array([origin[0]]), np.array([origin[1]]))[0][0]
    if not f0 < 0.0:
        raise NotContained(f"origin {tuple(origin)} is not inside the oval")
    hi = np.ones(n)
    for _ in range(60):
        fh = _kernels.poly_eval_np(poly, origin[0] + hi * c, origin[1] + hi * s)[0]
        if np.all(fh > 0.0):
            break
        hi = np.where(fh > 0.0, hi, 2.0 * hi)
    else:
        raise RadialSolveFailed("curve is not bounded along some ray")
    lo = np.zeros(n)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = _kernels.poly_eval_np(poly, origin[0] + mid * c, origin[1] + mid * s)[0]
        lo = np.where(fm < 0.0, mid, lo)
        hi = np.where(fm < 0.0, hi, mid)
    return 0.5 * (lo + hi)


def _polygon_is_simple(xy):
    from shapely.geometry import LinearRing

    return bool(LinearRing(xy).is_simple)


def make_oval(family, origin=(0.0, 0.0), validate=True):
    """Build and validate an oval with the light source at ``origin``.

    Raises
    ------
    NotContained
        ``origin`` is not strictly inside the curve.
    NotConvex, SelfIntersecting, RadialSolveFailed
        the family parameters do not describe an oval.
    """
    origin = (float(origin[0]), float(origin[1]))
    empty = np.zeros((0, 3))
    if isinstance(family, Ellipse):
        if not (family.a > 0 and family.b > 0):
            raise ConfigError("ellipse semi-axes must be positive")
        if (origin[0] / family.a) ** 2 + (origin[1] / family.b) ** 2 >= 1.0:
            raise NotContained(f"origin {origin} is not inside the ellipse")
        oval = Oval(
            family, origin, _kernels.ELLIPSE,
            np.array([family.a, family.b, origin[0], origin[1]], dtype=float),
            empty, np.zeros(0),
        )
    else:
        poly = np.ascontiguousarray(family.polynomial(), dtype=float)
        rtab = _radius_table(poly, origin)
        oval = Oval(family, origin, _kernels.IMPLICIT, np.array(origin, dtype=float), poly, rtab)
        if validate:
            t = np.linspace(0.0, TWO_PI, 256, endpoint=False)
            x, y = oval.evaluate(t)[:2]
            resid = np.abs(oval.implicit_value(np.column_stack([x, y])))
            if not np.all(np.isfinite(resid)) or resid.max() > 1e-9:
                raise RadialSolveFailed(f"radial Newton residual {resid.max():.3g}")
    if validate:
        _validate(oval)
    return oval


def _validate(oval):
    t = np.linspace(0.0, TWO_PI, CONVEXITY_GRID, endpoint=False)
    x, y, dx, dy, ddx, ddy = oval.evaluate(t)
    speed = np.hypot(dx, dy)
    kappa = (dx * ddy - dy * ddx) / speed**3
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if not area > 0.0:
        raise NotConvex("curve is not counterclockwise")
    if not np.all(np.isfinite(kappa)) or kappa.min() < -CURVATURE_FLOOR:
        raise NotConvex(f"minimum curvature {np.nanmin(kappa):.3g} < 0")
    # isolated flat points (x^4 + y^4 = 1 at the axes) are allowed, flat arcs are not
    flat = kappa <= CURVATURE_FLOOR
    if flat.any():
        run = np.convolve(np.concatenate([flat, flat[:3]]).astype(int), np.ones(3, dtype=int), "valid")
        if run.max() >= 3:
            raise NotConvex("curvature vanishes along an arc")
    if not _polygon_is_simple(np.column_stack([x, y])):
        raise SelfIntersecting("curve crosses itself")
    if np.any(x * dy - y * dx <= 0.0):
        raise NotContained("the source does not see the whole curve")


def perimeter(oval):
    """Length of the curve by adaptive quadrature of ``|gamma'|``."""
    def speed(t):
        return float(oval.speed(np.array([t]))[0])

    # split at quarter points so the adaptive rule sees each flat stretch
    total = 0.0
    edges = np.linspace(0.0, TWO_PI, 9)
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _err = quad(speed, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)
        total += val
    return total


def tangent_line_curve(oval, orientation=1, n=2048):
    """Closed curve of tangent lines ``t -> (arg gamma'(t), det(gamma, gamma')/|gamma'|)``."""
    t = np.linspace(0.0, TWO_PI, n, endpoint=False)
    x, y, dx, dy, ddx, ddy = oval.evaluate(t)
    speed = np.hypot(dx, dy)
    tx, ty = dx / speed, dy / speed
    alpha = np.unwrap(np.arctan2(dy, dx))
    p = x * ty - y * tx
    # d alpha/dt = kappa |gamma'|, dp/dt = kappa |gamma'| (gamma . tau)
    dalpha = (dx * ddy - dy * ddx) / speed**2
    dp = dalpha * (x * tx + y * ty)
    if orientation < 0:
        alpha = alpha + math.pi
        p = -p
        dp = -dp
    return CylinderCurve(t, alpha, p, True, 1, TWO_PI, dalpha, dp,
                         meta={"kind": "tangent_lines", "orientation": int(orientation)})
