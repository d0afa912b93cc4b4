"""The billiard ball map on oriented lines, its projective variant, and
diagnostics of area preservation and exactness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, FieldTangent, NoIntersection, TangentialReflection
from .lines import OrientedLine, line_to_boundary, wrap_pi

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhasePoint:
    line: OrientedLine
    entry_t: float
    exit_t: float
    phi_in: float
    phi_out: float


def phase_point(line, oval):
    hit = line_to_boundary(line, oval)
    return PhasePoint(line, hit.t_entry, hit.t_exit, hit.phi_entry, hit.phi_exit)


@dataclass(frozen=True)
class TransverseField:
    """Vector field along the table used by the projective reflection law.

    ``tag`` is ``"normal"`` or ``"gradient"``; for the latter ``coeffs``
    holds rows ``(i, j, c)`` of a polynomial in table coordinates (the
    source sits at ``oval.origin``) whose gradient is the field.
    """

    tag: str = "normal"
    coeffs: tuple = ()

    def __post_init__(self):
        if self.tag not in ("normal", "gradient"):
            raise ConfigError(f"unknown field tag {self.tag!r}")
        if self.tag == "gradient" and not self.coeffs:
            raise ConfigError("gradient field needs polynomial coefficients")

    @property
    def poly(self):
        if self.tag == "normal":
            return np.zeros((0, 3))
        return np.ascontiguousarray(np.array(self.coeffs, dtype=float).reshape(-1, 3))

    def vector(self, oval, t):
        x, y, dx, dy = oval.evaluate(np.atleast_1d(t))[:4]
        if self.tag == "normal":
            sp = np.hypot(dx, dy)
            return dy / sp, -dx / sp
        ox, oy = oval.origin
        return _kernels.poly_eval_np(self.poly, x + ox, y + oy)[1:3]

    def transversality(self, oval, n=4096):
        """Smallest ``|det(tau, v)| / |v|`` over a parameter grid."""
        t = np.linspace(0.0, TWO_PI, n, endpoint=False)
        dx, dy = oval.evaluate(t)[2:4]
        sp = np.hypot(dx, dy)
        vx, vy = self.vector(oval, t)
        return float(np.min(np.abs(dx * vy - dy * vx) / (sp * np.hypot(vx, vy))))

    def descriptor(self):
        if self.tag == "normal":
            return {"field": "normal"}
        return {"field": "gradient", "coeffs": [list(map(float, r)) for r in self.poly]}


Normal = TransverseField()


def GradientHomogeneous(coeffs):
    return TransverseField("gradient", tuple(tuple(float(v) for v in row) for row in coeffs))


def field_from_descriptor(desc):
    if desc is None or desc == "normal" or desc.get("field", "normal") == "normal":
        return Normal
    if desc.get("field") == "gradient":
        return GradientHomogeneous(desc["coeffs"])
    raise ConfigError(f"bad field descriptor {desc!r}")


@dataclass(frozen=True)
class Law:
    """Reflection law: ``standard``, ``projective`` (with a field) or the
    non-exact ``shear_control`` map ``(alpha, p) -> (alpha, p + 1)``."""

    kind: str = "standard"
    field: TransverseField | None = None

    def __post_init__(self):
        if self.kind not in ("standard", "projective", "shear_control"):
            raise ConfigError(f"unknown law {self.kind!r}")
        if self.kind == "projective" and self.field is None:
            object.__setattr__(self, "field", Normal)

    def _code(self):
        if self.kind == "standard":
            return _kernels.STANDARD, np.zeros((0, 3))
        if self.field.tag == "normal":
            return _kernels.PROJECTIVE_NORMAL, np.zeros((0, 3))
        return _kernels.PROJECTIVE, self.field.poly

    def trace(self, oval, alpha, p, steps=1):
        """Reflect ``steps`` times; returns ``(alpha, p, t_exit, phi, status)``
        of the last reflection without raising."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if self.kind == "shear_control":
            n = alpha.shape[0]
            return (alpha.copy(), p + float(steps), np.zeros(n), np.zeros(n),
                    np.zeros(n, dtype=np.int64))
        code, fc = self._code()
        return _kernels.reflect_batch(oval.kernel, oval.bracket_grid, code, fc, alpha, p, steps)

    def apply(self, oval, alpha, p, steps=1):
        """Reflect ``steps`` times; raises on any failed sample."""
        a, q, _t, _phi, status = self.trace(oval, alpha, p, steps)
        raise_for_status(status)
        return a, q

    def descriptor(self):
        d = {"law": self.kind}
        if self.kind == "projective":
            d.update(self.field.descriptor())
        return d


def law_from_descriptor(kind, field_desc=None):
    """``kind`` as in :class:`Law`; ``field_desc`` like ``{"field": "gradient", "coeffs": [[4, 0, 1], [0, 4, 1]]}``."""
    fld = field_from_descriptor(field_desc) if kind == "projective" else None
    return Law(kind, fld)


def raise_for_status(status):
    status = np.asarray(status)
    bad = np.nonzero(status != _kernels.OK)[0]
    if bad.size == 0:
        return
    code = int(status[bad[0]])
    msg = f"{bad.size} of {status.size} rays failed (first at index {bad[0]})"
    if code == _kernels.NO_INTERSECTION:
        raise NoIntersection(msg)
    if code == _kernels.FIELD_TANGENT:
        raise FieldTangent(msg)
    raise TangentialReflection(msg)


def _one(line, oval, law):
    a, q = law.apply(oval, [line.alpha], [line.p])
    return OrientedLine(float(a[0]), float(q[0]))


def reflect(line, oval):
    """Incoming line to the line reflected at its exit point."""
    return _one(line, oval, Law())


def reflect_projective(line, oval, field=Normal):
    """Reflection with tangential part kept and ``field`` part reversed."""
    return _one(line, oval, Law("projective", field))


def harmonic_cross_ratio(line, oval, field):
    """Cross-ratio of (tangent, field; incoming, outgoing) directions at the exit point."""
    out = reflect_projective(line, oval, field)
    t1 = phase_point(line, oval).exit_t
    dx, dy = (float(v[0]) for v in oval.evaluate(np.array([t1]))[2:4])
    vx, vy = (float(v[0]) for v in field.vector(oval, np.array([t1])))
    th = [math.atan2(dy, dx), math.atan2(vy, vx), line.alpha, out.alpha]
    num = math.sin(th[0] - th[2]) * math.sin(th[1] - th[3])
    den = math.sin(th[0] - th[3]) * math.sin(th[1] - th[2])
    return num / den


def jacobian_check(map, line, h=1e-4):
    """Jacobian determinant of ``map`` in ``(alpha, p)``.

    Each partial derivative is a five-point centered difference, Richardson
    extrapolated from steps ``h`` and ``h/2``.
    """
    def stencil(da, dp, step):
        img = [map(OrientedLine(line.alpha + k * step * da, line.p + k * step * dp))
               for k in (-2, -1, 1, 2)]
        ref = img[1].alpha
        a = [wrap_pi(m.alpha - ref) for m in img]
        q = [m.p for m in img]
        w = (1.0, -8.0, 8.0, -1.0)
        return np.array([sum(c * v for c, v in zip(w, a)), sum(c * v for c, v in zip(w, q))]) / (12 * step)

    def diff(da, dp):
        return (16.0 * stencil(da, dp, 0.5 * h) - stencil(da, dp, h)) / 15.0

    a_a, p_a = diff(1.0, 0.0)
    a_p, p_p = diff(0.0, 1.0)
    return float(a_a * p_p - a_p * p_a)


def shear_map(line):
    return OrientedLine(line.alpha, line.p + 1.0)


@dataclass
class ExactnessReport:
    area_before: float
    area_after: float
    area_residual: float
    generating_residual: float
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "area_before": self.area_before,
            "area_after": self.area_after,
            "area_residual": self.area_residual,
            "generating_residual": self.generating_residual,
            **self.detail,
        }


def generating_residuals(oval, n_t=48, n_phi=9, h=1e-5):
    """Check ``dL/ds = -cos phi`` and ``dL/ds1 = cos phi1`` in arclength.

    ``L(s, s1)`` is the chord length between boundary points at arclength
    ``s`` and ``s1``; derivatives are centered differences with step ``h``.
    Returns the maximum absolute residuals of both identities.
    """
    sig = np.linspace(0.0, oval.perimeter, n_t, endpoint=False) + 0.1234
    phis = np.linspace(0.15, math.pi - 0.15, n_phi)
    S, PHI = (v.ravel() for v in np.meshgrid(sig, phis, indexing="ij"))
    t = oval.t_of_arclength(S)
    x, y, dx, dy = oval.evaluate(t)[:4]
    alpha = np.arctan2(dy, dx) + PHI
    p = x * np.sin(alpha) - y * np.cos(alpha)
    _a, _q, t1, phi1, status = Law().trace(oval, alpha, p, 1)
    raise_for_status(status)
    s1 = oval.arclength_of_t(t1)

    def chord(sa, sb):
        pa = oval.point(oval.t_of_arclength(sa))
        pb = oval.point(oval.t_of_arclength(sb))
        return np.hypot(pb[:, 0] - pa[:, 0], pb[:, 1] - pa[:, 1])

    d0 = (chord(S + h, s1) - chord(S - h, s1)) / (2 * h)
    d1 = (chord(S, s1 + h) - chord(S, s1 - h)) / (2 * h)
    return float(np.max(np.abs(d0 + np.cos(PHI)))), float(np.max(np.abs(d1 - np.cos(phi1))))


def exactness_check(oval, n_samples=1024, law=None, steps=1):
    """Exactness residuals of the billiard map on ``oval``.

    (a) the signed area of ``T^steps(C_0)`` minus that of ``C_0`` (the
    point-source beam at the origin), (b) the generating-function identities
    for the chord length (only meaningful for the standard law).
    """
    from .beam import point_source_beam, propagate

    law = law or Law()
    c0 = point_source_beam(n_samples)
    before = c0.signed_area()
    after = propagate(c0, oval, steps, law).signed_area()
    detail = {"law": law.kind, "steps": int(steps), "n_samples": int(n_samples)}
    gen = float("nan")
    if law.kind == "standard":
        r0, r1 = generating_residuals(oval)
        gen = max(r0, r1)
        detail.update(generating_residual_entry=r0, generating_residual_exit=r1)
    return ExactnessReport(before, after, abs(after - before), gen, detail)
