"""Beams of rays as closed curves of lines, charted by the source parameter.

A beam never interpolates: every sample (and every derivative stencil
point) is obtained by pushing the generation-0 line at its parameter ``s``
through ``generation`` reflections.  Refining a beam therefore only adds
samples; existing samples are reproduced bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .billiard import Law
from .errors import ConfigError, NotContained, RefinementBudgetExceeded
from .lines import (
    CylinderCurve,
    cylinder_curve_is_simple,
    signed_area,
    write_curve_csv,
)

TWO_PI = 2.0 * math.pi
DEFAULT_SAMPLES = 1024
DEFAULT_BUDGET = 2**18
MAX_DALPHA = 0.02
MAX_DP = 0.02
MAX_TURN_DEG = 5.0
# stencil step for derivative jets, relative to the local sample gap
JET_FRACTION = 0.05
JET_H_MAX = 1e-3
JET_H_MIN = 1e-9


def _wrap_pi(a):
    return np.mod(a + math.pi, TWO_PI) - math.pi


# ---------------------------------------------------------------------------
# generation-0 line families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointSource:
    """Rays from the origin: ``s -> (s, 0)``."""

    def lines(self, s):
        s = np.asarray(s, dtype=float)
        return s.copy(), np.zeros_like(s)

    def descriptor(self):
        return {"beam": "point"}


@dataclass(frozen=True, eq=False)
class OvalNormalSource:
    """Outward normals of an oval given in source-relative coordinates."""

    oval: object

    def lines(self, s):
        x, y, dx, dy = self.oval.evaluate(np.asarray(s, dtype=float))[:4]
        sp = np.hypot(dx, dy)
        nx, ny = dy / sp, -dx / sp
        return np.arctan2(ny, nx), x * ny - y * nx

    def descriptor(self):
        return {"beam": "inner_oval", "oval": self.oval.descriptor()}


@dataclass(frozen=True, eq=False)
class TangentSource:
    """Tangent lines of an oval, oriented along ``gamma'``."""

    oval: object

    def lines(self, s):
        x, y, dx, dy = self.oval.evaluate(np.asarray(s, dtype=float))[:4]
        sp = np.hypot(dx, dy)
        tx, ty = dx / sp, dy / sp
        return np.arctan2(ty, tx), x * ty - y * tx

    def descriptor(self):
        return {"beam": "tangent_lines", "oval": self.oval.descriptor()}


@dataclass(frozen=True, eq=False)
class FunctionSource:
    """Any closed family given by a callable ``s -> (alpha, p)``."""

    func: object
    name: str = "function"

    def lines(self, s):
        a, q = self.func(np.asarray(s, dtype=float))
        return np.asarray(a, dtype=float), np.asarray(q, dtype=float)

    def descriptor(self):
        return {"beam": self.name}


# ---------------------------------------------------------------------------
# beams
# ---------------------------------------------------------------------------


@dataclass
class Jets:
    h: np.ndarray
    dalpha: np.ndarray
    ddalpha: np.ndarray
    dp: np.ndarray
    ddp: np.ndarray


def _five_point(f0, fm2, fm1, f1, f2, h):
    # differences against the centre keep cancellation small
    d1 = (8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h)
    d2 = (16.0 * ((f1 - f0) + (fm1 - f0)) - ((f2 - f0) + (fm2 - f0))) / (12.0 * h * h)
    return d1, d2


@dataclass
class Beam:
    """The curve ``C_n``: lines at source parameters ``s`` after ``generation`` reflections.

    ``alpha_raw`` holds angles as produced by the reflection kernel (defined
    mod 2 pi); ``alpha`` is the continuous lift.
    """

    s: np.ndarray
    alpha_raw: np.ndarray
    p: np.ndarray
    source: object = field(default_factory=PointSource)
    generation: int = 0
    oval: object = None
    law: Law = field(default_factory=Law)
    stats: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self):
        return self.s.shape[0]

    # -- evaluation -------------------------------------------------------

    def evaluate(self, s):
        """Lines ``(alpha_raw, p)`` at arbitrary parameters, re-propagated from generation 0."""
        a, q = self.source.lines(s)
        if self.generation == 0:
            return a, q
        return self.law.apply(self.oval, a, q, self.generation)

    def local_jets(self, s, h):
        """``alpha, alpha', alpha'', p, p', p''`` at ``s`` by 5-point stencils of width ``h``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        h = np.broadcast_to(np.asarray(h, dtype=float), s.shape)
        offs = np.array([0.0, -2.0, -1.0, 1.0, 2.0])
        pts = (s[None, :] + offs[:, None] * h[None, :]).ravel()
        a, q = self.evaluate(pts)
        a = a.reshape(5, -1)
        q = q.reshape(5, -1)
        a = a[0] + np.vstack([np.zeros_like(a[0]), _wrap_pi(a[1:] - a[0])])
        da, dda = _five_point(*a, h)
        dq, ddq = _five_point(*q, h)
        return a[0], da, dda, q[0], dq, ddq

    @property
    def jets(self):
        if "jets" not in self._cache:
            ds = np.diff(np.append(self.s, self.s[0] + TWO_PI))
            gap = np.minimum(ds, np.roll(ds, 1))
            h = np.clip(JET_FRACTION * gap, JET_H_MIN, JET_H_MAX)
            _a, da, dda, _q, dq, ddq = self.local_jets(self.s, h)
            self._cache["jets"] = Jets(h, da, dda, dq, ddq)
        return self._cache["jets"]

    # -- derived curves ---------------------------------------------------

    @property
    def alpha(self):
        if "alpha" not in self._cache:
            steps = _wrap_pi(np.diff(self.alpha_raw))
            self._cache["alpha"] = self.alpha_raw[0] + np.concatenate([[0.0], np.cumsum(steps)])
        return self._cache["alpha"]

    @property
    def winding(self):
        a = self.alpha
        closing = a[-1] + _wrap_pi(self.alpha_raw[0] - self.alpha_raw[-1])
        return int(round((closing - a[0]) / TWO_PI))

    def curve(self, with_derivatives=True):
        j = self.jets if with_derivatives else None
        return CylinderCurve(
            self.s, self.alpha, self.p, True, self.winding, TWO_PI,
            None if j is None else j.dalpha, None if j is None else j.dp,
            meta=self.provenance(),
        )

    def signed_area(self):
        return signed_area(self.curve())

    def indicator(self):
        """Inflection indicator ``det[P, P', P'']`` at the samples."""
        j = self.jets
        return j.dalpha * j.ddp - j.ddalpha * j.dp + j.dalpha**3 * self.p

    def is_simple(self):
        return cylinder_curve_is_simple(self.curve(with_derivatives=False))

    def lines_at_samples(self):
        return self.alpha_raw, self.p

    def provenance(self):
        return {
            "oval": None if self.oval is None else self.oval.descriptor(),
            "source": None if self.oval is None else list(self.oval.origin),
            "beam": self.source.descriptor(),
            "n": int(self.generation),
            "law": self.law.descriptor(),
        }

    def with_samples(self, s, alpha_raw, p, **stats):
        return Beam(s, alpha_raw, p, self.source, self.generation, self.oval, self.law,
                    {**self.stats, **stats})

    def to_csv(self, path, extra_header=()):
        import json

        prov = self.provenance()
        header = [f"{k}={json.dumps(prov[k], sort_keys=True)}" for k in ("oval", "source", "n", "law")]
        header += list(extra_header)
        write_curve_csv(path, self.curve(with_derivatives=False), header)


# ---------------------------------------------------------------------------
# construction and propagation
# ---------------------------------------------------------------------------


def _uniform(n):
    return TWO_PI * np.arange(n) / n


def point_source_beam(n_samples=DEFAULT_SAMPLES):
    """``C_0``: all lines through the origin, ``s_k = 2 pi k / n``."""
    if n_samples < 16:
        raise ConfigError("a beam needs at least 16 samples")
    s = _uniform(n_samples)
    return Beam(s, s.copy(), np.zeros(n_samples), PointSource())


def family_beam(source, n_samples=DEFAULT_SAMPLES, refine_family=True, scale=1.0):
    """Generation-0 beam of an arbitrary line family."""
    s = _uniform(n_samples)
    a, q = source.lines(s)
    beam = Beam(s, a, q, source)
    return refine(beam, scale=scale) if refine_family else beam


def oval_normal_beam(inner, n_samples=DEFAULT_SAMPLES, table=None):
    """Outward normals of ``inner`` (source-relative coordinates).

    With ``table`` given, ``inner`` must lie strictly inside it.
    """
    if n_samples < 16:
        raise ConfigError("a beam needs at least 16 samples")
    if table is not None:
        t = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
        if not np.all(table.contains(inner.point(t))):
            raise NotContained("inner oval is not inside the table")
    s = _uniform(n_samples)
    src = OvalNormalSource(inner)
    a, q = src.lines(s)
    return Beam(s, a, q, src)


def refine(beam, oval=None, law=None, budget=DEFAULT_BUDGET, max_dalpha=MAX_DALPHA,
           max_dp=MAX_DP, max_turn_deg=MAX_TURN_DEG, scale=None):
    """Insert midpoints until gaps and turning angles are within bounds.

    ``max_dp`` is relative to ``scale`` (default: the table's largest radius).
    """
    if oval is not None and beam.oval is not None and oval is not beam.oval:
        raise ConfigError("beam was built for a different oval")
    if law is not None and law != beam.law:
        raise ConfigError("beam was built with a different law")
    if scale is None:
        scale = beam.oval.scale if beam.oval is not None else 1.0
    dp_tol = max_dp * scale
    cos_turn = math.cos(math.radians(max_turn_deg))
    s, a, q = beam.s, beam.alpha_raw, beam.p
    rounds = 0
    added = 0
    while True:
        sc = np.append(s, s[0] + TWO_PI)
        ds = np.diff(sc)
        da = _wrap_pi(np.diff(np.append(a, a[0])))
        dq = np.diff(np.append(q, q[0]))
        bad = (np.abs(da) > max_dalpha) | (np.abs(dq) > dp_tol)
        # turning angle at node k between segments k-1 and k
        length = np.hypot(da, dq)
        pa, pq, pl = np.roll(da, 1), np.roll(dq, 1), np.roll(length, 1)
        ok = (length > 1e-13) & (pl > 1e-13)
        cosang = np.where(ok, (pa * da + pq * dq) / np.where(ok, pl * length, 1.0), 1.0)
        turn = cosang < cos_turn
        bad |= turn | np.roll(turn, -1)
        bad &= ds > 1e-12
        if not bad.any():
            break
        new = s[bad] + 0.5 * ds[bad]
        if s.size + new.size > budget:
            raise RefinementBudgetExceeded(
                f"{s.size + new.size} samples would exceed the budget of {budget}"
            )
        na, nq = beam.evaluate(new)
        order = np.argsort(np.concatenate([s, new]), kind="stable")
        s = np.concatenate([s, new])[order]
        a = np.concatenate([a, na])[order]
        q = np.concatenate([q, nq])[order]
        rounds += 1
        added += new.size
    if added == 0:
        return beam
    return beam.with_samples(
        s, a, q,
        refine_rounds=beam.stats.get("refine_rounds", 0) + rounds,
        refine_added=beam.stats.get("refine_added", 0) + added,
    )


def propagate(beam, oval, steps=1, law=None, refine_each=True, budget=DEFAULT_BUDGET):
    """Reflect every line ``steps`` times, refining after each reflection."""
    law = law or beam.law
    if beam.generation > 0:
        if beam.oval is not oval:
            raise ConfigError("beam was built for a different oval")
        if law != beam.law:
            raise ConfigError("beam was built with a different law")
    cur = beam
    for _ in range(int(steps)):
        a, q = law.apply(oval, cur.alpha_raw, cur.p, 1)
        cur = Beam(cur.s, a, q, cur.source, cur.generation + 1, oval, law, dict(cur.stats))
        if refine_each:
            cur = refine(cur, budget=budget)
    cur.stats["samples"] = int(cur.s.size)
    return cur


def beam_for(oval, n, law=None, n_samples=DEFAULT_SAMPLES, inner=None, budget=DEFAULT_BUDGET):
    """``C_n`` for a point source at the origin (or the normal beam of ``inner``)."""
    law = law or Law()
    b0 = point_source_beam(n_samples) if inner is None else oval_normal_beam(inner, n_samples, oval)
    if n == 0:
        b0 = Beam(b0.s, b0.alpha_raw, b0.p, b0.source, 0, oval, law)
        return refine(b0, budget=budget)
    return propagate(b0, oval, n, law, budget=budget)
