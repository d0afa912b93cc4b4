import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from caustic_forge.billiard import reflect
from caustic_forge.lines import (
    CylinderCurve, boundary_to_line, count_sign_changes, inflection_indicator, line_to_boundary,
    signed_area,
)
from caustic_forge.oval import Ellipse, PerturbedEllipse, make_oval

TWO_PI = 2 * math.pi
angles = st.floats(0.0, TWO_PI, allow_nan=False)
phases = st.floats(0.05, math.pi - 0.05, allow_nan=False)


@st.composite
def tables(draw):
    if draw(st.booleans()):
        fam = Ellipse(draw(st.floats(0.6, 2.0)), draw(st.floats(0.6, 2.0)))
    else:
        fam = PerturbedEllipse(draw(st.floats(0.3, 1.0)), draw(st.floats(-0.25, 0.25)))
    centre = make_oval(fam)
    # sources well inside: a shrunken copy of a boundary point
    t = draw(angles)
    x, y = centre.point(np.array([t]))[0]
    u = draw(st.floats(0.0, 0.7))
    return make_oval(fam, (u * x, u * y))


@settings(max_examples=60, deadline=None)
@given(tables(), angles, phases)
def test_reflection_reversibility(oval, t, phi):
    ln = boundary_to_line(t, phi, oval)
    hit = line_to_boundary(ln, oval)
    chord = boundary_to_line(hit.t_entry, hit.phi_entry, oval)
    out = reflect(chord, oval)
    assert reflect(out.reversed(), oval).same_as(chord.reversed(), tol=1e-9)


@settings(max_examples=60, deadline=None)
@given(tables(), angles, phases)
def test_boundary_round_trip(oval, t, phi):
    hit = line_to_boundary(boundary_to_line(t, phi, oval), oval)
    assert abs(math.remainder(hit.t_entry - t, TWO_PI)) < 1e-9
    assert abs(hit.phi_entry - phi) < 1e-9


coeffs = st.lists(st.floats(-0.2, 0.2), min_size=6, max_size=6)


def trig(c):
    return lambda t: c[0] + c[1] * np.cos(2 * t) + c[2] * np.sin(2 * t) + c[3] * np.cos(3 * t) \
        + c[4] * np.sin(4 * t) + c[5] * np.cos(t)


@settings(max_examples=40, deadline=None)
@given(coeffs)
def test_area_antisymmetry_and_mean(c):
    g = CylinderCurve.graph(trig(c), n=256)
    area = signed_area(g)
    assert abs(area - TWO_PI * c[0]) < 1e-10
    assert abs(signed_area(g.reversed()) + area) < 1e-10


@settings(max_examples=30, deadline=None)
@given(coeffs, st.floats(-0.45, 0.45))
def test_sign_changes_survive_reparametrization(c, w):
    n = 2048
    u = TWO_PI * np.arange(n) / n
    s = u + w * np.sin(u)
    f = trig(c)
    D0 = inflection_indicator(CylinderCurve.graph(f, n=n))
    D1 = inflection_indicator(CylinderCurve(s, s.copy(), f(s), True, 1, TWO_PI))
    assert count_sign_changes(D0) == count_sign_changes(D1)
