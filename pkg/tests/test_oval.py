import math

import numpy as np
import pytest
from scipy.special import ellipe

from caustic_forge.errors import ConfigError, NotContained, NotConvex
from caustic_forge.oval import (
    Ellipse, ImplicitConvex, PerturbedEllipse, SuperEllipse4, family_from_descriptor, make_oval,
)

TWO_PI = 2 * math.pi


def agm_perimeter(a, b):
    """Ellipse perimeter ``(2 pi / M) (a^2 - sum 2^(n-1) c_n^2)`` from the AGM iteration."""
    x, y = a, b
    total = 0.5 * (a * a - b * b)
    power = 0.5
    while abs(x - y) > 1e-16 * x:
        x, y, c = 0.5 * (x + y), math.sqrt(x * y), 0.5 * (x - y)
        power *= 2.0
        total += power * c * c
    return TWO_PI * (a * a - total) / x


def test_perimeter_oracles():
    ov = make_oval(Ellipse(2.0, 1.0))
    assert ov.perimeter == pytest.approx(9.688448220547675, rel=1e-12)
    assert ov.perimeter == pytest.approx(agm_perimeter(2.0, 1.0), rel=1e-12)
    assert ov.perimeter == pytest.approx(4 * 2.0 * ellipe(1 - 0.25), rel=1e-12)


def test_perimeter_independent_of_source():
    a = make_oval(Ellipse(2.0, 1.0), (0.5, -0.3)).perimeter
    assert a == pytest.approx(9.688448220547675, rel=1e-12)


def test_ellipse_curvature_closed_form():
    a, b = 1.7, 0.9
    ov = make_oval(Ellipse(a, b), (0.2, 0.1))
    t = np.linspace(0, TWO_PI, 33)
    k = a * b / (a**2 * np.sin(t) ** 2 + b**2 * np.cos(t) ** 2) ** 1.5
    np.testing.assert_allclose(ov.curvature(t), k, rtol=1e-13)


def test_foci():
    np.testing.assert_allclose(Ellipse(2.0, 1.0).foci, [[math.sqrt(3), 0], [-math.sqrt(3), 0]])
    np.testing.assert_allclose(Ellipse(1.0, 2.0).foci, [[0, math.sqrt(3)], [0, -math.sqrt(3)]])


@pytest.mark.parametrize("family, origin", [
    (SuperEllipse4(), (0.6, 0.4)),
    (PerturbedEllipse(0.5, 0.25), (0.5, 0.3)),
    (ImplicitConvex(((4, 0, 1.0), (0, 4, 0.5), (2, 0, 0.3), (0, 2, 0.2), (0, 0, -1.0))), (0.1, -0.2)),
])
def test_implicit_points_and_curvature(family, origin):
    ov = make_oval(family, origin)
    t = np.linspace(0, TWO_PI, 257)[:-1]
    x, y = ov.evaluate(t)[:2]
    assert np.max(np.abs(ov.implicit_value(np.column_stack([x, y])))) < 1e-12
    # parametric derivatives against the implicit-function curvature
    np.testing.assert_allclose(ov.curvature(t), ov.implicit_curvature(t), rtol=1e-8, atol=1e-10)


def test_derivatives_by_finite_differences(quartic):
    t = np.linspace(0.1, 6.0, 11)
    h = 1e-5
    ev = quartic.evaluate(t)
    plus, minus = quartic.evaluate(t + h), quartic.evaluate(t - h)
    for k in range(4):
        np.testing.assert_allclose((plus[k] - minus[k]) / (2 * h), ev[k + 2], atol=1e-8)


def test_superellipse_has_flat_points_but_is_accepted(quartic):
    k = quartic.curvature(np.linspace(0, TWO_PI, 4096, endpoint=False))
    assert k.min() >= -1e-9


def test_arclength_round_trip(off_ellipse):
    t = np.linspace(-1.0, 8.0, 50)
    np.testing.assert_allclose(off_ellipse.t_of_arclength(off_ellipse.arclength_of_t(t)), t, atol=1e-11)
    assert off_ellipse.arclength_of_t(TWO_PI) == pytest.approx(off_ellipse.perimeter, rel=1e-12)


def test_source_outside_is_rejected():
    with pytest.raises(NotContained):
        make_oval(Ellipse(1.0, 1.0), (1.2, 0.0))
    with pytest.raises(NotContained):
        make_oval(SuperEllipse4(), (1.0, 0.5))


def test_non_convex_is_rejected():
    with pytest.raises(NotConvex):
        make_oval(ImplicitConvex(((4, 0, 1.0), (0, 4, 1.0), (2, 2, -1.9), (0, 0, -1.0))))


def test_descriptors_round_trip():
    for fam in (Ellipse(2.0, 1.0), SuperEllipse4(), PerturbedEllipse(0.4, -0.1),
                ImplicitConvex(((2, 0, 1.0), (0, 2, 2.0), (0, 0, -1.0)))):
        assert family_from_descriptor(fam.descriptor()) == fam
    assert family_from_descriptor({"family": "circle", "r": 2}) == Ellipse(2.0, 2.0)
    with pytest.raises(ConfigError):
        family_from_descriptor({"family": "triangle"})
    with pytest.raises(ConfigError):
        family_from_descriptor({"family": "ellipse", "a": 1})


def test_counterclockwise_and_source_relative(off_ellipse):
    x, y = off_ellipse.evaluate(np.array([0.0]))[:2]
    # t = 0 is the right end of the major axis, shifted by the source
    assert x[0] == pytest.approx(math.sqrt(5) / 2 - 0.6)
    assert y[0] == pytest.approx(-0.2)
