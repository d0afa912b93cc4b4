import math

import numpy as np
import pytest

from caustic_forge.errors import NoIntersection, NotClosed, Tangential, TooFewSamples
from caustic_forge.lines import (
    CylinderCurve, OrientedLine, boundary_to_line, count_sign_changes, inflection_indicator,
    line_through_point_dir, line_to_boundary, read_curve_csv, robust_sign_changes, signed_area,
    spherical_lift, wrap_angle,
)
from caustic_forge.oval import Ellipse, make_oval

TWO_PI = 2 * math.pi


@pytest.mark.parametrize("theta", [0.0, 0.7, 2.5, -1.2])
def test_lines_through_origin_have_zero_p(theta):
    ln = line_through_point_dir((0.0, 0.0), theta)
    assert ln.alpha == theta and ln.p == 0.0


def test_line_through_point_dir_examples():
    ln = line_through_point_dir((1.0, 0.0), math.pi / 2)
    assert ln.p == pytest.approx(1.0, abs=1e-15)
    a, b, al = 0.3, -0.8, 1.1
    assert line_through_point_dir((a, b), al).p == pytest.approx(a * math.sin(al) - b * math.cos(al))


def test_point_on_line_iff_det_equals_p():
    ln = line_through_point_dir((0.4, -0.2), 0.9)
    assert abs(ln.residual((0.4, -0.2))) < 1e-15
    e = ln.direction
    assert abs(ln.residual((0.4 + 3 * e[0], -0.2 + 3 * e[1]))) < 1e-14
    assert ln.same_as(OrientedLine(0.9 + TWO_PI, ln.p))


def test_spherical_lift_examples():
    np.testing.assert_allclose(spherical_lift(OrientedLine(0.0, 0.0)), [1, 0, 0])
    np.testing.assert_allclose(spherical_lift(OrientedLine(math.pi / 2, 1.0)), [0, 1, 1], atol=1e-15)


def test_first_harmonic_lifts_into_plane():
    a, b = 0.3, -0.45
    al = np.linspace(0, TWO_PI, 50)
    P = np.array([spherical_lift(OrientedLine(t, a * math.sin(t) - b * math.cos(t))) for t in al])
    # (x, y, z) with z = a y - b x lies in the plane -b x... normal (b, -a, 1)
    np.testing.assert_allclose(P @ np.array([b, -a, 1.0]), 0.0, atol=1e-15)


def test_signed_area_constant_and_first_harmonic():
    c = 0.37
    assert signed_area(CylinderCurve.graph(lambda t: c + 0 * t, n=256)) == pytest.approx(TWO_PI * c, rel=1e-12)
    g = CylinderCurve.graph(lambda t: 0.3 * np.sin(t) - 0.2 * np.cos(t), n=256)
    assert abs(signed_area(g)) < 1e-12


def test_signed_area_antisymmetric_under_reversal():
    g = CylinderCurve.graph(lambda t: 0.1 + 0.2 * np.cos(2 * t) + 0.05 * np.sin(3 * t), n=300)
    assert signed_area(g.reversed()) == pytest.approx(-signed_area(g), rel=1e-12)


def test_signed_area_rejects_open_curve():
    g = CylinderCurve.graph(lambda t: 0.1 * np.cos(t), n=64)
    bad = CylinderCurve(g.s, g.alpha, g.p, False, 1, g.period)
    with pytest.raises(NotClosed):
        signed_area(bad)


def test_indicator_vanishes_on_first_harmonics():
    g = CylinderCurve.graph(lambda t: 0.4 * np.sin(t) + 0.1 * np.cos(t), n=512)
    assert np.max(np.abs(inflection_indicator(g))) < 1e-4


def test_indicator_of_cos2_matches_analytic():
    eps = 0.1
    g = CylinderCurve.graph(lambda t: eps * np.cos(2 * t), n=1024)
    D = inflection_indicator(g)
    np.testing.assert_allclose(D, -3 * eps * np.cos(2 * g.s), atol=1e-5)
    assert count_sign_changes(D) == 4


def test_sign_changes_invariant_under_reparametrization():
    n = 2048
    u = TWO_PI * np.arange(n) / n
    s = u + 0.3 * np.sin(u)  # a smooth increasing reparametrization
    f = lambda t: 0.1 * np.cos(2 * t) + 0.03 * np.sin(5 * t)
    g = CylinderCurve(s, s.copy(), f(s), True, 1, TWO_PI)
    g_uniform = CylinderCurve.graph(f, n=n)
    assert count_sign_changes(inflection_indicator(g)) == count_sign_changes(inflection_indicator(g_uniform))
    assert count_sign_changes(inflection_indicator(g)) == 10


def test_too_few_samples():
    g = CylinderCurve(np.arange(4.0), np.arange(4.0), np.zeros(4), True, 1, 4.0)
    with pytest.raises(TooFewSamples):
        inflection_indicator(g)


def test_robust_sign_changes_ignores_short_flickers():
    v = np.array([1.0] * 10 + [-1.0] + [1.0] * 10 + [-1.0] * 10)
    assert count_sign_changes(v) == 2
    assert len(robust_sign_changes(v, min_run=1)) == 4


def test_line_to_boundary_circle_examples():
    circ = make_oval(Ellipse(1.0, 1.0))
    hit = line_to_boundary(OrientedLine(0.0, 0.0), circ)
    assert wrap_angle(hit.t_entry) == pytest.approx(math.pi)
    assert min(hit.t_exit, TWO_PI - hit.t_exit) < 1e-12
    assert hit.phi_entry == pytest.approx(math.pi / 2)
    with pytest.raises(NoIntersection):
        line_to_boundary(OrientedLine(0.0, 1.0 + 1e-6), circ)
    with pytest.raises(Tangential):
        line_to_boundary(OrientedLine(0.0, 1.0), circ)


def test_normal_chords_of_circle_pass_through_centre():
    circ = make_oval(Ellipse(1.0, 1.0))
    for t in np.linspace(0, TWO_PI, 7):
        assert abs(boundary_to_line(t, math.pi / 2, circ).p) < 1e-15
    ln = boundary_to_line(0.0, math.pi / 2, circ)
    assert ln.alpha == pytest.approx(math.pi)


def test_exit_point_lies_on_line(off_ellipse):
    rng = np.random.default_rng(3)
    for _ in range(50):
        ln = boundary_to_line(rng.uniform(0, TWO_PI), rng.uniform(0.1, math.pi - 0.1), off_ellipse)
        hit = line_to_boundary(ln, off_ellipse)
        X = off_ellipse.point(np.array([hit.t_exit]))[0]
        assert abs(ln.residual(X)) < 1e-10


def test_boundary_line_round_trip(off_ellipse):
    rng = np.random.default_rng(4)
    for _ in range(100):
        t, phi = rng.uniform(0, TWO_PI), rng.uniform(0.05, math.pi - 0.05)
        hit = line_to_boundary(boundary_to_line(t, phi, off_ellipse), off_ellipse)
        assert abs(math.remainder(hit.t_entry - t, TWO_PI)) < 1e-9
        assert hit.phi_entry == pytest.approx(phi, abs=1e-9)
        back = boundary_to_line(hit.t_entry, hit.phi_entry, off_ellipse)
        assert back.same_as(boundary_to_line(t, phi, off_ellipse), tol=1e-9)


def test_csv_round_trip(tmp_path):
    g = CylinderCurve.graph(lambda t: 0.2 * np.cos(3 * t), n=64)
    path = tmp_path / "g.csv"
    g.to_csv(path, header=["note=test"])
    text = path.read_text().splitlines()
    assert text[0] == "# note=test" and text[1] == "s,alpha,p"
    back = read_curve_csv(path)
    np.testing.assert_array_equal(back.alpha, g.alpha)
    np.testing.assert_array_equal(back.p, g.p)
