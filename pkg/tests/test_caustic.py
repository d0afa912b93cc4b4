import math

import numpy as np
import pytest

from caustic_forge.beam import beam_for
from caustic_forge.caustic import (
    cusp_census, degenerate_caustic, envelope, envelope_at, evolute, match_circular,
    normal_front, orthotomic, oval_front, vertex_census,
)
from caustic_forge.errors import DegenerateFamily, NotClosed
from caustic_forge.oval import Ellipse, make_oval

TWO_PI = 2 * math.pi


def circle_caustic_oracle(sx, theta, h=1e-5):
    """Caustic of the unit circle for a source at (sx, 0), one reflection.

    Plain plane geometry: reflect the chord direction at ``P(theta)`` and
    intersect the reflected rays at ``theta +- h``.
    """
    def ray(th):
        P = np.array([math.cos(th), math.sin(th)])
        d = P - np.array([sx, 0.0])
        d /= np.linalg.norm(d)
        return P, d - 2 * np.dot(d, P) * P

    P0, d0 = ray(theta - h)
    P1, d1 = ray(theta + h)
    M = np.column_stack([d0, -d1])
    u, _ = np.linalg.solve(M, P1 - P0)
    return P0 + u * d0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_circle_has_four_stable_cusps(circle_half, n):
    c = cusp_census(beam_for(circle_half, n))
    c2 = cusp_census(beam_for(circle_half, n, n_samples=2048))
    assert c.count == c2.count == 4
    assert match_circular(c.s, c2.s) < 1e-6


def test_circle_caustic_against_plane_geometry(circle_half):
    b = beam_for(circle_half, 1)
    env = envelope(b)
    # the exit parameter of each source ray gives the reflection point
    _a, _q, t, _phi, _st = b.law.trace(circle_half, *b.source.lines(b.s), 1)
    rng = np.random.default_rng(7)
    for k in rng.choice(len(b), 40, replace=False):
        px, py = circle_half.point(np.array([t[k]]))[0] + [0.5, 0.0]
        X = circle_caustic_oracle(0.5, math.atan2(py, px)) - [0.5, 0.0]
        if np.hypot(*X) > 10:
            continue
        assert np.hypot(env.x[k] - X[0], env.y[k] - X[1]) < 1e-6


def test_circle_cusps_are_symmetric(circle_half):
    c = cusp_census(beam_for(circle_half, 1))
    pts = np.array(c.points)
    # the source sits at the focal distance of the mirror at (1, 0), so the
    # axial cusp is at infinity
    far = np.hypot(pts[:, 0], pts[:, 1]) > 1e6
    assert far.sum() == 1 and abs(math.remainder(c.s[int(np.argmax(far))], TWO_PI)) < 1e-6
    finite = pts[~far]
    np.testing.assert_allclose(np.sort(finite[:, 1]), [-math.sqrt(3) / 4, 0.0, math.sqrt(3) / 4], atol=1e-9)
    np.testing.assert_allclose(finite[:, 0], -0.75, atol=1e-9)


def test_ellipse_evolute_cusps():
    a, b = 2.0, 1.0
    ev = evolute(oval_front(make_oval(Ellipse(a, b))))
    got = sorted((round(c.x, 6), round(c.y, 6)) for c in ev.cusps)
    c2 = a * a - b * b
    want = sorted([(c2 / a, 0.0), (-c2 / a, 0.0), (0.0, c2 / b), (0.0, -c2 / b)])
    assert len(got) == 4
    np.testing.assert_allclose(got, want, atol=1e-6)


def test_ellipse_has_four_vertices():
    assert vertex_census(oval_front(make_oval(Ellipse(2.0, 1.0)))).count == 4


def test_circle_front_has_constant_curvature():
    v = vertex_census(oval_front(make_oval(Ellipse(1.0, 1.0), (0.3, 0.1))))
    assert v.constant_curvature and v.count == 0


def test_focus_source_is_degenerate():
    c = math.sqrt(3.0)
    el = make_oval(Ellipse(2.0, 1.0), (-c, 0.0))
    for n in (1, 2):
        point, resid = degenerate_caustic(beam_for(el, n))
        assert resid < 1e-7
        # odd n images at the other focus, even n back at the source
        want = (2 * c, 0.0) if n % 2 else (0.0, 0.0)
        np.testing.assert_allclose(point, want, atol=1e-7)
    with pytest.raises(DegenerateFamily):
        cusp_census(beam_for(el, 1))
    env = envelope(beam_for(el, 1))
    assert env.degenerate and env.cusp_count == 0


def test_centre_source_is_degenerate():
    point, resid = degenerate_caustic(beam_for(make_oval(Ellipse(1.0, 1.0)), 3))
    assert resid < 1e-7 and np.hypot(*point) < 1e-7


def test_orthotomic_evolute_matches_caustic(circle_half):
    b = beam_for(circle_half, 1)
    env = envelope(b)
    o = orthotomic(circle_half)
    _a, _q, t, _phi, _st = b.law.trace(circle_half, *b.source.lines(b.s), 1)
    x2, y2 = envelope_at(o.family, t, 1e-4)
    d = np.hypot(env.x - x2, env.y - y2)
    bounded = np.hypot(env.x, env.y) < 10
    assert bounded.sum() > 0.8 * len(b)
    assert d[bounded].max() < 1e-6
    assert vertex_census(o).count == evolute(o).cusp_count == env.cusp_count == 4


@pytest.mark.parametrize("z0", [0.3, 1.7])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_front_vertices_are_caustic_cusps(off_ellipse, n, z0):
    b = beam_for(off_ellipse, n)
    f = normal_front(b, z0)
    assert f.closure_gap < 1e-8
    v = vertex_census(f)
    c = cusp_census(b)
    assert v.count == c.count
    assert match_circular(v.s, c.s) < 1e-6


def test_front_is_normal_to_its_lines(off_ellipse):
    # finite differences of the sampled points; their error shrinks with refinement
    res = [normal_front(beam_for(off_ellipse, 3, n_samples=m), 0.3).orthogonality_residual()
           for m in (1024, 16384)]
    assert res[1] < 2e-5 and res[1] < res[0] / 10


def test_fronts_are_equidistant(circle_half):
    b = beam_for(circle_half, 2)
    f1, f2 = normal_front(b, 0.3), normal_front(b, 0.8)
    d = np.hypot(f1.x - f2.x, f1.y - f2.y)
    np.testing.assert_allclose(d, 0.5, atol=1e-9)


def test_normal_front_requires_closure(circle_half):
    from caustic_forge.beam import Beam

    b = beam_for(circle_half, 1)
    shifted = Beam(b.s, b.alpha_raw, b.p + 0.1, b.source, b.generation, b.oval, b.law)
    with pytest.raises(NotClosed):
        normal_front(shifted, 0.0)


def test_match_circular():
    assert match_circular([0.1, 3.0], [3.0 + 1e-3, 0.1]) == pytest.approx(1e-3)
    assert match_circular([0.01], [TWO_PI - 0.01]) == pytest.approx(0.02)
    assert match_circular([1.0], [1.0, 2.0]) == math.inf


def test_caustic_csv(tmp_path, circle_half):
    path = tmp_path / "c.csv"
    envelope(beam_for(circle_half, 1)).to_csv(path, header=["n=1"])
    lines = path.read_text().splitlines()
    assert lines[1] == "s,x,y,is_cusp,arc_id"
    assert sum(1 for ln in lines[2:] if ln.split(",")[3] == "1") == 4
