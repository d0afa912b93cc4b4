import math

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from caustic_forge.csf import (
    Flat, FlowState, Graph, Time, csf_run, csf_step, flow_chunk, is_graph, polygon_area,
    state_from_curve, sturm_hurwitz_check,
)
from caustic_forge.errors import NotAGraph, StabilityViolation
from caustic_forge.lines import CylinderCurve, cylinder_curve_is_simple

TWO_PI = 2 * math.pi


def graph_state(f, n=512):
    return state_from_curve(CylinderCurve.graph(f, n=4096), n)


def sample_graph(state, grid):
    a = state.alpha
    spl = CubicSpline(np.append(a, a[0] + TWO_PI), np.append(state.p, state.p[0]), bc_type="periodic")
    return spl(np.mod(grid - a[0], TWO_PI) + a[0])


def test_polygon_area_of_constant_graph():
    a = TWO_PI * np.arange(256) / 256
    assert polygon_area(a, np.full(256, 0.3)) == pytest.approx(TWO_PI * 0.3, rel=1e-14)


def test_short_run_conserves_area():
    st = graph_state(lambda t: 0.1 * np.cos(2 * t) + 0.05 * np.sin(3 * t) + 0.02)
    run = csf_run(None, Time(0.05), state=st)
    assert run.area_drift < 1e-6
    assert run.final.time == pytest.approx(0.05, rel=1e-12)
    assert run.inflections_nonincreasing()


def test_small_graph_decays_like_heat_equation():
    eps = 1e-4
    st = graph_state(lambda t: eps * np.cos(2 * t), 1024)
    T = 0.1
    run = csf_run(None, Time(T), state=st)
    grid = TWO_PI * np.arange(256) / 256
    F = sample_graph(run.final, grid)
    want = eps * math.exp(-4 * T) * np.cos(2 * grid)
    assert np.max(np.abs(F - want)) < 1e-3 * eps


def test_node_refinement_converges():
    f = lambda t: 0.2 * np.cos(2 * t) + 0.1 * np.sin(3 * t)
    grid = TWO_PI * np.arange(200) / 200
    out = [sample_graph(csf_run(None, Time(0.02), state=graph_state(f, n)).final, grid)
           for n in (512, 1024)]
    assert np.max(np.abs(out[0] - out[1])) < 1e-4


def test_zero_section_is_stationary():
    st = graph_state(lambda t: 0 * t, 256)
    a0 = st.alpha.copy()
    flow_chunk(st.alpha, st.p, 50, st.stable_dt())
    assert np.max(np.abs(st.p)) < 1e-14
    np.testing.assert_allclose(st.alpha, a0, atol=1e-13)


def test_flat_stop_and_embeddedness():
    st = graph_state(lambda t: 0.1 * np.cos(2 * t) + 0.03 * np.cos(5 * t), 512)
    run = csf_run(None, Flat(1e-3), snapshot_every=0.02, state=st)
    assert run.final.max_p() < 1e-3
    assert run.inflections_nonincreasing()
    for snap in run.snapshots:
        assert cylinder_curve_is_simple(snap.to_curve())


def test_graph_stop_on_a_graph_is_immediate():
    st = graph_state(lambda t: 0.1 * np.cos(2 * t))
    run = csf_run(None, Graph(), state=st)
    assert run.final.steps == 0 and run.graph_state is not None


def test_stability_violation():
    st = graph_state(lambda t: 0.1 * np.cos(2 * t))
    with pytest.raises(StabilityViolation):
        csf_step(st, 2 * st.stable_dt())
    assert csf_step(st, st.stable_dt()).steps == 1


def test_is_graph():
    a = TWO_PI * np.arange(8) / 8
    assert is_graph(a)
    b = a.copy()
    b[3] = b[2] - 0.01
    assert not is_graph(b)
    with pytest.raises(NotAGraph):
        sturm_hurwitz_check(FlowState(b, np.zeros(8)))


def test_sturm_hurwitz_on_cos2():
    rep = sturm_hurwitz_check(graph_state(lambda t: 0.2 * np.cos(2 * t), 1024))
    assert rep.c0 < 1e-4 and rep.c1 < 1e-4
    assert rep.sign_changes == 4 and rep.passed


def test_sturm_hurwitz_ignores_first_harmonic_of_f():
    # F'' + F annihilates a sin t + b cos t
    rep = sturm_hurwitz_check(graph_state(lambda t: 0.05 * np.sin(t) + 0.1 * np.cos(3 * t), 1024))
    assert rep.c1 < 1e-4 and rep.sign_changes == 6


def test_sturm_hurwitz_flags_nonzero_mean():
    rep = sturm_hurwitz_check(graph_state(lambda t: 0.05 + 0.2 * np.cos(2 * t), 1024))
    assert rep.c0 == pytest.approx(0.05, rel=1e-3)
    assert not rep.passed
