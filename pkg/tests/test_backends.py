import os
import subprocess
import sys

import numpy as np
import pytest

from caustic_forge import _accel
from caustic_forge.beam import beam_for
from caustic_forge.caustic import cusp_census
from caustic_forge.csf import flow_chunk, state_from_curve
from caustic_forge.lines import CylinderCurve

pytestmark = pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba not importable")


@pytest.fixture
def on_backend():
    previous = _accel.backend()

    def switch(name):
        _accel.set_backend(name)

    yield switch
    _accel.set_backend(previous)


@pytest.mark.parametrize("name", ["circle_half", "off_ellipse", "quartic", "perturbed"])
def test_reflection_agrees(name, request, on_backend):
    oval = request.getfixturevalue(name)
    out = {}
    for be in ("numba", "numpy"):
        on_backend(be)
        b = beam_for(oval, 2)
        out[be] = (b.s, b.alpha_raw, b.p, cusp_census(b).count)
    np.testing.assert_array_equal(out["numba"][0], out["numpy"][0])
    np.testing.assert_allclose(out["numba"][1], out["numpy"][1], atol=1e-12)
    np.testing.assert_allclose(out["numba"][2], out["numpy"][2], atol=1e-12)
    assert out["numba"][3] == out["numpy"][3]


def test_flow_chunk_agrees(on_backend):
    st = state_from_curve(CylinderCurve.graph(lambda t: 0.2 * np.cos(2 * t) + 0.1 * np.sin(5 * t), n=2048), 512)
    dt = st.stable_dt()
    out = {}
    for be in ("numba", "numpy"):
        on_backend(be)
        a, p = st.alpha.copy(), st.p.copy()
        flow_chunk(a, p, 100, dt)
        out[be] = np.concatenate([a, p])
    np.testing.assert_allclose(out["numba"], out["numpy"], atol=1e-13)


def test_env_flag_selects_numpy():
    env = {**os.environ, "CAUSTIC_FORGE_NUMBA": "0"}
    code = "from caustic_forge import _accel; print(_accel.backend())"
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert proc.stdout.strip() == "numpy"
    env["CAUSTIC_FORGE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert proc.stdout.strip() == "numba"


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        _accel.set_backend("cuda")


def test_spacing_health_agrees(on_backend):
    from caustic_forge.csf import _spacing_health

    st = state_from_curve(CylinderCurve.graph(lambda t: 0.3 * np.cos(3 * t), n=2048), 700)
    out = {}
    for be in ("numba", "numpy"):
        on_backend(be)
        out[be] = np.array(_spacing_health(st.alpha, st.p, st.shift))
    np.testing.assert_allclose(out["numba"], out["numpy"], rtol=1e-12)
