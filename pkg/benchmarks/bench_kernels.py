"""Compare the numba and numpy kernel paths.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Times the batched reflection (one and three reflections of a point-source
beam), the curve shortening chunk and spacing check, and a full ``C_3``
beam with refinement, and checks that both backends agree.
"""

import argparse
import json
import math
import time

import numpy as np

from caustic_forge import _accel
from caustic_forge.beam import beam_for
from caustic_forge.billiard import Law
from caustic_forge.csf import _spacing_health, flow_chunk, state_from_curve
from caustic_forge.oval import Ellipse, SuperEllipse4, make_oval


def best_of(fn, repeat):
    fn()  # warm up (numba compile or cache load)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    ell = make_oval(Ellipse(math.sqrt(5) / 2, 1.0), (0.6, 0.2))
    quart = make_oval(SuperEllipse4(), (0.6, 0.4))
    alpha = 2 * math.pi * np.arange(20000) / 20000
    p = np.zeros_like(alpha)
    law = Law()
    st = state_from_curve(beam_for(ell, 2).curve(), 2048)

    def flow():
        a, q = st.alpha.copy(), st.p.copy()
        flow_chunk(a, q, 200, 0.2 * float(st.spacing().min()) ** 2)
        return np.concatenate([a, q])

    return {
        "reflect_ellipse_20k_x1": lambda: np.concatenate(law.apply(ell, alpha, p, 1)),
        "reflect_quartic_20k_x1": lambda: np.concatenate(law.apply(quart, alpha, p, 1)),
        "reflect_ellipse_20k_x3": lambda: np.concatenate(law.apply(ell, alpha, p, 3)),
        "csf_2048_nodes_200_steps": flow,
        "csf_spacing_check_x100": lambda: np.array(
            [_spacing_health(st.alpha, st.p, st.shift) for _ in range(100)]),
        "beam_C3_ellipse": lambda: beam_for(ell, 3).p,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not importable; nothing to compare")
    rows = []
    for name, fn in cases().items():
        res = {}
        for be in ("numba", "numpy"):
            _accel.set_backend(be)
            res[be] = best_of(fn, args.repeat)
        _accel.set_backend("numba")
        a, b = res["numba"][1], res["numpy"][1]
        diff = float(np.max(np.abs(a - b))) if a.shape == b.shape else math.nan
        rows.append({"case": name, "numba_s": res["numba"][0], "numpy_s": res["numpy"][0],
                     "speedup": res["numpy"][0] / res["numba"][0], "max_abs_diff": diff})
    print(f"{'case':28s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for r in rows:
        print(f"{r['case']:28s} {r['numba_s']:11.4f} {r['numpy_s']:11.4f} "
              f"{r['speedup']:8.1f} {r['max_abs_diff']:10.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
