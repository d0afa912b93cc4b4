"""Command line front end.

    caustic-forge caustic|check|flow|front --config scenario.json --out DIR [--override key=value ...]

Exit codes: 0 ok, 1 a configured check failed, 2 invalid configuration,
3 numerical failure (the error is written to stderr as JSON).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys

import numpy as np

from .beam import beam_for, oval_normal_beam, point_source_beam
from .billiard import (
    generating_residuals, harmonic_cross_ratio, jacobian_check, law_from_descriptor,
)
from .caustic import (
    DEGENERATE_TOL, cusp_census, degenerate_caustic, envelope, match_circular,
    normal_front, orthotomic, vertex_census,
)
from .csf import Flat, Graph, Time, csf_run, sturm_hurwitz_check
from .errors import CausticForgeError, ConfigError, NumericalError
from .lines import CylinderCurve, boundary_to_line, signed_area, write_curve_csv
from .oval import Ellipse, family_from_descriptor, make_oval, tangent_line_curve
from . import svg

TWO_PI = 2.0 * math.pi

DEFAULT_TOLERANCES = {
    "signed_area": 1e-6,
    "jacobian": 1e-6,
    "generating": 1e-6,
    "crofton": 1e-8,
    "cross_ratio": 1e-9,
    "degenerate": DEGENERATE_TOL,
    "front_closure": 1e-8,
    "equidistance": 1e-9,
    "area_drift": 1e-5,
    "flat": 1e-3,
    "fourier": 1e-4,
}

DEFAULT_CSF = {
    "n": None,
    "input": "beam",
    "nodes": 2048,
    "until": "flat",
    "T": None,
    "snapshot_every": 0.05,
    "max_steps": 5_000_000,
}

DEFAULTS = {
    "oval": None,
    "source": [0.0, 0.0],
    "law": "standard",
    "field": None,
    "beam": "point",
    "n_list": [1],
    "samples": 1024,
    "budget": 2**18,
    "z0": [0.0, 1.0],
    "rays": 48,
    "seed": 0,
    "phase_points": 100,
    "csf": DEFAULT_CSF,
    "tolerances": DEFAULT_TOLERANCES,
}


# ---------------------------------------------------------------------------
# deterministic output
# ---------------------------------------------------------------------------


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def dumps(obj, indent=0):
    """JSON with sorted keys and floats pinned to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in seq) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _num(obj)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


def parse_override(text):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def apply_override(cfg, key, value):
    parts = key.split(".")
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def resolve_config(raw, overrides=()):
    """Merge ``raw`` and ``overrides`` over the defaults and validate the result."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    cfg = copy.deepcopy(raw)
    for text in overrides:
        apply_override(cfg, *parse_override(text))
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown scenario keys {sorted(unknown)}")
    out = copy.deepcopy(DEFAULTS)
    for key, val in cfg.items():
        if key in ("csf", "tolerances"):
            if not isinstance(val, dict):
                raise ConfigError(f"{key} must be an object")
            bad = set(val) - set(DEFAULTS[key])
            if bad:
                raise ConfigError(f"unknown {key} keys {sorted(bad)}")
            out[key].update(val)
        else:
            out[key] = val
    if out["oval"] is None:
        raise ConfigError("scenario needs an oval descriptor")
    n_list = out["n_list"]
    if isinstance(n_list, int):
        n_list = [n_list]
    if not n_list or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in n_list):
        raise ConfigError("n_list must be a non-empty list of integers >= 0")
    out["n_list"] = list(n_list)
    try:
        out["source"] = [float(v) for v in out["source"]]
        out["z0"] = [float(v) for v in np.atleast_1d(out["z0"])]
        for k, v in out["tolerances"].items():
            out["tolerances"][k] = float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad numeric value: {exc}") from exc
    if len(out["source"]) != 2:
        raise ConfigError("source must be a point [x, y]")
    if not (isinstance(out["samples"], int) and out["samples"] >= 16):
        raise ConfigError("samples must be an integer >= 16")
    return out


class Scenario:
    """A resolved configuration with its oval, law and initial beam."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.tol = cfg["tolerances"]
        self.family = family_from_descriptor(cfg["oval"])
        self.oval = make_oval(self.family, tuple(cfg["source"]))
        self.law = law_from_descriptor(cfg["law"], cfg["field"])
        self.inner = None
        if cfg["beam"] != "point":
            if not (isinstance(cfg["beam"], dict) and "inner" in cfg["beam"]):
                raise ConfigError('beam must be "point" or {"inner": <oval descriptor>}')
            self.inner = make_oval(family_from_descriptor(cfg["beam"]["inner"]), tuple(cfg["source"]))
        self._beams = {}

    @classmethod
    def load(cls, path, overrides=()):
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls(resolve_config(raw, overrides))

    @property
    def is_ellipse(self):
        return isinstance(self.family, Ellipse)

    def beam0(self):
        if self.inner is None:
            return point_source_beam(self.cfg["samples"])
        return oval_normal_beam(self.inner, self.cfg["samples"], self.oval)

    def beam(self, n):
        if n not in self._beams:
            self._beams[n] = beam_for(self.oval, n, self.law, self.cfg["samples"], self.inner,
                                      self.cfg["budget"])
        return self._beams[n]

    def header(self):
        return [f"scenario={json.dumps(self.cfg, sort_keys=True, separators=(',', ':'))}"]


def _table_xy(origin, pts):
    return [[float(x) + origin[0], float(y) + origin[1]] for x, y in pts]


def _check(name, value, tol, passed=None):
    ok = bool(value <= tol) if passed is None else bool(passed)
    return {"name": name, "value": value, "tol": tol, "passed": ok}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_caustic(sc, out):
    """Beams, caustics, cusp reports and figures for every ``n`` in ``n_list``."""
    o = sc.oval.origin
    overview = svg.table_figure(sc.oval)
    reports = []
    for k, n in enumerate(sc.cfg["n_list"]):
        b = sc.beam(n)
        curve = envelope(b)
        b.to_csv(os.path.join(out, f"beam_n{n}.csv"), sc.header())
        curve.to_csv(os.path.join(out, f"caustic_n{n}.csv"), sc.header())
        rep = {
            "n": n,
            "cusps": None if curve.degenerate else curve.cusp_count,
            "degenerate": curve.degenerate,
            "signed_area": b.signed_area(),
            "winding": b.winding,
            "simple": b.is_simple(),
            "samples": int(b.s.size),
            "cusp_parameters": [c.s for c in curve.cusps],
            "cusp_points": _table_xy(o, [(c.x, c.y) for c in curve.cusps]),
            "at_infinity": curve.at_infinity,
            "scenario": sc.cfg,
        }
        if curve.degenerate:
            rep["degenerate_point"] = _table_xy(o, [curve.point])[0]
            rep["degenerate_residual"] = curve.meta["degenerate_residual"]
        if sc.law.kind == "standard" and sc.inner is None and n >= 1 and not curve.degenerate:
            rep["conjecture_evidence"] = True
            if sc.is_ellipse:
                rep["conjecture"] = "ellipse_four_cusps"
                rep["consistent"] = curve.cusp_count == 4
            else:
                rep["conjecture"] = "non_ellipse_more_than_four"
                rep["consistent"] = curve.cusp_count > 4
        write_json(os.path.join(out, f"cusps_n{n}.json"), rep)
        reports.append(rep)
        color = svg.color_for(k)
        for fig in (overview, svg.table_figure(sc.oval)):
            svg.draw_rays(fig, sc.oval, b.alpha_raw, b.p, sc.cfg["rays"])
            svg.draw_caustic(fig, curve, o, color)
            if fig is not overview:
                fig.save(os.path.join(out, f"caustic_n{n}.svg"))
    overview.save(os.path.join(out, "caustics.svg"))
    write_json(os.path.join(out, "caustic_report.json"),
               {"reports": [{k: v for k, v in r.items() if k != "scenario"} for r in reports],
                "scenario": sc.cfg})
    return 0


def _phase_lines(sc, count):
    rng = np.random.default_rng(sc.cfg["seed"])
    t = rng.uniform(0.0, TWO_PI, count)
    phi = rng.uniform(0.2, math.pi - 0.2, count)
    return [boundary_to_line(float(a), float(b), sc.oval) for a, b in zip(t, phi)]


def cmd_check(sc, out):
    """Exactness, Jacobian, generating-function and Crofton residuals."""
    tol = sc.tol
    checks = []
    area0 = sc.beam0().signed_area()
    for n in sc.cfg["n_list"]:
        b = sc.beam(n)
        checks.append(_check(f"signed_area_n{n}", abs(b.signed_area() - area0), tol["signed_area"]))
        if n <= 3:
            checks.append(_check(f"simple_winding_one_n{n}", float(b.winding), 1.0,
                                 b.is_simple() and b.winding == 1))
    lines = _phase_lines(sc, int(sc.cfg["phase_points"]))

    def step(line):
        from .lines import OrientedLine

        a, q = sc.law.apply(sc.oval, [line.alpha], [line.p])
        return OrientedLine(float(a[0]), float(q[0]))

    # a general transverse field does not preserve the Euclidean area form
    if sc.law.kind != "projective" or sc.law.field.tag == "normal":
        dets = np.array([jacobian_check(step, ln) for ln in lines])
        checks.append(_check("jacobian", float(np.max(np.abs(dets - 1.0))), tol["jacobian"]))
    if sc.law.kind == "standard":
        r0, r1 = generating_residuals(sc.oval)
        checks.append(_check("generating_function", max(r0, r1), tol["generating"]))
    if sc.law.kind == "projective":
        cr = [harmonic_cross_ratio(ln, sc.oval, sc.law.field) for ln in lines]
        checks.append(_check("harmonic_cross_ratio", float(np.max(np.abs(np.array(cr) + 1.0))),
                             tol["cross_ratio"]))
    tl = tangent_line_curve(sc.oval)
    per = sc.oval.perimeter
    checks.append(_check("crofton", abs(signed_area(tl) - per) / per, tol["crofton"]))
    report = {
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
        "law": sc.law.descriptor(),
        "perimeter": per,
        "scenario": sc.cfg,
    }
    if sc.law.kind == "shear_control":
        report["area_defect"] = [c["value"] for c in checks if c["name"].startswith("signed_area")]
    write_json(os.path.join(out, "check_report.json"), report)
    return 0 if report["passed"] else 1


def _flow_input(sc):
    spec = sc.cfg["csf"]["input"]
    if spec == "beam":
        n = sc.cfg["csf"]["n"]
        n = sc.cfg["n_list"][0] if n is None else int(n)
        return sc.beam(n).curve(), {"input": "beam", "n": n}
    if spec == "c0":
        b = point_source_beam(sc.cfg["samples"])
        return b.curve(), {"input": "c0"}
    if isinstance(spec, dict) and "graph" in spec:
        # rows (k, a_k, b_k) of p = sum a_k cos(k alpha) + b_k sin(k alpha)
        rows = [tuple(map(float, r)) for r in spec["graph"]]

        def f(al):
            return sum(a * np.cos(k * al) + b * np.sin(k * al) for k, a, b in rows)

        return CylinderCurve.graph(f, n=sc.cfg["samples"]), {"input": "graph", "graph": rows}
    raise ConfigError(f"unknown flow input {spec!r}")


def _stop(csf_cfg, tol):
    kind = csf_cfg["until"]
    if kind == "flat":
        return Flat(tol["flat"])
    if kind == "graph":
        return Graph()
    if kind == "time":
        if csf_cfg["T"] is None:
            raise ConfigError('until="time" needs csf.T')
        return Time(float(csf_cfg["T"]))
    raise ConfigError(f"unknown stop condition {kind!r}")


def cmd_flow(sc, out):
    """Curve shortening flow of a beam with monitors, snapshots and the Fourier check."""
    c = sc.cfg["csf"]
    curve, desc = _flow_input(sc)
    run = csf_run(curve, _stop(c, sc.tol), int(c["nodes"]), float(c["snapshot_every"]),
                  int(c["max_steps"]))
    snapdir = os.path.join(out, "snapshots")
    os.makedirs(snapdir, exist_ok=True)
    from .lines import cylinder_curve_is_simple

    embedded = []
    for k, st in enumerate(run.snapshots):
        cur = st.to_curve()
        write_curve_csv(os.path.join(snapdir, f"snapshot_{k:04d}.csv"), cur,
                        sc.header() + [f"time={st.time:.17g}"])
        embedded.append(cylinder_curve_is_simple(cur))
    cols = ("time", "area", "inflections", "max_p", "max_curvature")
    with open(os.path.join(out, "monitors.csv"), "w") as fh:
        fh.write(",".join(cols) + "\n")
        for m in run.monitors:
            fh.write(",".join(_num(m[col]) for col in cols) + "\n")
    checks = [
        _check("area_drift", run.area_drift, sc.tol["area_drift"]),
        _check("inflections_nonincreasing", 0.0, 0.0, run.inflections_nonincreasing()),
        _check("embedded", 0.0, 0.0, all(embedded)),
    ]
    if isinstance(_stop(c, sc.tol), Flat):
        checks.append(_check("terminal_max_p", run.final.max_p(), sc.tol["flat"]))
    sh = None
    if run.graph_state is not None:
        rep = sturm_hurwitz_check(run.graph_state, fourier_tol=sc.tol["fourier"])
        sh = {**rep.as_dict(), "time": run.graph_state.time}
        # a flat graph (p = 0) has G = 0 and nothing to count
        if run.graph_state.max_p() > 0.0:
            checks.append(_check("sturm_hurwitz", 0.0, 0.0, rep.passed))
    write_json(os.path.join(out, "sturm_hurwitz.json"), {"graph_stage": sh, "scenario": sc.cfg})
    svg.filmstrip(os.path.join(out, "filmstrip.svg"), run.snapshots)
    report = {
        **desc,
        "checks": checks,
        "passed": all(ch["passed"] for ch in checks),
        "final_time": run.final.time,
        "steps": run.stats["steps"],
        "resamples": run.stats["resamples"],
        "snapshots": len(run.snapshots),
        "inflections": run.inflections,
        "initial_area": run.initial_area,
        "reference_area": run.reference_area,
        "scenario": sc.cfg,
    }
    write_json(os.path.join(out, "flow_report.json"), report)
    return 0 if report["passed"] else 1


def cmd_front(sc, out):
    """Fronts of each ``C_n`` for the ``z0`` offsets, vertex census and cusp cross-check."""
    o = sc.oval.origin
    z0s = sc.cfg["z0"]
    checks, reports = [], []
    for k, n in enumerate(sc.cfg["n_list"]):
        b = sc.beam(n)
        color = svg.color_for(k)
        fig = svg.table_figure(sc.oval)
        svg.draw_rays(fig, sc.oval, b.alpha_raw, b.p, sc.cfg["rays"])
        point, resid = degenerate_caustic(b, sc.tol["degenerate"])
        rep = {"n": n, "degenerate": point is not None, "fronts": []}
        fronts = []
        for j, z0 in enumerate(z0s):
            fr = normal_front(b, z0)
            fronts.append(fr)
            entry = {"z0": z0, "closure_gap": fr.closure_gap}
            if point is None:
                vc = vertex_census(fr)
                entry.update(vertices=vc.count, vertex_parameters=vc.s,
                             constant_curvature=vc.constant_curvature)
                fr.to_csv(os.path.join(out, f"front_n{n}_z{j}.csv"), vc.s, sc.header())
                svg.draw_front(fig, fr, o, color, vc.s)
            else:
                r = np.hypot(fr.x - point[0], fr.y - point[1])
                entry.update(radius=float(np.mean(r)), radius_spread=float(np.ptp(r)))
                fr.to_csv(os.path.join(out, f"front_n{n}_z{j}.csv"), (), sc.header())
                svg.draw_front(fig, fr, o, color)
                checks.append(_check(f"circle_about_point_n{n}_z{j}", entry["radius_spread"],
                                     sc.tol["degenerate"] * sc.oval.scale))
            checks.append(_check(f"front_closure_n{n}_z{j}", fr.closure_gap, sc.tol["front_closure"]))
            rep["fronts"].append(entry)
        if len(fronts) >= 2:
            d = np.hypot(fronts[0].x - fronts[1].x, fronts[0].y - fronts[1].y)
            gap = float(np.max(np.abs(d - abs(z0s[1] - z0s[0]))))
            rep["equidistance"] = gap
            checks.append(_check(f"equidistance_n{n}", gap, sc.tol["equidistance"]))
        curve = envelope(b)
        curve.to_csv(os.path.join(out, f"caustic_n{n}.csv"), sc.header())
        svg.draw_caustic(fig, curve, o, color)
        if point is None:
            census = cusp_census(b)
            rep["cusps"] = census.count
            rep["cusp_parameters"] = census.s
            for e in rep["fronts"]:
                same = e["vertices"] == census.count
                rep.setdefault("cusps_equal_vertices", []).append(same)
                checks.append(_check(f"cusps_equal_vertices_n{n}_z{e['z0']:g}",
                                     float(abs(e["vertices"] - census.count)), 0.0, same))
                e["vertex_cusp_offset"] = match_circular(e["vertex_parameters"], census.s)
        else:
            rep["degenerate_point"] = _table_xy(o, [point])[0]
            rep["degenerate_residual"] = resid
        if n == 1 and sc.law.kind == "standard" and sc.inner is None:
            ortho = orthotomic(sc.oval)
            rep["orthotomic_vertices"] = vertex_census(ortho).count
        fig.save(os.path.join(out, f"front_n{n}.svg"))
        reports.append(rep)
    report = {"reports": reports, "checks": checks,
              "passed": all(c["passed"] for c in checks), "scenario": sc.cfg}
    write_json(os.path.join(out, "front_report.json"), report)
    return 0 if report["passed"] else 1


COMMANDS = {"caustic": cmd_caustic, "check": cmd_check, "flow": cmd_flow, "front": cmd_front}


def build_parser():
    ap = argparse.ArgumentParser(prog="caustic-forge", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="scenario JSON file")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                    help="dotted key with a JSON value, e.g. tolerances.signed_area=1e-7")
    return ap


def _fail(kind, exc, code):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "kind": kind, "message": str(exc)}) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        sc = Scenario.load(args.config, args.override)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](sc, args.out)
    except ConfigError as exc:
        return _fail("config", exc, 2)
    except NumericalError as exc:
        return _fail("numerical", exc, 3)
    except CausticForgeError as exc:
        return _fail("numerical", exc, 3)


if __name__ == "__main__":
    sys.exit(main())
