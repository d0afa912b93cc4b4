"""Light-ray billiards in ovals: caustics by reflection, cusp counts, fronts,
curve shortening flow and invariant checks."""

from ._accel import backend, set_backend
from .beam import Beam, beam_for, point_source_beam, propagate, refine
from .billiard import (
    GradientHomogeneous, Law, Normal, TransverseField, exactness_check, jacobian_check,
    reflect, reflect_projective,
)
from .caustic import (
    Front, PlanarCurveWithCusps, cusp_census, envelope, evolute, normal_front, orthotomic,
    vertex_census,
)
from .csf import FlowState, csf_run, sturm_hurwitz_check
from .lines import (
    CylinderCurve, OrientedLine, inflection_indicator, line_through_point_dir, signed_area,
    spherical_lift,
)
from .oval import Ellipse, ImplicitConvex, PerturbedEllipse, SuperEllipse4, make_oval

__version__ = "0.1.0"

__all__ = [
    "Beam", "CylinderCurve", "Ellipse", "FlowState", "Front", "GradientHomogeneous",
    "ImplicitConvex", "Law", "Normal", "OrientedLine", "PerturbedEllipse",
    "PlanarCurveWithCusps", "SuperEllipse4", "TransverseField", "backend", "beam_for",
    "csf_run", "cusp_census", "envelope", "evolute", "exactness_check", "inflection_indicator",
    "jacobian_check", "line_through_point_dir", "make_oval", "normal_front", "orthotomic",
    "point_source_beam", "propagate", "reflect", "reflect_projective", "refine", "set_backend",
    "signed_area", "spherical_lift", "sturm_hurwitz_check", "vertex_census",
]
