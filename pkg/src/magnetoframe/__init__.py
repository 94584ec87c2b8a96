"""Magnetic curves, Killing submersions, magnetic Hopf surfaces and Sasakian detection."""

from .errors import (ConfigError, DegeneratePlaneError, DegenerateSurfaceError, DomainError, DriftError,
                     InvariantError, MagnetoframeError, MetricError)
from .geometry import MetricChart, TangentVector, VectorField
from .hopf import (build_hopf_surface, constancy_report, flow_along_xi, mean_curvature_field,
                   predicted_mean_curvature)
from .magnetic import IntegratorConfig, MagneticCurve, integrate_magnetic_curve, integrate_magnetic_curves
from .sasaki import classify_space, theorem_pipeline
from .spaces import SpaceSpec, build_space, list_spaces

__version__ = "0.1.0"
