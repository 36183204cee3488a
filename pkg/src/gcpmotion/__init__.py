"""Cyclic four-direction random motion in R^3 driven by geometric counting processes.

The particle starts at the origin moving along the first direction and
switches cyclically v1 -> v2 -> v3 -> v4 -> v1.  The sojourn times along
direction j are the intertimes of an independent geometric counting
process with intensity ``lambda_j``.
"""

from .errors import ConfigError, DegenerateGeometryError, DomainError, NumericalError
from .gcp import GcpParams
from .geometry import DirectionSet, GeometryContext, velocity_matrix
from .law import MotionParams

__all__ = [
    "ConfigError",
    "DegenerateGeometryError",
    "DirectionSet",
    "DomainError",
    "GcpParams",
    "GeometryContext",
    "MotionParams",
    "NumericalError",
    "velocity_matrix",
]

__version__ = "0.1.0"
