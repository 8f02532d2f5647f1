"""Generalized Bowen-Series boundary maps for genus-g surface groups."""
from .circle import CircleArc, MobiusMap
from .geometry import SurfaceGeometry, build_geometry
from .maps import Partition, F_apply, f_apply, orbit

__all__ = ["CircleArc", "MobiusMap", "SurfaceGeometry", "build_geometry", "Partition",
           "F_apply", "f_apply", "orbit"]
__version__ = "0.1.0"
