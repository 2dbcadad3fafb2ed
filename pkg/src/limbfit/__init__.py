"""Shape and spin reconstruction from disk-integrated brightness data and
silhouette profile contours, with maximum-compatibility weighting of the
data modes, plus a small laboratory for profile-hull geometry.
"""

__version__ = "0.1.0"

from .geometry import SpinState, body_frame_directions, lift, project, rot_y, rot_z
from .shape import Polytope, ShapeParams, radius, tessellate

__all__ = [
    "SpinState",
    "body_frame_directions",
    "lift",
    "project",
    "rot_y",
    "rot_z",
    "Polytope",
    "ShapeParams",
    "radius",
    "tessellate",
    "__version__",
]
