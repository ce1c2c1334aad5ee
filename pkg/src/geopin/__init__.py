"""Geo-locate road objects seen by a calibrated vehicle camera.

The package turns (pixel, timestamp) annotations into WGS84 positions by
casting a camera ray onto the ground plane, fusing the hit with GNSS pose,
and walking the resulting distance/bearing pair over the Earth model. A
synthetic scene generator provides ground truth for evaluating the whole
chain end to end.
"""

from .errors import GeopinError

__version__ = "0.1.0"

__all__ = ["GeopinError", "__version__"]
