"""Exception types raised across the package.

Every domain error derives from GeopinError so callers can catch the whole
family with one handler while per-row reporting keeps the concrete class
name. Input bugs (bad constants, malformed arguments that no data file can
produce) raise plain ValueError instead.
"""


class GeopinError(Exception):
    """Base class for all domain errors raised by this package."""


# --- geodesy ---------------------------------------------------------------


class CoincidentPoints(GeopinError):
    """Bearing requested between two points closer than the resolution floor."""


class PoleDegenerate(GeopinError):
    """Bearing is undefined because an endpoint sits on (or next to) a pole."""


class DistanceOutOfRange(GeopinError):
    """Destination distance is negative or exceeds half the great circle."""


class InvalidPixel(GeopinError):
    """Pixel column lies outside the image when computing a linear heading."""


class VerticalRay(GeopinError):
    """Ray has no horizontal component, so its azimuth is undefined."""


class OutOfProjectionDomain(GeopinError):
    """Coordinate falls outside the supported UTM zone 33 north window."""


class NonConvergence(GeopinError):
    """Iterative geodesic solution failed to converge."""


# --- camera ----------------------------------------------------------------


class PixelOutOfBounds(GeopinError):
    """Pixel lies outside the image rectangle."""


class FThetaInversionFailure(GeopinError):
    """Newton/bisection inversion of the f-theta polynomial did not converge."""


class BehindCamera(GeopinError):
    """Direction points into the half-space behind the image plane."""


class OutsideFieldOfView(GeopinError):
    """Direction projects outside the image or beyond the lens field of view."""


class AboveHorizon(GeopinError):
    """Ray does not descend, so it never meets the ground plane."""


class NegativeHeight(GeopinError):
    """Ray origin is on or below the ground plane."""


# --- sync ------------------------------------------------------------------


class OutOfTrack(GeopinError):
    """Query time lies outside the recorded track (beyond the clamp margin)."""


class MissingHeading(GeopinError):
    """No heading is available at the query time and none can be derived."""


class StationaryAmbiguous(GeopinError):
    """Vehicle is too slow for course-over-ground to define a heading."""


# --- session / ground truth ------------------------------------------------


class SessionFormatError(GeopinError):
    """A session file is malformed; message carries file and line context."""


class DanglingReference(GeopinError):
    """An annotation references a camera or target that does not exist."""


class HttpError(GeopinError):
    """Remote ground-truth service answered with a non-success status."""


class SchemaDrift(GeopinError):
    """Remote ground-truth payload is missing fields this client relies on."""


# --- pipeline --------------------------------------------------------------


class EmptySession(GeopinError):
    """Evaluation requested for a session with no annotations."""


class NoVisibleTarget(GeopinError, Warning):
    """A synthetic target was never visible in any generated frame.

    Doubles as a warning category: scene generation warns rather than
    aborts, since a partially visible layout may still be intentional.
    """
