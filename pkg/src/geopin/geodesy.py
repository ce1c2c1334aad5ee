"""Spherical and ellipsoidal position math.

Positions travel as WGS84 degrees. The forward problem (where does a
distance/bearing pair land) and its companions run on a sphere whose radius
comes from the active EarthModel; error measurement against surveyed truth
uses the WGS84 ellipsoid so that metre-level claims do not inherit sphere
error. Projected coordinates are UTM zone 33 north only, which covers the
road network this package is used on.
"""

from __future__ import annotations

import math
import sys
import warnings
from dataclasses import dataclass

from .errors import (
    CoincidentPoints,
    DistanceOutOfRange,
    InvalidPixel,
    NonConvergence,
    OutOfProjectionDomain,
    PoleDegenerate,
    VerticalRay,
)

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
DEFAULT_SPHERE_RADIUS_M = 6_371_000.0

# Bearing is undefined this close to a pole (degrees of latitude).
_POLE_EPS_DEG = 1e-9
# Two points closer than this (metres) have no meaningful bearing.
_COINCIDENT_EPS_M = 1e-9


def normalize_lon(lon: float) -> float:
    """Wrap a longitude into [-180, 180).

    Values already in range are returned unchanged, bit for bit, so that
    wrapping never perturbs a coordinate that needs no wrapping.
    """
    if -180.0 <= lon < 180.0:
        return lon
    wrapped = math.fmod(lon + 180.0, 360.0)
    if wrapped < 0.0:
        wrapped += 360.0
    return wrapped - 180.0


def normalize_bearing(deg: float) -> float:
    """Wrap an angle in degrees into [0, 360)."""
    wrapped = math.fmod(deg, 360.0)
    if wrapped < 0.0:
        wrapped += 360.0
    # fmod of a tiny negative can round up to exactly 360.0
    if wrapped >= 360.0:
        wrapped = 0.0
    return wrapped


class Bearing(float):
    """Compass bearing in degrees, clockwise from true north, in [0, 360)."""

    def __new__(cls, deg: float) -> "Bearing":
        if not math.isfinite(deg):
            raise ValueError(f"bearing must be finite, got {deg!r}")
        return super().__new__(cls, normalize_bearing(float(deg)))

    def __repr__(self) -> str:
        return f"Bearing({float(self)!r})"


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 position in degrees; longitude is normalized to [-180, 180)."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"coordinates must be finite, got ({self.lat!r}, {self.lon!r})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat!r} outside [-90, 90]")
        object.__setattr__(self, "lon", normalize_lon(self.lon))


@dataclass(frozen=True)
class UtmCoord:
    """Projected position in UTM zone 33 north, metres."""

    easting: float
    northing: float

    ZONE = 33
    HEMISPHERE = "north"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.easting) and math.isfinite(self.northing)):
            raise ValueError("UTM coordinates must be finite")
        if not 0.0 < self.easting < 1_000_000.0:
            raise ValueError(f"easting {self.easting!r} outside (0, 1000000)")
        if self.northing < 0.0:
            raise ValueError(f"northing {self.northing!r} must be >= 0")


@dataclass(frozen=True)
class EarthModel:
    """Earth figure: a sphere for the forward problem, an ellipsoid for error."""

    sphere_radius_m: float = DEFAULT_SPHERE_RADIUS_M
    ellipsoid_a: float = WGS84_A
    ellipsoid_f: float = WGS84_F

    def __post_init__(self) -> None:
        if not self.sphere_radius_m > 0.0:
            raise ValueError("sphere radius must be positive")
        if not self.ellipsoid_a > 0.0:
            raise ValueError("ellipsoid semi-major axis must be positive")
        if not 0.0 < self.ellipsoid_f < 1.0:
            raise ValueError("ellipsoid flattening must lie in (0, 1)")


DEFAULT_EARTH = EarthModel()


def haversine_distance(a: GeoPoint, b: GeoPoint, earth: EarthModel = DEFAULT_EARTH) -> float:
    """Great-circle distance between two points in metres."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(normalize_lon(b.lon - a.lon))
    s = (
        math.sin(dphi / 2.0) ** 2
        + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    )
    return 2.0 * earth.sphere_radius_m * math.atan2(math.sqrt(s), math.sqrt(max(0.0, 1.0 - s)))


def initial_bearing(a: GeoPoint, b: GeoPoint) -> Bearing:
    """Forward azimuth of the great circle from a to b."""
    if abs(a.lat) > 90.0 - _POLE_EPS_DEG or abs(b.lat) > 90.0 - _POLE_EPS_DEG:
        raise PoleDegenerate(f"bearing undefined at |lat| > {90.0 - _POLE_EPS_DEG}")
    if haversine_distance(a, b) < _COINCIDENT_EPS_M:
        raise CoincidentPoints(f"points {a} and {b} are closer than {_COINCIDENT_EPS_M} m")
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dlam = math.radians(normalize_lon(b.lon - a.lon))
    y = math.sin(dlam) * math.cos(phi2)
    x = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    return Bearing(math.degrees(math.atan2(y, x)))


def inverse_haversine(
    origin: GeoPoint,
    distance_m: float,
    bearing: float,
    earth: EarthModel = DEFAULT_EARTH,
) -> GeoPoint:
    """Destination point at a given distance and bearing from the origin.

    Walks the great circle on the model sphere. A bearing of exactly 0 or
    due north leaves the longitude untouched bit for bit as long as the
    path does not cross a pole.
    """
    radius = earth.sphere_radius_m
    if not 0.0 <= distance_m <= math.pi * radius:
        raise DistanceOutOfRange(
            f"distance {distance_m!r} m outside [0, {math.pi * radius}] m"
        )
    if distance_m == 0.0:
        return origin
    theta = math.radians(normalize_bearing(bearing))
    delta = distance_m / radius
    phi1 = math.radians(origin.lat)
    sin_phi2 = math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    # clamp: rounding can push the sine a few ulp past 1 near the poles
    sin_phi2 = min(1.0, max(-1.0, sin_phi2))
    phi2 = math.asin(sin_phi2)
    dlam = math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * sin_phi2,
    )
    return GeoPoint(math.degrees(phi2), normalize_lon(origin.lon + math.degrees(dlam)))


def eq1_heading(
    fov_deg: float,
    image_width: float,
    px: float,
    psi_camera_deg: float,
    theta_car_deg: float,
) -> Bearing:
    """Heading of an object from its pixel column, linear-FOV approximation.

    Maps the column offset from the image centre to an angular offset at
    fov/width degrees per pixel, then adds the camera mounting azimuth and
    the vehicle heading. Exact only for an idealized linear projection;
    kept as the fast path and as a cross-check for the ray-based heading.
    """
    if not 0.0 < fov_deg < 360.0:
        raise ValueError(f"fov {fov_deg!r} outside (0, 360)")
    if image_width <= 0.0:
        raise ValueError(f"image width {image_width!r} must be positive")
    if not 0.0 <= px <= image_width:
        raise InvalidPixel(f"px {px!r} outside [0, {image_width}]")
    offset = (fov_deg / image_width) * (px - image_width / 2.0)
    return Bearing(offset + psi_camera_deg + theta_car_deg)


def ray_azimuth_heading(direction_rig: tuple[float, float, float], theta_car_deg: float) -> Bearing:
    """Compass heading of a rig-frame ray (x forward, y left, z up)."""
    x, y, z = direction_rig
    if math.hypot(x, y) < 1e-12:
        raise VerticalRay(f"ray {direction_rig!r} has no horizontal component")
    azimuth = math.degrees(math.atan2(-y, x))
    return Bearing(azimuth + theta_car_deg)


# --- UTM zone 33 north -------------------------------------------------------
#
# Sixth-order transverse Mercator series in the third flattening n, evaluated
# about the zone 33 central meridian (15 E) with scale 0.9996 and a 500 km
# false easting. The tau' <-> tau exchange between geographic and conformal
# latitude is done with the exact expressions plus a Newton inverse, which
# keeps round trips at machine precision instead of series truncation error.

UTM33_CENTRAL_MERIDIAN_DEG = 15.0
UTM33_SCALE = 0.9996
UTM33_FALSE_EASTING = 500_000.0
# series domain: half a zone plus the overlap the series still resolves sub-mm
_UTM33_MAX_LON_OFFSET_DEG = 12.0
_UTM33_MAX_LAT_DEG = 84.0

_E2 = WGS84_F * (2.0 - WGS84_F)
_ECC = math.sqrt(_E2)
_E2M = 1.0 - _E2
_N3 = WGS84_F / (2.0 - WGS84_F)

_A_BAR = (
    WGS84_A
    / (1.0 + _N3)
    * (1.0 + _N3**2 / 4.0 + _N3**4 / 64.0 + _N3**6 / 256.0)
)

_ALPHA = (
    _N3 / 2.0 - 2.0 * _N3**2 / 3.0 + 5.0 * _N3**3 / 16.0 + 41.0 * _N3**4 / 180.0
    - 127.0 * _N3**5 / 288.0 + 7891.0 * _N3**6 / 37800.0,
    13.0 * _N3**2 / 48.0 - 3.0 * _N3**3 / 5.0 + 557.0 * _N3**4 / 1440.0
    + 281.0 * _N3**5 / 630.0 - 1983433.0 * _N3**6 / 1935360.0,
    61.0 * _N3**3 / 240.0 - 103.0 * _N3**4 / 140.0 + 15061.0 * _N3**5 / 26880.0
    + 167603.0 * _N3**6 / 181440.0,
    49561.0 * _N3**4 / 161280.0 - 179.0 * _N3**5 / 168.0 + 6601661.0 * _N3**6 / 7257600.0,
    34729.0 * _N3**5 / 80640.0 - 3418889.0 * _N3**6 / 1995840.0,
    212378941.0 * _N3**6 / 319334400.0,
)

_BETA = (
    _N3 / 2.0 - 2.0 * _N3**2 / 3.0 + 37.0 * _N3**3 / 96.0 - _N3**4 / 360.0
    - 81.0 * _N3**5 / 512.0 + 96199.0 * _N3**6 / 604800.0,
    _N3**2 / 48.0 + _N3**3 / 15.0 - 437.0 * _N3**4 / 1440.0 + 46.0 * _N3**5 / 105.0
    - 1118711.0 * _N3**6 / 3870720.0,
    17.0 * _N3**3 / 480.0 - 37.0 * _N3**4 / 840.0 - 209.0 * _N3**5 / 4480.0
    + 5569.0 * _N3**6 / 90720.0,
    4397.0 * _N3**4 / 161280.0 - 11.0 * _N3**5 / 504.0 - 830251.0 * _N3**6 / 7257600.0,
    4583.0 * _N3**5 / 161280.0 - 108847.0 * _N3**6 / 3991680.0,
    20648693.0 * _N3**6 / 638668800.0,
)


def _taupf(tau: float) -> float:
    """tan of conformal latitude from tan of geographic latitude (exact)."""
    tau1 = math.hypot(1.0, tau)
    sig = math.sinh(_ECC * math.atanh(_ECC * tau / tau1))
    return math.hypot(1.0, sig) * tau - sig * tau1


def _tauf(taup: float) -> float:
    """tan of geographic latitude from tan of conformal latitude (Newton)."""
    tau = taup / _E2M
    stol = 0.1 * math.sqrt(sys.float_info.epsilon) * max(1.0, abs(taup))
    for _ in range(5):
        taupa = _taupf(tau)
        dtau = (taup - taupa) * (1.0 + _E2M * tau * tau) / (
            _E2M * math.hypot(1.0, tau) * math.hypot(1.0, taupa)
        )
        tau += dtau
        if abs(dtau) < stol:
            break
    return tau


def wgs84_to_utm33(p: GeoPoint) -> UtmCoord:
    """Project a WGS84 point into UTM zone 33 north."""
    if p.lat < 0.0:
        raise OutOfProjectionDomain(
            f"latitude {p.lat!r} is south of the equator; zone 33 north only"
        )
    if p.lat >= _UTM33_MAX_LAT_DEG:
        raise OutOfProjectionDomain(f"latitude {p.lat!r} at or above {_UTM33_MAX_LAT_DEG}")
    lon_off = normalize_lon(p.lon - UTM33_CENTRAL_MERIDIAN_DEG)
    if abs(lon_off) > _UTM33_MAX_LON_OFFSET_DEG:
        raise OutOfProjectionDomain(
            f"longitude {p.lon!r} more than {_UTM33_MAX_LON_OFFSET_DEG} deg from the"
            f" zone 33 central meridian"
        )
    lam = math.radians(lon_off)
    tau = math.tan(math.radians(p.lat))
    taup = _taupf(tau)
    cos_lam = math.cos(lam)
    xi_p = math.atan2(taup, cos_lam)
    eta_p = math.asinh(math.sin(lam) / math.hypot(taup, cos_lam))
    xi = xi_p
    eta = eta_p
    for j, a in enumerate(_ALPHA, start=1):
        xi += a * math.sin(2.0 * j * xi_p) * math.cosh(2.0 * j * eta_p)
        eta += a * math.cos(2.0 * j * xi_p) * math.sinh(2.0 * j * eta_p)
    easting = UTM33_FALSE_EASTING + UTM33_SCALE * _A_BAR * eta
    northing = UTM33_SCALE * _A_BAR * xi
    # far-west/low-lat corners of the lon band project outside the
    # representable easting window; reject rather than emit an invalid coord
    if not 0.0 < easting < 1_000_000.0:
        raise OutOfProjectionDomain(
            f"{p} projects to easting {easting:.1f} outside (0, 1000000)"
        )
    return UtmCoord(easting, northing)


def utm33_to_wgs84(c: UtmCoord) -> GeoPoint:
    """Invert a UTM zone 33 north coordinate back to WGS84 degrees."""
    xi = c.northing / (UTM33_SCALE * _A_BAR)
    eta = (c.easting - UTM33_FALSE_EASTING) / (UTM33_SCALE * _A_BAR)
    xi_p = xi
    eta_p = eta
    for j, b in enumerate(_BETA, start=1):
        xi_p -= b * math.sin(2.0 * j * xi) * math.cosh(2.0 * j * eta)
        eta_p -= b * math.cos(2.0 * j * xi) * math.sinh(2.0 * j * eta)
    sinh_eta = math.sinh(eta_p)
    cos_xi = math.cos(xi_p)
    taup = math.sin(xi_p) / math.hypot(sinh_eta, cos_xi)
    lam = math.atan2(sinh_eta, cos_xi)
    lat = math.degrees(math.atan(_tauf(taup)))
    lon = UTM33_CENTRAL_MERIDIAN_DEG + math.degrees(lam)
    point = GeoPoint(lat, lon)
    if point.lat < 0.0 or point.lat >= _UTM33_MAX_LAT_DEG:
        raise OutOfProjectionDomain(f"inverse landed at latitude {point.lat!r}")
    if abs(normalize_lon(point.lon - UTM33_CENTRAL_MERIDIAN_DEG)) > _UTM33_MAX_LON_OFFSET_DEG + 1e-9:
        raise OutOfProjectionDomain(f"inverse landed at longitude {point.lon!r}")
    return point


# --- ellipsoidal separation ---------------------------------------------------


class GeodesicFallbackWarning(UserWarning):
    """Raised as a warning when the ellipsoidal solver falls back to a sphere."""


def geodesic_error(
    a: GeoPoint,
    b: GeoPoint,
    earth: EarthModel = DEFAULT_EARTH,
) -> float:
    """Ellipsoidal distance between two points in metres.

    Standard iterative inverse solution on the model ellipsoid. Near-antipodal
    pairs, where the iteration is known not to converge, fall back to the
    spherical distance and emit GeodesicFallbackWarning; for the short
    separations this package measures (metres to kilometres) the fallback
    never fires.
    """
    if a.lat == b.lat and a.lon == b.lon:
        return 0.0
    major = earth.ellipsoid_a
    flat = earth.ellipsoid_f
    minor = major * (1.0 - flat)

    u1 = math.atan((1.0 - flat) * math.tan(math.radians(a.lat)))
    u2 = math.atan((1.0 - flat) * math.tan(math.radians(b.lat)))
    ell = math.radians(normalize_lon(b.lon - a.lon))
    sin_u1, cos_u1 = math.sin(u1), math.cos(u1)
    sin_u2, cos_u2 = math.sin(u2), math.cos(u2)

    lam = ell
    converged = False
    for _ in range(200):
        sin_lam, cos_lam = math.sin(lam), math.cos(lam)
        sin_sigma = math.hypot(
            cos_u2 * sin_lam,
            cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lam,
        )
        if sin_sigma == 0.0:
            return 0.0
        cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lam
        sigma = math.atan2(sin_sigma, cos_sigma)
        sin_alpha = cos_u1 * cos_u2 * sin_lam / sin_sigma
        cos_sq_alpha = 1.0 - sin_alpha * sin_alpha
        if cos_sq_alpha == 0.0:
            # both points on the equator: the geodesic follows it
            cos_2sm = 0.0
        else:
            cos_2sm = cos_sigma - 2.0 * sin_u1 * sin_u2 / cos_sq_alpha
        cc = flat / 16.0 * cos_sq_alpha * (4.0 + flat * (4.0 - 3.0 * cos_sq_alpha))
        lam_prev = lam
        lam = ell + (1.0 - cc) * flat * sin_alpha * (
            sigma
            + cc * sin_sigma * (cos_2sm + cc * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm))
        )
        if abs(lam - lam_prev) < 1e-13:
            converged = True
            break

    if not converged:
        warnings.warn(
            f"geodesic solver did not converge for {a} -> {b}; using spherical distance",
            GeodesicFallbackWarning,
            stacklevel=2,
        )
        return haversine_distance(a, b, earth)

    u_sq = cos_sq_alpha * (major * major - minor * minor) / (minor * minor)
    big_a = 1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)))
    big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)))
    delta_sigma = big_b * sin_sigma * (
        cos_2sm
        + big_b / 4.0 * (
            cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)
            - big_b / 6.0 * cos_2sm
            * (-3.0 + 4.0 * sin_sigma * sin_sigma)
            * (-3.0 + 4.0 * cos_2sm * cos_2sm)
        )
    )
    return minor * big_a * (sigma - delta_sigma)
