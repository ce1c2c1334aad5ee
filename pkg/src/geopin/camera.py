"""Camera models and ray geometry.

Two intrinsic models are supported: an undistorted pinhole and an f-theta
fisheye whose forward polynomial maps off-axis angle (radians) to image
radius (pixels). Conventions, fixed package-wide:

  * camera optical frame: z along the optical axis, x right, y down;
  * vehicle rig frame: x forward, y left, z up, ground plane at z = 0;
  * extrinsic rotation: yaw about rig z (CCW positive, so +90 faces left),
    then pitch about rig y (positive tips the view down), then roll about
    the optical axis (right-handed about the forward direction).

All types are immutable and every function is pure, so the module is safe
to use from multiple threads without locking.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Union

from .errors import (
    AboveHorizon,
    BehindCamera,
    FThetaInversionFailure,
    NegativeHeight,
    OutsideFieldOfView,
    PixelOutOfBounds,
    SessionFormatError,
)

Vec3 = tuple[float, float, float]

_FTHETA_TOL_RAD = 1e-12
_FTHETA_MAX_ITER = 50


@dataclass(frozen=True)
class PinholeIntrinsics:
    """Ideal pinhole: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: float
    height: float

    model = "pinhole"

    def __post_init__(self) -> None:
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0.0 or self.height <= 0.0:
            raise ValueError("image size must be positive")


@dataclass(frozen=True)
class FThetaIntrinsics:
    """f-theta fisheye: image radius r(theta) = c1*t + c2*t^2 + ... + c5*t^5.

    theta_max is where the polynomial reaches the image-corner radius, i.e.
    half the diagonal field of view; r must be strictly increasing up to it.
    """

    cx: float
    cy: float
    coeffs: tuple[float, float, float, float, float]
    width: float
    height: float
    theta_max: float = field(init=False)

    model = "ftheta"

    def __post_init__(self) -> None:
        if self.width <= 0.0 or self.height <= 0.0:
            raise ValueError("image size must be positive")
        if self.coeffs[0] <= 0.0:
            raise ValueError("leading f-theta coefficient c1 must be positive")
        corner = self._corner_radius()
        object.__setattr__(self, "theta_max", self._solve_theta_max(corner))

    def _corner_radius(self) -> float:
        rx = max(self.cx, self.width - self.cx)
        ry = max(self.cy, self.height - self.cy)
        return math.hypot(rx, ry)

    def radius(self, theta: float) -> float:
        c1, c2, c3, c4, c5 = self.coeffs
        return theta * (c1 + theta * (c2 + theta * (c3 + theta * (c4 + theta * c5))))

    def radius_slope(self, theta: float) -> float:
        c1, c2, c3, c4, c5 = self.coeffs
        return c1 + theta * (2 * c2 + theta * (3 * c3 + theta * (4 * c4 + theta * 5 * c5)))

    def _solve_theta_max(self, corner: float) -> float:
        # walk a fine grid out to 180 degrees; the polynomial must climb
        # monotonically until it covers the image corner
        steps = 2048
        prev_r = 0.0
        for k in range(1, steps + 1):
            theta = math.pi * k / steps
            r = self.radius(theta)
            if r <= prev_r or self.radius_slope(theta) <= 0.0:
                raise ValueError(
                    f"f-theta polynomial is not strictly increasing at theta={theta:.4f}"
                    f" before covering the corner radius {corner:.1f} px"
                )
            if r >= corner:
                lo, hi = math.pi * (k - 1) / steps, theta
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if self.radius(mid) < corner:
                        lo = mid
                    else:
                        hi = mid
                return hi
            prev_r = r
        raise ValueError(
            f"f-theta polynomial never reaches the corner radius {corner:.1f} px"
            " within 180 degrees"
        )

    def invert_radius(self, r: float) -> float:
        """Solve r(theta) = r by Newton with a bisection safety net."""
        if r == 0.0:
            return 0.0
        if r < 0.0 or r > self.radius(self.theta_max) * (1.0 + 1e-12):
            raise FThetaInversionFailure(f"radius {r!r} outside [0, corner]")
        lo, hi = 0.0, self.theta_max
        theta = min(max(r / self.coeffs[0], lo), hi)
        for _ in range(_FTHETA_MAX_ITER):
            f = self.radius(theta) - r
            if f > 0.0:
                hi = theta
            else:
                lo = theta
            slope = self.radius_slope(theta)
            step_ok = slope > 0.0
            if step_ok:
                nxt = theta - f / slope
                step_ok = lo < nxt < hi or nxt == lo or nxt == hi
            nxt = nxt if step_ok else 0.5 * (lo + hi)
            done = abs(nxt - theta) < _FTHETA_TOL_RAD
            theta = nxt
            if done:
                return theta
        raise FThetaInversionFailure(f"no convergence for radius {r!r}")


CameraIntrinsics = Union[PinholeIntrinsics, FThetaIntrinsics]


def _rot_z(deg: float) -> tuple[Vec3, Vec3, Vec3]:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return ((c, -s, 0.0), (s, c, 0.0), (0.0, 0.0, 1.0))


def _rot_y(deg: float) -> tuple[Vec3, Vec3, Vec3]:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return ((c, 0.0, s), (0.0, 1.0, 0.0), (-s, 0.0, c))


def _rot_x(deg: float) -> tuple[Vec3, Vec3, Vec3]:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return ((1.0, 0.0, 0.0), (0.0, c, -s), (0.0, s, c))


def _mat_mul(a, b):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3)) for i in range(3)
    )


# camera axes in rig coordinates at zero rotation: optical z is rig +x,
# camera x (right) is rig -y, camera y (down) is rig -z
_R_BASE = ((0.0, 0.0, 1.0), (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0))


@dataclass(frozen=True)
class CameraExtrinsics:
    """Camera pose in the rig frame; z is mounting height above ground."""

    x: float
    y: float
    z: float
    yaw_deg: float
    pitch_deg: float
    roll_deg: float

    def __post_init__(self) -> None:
        if self.z <= 0.0:
            raise ValueError(f"camera height {self.z!r} must be above the ground plane")

    @cached_property
    def rotation(self) -> tuple[Vec3, Vec3, Vec3]:
        r = _mat_mul(_rot_x(self.roll_deg), _R_BASE)
        r = _mat_mul(_rot_y(self.pitch_deg), r)
        return _mat_mul(_rot_z(self.yaw_deg), r)

    @property
    def position(self) -> Vec3:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class GroundHit:
    """Ray/ground-plane intersection in rig coordinates."""

    point: Vec3
    slant_distance: float
    ground_distance: float


def pixel_to_ray(intr: CameraIntrinsics, px: float, py: float) -> Vec3:
    """Unit direction in the camera frame for an image position."""
    if not (0.0 <= px <= intr.width and 0.0 <= py <= intr.height):
        raise PixelOutOfBounds(
            f"pixel ({px!r}, {py!r}) outside [0, {intr.width}] x [0, {intr.height}]"
        )
    if intr.model == "pinhole":
        x = (px - intr.cx) / intr.fx
        y = (py - intr.cy) / intr.fy
        norm = math.sqrt(x * x + y * y + 1.0)
        return (x / norm, y / norm, 1.0 / norm)
    dx = px - intr.cx
    dy = py - intr.cy
    r = math.hypot(dx, dy)
    if r == 0.0:
        return (0.0, 0.0, 1.0)
    theta = intr.invert_radius(r)
    s = math.sin(theta) / r
    return (s * dx, s * dy, math.cos(theta))


def ray_to_pixel(intr: CameraIntrinsics, direction: Vec3) -> tuple[float, float]:
    """Forward-project a camera-frame direction; exact inverse of pixel_to_ray."""
    x, y, z = direction
    if x == 0.0 and y == 0.0 and z == 0.0:
        raise ValueError("zero direction")
    if intr.model == "pinhole":
        if z <= 1e-12:
            raise BehindCamera(f"direction {direction!r} does not point forward")
        px = intr.cx + intr.fx * (x / z)
        py = intr.cy + intr.fy * (y / z)
    else:
        rho = math.hypot(x, y)
        theta = math.atan2(rho, z)
        if theta > intr.theta_max:
            raise OutsideFieldOfView(
                f"off-axis angle {math.degrees(theta):.2f} deg beyond the lens limit"
            )
        if rho == 0.0:
            return (intr.cx, intr.cy)
        r = intr.radius(theta)
        px = intr.cx + r * (x / rho)
        py = intr.cy + r * (y / rho)
    # tolerate solver noise at the image border, then clamp so that the
    # result is always a legal pixel for pixel_to_ray
    eps = 1e-6
    if not (-eps <= px <= intr.width + eps and -eps <= py <= intr.height + eps):
        raise OutsideFieldOfView(f"projects to ({px:.2f}, {py:.2f}), outside the image")
    return (min(max(px, 0.0), intr.width), min(max(py, 0.0), intr.height))


def camera_ray_to_rig(extr: CameraExtrinsics, dir_cam: Vec3) -> tuple[Vec3, Vec3]:
    """Rotate a camera-frame direction into the rig frame.

    Returns (origin, direction): the ray starts at the camera position.
    """
    r = extr.rotation
    d = (
        r[0][0] * dir_cam[0] + r[0][1] * dir_cam[1] + r[0][2] * dir_cam[2],
        r[1][0] * dir_cam[0] + r[1][1] * dir_cam[1] + r[1][2] * dir_cam[2],
        r[2][0] * dir_cam[0] + r[2][1] * dir_cam[1] + r[2][2] * dir_cam[2],
    )
    return extr.position, d


def intersect_ground(origin: Vec3, direction: Vec3) -> GroundHit:
    """Cast a rig-frame ray onto the ground plane z = 0."""
    ox, oy, oz = origin
    dx, dy, dz = direction
    if oz <= 0.0:
        raise NegativeHeight(f"ray origin height {oz!r} must be positive")
    if dz >= -1e-9:
        raise AboveHorizon(f"direction {direction!r} never descends to the ground")
    t = -oz / dz
    ground = math.hypot(t * dx, t * dy)
    return GroundHit(
        point=(ox + t * dx, oy + t * dy, 0.0),
        slant_distance=t,
        ground_distance=ground,
    )


@dataclass(frozen=True)
class Camera:
    """One calibrated camera: identity, model, mounting, and declared FOV."""

    camera_id: str
    intrinsics: CameraIntrinsics
    extrinsics: CameraExtrinsics
    fov_deg: float

    def __post_init__(self) -> None:
        if not 0.0 < self.fov_deg < 360.0:
            raise ValueError(f"fov_deg {self.fov_deg!r} outside (0, 360)")


# --- calibration files -----------------------------------------------------


def _require_keys(doc: dict, allowed: dict, source: str, where: str) -> dict:
    """Check key set and numeric types; `allowed` maps key -> required flag."""
    unknown = set(doc) - set(allowed)
    if unknown:
        raise SessionFormatError(f"{source}: unknown {where} fields {sorted(unknown)}")
    missing = [k for k, required in allowed.items() if required and k not in doc]
    if missing:
        raise SessionFormatError(f"{source}: missing {where} fields {missing}")
    return doc


def _num(doc: dict, key: str, source: str, default: float | None = None) -> float:
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SessionFormatError(f"{source}: field {key!r} must be a number, got {v!r}")
    return float(v)


def calibration_from_dict(doc: dict, source: str = "<calibration>") -> Camera:
    """Build a Camera from one calibration document; unknown fields rejected."""
    if not isinstance(doc, dict):
        raise SessionFormatError(f"{source}: calibration must be an object")
    _require_keys(
        doc,
        {"id": True, "model": True, "width": True, "height": True,
         "params": True, "extrinsics": True, "fov_deg": True},
        source, "calibration",
    )
    cam_id = doc["id"]
    if not isinstance(cam_id, str) or not cam_id:
        raise SessionFormatError(f"{source}: camera id must be a non-empty string")
    model = doc["model"]
    width = _num(doc, "width", source)
    height = _num(doc, "height", source)
    params = doc["params"]
    if not isinstance(params, dict):
        raise SessionFormatError(f"{source}: params must be an object")
    try:
        if model == "pinhole":
            _require_keys(params, {"fx": True, "fy": True, "cx": True, "cy": True},
                          source, "pinhole params")
            intr: CameraIntrinsics = PinholeIntrinsics(
                fx=_num(params, "fx", source), fy=_num(params, "fy", source),
                cx=_num(params, "cx", source), cy=_num(params, "cy", source),
                width=width, height=height,
            )
        elif model == "ftheta":
            _require_keys(
                params,
                {"cx": True, "cy": True, "c1": True,
                 "c2": False, "c3": False, "c4": False, "c5": False},
                source, "ftheta params",
            )
            intr = FThetaIntrinsics(
                cx=_num(params, "cx", source), cy=_num(params, "cy", source),
                coeffs=(
                    _num(params, "c1", source),
                    _num(params, "c2", source, 0.0),
                    _num(params, "c3", source, 0.0),
                    _num(params, "c4", source, 0.0),
                    _num(params, "c5", source, 0.0),
                ),
                width=width, height=height,
            )
        else:
            raise SessionFormatError(f"{source}: unknown camera model {model!r}")
        ext_doc = doc["extrinsics"]
        if not isinstance(ext_doc, dict):
            raise SessionFormatError(f"{source}: extrinsics must be an object")
        _require_keys(
            ext_doc,
            {"x": True, "y": True, "z": True,
             "yaw_deg": True, "pitch_deg": True, "roll_deg": True},
            source, "extrinsics",
        )
        extr = CameraExtrinsics(
            x=_num(ext_doc, "x", source), y=_num(ext_doc, "y", source),
            z=_num(ext_doc, "z", source),
            yaw_deg=_num(ext_doc, "yaw_deg", source),
            pitch_deg=_num(ext_doc, "pitch_deg", source),
            roll_deg=_num(ext_doc, "roll_deg", source),
        )
        return Camera(
            camera_id=cam_id, intrinsics=intr, extrinsics=extr,
            fov_deg=_num(doc, "fov_deg", source),
        )
    except ValueError as exc:
        raise SessionFormatError(f"{source}: {exc}") from exc


def load_calibration(path: str | Path) -> Camera:
    """Read one camera calibration JSON file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SessionFormatError(f"{path}: {exc}") from exc
    return calibration_from_dict(doc, source=str(path))


def camera_to_dict(cam: Camera) -> dict:
    """Inverse of calibration_from_dict, for writing session manifests."""
    if cam.intrinsics.model == "pinhole":
        params = {"fx": cam.intrinsics.fx, "fy": cam.intrinsics.fy,
                  "cx": cam.intrinsics.cx, "cy": cam.intrinsics.cy}
    else:
        c1, c2, c3, c4, c5 = cam.intrinsics.coeffs
        params = {"cx": cam.intrinsics.cx, "cy": cam.intrinsics.cy,
                  "c1": c1, "c2": c2, "c3": c3, "c4": c4, "c5": c5}
    e = cam.extrinsics
    return {
        "id": cam.camera_id,
        "model": cam.intrinsics.model,
        "width": cam.intrinsics.width,
        "height": cam.intrinsics.height,
        "params": params,
        "extrinsics": {"x": e.x, "y": e.y, "z": e.z, "yaw_deg": e.yaw_deg,
                       "pitch_deg": e.pitch_deg, "roll_deg": e.roll_deg},
        "fov_deg": cam.fov_deg,
    }
