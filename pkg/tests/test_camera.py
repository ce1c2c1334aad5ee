"""Unit tests for camera models, extrinsics, and ground intersection."""

import math
import random

import pytest

from geopin.camera import (
    Camera,
    CameraExtrinsics,
    FThetaIntrinsics,
    PinholeIntrinsics,
    calibration_from_dict,
    camera_ray_to_rig,
    camera_to_dict,
    intersect_ground,
    pixel_to_ray,
    ray_to_pixel,
)
from geopin.errors import (
    AboveHorizon,
    BehindCamera,
    NegativeHeight,
    OutsideFieldOfView,
    PixelOutOfBounds,
    SessionFormatError,
)

PINHOLE = PinholeIntrinsics(fx=960.0, fy=960.0, cx=960.0, cy=604.0, width=1920.0, height=1208.0)
# strongly non-linear but monotone out to the image corner
FTHETA = FThetaIntrinsics(
    cx=960.0, cy=604.0, coeffs=(900.0, 0.0, -60.0, 0.0, 8.0), width=1920.0, height=1208.0
)


# --- intrinsics validation -----------------------------------------------------


def test_pinhole_rejects_bad_focal():
    with pytest.raises(ValueError):
        PinholeIntrinsics(fx=0.0, fy=960.0, cx=960.0, cy=604.0, width=1920.0, height=1208.0)


def test_ftheta_requires_positive_c1():
    with pytest.raises(ValueError):
        FThetaIntrinsics(cx=960.0, cy=604.0, coeffs=(-1.0, 0.0, 0.0, 0.0, 0.0),
                         width=1920.0, height=1208.0)


def test_ftheta_rejects_non_monotone():
    # turns over well before reaching the corner radius
    with pytest.raises(ValueError):
        FThetaIntrinsics(cx=960.0, cy=604.0, coeffs=(200.0, 0.0, -500.0, 0.0, 0.0),
                         width=1920.0, height=1208.0)


def test_ftheta_theta_max_is_corner_angle():
    corner = math.hypot(960.0, 604.0)
    assert FTHETA.radius(FTHETA.theta_max) == pytest.approx(corner, abs=1e-6)


# --- pixel_to_ray ----------------------------------------------------------------


def test_pinhole_principal_point():
    assert pixel_to_ray(PINHOLE, 960.0, 604.0) == (0.0, 0.0, 1.0)


def test_pinhole_45deg():
    ray = pixel_to_ray(PINHOLE, 1920.0, 604.0)
    s = 1.0 / math.sqrt(2.0)
    assert ray[0] == pytest.approx(s, abs=1e-12)
    assert ray[1] == pytest.approx(0.0, abs=1e-12)
    assert ray[2] == pytest.approx(s, abs=1e-12)


def test_linear_ftheta_inverts_exactly():
    intr = FThetaIntrinsics(cx=960.0, cy=604.0, coeffs=(800.0, 0.0, 0.0, 0.0, 0.0),
                            width=1920.0, height=1208.0)
    ray = pixel_to_ray(intr, 960.0 + 400.0, 604.0)
    theta = math.atan2(math.hypot(ray[0], ray[1]), ray[2])
    assert theta == pytest.approx(0.5, abs=1e-12)


def test_pixel_out_of_bounds():
    with pytest.raises(PixelOutOfBounds):
        pixel_to_ray(PINHOLE, -0.5, 100.0)
    with pytest.raises(PixelOutOfBounds):
        pixel_to_ray(FTHETA, 100.0, 1208.5)


def test_rays_are_unit_length():
    rng = random.Random(3)
    for intr in (PINHOLE, FTHETA):
        for _ in range(200):
            ray = pixel_to_ray(intr, rng.uniform(0, 1920), rng.uniform(0, 1208))
            assert math.hypot(math.hypot(ray[0], ray[1]), ray[2]) == pytest.approx(1.0, abs=1e-12)


# --- projection round trips ---------------------------------------------------


def test_pinhole_round_trip():
    rng = random.Random(17)
    for _ in range(1000):
        px = rng.uniform(0.0, 1920.0)
        py = rng.uniform(0.0, 1208.0)
        qx, qy = ray_to_pixel(PINHOLE, pixel_to_ray(PINHOLE, px, py))
        assert abs(qx - px) < 1e-6
        assert abs(qy - py) < 1e-6


def test_ftheta_round_trip_full_grid():
    worst = 0.0
    for ix in range(0, 1921, 40):
        for iy in range(0, 1209, 40):
            qx, qy = ray_to_pixel(FTHETA, pixel_to_ray(FTHETA, float(ix), float(iy)))
            worst = max(worst, abs(qx - ix), abs(qy - iy))
    assert worst < 1e-3


def test_ftheta_inversion_residual():
    # residual of the polynomial solve, measured in pixels against c1
    rng = random.Random(5)
    corner = FTHETA.radius(FTHETA.theta_max)
    for _ in range(500):
        r = rng.uniform(0.0, corner)
        theta = FTHETA.invert_radius(r)
        assert abs(FTHETA.radius(theta) - r) < 1e-10 * FTHETA.coeffs[0]


def test_ray_to_pixel_center():
    assert ray_to_pixel(PINHOLE, (0.0, 0.0, 1.0)) == (960.0, 604.0)
    assert ray_to_pixel(FTHETA, (0.0, 0.0, 1.0)) == (960.0, 604.0)


def test_ray_to_pixel_errors():
    with pytest.raises(BehindCamera):
        ray_to_pixel(PINHOLE, (0.0, 0.0, -1.0))
    with pytest.raises(OutsideFieldOfView):
        ray_to_pixel(PINHOLE, (5.0, 0.0, 1.0))  # ~79 deg off-axis, outside a 45-deg half-FOV
    with pytest.raises(OutsideFieldOfView):
        ray_to_pixel(FTHETA, (1.0, 0.0, -0.8))  # beyond theta_max


# --- extrinsics ------------------------------------------------------------------


def test_identity_mounting_faces_forward():
    extr = CameraExtrinsics(x=0.0, y=0.0, z=1.5, yaw_deg=0.0, pitch_deg=0.0, roll_deg=0.0)
    origin, d = camera_ray_to_rig(extr, (0.0, 0.0, 1.0))
    assert origin == (0.0, 0.0, 1.5)
    assert d[0] == pytest.approx(1.0, abs=1e-12)
    assert d[1] == pytest.approx(0.0, abs=1e-12)
    assert d[2] == pytest.approx(0.0, abs=1e-12)


def test_pixel_right_of_center_goes_rig_right():
    # rig y is left, so right of image center must give y < 0
    extr = CameraExtrinsics(x=0.0, y=0.0, z=1.5, yaw_deg=0.0, pitch_deg=0.0, roll_deg=0.0)
    _, d = camera_ray_to_rig(extr, pixel_to_ray(PINHOLE, 1400.0, 604.0))
    assert d[1] < 0.0


def test_yaw_90_faces_left():
    extr = CameraExtrinsics(x=0.0, y=0.0, z=1.5, yaw_deg=90.0, pitch_deg=0.0, roll_deg=0.0)
    _, d = camera_ray_to_rig(extr, (0.0, 0.0, 1.0))
    assert d[0] == pytest.approx(0.0, abs=1e-12)
    assert d[1] == pytest.approx(1.0, abs=1e-12)
    assert d[2] == pytest.approx(0.0, abs=1e-12)


def test_pitch_10_down():
    extr = CameraExtrinsics(x=0.0, y=0.0, z=1.5, yaw_deg=0.0, pitch_deg=10.0, roll_deg=0.0)
    _, d = camera_ray_to_rig(extr, (0.0, 0.0, 1.0))
    assert d[0] == pytest.approx(math.cos(math.radians(10.0)), abs=1e-12)
    assert d[1] == pytest.approx(0.0, abs=1e-12)
    assert d[2] == pytest.approx(-math.sin(math.radians(10.0)), abs=1e-12)


def test_roll_keeps_optical_axis():
    extr = CameraExtrinsics(x=0.0, y=0.0, z=1.5, yaw_deg=0.0, pitch_deg=0.0, roll_deg=33.0)
    _, d = camera_ray_to_rig(extr, (0.0, 0.0, 1.0))
    assert d[0] == pytest.approx(1.0, abs=1e-12)


def test_rotation_is_orthonormal():
    extr = CameraExtrinsics(x=0.5, y=-0.2, z=1.4, yaw_deg=25.0, pitch_deg=7.0, roll_deg=-3.0)
    r = extr.rotation
    for i in range(3):
        for j in range(3):
            dot = sum(r[k][i] * r[k][j] for k in range(3))
            assert dot == pytest.approx(1.0 if i == j else 0.0, abs=1e-12)


def test_extrinsics_require_positive_height():
    with pytest.raises(ValueError):
        CameraExtrinsics(x=0.0, y=0.0, z=0.0, yaw_deg=0.0, pitch_deg=0.0, roll_deg=0.0)


# --- ground intersection -----------------------------------------------------------


def test_ground_hit_30deg():
    d = (math.cos(math.radians(30.0)), 0.0, -math.sin(math.radians(30.0)))
    hit = intersect_ground((0.0, 0.0, 1.5), d)
    assert hit.slant_distance == pytest.approx(3.0, abs=1e-9)
    assert hit.ground_distance == pytest.approx(1.5 / math.tan(math.radians(30.0)), abs=1e-4)
    assert hit.point[2] == 0.0


def test_ground_hit_above_horizon():
    with pytest.raises(AboveHorizon):
        intersect_ground((0.0, 0.0, 1.5), (1.0, 0.0, 0.0))
    with pytest.raises(AboveHorizon):
        intersect_ground((0.0, 0.0, 1.5), (1.0, 0.0, 0.5))


def test_ground_hit_negative_height():
    with pytest.raises(NegativeHeight):
        intersect_ground((0.0, 0.0, 0.0), (1.0, 0.0, -0.5))


def test_ground_hit_pythagoras():
    rng = random.Random(9)
    for _ in range(300):
        z = rng.uniform(0.5, 3.0)
        dx, dy = rng.uniform(-1, 1), rng.uniform(-1, 1)
        dz = -rng.uniform(0.05, 1.0)
        n = math.sqrt(dx * dx + dy * dy + dz * dz)
        hit = intersect_ground((rng.uniform(-2, 2), rng.uniform(-2, 2), z),
                               (dx / n, dy / n, dz / n))
        assert hit.slant_distance**2 == pytest.approx(
            hit.ground_distance**2 + z * z, rel=1e-9
        )
        assert hit.slant_distance >= hit.ground_distance >= 0.0


def test_full_chain_pitch10_center_pixel():
    # camera at 1.5 m with 10 deg down pitch: center pixel lands 1.5/tan(10)
    # ahead; cross-check by forward-projecting that ground point back to the
    # principal point
    extr = CameraExtrinsics(x=0.0, y=0.0, z=1.5, yaw_deg=0.0, pitch_deg=10.0, roll_deg=0.0)
    ray = pixel_to_ray(PINHOLE, 960.0, 604.0)
    origin, d = camera_ray_to_rig(extr, ray)
    hit = intersect_ground(origin, d)
    expected_x = 1.5 / math.tan(math.radians(10.0))
    assert hit.point[0] == pytest.approx(expected_x, abs=1e-4)
    assert abs(hit.point[1]) < 1e-9

    # inverse direction: rotate the rig-frame vector to the target back into
    # the camera frame (rotation transpose) and project
    r = extr.rotation
    v_rig = (expected_x - 0.0, 0.0, 0.0 - 1.5)
    v_cam = tuple(sum(r[k][i] * v_rig[k] for k in range(3)) for i in range(3))
    px, py = ray_to_pixel(PINHOLE, v_cam)
    assert px == pytest.approx(960.0, abs=1e-6)
    assert py == pytest.approx(604.0, abs=1e-6)


def test_pixel_down_image_means_closer():
    extr = CameraExtrinsics(x=0.0, y=0.0, z=1.5, yaw_deg=0.0, pitch_deg=10.0, roll_deg=0.0)
    last = None
    for py in (640.0, 800.0, 1000.0, 1200.0):
        origin, d = camera_ray_to_rig(extr, pixel_to_ray(PINHOLE, 960.0, py))
        hit = intersect_ground(origin, d)
        if last is not None:
            assert hit.ground_distance < last
        last = hit.ground_distance


# --- calibration files --------------------------------------------------------------


def good_pinhole_doc():
    return {
        "id": "cam_front",
        "model": "pinhole",
        "width": 1920,
        "height": 1208,
        "params": {"fx": 960.0, "fy": 960.0, "cx": 960.0, "cy": 604.0},
        "extrinsics": {"x": 1.8, "y": 0.0, "z": 1.5,
                       "yaw_deg": 0.0, "pitch_deg": 10.0, "roll_deg": 0.0},
        "fov_deg": 90.0,
    }


def test_calibration_round_trip():
    cam = calibration_from_dict(good_pinhole_doc())
    assert cam.camera_id == "cam_front"
    assert cam.intrinsics.fx == 960.0
    assert cam.extrinsics.pitch_deg == 10.0
    again = calibration_from_dict(camera_to_dict(cam))
    assert again == cam


def test_calibration_rejects_unknown_fields():
    doc = good_pinhole_doc()
    doc["serial_number"] = "abc123"
    with pytest.raises(SessionFormatError):
        calibration_from_dict(doc)
    doc = good_pinhole_doc()
    doc["params"]["k1"] = 0.1
    with pytest.raises(SessionFormatError):
        calibration_from_dict(doc)
    doc = good_pinhole_doc()
    doc["extrinsics"]["height"] = 1.5
    with pytest.raises(SessionFormatError):
        calibration_from_dict(doc)


def test_calibration_rejects_missing_fields():
    doc = good_pinhole_doc()
    del doc["fov_deg"]
    with pytest.raises(SessionFormatError):
        calibration_from_dict(doc)
    doc = good_pinhole_doc()
    del doc["params"]["fy"]
    with pytest.raises(SessionFormatError):
        calibration_from_dict(doc)


def test_calibration_rejects_bad_types():
    doc = good_pinhole_doc()
    doc["params"]["fx"] = "960"
    with pytest.raises(SessionFormatError):
        calibration_from_dict(doc)
    doc = good_pinhole_doc()
    doc["extrinsics"]["z"] = 0.0  # camera on the ground
    with pytest.raises(SessionFormatError):
        calibration_from_dict(doc)


def test_calibration_ftheta():
    doc = {
        "id": "cam_fish",
        "model": "ftheta",
        "width": 1920,
        "height": 1208,
        "params": {"cx": 960.0, "cy": 604.0, "c1": 900.0, "c3": -60.0, "c5": 8.0},
        "extrinsics": {"x": 1.8, "y": 0.0, "z": 1.5,
                       "yaw_deg": 0.0, "pitch_deg": 5.0, "roll_deg": 0.0},
        "fov_deg": 120.0,
    }
    cam = calibration_from_dict(doc)
    assert cam.intrinsics.model == "ftheta"
    assert cam.intrinsics.coeffs == (900.0, 0.0, -60.0, 0.0, 8.0)
    assert calibration_from_dict(camera_to_dict(cam)) == cam


def test_load_calibration_file(tmp_path):
    import json

    p = tmp_path / "cam.json"
    p.write_text(json.dumps(good_pinhole_doc()))
    from geopin.camera import load_calibration

    cam = load_calibration(p)
    assert cam.camera_id == "cam_front"
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SessionFormatError):
        load_calibration(bad)
