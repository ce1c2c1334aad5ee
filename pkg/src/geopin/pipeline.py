"""End-to-end geolocation of annotated road objects, plus batch evaluation.

One annotation flows pose lookup -> pixel ray -> ground intersection ->
heading -> destination point. Batch evaluation isolates per-annotation
failures, sorts rows by true distance, and aggregates errors into distance
and speed bins for reporting.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .camera import camera_ray_to_rig, intersect_ground, pixel_to_ray
from .errors import EmptySession, GeopinError
from .geodesy import (
    Bearing,
    GeoPoint,
    eq1_heading,
    geodesic_error,
    inverse_haversine,
    normalize_bearing,
    ray_azimuth_heading,
)
from .session import Annotation, Session
from .sync import RigState, pose_at

DISTANCE_BIN_M = 5.0
SPEED_BIN_KMH = 10.0

REPORT_HEADER = (
    "target_id", "true_distance_m", "error_m", "speed_mps", "heading_mode", "distance_mode",
)


@dataclass(frozen=True)
class EstimateFlags:
    """Processing modes and data-quality flags attached to every estimate."""

    distance_mode: str
    heading_mode: str
    pose_mode: str
    clamped: bool
    heading_held: bool

    def to_dict(self) -> dict:
        return {
            "distance_mode": self.distance_mode,
            "heading_mode": self.heading_mode,
            "pose_mode": self.pose_mode,
            "clamped": self.clamped,
            "heading_held": self.heading_held,
        }


@dataclass(frozen=True)
class TargetEstimate:
    """Geolocated annotation with provenance and (optional) ground-truth error."""

    target_id: str
    t: float
    camera_id: str
    estimate: GeoPoint
    d: float
    bearing: Bearing
    vehicle_state: RigState
    flags: EstimateFlags
    error_m: float | None = None
    true_distance_m: float | None = None


@dataclass(frozen=True)
class FailureRecord:
    """Identity and cause of one annotation that could not be geolocated."""

    camera_id: str
    t: float
    target_id: str
    error: str
    message: str


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[TargetEstimate, ...]
    failures: tuple[FailureRecord, ...]
    aggregates: dict


def _lever_arm_position(state: RigState, forward_m: float, left_m: float) -> GeoPoint:
    """Rig-origin geoposition from the antenna fix and a vehicle-frame offset."""
    if forward_m == 0.0 and left_m == 0.0:
        return state.pos
    theta = math.radians(state.theta_car)
    east = forward_m * math.sin(theta) - left_m * math.cos(theta)
    north = forward_m * math.cos(theta) + left_m * math.sin(theta)
    return inverse_haversine(
        state.pos,
        math.hypot(forward_m, left_m),
        normalize_bearing(math.degrees(math.atan2(east, north))),
    )


def geolocate(annotation: Annotation, session: Session) -> TargetEstimate:
    """Run the full pipeline for one annotation.

    Domain failures (no ground intersection, out-of-track time, ...) are
    re-raised as the same error type with the annotation identity prefixed,
    so batch callers can attribute them.
    """
    opts = session.options
    try:
        cam = session.camera_by_id(annotation.camera_id)
        state = pose_at(
            session.track, annotation.t,
            mode=opts.pose_mode, latency_offset=opts.latency_offset,
        )
        vehicle_pos = _lever_arm_position(state, opts.antenna_forward_m, opts.antenna_left_m)
        dir_cam = pixel_to_ray(cam.intrinsics, annotation.px, annotation.py)
        origin, dir_rig = camera_ray_to_rig(cam.extrinsics, dir_cam)
        hit = intersect_ground(origin, dir_rig)
        d = hit.ground_distance if opts.distance_mode == "ground" else hit.slant_distance
        if opts.heading_mode == "linear":
            heading = eq1_heading(
                cam.fov_deg, cam.intrinsics.width, annotation.px,
                psi_camera_deg=-cam.extrinsics.yaw_deg,
                theta_car_deg=state.theta_car,
            )
        else:
            heading = ray_azimuth_heading(dir_rig, state.theta_car)
        estimate = inverse_haversine(vehicle_pos, d, heading, earth=opts.earth())
    except GeopinError as exc:
        raise type(exc)(
            f"annotation t={annotation.t} camera={annotation.camera_id}"
            f" target={annotation.target_id}: {exc}"
        ) from exc
    error_m = true_distance_m = None
    truth = session.ground_truth_for(annotation.target_id)
    if truth is not None:
        error_m = geodesic_error(estimate, truth.pos)
        true_distance_m = geodesic_error(vehicle_pos, truth.pos)
    return TargetEstimate(
        target_id=annotation.target_id,
        t=annotation.t,
        camera_id=annotation.camera_id,
        estimate=estimate,
        d=d,
        bearing=heading,
        vehicle_state=replace(state, pos=vehicle_pos),
        flags=EstimateFlags(
            distance_mode=opts.distance_mode,
            heading_mode=opts.heading_mode,
            pose_mode=opts.pose_mode,
            clamped=state.clamped,
            heading_held=state.heading_held,
        ),
        error_m=error_m,
        true_distance_m=true_distance_m,
    )


def _bin_label(value: float, width: float) -> str:
    lo = math.floor(value / width) * width
    return f"{lo:g}-{lo + width:g}"


def _stats(errors: list[float]) -> dict:
    arr = np.asarray(errors, dtype=float)
    return {
        "count": int(arr.size),
        "mean_m": float(arr.mean()),
        "median_m": float(np.median(arr)),
        "p95_m": float(np.percentile(arr, 95)),
        "max_m": float(arr.max()),
    }


def compute_aggregates(rows: tuple[TargetEstimate, ...]) -> dict:
    """Error statistics overall and per distance / speed bin.

    Only rows with ground truth participate; bins are keyed by half-open
    ranges (5 m of true distance, 10 km/h of track speed).
    """
    scored = [r for r in rows if r.error_m is not None]
    out: dict = {"overall": _stats([r.error_m for r in scored]) if scored else {"count": 0}}
    by_distance: dict[str, list[float]] = {}
    by_speed: dict[str, list[float]] = {}
    for r in scored:
        by_distance.setdefault(_bin_label(r.true_distance_m, DISTANCE_BIN_M), []).append(r.error_m)
        kmh = r.vehicle_state.speed * 3.6
        by_speed.setdefault(_bin_label(kmh, SPEED_BIN_KMH), []).append(r.error_m)
    def low_edge(item: tuple[str, list[float]]) -> float:
        return float(item[0].split("-")[0])

    out["by_distance_m"] = {k: _stats(v) for k, v in sorted(by_distance.items(), key=low_edge)}
    out["by_speed_kmh"] = {k: _stats(v) for k, v in sorted(by_speed.items(), key=low_edge)}
    return out


def _row_order(row: TargetEstimate) -> tuple:
    d = row.true_distance_m if row.true_distance_m is not None else math.inf
    return (d, row.target_id, row.t)


def evaluate(session: Session) -> EvaluationReport:
    """Geolocate every annotation; collect failures instead of aborting."""
    if not session.annotations:
        raise EmptySession("session has no annotations to evaluate")
    rows: list[TargetEstimate] = []
    failures: list[FailureRecord] = []
    for ann in session.annotations:
        try:
            rows.append(geolocate(ann, session))
        except GeopinError as exc:
            failures.append(FailureRecord(
                camera_id=ann.camera_id, t=ann.t, target_id=ann.target_id,
                error=type(exc).__name__, message=str(exc),
            ))
    rows.sort(key=_row_order)
    return EvaluationReport(
        rows=tuple(rows),
        failures=tuple(failures),
        aggregates=compute_aggregates(tuple(rows)),
    )


# --- serialization ----------------------------------------------------------------


def _opt(value: float | None) -> str:
    return "" if value is None else repr(value)


def estimate_to_dict(est: TargetEstimate) -> dict:
    """Full JSON form of one estimate (shared by report export and the API)."""
    return {
        "target_id": est.target_id,
        "t": est.t,
        "camera_id": est.camera_id,
        "estimate": {"lat": est.estimate.lat, "lon": est.estimate.lon},
        "d_m": est.d,
        "bearing_deg": float(est.bearing),
        "vehicle": {
            "t": est.vehicle_state.t,
            "lat": est.vehicle_state.pos.lat,
            "lon": est.vehicle_state.pos.lon,
            "theta_car_deg": float(est.vehicle_state.theta_car),
            "speed_mps": est.vehicle_state.speed,
        },
        "flags": est.flags.to_dict(),
        "error_m": est.error_m,
        "true_distance_m": est.true_distance_m,
    }


def _row_dict(est: TargetEstimate) -> dict:
    return {
        "target_id": est.target_id,
        "true_distance_m": est.true_distance_m,
        "error_m": est.error_m,
        "speed_mps": est.vehicle_state.speed,
        "heading_mode": est.flags.heading_mode,
        "distance_mode": est.flags.distance_mode,
    }


def report_to_doc(report: EvaluationReport) -> dict:
    return {
        "rows": [_row_dict(r) for r in report.rows],
        "estimates": [estimate_to_dict(r) for r in report.rows],
        "aggregates": report.aggregates,
        "failures": [
            {"camera_id": f.camera_id, "t": f.t, "target_id": f.target_id,
             "error": f.error, "message": f.message}
            for f in report.failures
        ],
    }


def report_to_json(report: EvaluationReport) -> str:
    return json.dumps(report_to_doc(report), indent=2, sort_keys=True) + "\n"


def report_to_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for r in report.rows:
        writer.writerow([
            r.target_id, _opt(r.true_distance_m), _opt(r.error_m),
            repr(r.vehicle_state.speed), r.flags.heading_mode, r.flags.distance_mode,
        ])
    return buf.getvalue()


def export_report(report: EvaluationReport, fmt: str, path: str | Path) -> None:
    """Write the report as `csv` or `json`; byte-stable for a fixed report."""
    if fmt == "csv":
        text = report_to_csv(report)
    elif fmt == "json":
        text = report_to_json(report)
    else:
        raise ValueError(f"format {fmt!r} not one of ('csv', 'json')")
    Path(path).write_text(text, encoding="utf-8")
