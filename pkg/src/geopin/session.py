"""Session data model and file ingestion.

A session bundles everything one evaluation run needs: camera calibrations,
the GNSS track, pixel annotations, ground-truth targets, and processing
options. The on-disk layout is a JSON manifest referencing three CSVs;
loading validates every cross-reference up front so downstream code never
sees a dangling id or an out-of-bounds pixel.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .camera import Camera, calibration_from_dict, camera_to_dict, load_calibration
from .errors import DanglingReference, PixelOutOfBounds, SessionFormatError
from .geodesy import (
    DEFAULT_SPHERE_RADIUS_M,
    EarthModel,
    GeoPoint,
    UtmCoord,
    utm33_to_wgs84,
)
from .sync import CLAMP_MARGIN_S, GnssTrack, parse_track, track_to_csv

ANNOTATION_HEADER = ("t", "camera_id", "px", "py", "target_id")
TARGET_KINDS = ("control_marker", "traffic_sign")
TARGET_SOURCES = ("survey", "nvdb")

HEADING_MODES = ("linear", "ray")
DISTANCE_MODES = ("ground", "slant")
POSE_MODES = ("interpolate", "nearest")


@dataclass(frozen=True)
class Annotation:
    """One manual pixel label: target seen by a camera at a time."""

    t: float
    camera_id: str
    px: float
    py: float
    target_id: str


@dataclass(frozen=True)
class GroundTruthTarget:
    """Surveyed (or road-database) position of an annotated object."""

    target_id: str
    pos: GeoPoint
    kind: str = "traffic_sign"
    source: str = "survey"

    def __post_init__(self) -> None:
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"kind {self.kind!r} not one of {TARGET_KINDS}")
        if self.source not in TARGET_SOURCES:
            raise ValueError(f"source {self.source!r} not one of {TARGET_SOURCES}")


@dataclass(frozen=True)
class PipelineOptions:
    """Processing knobs; every field has a default so manifests stay small."""

    heading_mode: str = "linear"
    distance_mode: str = "ground"
    pose_mode: str = "interpolate"
    latency_offset: float = 0.0
    earth_radius_m: float = DEFAULT_SPHERE_RADIUS_M
    antenna_forward_m: float = 0.0
    antenna_left_m: float = 0.0
    trust_nvdb: bool = False

    def __post_init__(self) -> None:
        if self.heading_mode not in HEADING_MODES:
            raise ValueError(f"heading_mode {self.heading_mode!r} not one of {HEADING_MODES}")
        if self.distance_mode not in DISTANCE_MODES:
            raise ValueError(f"distance_mode {self.distance_mode!r} not one of {DISTANCE_MODES}")
        if self.pose_mode not in POSE_MODES:
            raise ValueError(f"pose_mode {self.pose_mode!r} not one of {POSE_MODES}")
        if self.earth_radius_m <= 0.0:
            raise ValueError("earth_radius_m must be positive")

    def earth(self) -> EarthModel:
        return EarthModel(sphere_radius_m=self.earth_radius_m)

    def to_dict(self) -> dict:
        return {
            "heading_mode": self.heading_mode,
            "distance_mode": self.distance_mode,
            "pose_mode": self.pose_mode,
            "latency_offset": self.latency_offset,
            "earth_radius_m": self.earth_radius_m,
            "antenna_forward_m": self.antenna_forward_m,
            "antenna_left_m": self.antenna_left_m,
            "trust_nvdb": self.trust_nvdb,
        }


_OPTION_FIELDS = set(PipelineOptions().to_dict())


def options_from_dict(doc: dict, source: str = "<options>") -> PipelineOptions:
    if not isinstance(doc, dict):
        raise SessionFormatError(f"{source}: options must be an object")
    unknown = set(doc) - _OPTION_FIELDS
    if unknown:
        raise SessionFormatError(f"{source}: unknown option fields {sorted(unknown)}")
    try:
        return PipelineOptions(**doc)
    except (TypeError, ValueError) as exc:
        raise SessionFormatError(f"{source}: {exc}") from exc


@dataclass(frozen=True)
class Session:
    """Fully validated in-memory session; immutable and thread-shareable."""

    cameras: tuple[Camera, ...]
    track: GnssTrack
    annotations: tuple[Annotation, ...]
    targets: tuple[GroundTruthTarget, ...]
    options: PipelineOptions = PipelineOptions()
    metadata: dict = field(default_factory=dict)

    def camera_by_id(self, camera_id: str) -> Camera:
        for cam in self.cameras:
            if cam.camera_id == camera_id:
                return cam
        raise DanglingReference(f"unknown camera_id {camera_id!r}")

    def target_by_id(self, target_id: str) -> GroundTruthTarget | None:
        for tgt in self.targets:
            if tgt.target_id == target_id:
                return tgt
        return None

    def ground_truth_for(self, target_id: str) -> GroundTruthTarget | None:
        """Target usable as ground truth: road-database entries only count
        when the session explicitly promotes them."""
        tgt = self.target_by_id(target_id)
        if tgt is None:
            return None
        if tgt.source == "nvdb" and not self.options.trust_nvdb:
            return None
        return tgt

    def with_annotations(self, annotations: tuple[Annotation, ...]) -> "Session":
        return replace(self, annotations=annotations)


def validate_annotation(ann: Annotation, session: Session, source: str = "<annotation>") -> None:
    """Bounds- and reference-check one annotation against a session."""
    cam = session.camera_by_id(ann.camera_id)  # raises DanglingReference
    intr = cam.intrinsics
    if not (0.0 <= ann.px <= intr.width and 0.0 <= ann.py <= intr.height):
        raise PixelOutOfBounds(
            f"{source}: pixel ({ann.px}, {ann.py}) outside camera {ann.camera_id!r}"
            f" bounds [0, {intr.width}] x [0, {intr.height}]"
        )
    t0, tn = session.track.span
    tq = ann.t - session.options.latency_offset
    if tq < t0 - CLAMP_MARGIN_S or tq > tn + CLAMP_MARGIN_S:
        raise SessionFormatError(
            f"{source}: t={ann.t} outside the track span"
            f" [{t0 - CLAMP_MARGIN_S}, {tn + CLAMP_MARGIN_S}]"
        )


def build_session(
    cameras: tuple[Camera, ...],
    track: GnssTrack,
    annotations: tuple[Annotation, ...],
    targets: tuple[GroundTruthTarget, ...],
    options: PipelineOptions = PipelineOptions(),
    metadata: dict | None = None,
    source: str = "<session>",
) -> Session:
    """Assemble and fully validate a session from in-memory parts."""
    ids = [c.camera_id for c in cameras]
    if len(set(ids)) != len(ids):
        raise SessionFormatError(f"{source}: duplicate camera ids {ids}")
    tids = [t.target_id for t in targets]
    if len(set(tids)) != len(tids):
        raise SessionFormatError(f"{source}: duplicate target ids")
    session = Session(
        cameras=cameras, track=track, annotations=annotations,
        targets=targets, options=options, metadata=metadata or {},
    )
    for k, ann in enumerate(annotations):
        validate_annotation(ann, session, source=f"{source}: annotation {k}")
    return session


# --- CSV parts -------------------------------------------------------------------


def parse_annotations(text: str, source: str = "<annotations>") -> tuple[Annotation, ...]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or tuple(rows[0]) != ANNOTATION_HEADER:
        raise SessionFormatError(f"{source}:1: expected header {','.join(ANNOTATION_HEADER)!r}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(ANNOTATION_HEADER):
            raise SessionFormatError(f"{source}:{lineno}: expected {len(ANNOTATION_HEADER)} fields")
        try:
            out.append(Annotation(
                t=float(row[0]), camera_id=row[1],
                px=float(row[2]), py=float(row[3]), target_id=row[4],
            ))
        except ValueError as exc:
            raise SessionFormatError(f"{source}:{lineno}: {exc}") from exc
    return tuple(out)


def annotations_to_csv(annotations: tuple[Annotation, ...]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ANNOTATION_HEADER)
    for a in annotations:
        writer.writerow([repr(a.t), a.camera_id, repr(a.px), repr(a.py), a.target_id])
    return buf.getvalue()


_TARGET_HEADERS = (
    ("target_id", "kind", "lat", "lon"),
    ("target_id", "kind", "lat", "lon", "source"),
    ("target_id", "kind", "easting", "northing"),
    ("target_id", "kind", "easting", "northing", "source"),
)


def parse_targets(text: str, source: str = "<targets>") -> tuple[GroundTruthTarget, ...]:
    """Ground-truth CSV; positions in WGS84 degrees or UTM33 metres."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or tuple(rows[0]) not in _TARGET_HEADERS:
        raise SessionFormatError(
            f"{source}:1: expected one of the target headers"
            f" {[','.join(h) for h in _TARGET_HEADERS]}"
        )
    header = tuple(rows[0])
    projected = header[2] == "easting"
    has_source = header[-1] == "source"
    out = []
    seen: set[str] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise SessionFormatError(f"{source}:{lineno}: expected {len(header)} fields")
        target_id, kind = row[0], row[1]
        if target_id in seen:
            raise SessionFormatError(f"{source}:{lineno}: duplicate target_id {target_id!r}")
        seen.add(target_id)
        try:
            a, b = float(row[2]), float(row[3])
            pos = utm33_to_wgs84(UtmCoord(a, b)) if projected else GeoPoint(a, b)
            out.append(GroundTruthTarget(
                target_id=target_id, pos=pos, kind=kind,
                source=row[4] if has_source else "survey",
            ))
        except ValueError as exc:
            raise SessionFormatError(f"{source}:{lineno}: {exc}") from exc
    return tuple(out)


def targets_to_csv(targets: tuple[GroundTruthTarget, ...]) -> str:
    """Canonical serialization: always WGS84 degrees with a source column."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("target_id", "kind", "lat", "lon", "source"))
    for t in targets:
        writer.writerow([t.target_id, t.kind, repr(t.pos.lat), repr(t.pos.lon), t.source])
    return buf.getvalue()


# --- manifest --------------------------------------------------------------------

_MANIFEST_KEYS = {"cameras", "track", "annotations", "ground_truth", "options", "metadata"}


def load_session(manifest_path: str | Path) -> Session:
    """Read a session manifest and every file it references."""
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SessionFormatError(f"{manifest_path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SessionFormatError(f"{manifest_path}: manifest must be a JSON object")
    unknown = set(doc) - _MANIFEST_KEYS
    if unknown:
        raise SessionFormatError(f"{manifest_path}: unknown manifest fields {sorted(unknown)}")
    missing = {"cameras", "track", "annotations", "ground_truth"} - set(doc)
    if missing:
        raise SessionFormatError(f"{manifest_path}: missing manifest fields {sorted(missing)}")
    base = manifest_path.parent

    cams_field = doc["cameras"]
    if not isinstance(cams_field, list) or not cams_field:
        raise SessionFormatError(f"{manifest_path}: cameras must be a non-empty list")
    cameras = []
    for item in cams_field:
        if isinstance(item, str):
            cameras.append(load_calibration(base / item))
        elif isinstance(item, dict):
            cameras.append(calibration_from_dict(item, source=str(manifest_path)))
        else:
            raise SessionFormatError(
                f"{manifest_path}: camera entries must be file paths or objects"
            )

    def read_ref(key: str) -> tuple[str, str]:
        ref = doc[key]
        if not isinstance(ref, str):
            raise SessionFormatError(f"{manifest_path}: {key} must be a file path")
        p = base / ref
        try:
            return p.read_text(encoding="utf-8"), str(p)
        except OSError as exc:
            raise SessionFormatError(f"{p}: {exc}") from exc

    track_text, track_src = read_ref("track")
    ann_text, ann_src = read_ref("annotations")
    tgt_text, tgt_src = read_ref("ground_truth")

    options = options_from_dict(doc.get("options", {}), source=str(manifest_path))
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise SessionFormatError(f"{manifest_path}: metadata must be an object")

    return build_session(
        cameras=tuple(cameras),
        track=parse_track(track_text, source=track_src),
        annotations=parse_annotations(ann_text, source=ann_src),
        targets=parse_targets(tgt_text, source=tgt_src),
        options=options,
        metadata=metadata,
        source=str(manifest_path),
    )


def save_session(session: Session, out_dir: str | Path) -> Path:
    """Write a session as manifest + CSVs; byte-deterministic.

    Camera calibrations are inlined in the manifest so a session directory
    is exactly four files. Returns the manifest path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "cameras": [camera_to_dict(c) for c in session.cameras],
        "track": "track.csv",
        "annotations": "annotations.csv",
        "ground_truth": "targets.csv",
        "options": session.options.to_dict(),
        "metadata": session.metadata,
    }
    (out_dir / "track.csv").write_text(track_to_csv(session.track), encoding="utf-8")
    (out_dir / "annotations.csv").write_text(
        annotations_to_csv(session.annotations), encoding="utf-8"
    )
    (out_dir / "targets.csv").write_text(targets_to_csv(session.targets), encoding="utf-8")
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest_path
