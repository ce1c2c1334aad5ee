"""HTTP service exposing one session to the annotation UI.

Read-mostly by design: every handler works off an immutable session
snapshot; only POST /api/annotations mutates, appending to the annotation
CSV under a lock and swapping in a new snapshot atomically. Estimates are
produced by the exact same pipeline call and serializer as the CLI, so the
two paths cannot drift apart.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .camera import camera_to_dict
from .errors import (
    DanglingReference,
    EmptySession,
    GeopinError,
    PixelOutOfBounds,
    SessionFormatError,
)
from .pipeline import estimate_to_dict, evaluate, geolocate, report_to_doc
from .session import Annotation, Session, load_session, validate_annotation


def annotations_path_for(manifest_path: str | Path) -> Path:
    """Resolve the annotation CSV a manifest points at (for appending)."""
    manifest_path = Path(manifest_path)
    doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    return manifest_path.parent / doc["annotations"]


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse({"error": "bad_request", "message": message}, status_code=400)


def _field_number(doc: dict, key: str) -> float:
    value = doc.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{key}: expected a number")
    return float(value)


def _parse_annotation_body(doc: object, require_target: bool) -> Annotation:
    """Field-level validation of a geolocate/annotation request body."""
    if not isinstance(doc, dict):
        raise ValueError("body: expected a JSON object")
    allowed = {"camera_id", "t", "px", "py", "target_id"}
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"{sorted(unknown)[0]}: unknown field")
    required = {"camera_id", "t", "px", "py"} | ({"target_id"} if require_target else set())
    missing = required - set(doc)
    if missing:
        raise ValueError(f"{sorted(missing)[0]}: field is required")
    camera_id = doc["camera_id"]
    if not isinstance(camera_id, str):
        raise ValueError("camera_id: expected a string")
    target_id = doc.get("target_id", "")
    if not isinstance(target_id, str):
        raise ValueError("target_id: expected a string")
    return Annotation(
        t=_field_number(doc, "t"),
        camera_id=camera_id,
        px=_field_number(doc, "px"),
        py=_field_number(doc, "py"),
        target_id=target_id,
    )


def _frame_index(frames_dir: Path | None, camera_ids: list[str]) -> dict[str, list[dict]]:
    """Per camera: available frames as {t, url}, sorted by t.

    The url carries the exact on-disk name so clients never have to
    reconstruct a filename from a float (0.0 would round-trip as "0").
    """
    index: dict[str, list[dict]] = {cam: [] for cam in camera_ids}
    if frames_dir is None or not frames_dir.is_dir():
        return index
    for cam in camera_ids:
        cam_dir = frames_dir / cam
        if not cam_dir.is_dir():
            continue
        entries = []
        for f in cam_dir.glob("*.jpg"):
            try:
                entries.append({"t": float(f.stem), "url": f"/frames/{cam}/{f.name}"})
            except ValueError:
                continue
        index[cam] = sorted(entries, key=lambda e: e["t"])
    return index


def create_app(
    manifest_path: str | Path,
    ui_dir: str | Path | None = None,
    frames_dir: str | Path | None = None,
) -> FastAPI:
    manifest_path = Path(manifest_path)
    session = load_session(manifest_path)
    annotations_path = annotations_path_for(manifest_path)
    if frames_dir is None:
        frames_dir = manifest_path.parent / "frames"
    frames_dir = Path(frames_dir)

    app = FastAPI(title="geopin", docs_url=None, redoc_url=None)
    state = {"session": session}
    append_lock = threading.Lock()

    @app.get("/api/session")
    def get_session() -> dict:
        snap: Session = state["session"]
        t0, tn = snap.track.span
        return {
            "cameras": [camera_to_dict(c) for c in snap.cameras],
            "track_span": [t0, tn],
            "fix_count": len(snap.track),
            "targets": [
                {
                    "target_id": t.target_id,
                    "lat": t.pos.lat,
                    "lon": t.pos.lon,
                    "kind": t.kind,
                    "source": t.source,
                }
                for t in snap.targets
            ],
            "options": snap.options.to_dict(),
            "annotations": [
                {"t": a.t, "camera_id": a.camera_id, "px": a.px, "py": a.py,
                 "target_id": a.target_id}
                for a in snap.annotations
            ],
            "frames": _frame_index(frames_dir, [c.camera_id for c in snap.cameras]),
        }

    @app.post("/api/geolocate")
    async def post_geolocate(request: Request):
        snap: Session = state["session"]
        try:
            doc = await request.json()
        except Exception:
            return _bad_request("body: expected JSON")
        try:
            ann = _parse_annotation_body(doc, require_target=False)
        except ValueError as exc:
            return _bad_request(str(exc))
        try:
            snap.camera_by_id(ann.camera_id)
        except DanglingReference as exc:
            return JSONResponse({"error": "unknown_camera", "message": str(exc)}, status_code=404)
        try:
            validate_annotation(ann, snap, source="request")
        except PixelOutOfBounds as exc:
            return _bad_request(str(exc))
        except SessionFormatError as exc:
            return _bad_request(str(exc))
        try:
            est = geolocate(ann, snap)
        except GeopinError as exc:
            return JSONResponse(
                {"error": type(exc).__name__, "message": str(exc)}, status_code=422,
            )
        return estimate_to_dict(est)

    @app.post("/api/annotations")
    async def post_annotation(request: Request):
        try:
            doc = await request.json()
        except Exception:
            return _bad_request("body: expected JSON")
        try:
            ann = _parse_annotation_body(doc, require_target=True)
        except ValueError as exc:
            return _bad_request(str(exc))
        with append_lock:
            snap: Session = state["session"]
            try:
                snap.camera_by_id(ann.camera_id)
            except DanglingReference as exc:
                return JSONResponse(
                    {"error": "unknown_camera", "message": str(exc)}, status_code=404,
                )
            try:
                validate_annotation(ann, snap, source="request")
            except (PixelOutOfBounds, SessionFormatError) as exc:
                return _bad_request(str(exc))
            buf = io.StringIO()
            csv.writer(buf, lineterminator="\n").writerow(
                [repr(ann.t), ann.camera_id, repr(ann.px), repr(ann.py), ann.target_id]
            )
            with annotations_path.open("a", encoding="utf-8") as f:
                f.write(buf.getvalue())
            state["session"] = snap.with_annotations(snap.annotations + (ann,))
        return {
            "t": ann.t, "camera_id": ann.camera_id, "px": ann.px, "py": ann.py,
            "target_id": ann.target_id, "count": len(state["session"].annotations),
        }

    @app.get("/api/report")
    def get_report() -> dict:
        snap: Session = state["session"]
        try:
            report = evaluate(snap)
        except EmptySession:
            return {
                "rows": [], "estimates": [],
                "aggregates": {"overall": {"count": 0}, "by_distance_m": {}, "by_speed_kmh": {}},
                "failures": [],
            }
        return report_to_doc(report)

    if frames_dir.is_dir():
        app.mount("/frames", StaticFiles(directory=str(frames_dir)), name="frames")
    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
