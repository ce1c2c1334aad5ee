"""HTTP-level tests for the annotation API, driven through the ASGI app."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from geopin.cli import main
from geopin.geodesy import GeoPoint
from geopin.pipeline import estimate_to_dict, geolocate
from geopin.server import create_app
from geopin.session import Annotation, load_session
from geopin.synth import enu_offset

START = GeoPoint(63.0, 10.0)

CAMERA_DOC = {
    "id": "front",
    "model": "pinhole",
    "width": 1920,
    "height": 1208,
    "params": {"fx": 960.0, "fy": 960.0, "cx": 960.0, "cy": 604.0},
    "extrinsics": {
        "x": 0.0, "y": 0.0, "z": 1.5,
        "yaw_deg": 0.0, "pitch_deg": 10.0, "roll_deg": 0.0,
    },
    "fov_deg": 90.0,
}


def make_session_dir(tmp_path: Path) -> Path:
    target = enu_offset(START, 0.0, 9.004)
    doc = {
        "start": {"lat": START.lat, "lon": START.lon},
        "heading_deg": 0.0,
        "duration_s": 0.2,
        "targets": [{"lat": target.lat, "lon": target.lon}],
        "cameras": [CAMERA_DOC],
        "speed_profile": [[0.0, 0.0]],
        "gnss_hz": 5.0,
        "fps": 30.0,
        "noise": {
            "pos_sigma_m": 0.0, "heading_sigma_deg": 0.0,
            "pixel_sigma_px": 0.0, "latency_s": 0.0,
        },
        "seed": 7,
    }
    spec_path = tmp_path / "scenario.json"
    spec_path.write_text(json.dumps(doc), encoding="utf-8")
    out_dir = tmp_path / "session"
    assert main(["synth", "--spec", str(spec_path), "--out", str(out_dir)]) == 0
    return out_dir / "manifest.json"


@pytest.fixture()
def manifest(tmp_path) -> Path:
    return make_session_dir(tmp_path)


@pytest.fixture()
def client(manifest) -> TestClient:
    return TestClient(create_app(manifest))


def test_session_endpoint_shape(client, manifest):
    doc = client.get("/api/session").json()
    assert set(doc) == {
        "cameras", "track_span", "fix_count", "targets", "options",
        "annotations", "frames",
    }
    assert [c["id"] for c in doc["cameras"]] == ["front"]
    assert doc["track_span"] == [0.0, 0.2]
    assert doc["fix_count"] == 2
    assert doc["targets"][0]["target_id"] == "t0"
    assert doc["targets"][0]["source"] == "survey"
    assert doc["options"]["heading_mode"] == "linear"
    assert len(doc["annotations"]) == 7
    assert doc["frames"] == {"front": []}


def test_geolocate_matches_library_call(client, manifest):
    session = load_session(manifest)
    ann = session.annotations[0]
    body = {"camera_id": ann.camera_id, "t": ann.t, "px": ann.px, "py": ann.py,
            "target_id": ann.target_id}
    resp = client.post("/api/geolocate", json=body)
    assert resp.status_code == 200
    assert resp.json() == estimate_to_dict(geolocate(ann, session))


def test_geolocate_matches_cli_report_values(client, manifest, tmp_path):
    """The HTTP path and the CLI report must serialize identical estimates."""
    out = tmp_path / "report.json"
    assert main([
        "geolocate", "--manifest", str(manifest), "--out", str(out),
        "--format", "json",
    ]) == 0
    cli_doc = json.loads(out.read_text(encoding="utf-8"))
    by_key = {(e["t"], e["camera_id"]): e for e in cli_doc["estimates"]}
    session = load_session(manifest)
    for ann in session.annotations:
        resp = client.post("/api/geolocate", json={
            "camera_id": ann.camera_id, "t": ann.t, "px": ann.px, "py": ann.py,
            "target_id": ann.target_id,
        })
        assert resp.status_code == 200
        api_doc = resp.json()
        cli_est = by_key[(ann.t, ann.camera_id)]
        assert json.dumps(api_doc, sort_keys=True) == json.dumps(cli_est, sort_keys=True)


def test_geolocate_without_target_id(client):
    resp = client.post("/api/geolocate", json={
        "camera_id": "front", "t": 0.1, "px": 960.0, "py": 800.0,
    })
    assert resp.status_code == 200
    doc = resp.json()
    assert doc["target_id"] == ""
    assert doc["error_m"] is None


def test_geolocate_bad_json_body(client):
    resp = client.post(
        "/api/geolocate", content=b"{not json", headers={"content-type": "application/json"},
    )
    assert resp.status_code == 400
    assert resp.json()["error"] == "bad_request"


def test_geolocate_missing_field(client):
    resp = client.post("/api/geolocate", json={"camera_id": "front", "t": 0.1, "px": 5.0})
    assert resp.status_code == 400
    assert "py" in resp.json()["message"]


def test_geolocate_unknown_field(client):
    resp = client.post("/api/geolocate", json={
        "camera_id": "front", "t": 0.1, "px": 5.0, "py": 5.0, "zoom": 2,
    })
    assert resp.status_code == 400
    assert "zoom" in resp.json()["message"]


def test_geolocate_non_numeric_pixel(client):
    resp = client.post("/api/geolocate", json={
        "camera_id": "front", "t": 0.1, "px": "mid", "py": 5.0,
    })
    assert resp.status_code == 400
    assert "px" in resp.json()["message"]


def test_geolocate_pixel_out_of_bounds(client):
    resp = client.post("/api/geolocate", json={
        "camera_id": "front", "t": 0.1, "px": 5000.0, "py": 5.0,
    })
    assert resp.status_code == 400
    assert "bounds" in resp.json()["message"]


def test_geolocate_time_outside_track(client):
    resp = client.post("/api/geolocate", json={
        "camera_id": "front", "t": 9.0, "px": 960.0, "py": 800.0,
    })
    assert resp.status_code == 400


def test_geolocate_unknown_camera(client):
    resp = client.post("/api/geolocate", json={
        "camera_id": "rear", "t": 0.1, "px": 5.0, "py": 5.0,
    })
    assert resp.status_code == 404
    assert resp.json()["error"] == "unknown_camera"


def test_geolocate_pipeline_error_is_422(client):
    # Top-of-image click: ray above the horizon.
    resp = client.post("/api/geolocate", json={
        "camera_id": "front", "t": 0.1, "px": 960.0, "py": 0.0,
    })
    assert resp.status_code == 422
    doc = resp.json()
    assert doc["error"] == "AboveHorizon"
    assert "t=0.1" in doc["message"]


def test_annotations_append_to_file_and_memory(client, manifest):
    ann_path = manifest.parent / "annotations.csv"
    before = ann_path.read_text(encoding="utf-8")
    body = {"camera_id": "front", "t": 0.1, "px": 960.0, "py": 800.0, "target_id": "t0"}
    resp = client.post("/api/annotations", json=body)
    assert resp.status_code == 200
    assert resp.json()["count"] == 8
    after = ann_path.read_text(encoding="utf-8")
    assert after.startswith(before)
    assert after.rstrip("\n").splitlines()[-1] == "0.1,front,960.0,800.0,t0"
    doc = client.get("/api/session").json()
    assert len(doc["annotations"]) == 8
    # The file on disk still loads as a valid session with the new row.
    assert len(load_session(manifest).annotations) == 8


def test_annotations_same_click_twice_gives_two_rows(client):
    body = {"camera_id": "front", "t": 0.1, "px": 960.0, "py": 800.0, "target_id": "t0"}
    assert client.post("/api/annotations", json=body).json()["count"] == 8
    assert client.post("/api/annotations", json=body).json()["count"] == 9


def test_annotations_require_target_id(client):
    resp = client.post("/api/annotations", json={
        "camera_id": "front", "t": 0.1, "px": 960.0, "py": 800.0,
    })
    assert resp.status_code == 400
    assert "target_id" in resp.json()["message"]


def test_annotations_validation_mirrors_geolocate(client):
    assert client.post("/api/annotations", json={
        "camera_id": "rear", "t": 0.1, "px": 5.0, "py": 5.0, "target_id": "t0",
    }).status_code == 404
    assert client.post("/api/annotations", json={
        "camera_id": "front", "t": 0.1, "px": -10.0, "py": 5.0, "target_id": "t0",
    }).status_code == 400


def test_report_reflects_posted_annotations(manifest):
    # Start from a session with no annotations at all.
    ann_path = manifest.parent / "annotations.csv"
    ann_path.write_text("t,camera_id,px,py,target_id\n", encoding="utf-8")
    client = TestClient(create_app(manifest))

    empty = client.get("/api/report").json()
    assert empty["rows"] == [] and empty["failures"] == []
    assert empty["aggregates"]["overall"] == {"count": 0}

    for t in (0.0, 0.1, 0.2):
        resp = client.post("/api/annotations", json={
            "camera_id": "front", "t": t, "px": 960.0, "py": 800.0, "target_id": "t0",
        })
        assert resp.status_code == 200
    doc = client.get("/api/report").json()
    assert len(doc["rows"]) == 3
    assert len(doc["estimates"]) == 3
    assert doc["aggregates"]["overall"]["count"] == 3
    assert all(r["target_id"] == "t0" for r in doc["rows"])


def test_frames_index_and_static_serving(manifest):
    frames = manifest.parent / "frames" / "front"
    frames.mkdir(parents=True)
    (frames / "0.0.jpg").write_bytes(b"\xff\xd8fake")
    (frames / "0.1.jpg").write_bytes(b"\xff\xd8fake")
    client = TestClient(create_app(manifest))
    doc = client.get("/api/session").json()
    assert doc["frames"]["front"] == [
        {"t": 0.0, "url": "/frames/front/0.0.jpg"},
        {"t": 0.1, "url": "/frames/front/0.1.jpg"},
    ]
    resp = client.get("/frames/front/0.0.jpg")
    assert resp.status_code == 200
    assert resp.content == b"\xff\xd8fake"


def test_ui_dir_is_served_when_present(manifest, tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<!doctype html><title>annotator</title>", encoding="utf-8")
    client = TestClient(create_app(manifest, ui_dir=ui))
    resp = client.get("/")
    assert resp.status_code == 200
    assert "annotator" in resp.text
    # API routes must still win over the static mount.
    assert client.get("/api/session").status_code == 200
