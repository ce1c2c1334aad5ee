"""Freeze raw API and CLI payloads for the browser UI's test suite.

The UI promises to display estimate values exactly as the API serialized
them, and the API promises to match the CLI report byte for byte. Those
string-level contracts are tested on the TypeScript side against the
fixture this script writes (frontend/test/fixtures/ui_fixture.json);
tests/test_ui_fixtures.py regenerates the fixture and fails on drift.
"""

from __future__ import annotations

import dataclasses
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from geopin.camera import calibration_from_dict
from geopin.cli import main
from geopin.geodesy import GeoPoint
from geopin.server import create_app
from geopin.session import load_session, save_session
from geopin.synth import ScenarioSpec, enu_offset, generate

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


def build_fixture() -> dict:
    spec = ScenarioSpec(
        start=START,
        heading_deg=0.0,
        duration_s=0.2,
        targets=(enu_offset(START, 0.5, 9.0), enu_offset(START, -2.0, 14.0)),
        cameras=(calibration_from_dict(CAMERA_DOC, source="fixture"),),
        seed=1234,
    )
    session, _ = generate(spec)
    # Off-center targets need the ray heading model to close under 1 cm.
    session = dataclasses.replace(
        session, options=dataclasses.replace(session.options, heading_mode="ray"),
    )
    with tempfile.TemporaryDirectory() as tmp:
        manifest = save_session(session, Path(tmp) / "session")
        report_path = Path(tmp) / "report.json"
        rc = main([
            "geolocate", "--manifest", str(manifest),
            "--out", str(report_path), "--format", "json",
        ])
        if rc != 0:
            raise RuntimeError(f"geolocate exited {rc}")
        cli_report_text = report_path.read_text(encoding="utf-8")

        client = TestClient(create_app(manifest))
        session_text = client.get("/api/session").text

        loaded = load_session(manifest)
        clicks = []
        for ann in (loaded.annotations[0], loaded.annotations[3], loaded.annotations[-1]):
            body = {
                "camera_id": ann.camera_id, "t": ann.t,
                "px": ann.px, "py": ann.py, "target_id": ann.target_id,
            }
            resp = client.post("/api/geolocate", json=body)
            if resp.status_code != 200:
                raise RuntimeError(f"geolocate click failed: {resp.status_code}")
            clicks.append({"body": body, "response_text": resp.text})

        sky_body = {"camera_id": "front", "t": 0.1, "px": 960.0, "py": 0.0}
        sky = client.post("/api/geolocate", json=sky_body)
        if sky.status_code != 422:
            raise RuntimeError(f"sky click expected 422, got {sky.status_code}")

    return {
        "session_text": session_text,
        "cli_report_text": cli_report_text,
        "clicks": clicks,
        "sky_click": {"body": sky_body, "status": sky.status_code,
                      "response_text": sky.text},
    }


def main_script() -> None:
    out = Path(__file__).resolve().parents[1] / "frontend" / "test" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "ui_fixture.json"
    path.write_text(
        json.dumps(build_fixture(), indent=2, sort_keys=True) + "\n", encoding="utf-8",
    )
    print(f"wrote {path}")


if __name__ == "__main__":
    main_script()
