"""End-to-end tests for the command-line entry points."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from geopin.cli import main
from geopin.geodesy import GeoPoint
from geopin.synth import enu_offset

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

START = GeoPoint(63.0, 10.0)


def scenario_doc(**overrides) -> dict:
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
            "pos_sigma_m": 0.0,
            "heading_sigma_deg": 0.0,
            "pixel_sigma_px": 0.0,
            "latency_s": 0.0,
        },
        "seed": 7,
    }
    doc.update(overrides)
    return doc


def write_scenario(tmp_path: Path, doc: dict | None = None) -> Path:
    spec_path = tmp_path / "scenario.json"
    spec_path.write_text(json.dumps(doc or scenario_doc()), encoding="utf-8")
    return spec_path


def synth_session(tmp_path: Path, doc: dict | None = None) -> Path:
    """Generate a session directory via the CLI; returns the manifest path."""
    spec_path = write_scenario(tmp_path, doc)
    out_dir = tmp_path / "session"
    assert main(["synth", "--spec", str(spec_path), "--out", str(out_dir)]) == 0
    return out_dir / "manifest.json"


def test_convert_to_wgs84(capsys):
    assert main(["convert", "--to-wgs84", "500000", "0"]) == 0
    assert capsys.readouterr().out.strip() == "0.0 15.0"


def test_convert_round_trip(capsys):
    assert main(["convert", "--to-utm33", "63.4195", "10.4065"]) == 0
    easting, northing = capsys.readouterr().out.split()
    assert main(["convert", "--to-wgs84", easting, northing]) == 0
    lat, lon = (float(v) for v in capsys.readouterr().out.split())
    assert lat == pytest.approx(63.4195, abs=1e-9)
    assert lon == pytest.approx(10.4065, abs=1e-9)


def test_convert_out_of_domain(capsys):
    assert main(["convert", "--to-utm33", "63.0", "140.0"]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")


def test_convert_modes_exclusive(capsys):
    with pytest.raises(SystemExit):
        main(["convert", "--to-wgs84", "--to-utm33", "1", "2"])


def test_synth_writes_session_dir(tmp_path, capsys):
    manifest = synth_session(tmp_path)
    out = capsys.readouterr().out
    assert "2 fixes" in out and "7 annotations" in out and "1 targets" in out
    names = sorted(p.name for p in manifest.parent.iterdir())
    assert names == ["annotations.csv", "manifest.json", "targets.csv", "track.csv"]


def test_synth_deterministic(tmp_path):
    spec_path = write_scenario(tmp_path)
    for name in ("a", "b"):
        assert main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / name)]) == 0
    for fname in ("manifest.json", "track.csv", "annotations.csv", "targets.csv"):
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()


def test_synth_seed_override_changes_output(tmp_path):
    doc = scenario_doc(noise={
        "pos_sigma_m": 0.5, "heading_sigma_deg": 0.0,
        "pixel_sigma_px": 0.0, "latency_s": 0.0,
    })
    spec_path = write_scenario(tmp_path, doc)
    assert main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "a")]) == 0
    assert main([
        "synth", "--spec", str(spec_path), "--out", str(tmp_path / "b"), "--seed", "99",
    ]) == 0
    assert (tmp_path / "a" / "track.csv").read_bytes() != (tmp_path / "b" / "track.csv").read_bytes()


def test_synth_invalid_spec_names_field(tmp_path, capsys):
    doc = scenario_doc(noise={
        "pos_sigma_m": -1.0, "heading_sigma_deg": 0.0,
        "pixel_sigma_px": 0.0, "latency_s": 0.0,
    })
    spec_path = write_scenario(tmp_path, doc)
    assert main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "out")]) == 1
    assert "noise.pos_sigma_m" in capsys.readouterr().err


def test_synth_unreadable_spec(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["synth", "--spec", str(missing), "--out", str(tmp_path / "out")]) == 1
    assert str(missing) in capsys.readouterr().err


def test_geolocate_csv_report(tmp_path, capsys):
    manifest = synth_session(tmp_path)
    out = tmp_path / "report.csv"
    assert main(["geolocate", "--manifest", str(manifest), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "7 estimates, 0 failures" in text
    assert "error vs ground truth" in text
    with out.open(newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 7
    assert all(float(r["error_m"]) < 0.01 for r in rows)
    assert all(r["target_id"] == "t0" for r in rows)


def test_geolocate_json_report(tmp_path):
    manifest = synth_session(tmp_path)
    out = tmp_path / "report.json"
    assert main([
        "geolocate", "--manifest", str(manifest), "--out", str(out), "--format", "json",
    ]) == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert set(doc) == {"rows", "estimates", "aggregates", "failures"}
    assert len(doc["rows"]) == 7
    assert doc["aggregates"]["overall"]["count"] == 7


def test_geolocate_flag_overrides_change_output(tmp_path):
    # Off-center target so linear and ray headings genuinely differ.
    side = enu_offset(START, 3.0, 12.0)
    doc = scenario_doc(targets=[{"lat": side.lat, "lon": side.lon}])
    manifest = synth_session(tmp_path, doc)
    base = tmp_path / "base.csv"
    rays = tmp_path / "ray.csv"
    slant = tmp_path / "slant.csv"
    assert main(["geolocate", "--manifest", str(manifest), "--out", str(base)]) == 0
    assert main([
        "geolocate", "--manifest", str(manifest), "--out", str(rays),
        "--heading-mode", "ray",
    ]) == 0
    assert main([
        "geolocate", "--manifest", str(manifest), "--out", str(slant),
        "--distance-mode", "slant",
    ]) == 0
    assert base.read_bytes() != rays.read_bytes()
    assert base.read_bytes() != slant.read_bytes()
    with rays.open(newline="", encoding="utf-8") as f:
        assert all(r["heading_mode"] == "ray" for r in csv.DictReader(f))
    with slant.open(newline="", encoding="utf-8") as f:
        assert all(r["distance_mode"] == "slant" for r in csv.DictReader(f))


def test_geolocate_pose_and_latency_flags(tmp_path):
    manifest = synth_session(tmp_path)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main([
        "geolocate", "--manifest", str(manifest), "--out", str(a),
        "--pose-mode", "nearest",
    ]) == 0
    assert main([
        "geolocate", "--manifest", str(manifest), "--out", str(b),
        "--latency", "0.1",
    ]) == 0
    with a.open(newline="", encoding="utf-8") as f:
        assert len(list(csv.DictReader(f))) == 7


def test_geolocate_missing_manifest(tmp_path, capsys):
    missing = tmp_path / "absent" / "manifest.json"
    out = tmp_path / "report.csv"
    assert main(["geolocate", "--manifest", str(missing), "--out", str(out)]) == 1
    assert str(missing) in capsys.readouterr().err
    assert not out.exists()


def test_geolocate_partial_failure_exits_2(tmp_path, capsys):
    manifest = synth_session(tmp_path)
    # Top-of-image click: the ray clears the horizon, so that one annotation
    # must fail while the rest of the report is still produced.
    ann_path = manifest.parent / "annotations.csv"
    with ann_path.open("a", encoding="utf-8") as f:
        f.write("0.0,front,960.0,0.0,t0\n")
    out = tmp_path / "report.csv"
    assert main(["geolocate", "--manifest", str(manifest), "--out", str(out)]) == 2
    captured = capsys.readouterr()
    assert "7 estimates, 1 failures" in captured.out
    assert "AboveHorizon" in captured.err
    with out.open(newline="", encoding="utf-8") as f:
        assert len(list(csv.DictReader(f))) == 7


def test_geolocate_empty_session_exits_1(tmp_path, capsys):
    manifest = synth_session(tmp_path)
    (manifest.parent / "annotations.csv").write_text(
        "t,camera_id,px,py,target_id\n", encoding="utf-8",
    )
    out = tmp_path / "report.csv"
    assert main(["geolocate", "--manifest", str(manifest), "--out", str(out)]) == 1
    assert "error:" in capsys.readouterr().err
