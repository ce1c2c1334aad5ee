"""Command-line entry point: evaluate sessions, generate scenes, convert
coordinates, and serve the annotation API."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .errors import GeopinError, SessionFormatError
from .geodesy import GeoPoint, UtmCoord, utm33_to_wgs84, wgs84_to_utm33
from .pipeline import evaluate, export_report
from .session import load_session
from .synth import generate, spec_from_dict

EXIT_OK = 0
EXIT_LOAD_FAILURE = 1
EXIT_ANNOTATION_ERRORS = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geopin", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("geolocate", help="evaluate a session and write a report")
    p.add_argument("--manifest", required=True, help="session manifest JSON")
    p.add_argument("--out", required=True, help="report output path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--heading-mode", choices=("linear", "ray"))
    p.add_argument("--distance-mode", choices=("ground", "slant"))
    p.add_argument("--pose-mode", choices=("interpolate", "nearest"))
    p.add_argument("--latency", type=float, help="latency offset override, seconds")
    p.set_defaults(func=cmd_geolocate)

    p = sub.add_parser("synth", help="generate a synthetic session from a scenario")
    p.add_argument("--spec", required=True, help="scenario JSON path")
    p.add_argument("--out", required=True, help="session output directory")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("convert", help="convert between UTM33 and WGS84")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--to-wgs84", action="store_true", help="easting northing -> lat lon")
    group.add_argument("--to-utm33", action="store_true", help="lat lon -> easting northing")
    p.add_argument("a", type=float, help="easting or latitude")
    p.add_argument("b", type=float, help="northing or longitude")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("serve", help="serve the annotation API and UI")
    p.add_argument("--manifest", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", help="static UI assets directory")
    p.add_argument("--frames-dir", help="frame images directory (default: <manifest dir>/frames)")
    p.set_defaults(func=cmd_serve)
    return parser


def _override_options(session, args):
    changes = {}
    if args.heading_mode is not None:
        changes["heading_mode"] = args.heading_mode
    if args.distance_mode is not None:
        changes["distance_mode"] = args.distance_mode
    if args.pose_mode is not None:
        changes["pose_mode"] = args.pose_mode
    if args.latency is not None:
        changes["latency_offset"] = args.latency
    if not changes:
        return session
    return dataclasses.replace(
        session, options=dataclasses.replace(session.options, **changes),
    )


def cmd_geolocate(args: argparse.Namespace) -> int:
    try:
        session = load_session(args.manifest)
    except GeopinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD_FAILURE
    session = _override_options(session, args)
    try:
        report = evaluate(session)
    except GeopinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD_FAILURE
    export_report(report, args.format, args.out)
    overall = report.aggregates["overall"]
    print(f"wrote {args.out}: {len(report.rows)} estimates, {len(report.failures)} failures")
    if overall["count"]:
        print(
            "error vs ground truth: "
            f"mean {overall['mean_m']:.3f} m, median {overall['median_m']:.3f} m, "
            f"p95 {overall['p95_m']:.3f} m, max {overall['max_m']:.3f} m "
            f"({overall['count']} scored)"
        )
    for failure in report.failures:
        print(
            f"failed: t={failure.t} camera={failure.camera_id}"
            f" target={failure.target_id}: {failure.error}",
            file=sys.stderr,
        )
    return EXIT_ANNOTATION_ERRORS if report.failures else EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {args.spec}: {exc}", file=sys.stderr)
        return EXIT_LOAD_FAILURE
    if args.seed is not None and isinstance(doc, dict):
        doc["seed"] = args.seed
    try:
        spec = spec_from_dict(doc)
    except ValueError as exc:
        print(f"error: {args.spec}: {exc}", file=sys.stderr)
        return EXIT_LOAD_FAILURE
    from .session import save_session

    session, _ = generate(spec)
    manifest = save_session(session, args.out)
    print(
        f"wrote {manifest.parent}: {len(session.track)} fixes,"
        f" {len(session.annotations)} annotations, {len(session.targets)} targets"
    )
    return EXIT_OK


def cmd_convert(args: argparse.Namespace) -> int:
    try:
        if args.to_wgs84:
            p = utm33_to_wgs84(UtmCoord(args.a, args.b))
            print(f"{p.lat} {p.lon}")
        else:
            c = wgs84_to_utm33(GeoPoint(args.a, args.b))
            print(f"{c.easting} {c.northing}")
    except (GeopinError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD_FAILURE
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    try:
        app = create_app(args.manifest, ui_dir=args.ui_dir, frames_dir=args.frames_dir)
    except GeopinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD_FAILURE
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
