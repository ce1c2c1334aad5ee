"""Temporal alignment of the GNSS track with camera timestamps.

The GNSS unit reports at a few Hz while the camera runs at video rate, so
every annotation needs a pose interpolated (or snapped) from the fix
sequence, optionally shifted by a constant latency between the sensors.
Headings wrap at 360 and may be missing per fix; resolution order is the
INS heading field, then course over ground when the vehicle moves fast
enough for it to mean anything, then holding the last known value.
"""

from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    MissingHeading,
    OutOfTrack,
    SessionFormatError,
    StationaryAmbiguous,
)
from .geodesy import Bearing, GeoPoint, haversine_distance, initial_bearing, normalize_bearing

QUALITY_LEVELS = ("rtk_fixed", "rtk_float", "single")

# queries may overhang the track by one GNSS period before we refuse
CLAMP_MARGIN_S = 0.2
# below this speed course over ground is GNSS noise, not direction
COG_SPEED_GATE_MPS = 0.5
# consecutive fixes further apart than this are flagged as a gap
GAP_FLAG_S = 1.0

TRACK_HEADER = ("t", "lat", "lon", "heading", "speed", "quality")


@dataclass(frozen=True)
class GnssFix:
    """One GNSS record on the session clock."""

    t: float
    pos: GeoPoint
    heading: float | None = None
    speed: float | None = None
    quality: str = "rtk_fixed"

    def __post_init__(self) -> None:
        if self.quality not in QUALITY_LEVELS:
            raise ValueError(f"quality {self.quality!r} not one of {QUALITY_LEVELS}")
        if self.speed is not None and self.speed < 0.0:
            raise ValueError(f"speed {self.speed!r} must be nonnegative")


@dataclass(frozen=True)
class RigState:
    """Vehicle pose at a query time; flags record how it was obtained."""

    t: float
    pos: GeoPoint
    theta_car: Bearing
    speed: float
    clamped: bool = False
    heading_held: bool = False


class GnssTrack:
    """Immutable, time-sorted fix sequence with derived per-fix fallbacks."""

    def __init__(self, fixes: list[GnssFix] | tuple[GnssFix, ...]):
        if not fixes:
            raise ValueError("track must contain at least one fix")
        self.fixes: tuple[GnssFix, ...] = tuple(fixes)
        for a, b in zip(self.fixes, self.fixes[1:]):
            if b.t <= a.t:
                raise ValueError(f"track timestamps must strictly increase ({a.t} -> {b.t})")
        self.times: tuple[float, ...] = tuple(f.t for f in self.fixes)
        self.gap_after: tuple[int, ...] = tuple(
            i for i in range(len(self.fixes) - 1)
            if self.times[i + 1] - self.times[i] > GAP_FLAG_S
        )
        self._headings: list[tuple[float, bool] | None] | None = None
        self._speeds: list[float] | None = None

    def __len__(self) -> int:
        return len(self.fixes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GnssTrack):
            return NotImplemented
        return self.fixes == other.fixes

    def __hash__(self) -> int:
        return hash(self.fixes)

    @property
    def span(self) -> tuple[float, float]:
        return (self.times[0], self.times[-1])

    # --- per-fix resolution -------------------------------------------------

    def _segment_speed(self, i: int) -> float | None:
        """Position-derived speed around fix i, None for a single-fix track."""
        n = len(self.fixes)
        if n == 1:
            return None
        lo = max(0, i - 1)
        hi = min(n - 1, i + 1)
        dt = self.times[hi] - self.times[lo]
        return haversine_distance(self.fixes[lo].pos, self.fixes[hi].pos) / dt

    def _cog(self, i: int) -> float | None:
        """Course over ground around fix i, None when undefined."""
        n = len(self.fixes)
        if n == 1:
            return None
        lo = max(0, i - 1)
        hi = min(n - 1, i + 1)
        speed = self._segment_speed(i)
        if speed is None or speed < COG_SPEED_GATE_MPS:
            return None
        try:
            return float(initial_bearing(self.fixes[lo].pos, self.fixes[hi].pos))
        except Exception:
            return None

    def resolved_headings(self) -> list[tuple[float, bool] | None]:
        """Per-fix (heading, held) pairs; None where nothing resolves.

        held=True marks values carried forward from an earlier fix because
        the vehicle was too slow for course over ground.
        """
        if self._headings is None:
            out: list[tuple[float, bool] | None] = []
            for i, fix in enumerate(self.fixes):
                if fix.heading is not None:
                    out.append((normalize_bearing(fix.heading), False))
                    continue
                cog = self._cog(i)
                out.append(None if cog is None else (cog, False))
            last: float | None = None
            for i, entry in enumerate(out):
                if entry is not None:
                    last = entry[0]
                elif last is not None:
                    out[i] = (last, True)
            self._headings = out
        return self._headings

    def resolved_speeds(self) -> list[float]:
        if self._speeds is None:
            out = []
            for i, fix in enumerate(self.fixes):
                if fix.speed is not None:
                    out.append(fix.speed)
                else:
                    seg = self._segment_speed(i)
                    out.append(0.0 if seg is None else seg)
            self._speeds = out
        return self._speeds


def derive_heading(track: GnssTrack, index: int) -> float:
    """Course over ground at an interior fix, from its two neighbors."""
    if not 0 < index < len(track.fixes) - 1:
        raise ValueError(f"fix {index} has no two-sided neighbors")
    prev_fix = track.fixes[index - 1]
    next_fix = track.fixes[index + 1]
    dt = next_fix.t - prev_fix.t
    speed = haversine_distance(prev_fix.pos, next_fix.pos) / dt
    if speed < COG_SPEED_GATE_MPS:
        raise StationaryAmbiguous(
            f"segment speed {speed:.3f} m/s below the {COG_SPEED_GATE_MPS} m/s gate"
        )
    return float(initial_bearing(prev_fix.pos, next_fix.pos))


def _heading_at_fix(track: GnssTrack, i: int) -> tuple[float, bool]:
    entry = track.resolved_headings()[i]
    if entry is None:
        raise MissingHeading(
            f"no heading available at fix {i} (t={track.times[i]}) and none earlier to hold"
        )
    return entry


def pose_at(
    track: GnssTrack,
    t: float,
    mode: str = "interpolate",
    latency_offset: float = 0.0,
) -> RigState:
    """Vehicle state at annotation time t, compensated for sensor latency.

    The effective track time is t - latency_offset. Queries up to
    CLAMP_MARGIN_S beyond either end clamp to the end fix (flagged);
    anything further raises OutOfTrack.
    """
    if mode not in ("interpolate", "nearest"):
        raise ValueError(f"mode {mode!r} not one of ('interpolate', 'nearest')")
    tq = t - latency_offset
    t0, tn = track.span
    if tq < t0 - CLAMP_MARGIN_S or tq > tn + CLAMP_MARGIN_S:
        raise OutOfTrack(
            f"query t={t} (track time {tq}) outside [{t0 - CLAMP_MARGIN_S}, {tn + CLAMP_MARGIN_S}]"
        )
    clamped = False
    if tq < t0:
        tq, clamped = t0, True
    elif tq > tn:
        tq, clamped = tn, True

    times = track.times
    speeds = track.resolved_speeds()

    def state_from_fix(i: int) -> RigState:
        heading, held = _heading_at_fix(track, i)
        return RigState(
            t=tq, pos=track.fixes[i].pos, theta_car=Bearing(heading),
            speed=speeds[i], clamped=clamped, heading_held=held,
        )

    if mode == "nearest":
        j = bisect.bisect_left(times, tq)
        if j == 0:
            return state_from_fix(0)
        if j == len(times):
            return state_from_fix(len(times) - 1)
        before, after = times[j - 1], times[j]
        # ties snap to the earlier fix
        return state_from_fix(j - 1 if tq - before <= after - tq else j)

    j = bisect.bisect_right(times, tq)
    if j == 0:
        return state_from_fix(0)
    if j == len(times) and tq == times[-1]:
        return state_from_fix(len(times) - 1)
    i = j - 1
    if times[i] == tq:
        return state_from_fix(i)
    a, b = track.fixes[i], track.fixes[i + 1]
    u = (tq - a.t) / (b.t - a.t)
    lat = a.pos.lat + u * (b.pos.lat - a.pos.lat)
    lon = a.pos.lon + u * (b.pos.lon - a.pos.lon)
    head_a, held_a = _heading_at_fix(track, i)
    head_b, held_b = _heading_at_fix(track, i + 1)
    arc = (head_b - head_a + 180.0) % 360.0 - 180.0
    heading = Bearing(head_a + u * arc)
    speed = speeds[i] + u * (speeds[i + 1] - speeds[i])
    return RigState(
        t=tq, pos=GeoPoint(lat, lon), theta_car=heading, speed=speed,
        clamped=clamped, heading_held=held_a or held_b,
    )


# --- track files ---------------------------------------------------------------


def _parse_float(value: str, path: str, line: int, col: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise SessionFormatError(f"{path}:{line}: bad {col} value {value!r}") from exc


def load_track(path: str | Path) -> GnssTrack:
    """Read a GNSS track CSV with header t,lat,lon,heading,speed,quality."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SessionFormatError(f"{path}: {exc}") from exc
    return parse_track(text, source=str(path))


def parse_track(text: str, source: str = "<track>") -> GnssTrack:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or tuple(rows[0]) != TRACK_HEADER:
        raise SessionFormatError(
            f"{source}:1: expected header {','.join(TRACK_HEADER)!r}"
        )
    fixes = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(TRACK_HEADER):
            raise SessionFormatError(f"{source}:{lineno}: expected {len(TRACK_HEADER)} fields")
        t = _parse_float(row[0], source, lineno, "t")
        lat = _parse_float(row[1], source, lineno, "lat")
        lon = _parse_float(row[2], source, lineno, "lon")
        heading = None if row[3] == "" else _parse_float(row[3], source, lineno, "heading")
        speed = None if row[4] == "" else _parse_float(row[4], source, lineno, "speed")
        try:
            fixes.append(GnssFix(t=t, pos=GeoPoint(lat, lon), heading=heading,
                                 speed=speed, quality=row[5]))
        except ValueError as exc:
            raise SessionFormatError(f"{source}:{lineno}: {exc}") from exc
    if not fixes:
        raise SessionFormatError(f"{source}: track has no fixes")
    try:
        return GnssTrack(fixes)
    except ValueError as exc:
        raise SessionFormatError(f"{source}: {exc}") from exc


def track_to_csv(track: GnssTrack) -> str:
    """Serialize a track; floats use repr so reload is value-identical."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACK_HEADER)
    for f in track.fixes:
        writer.writerow([
            repr(f.t), repr(f.pos.lat), repr(f.pos.lon),
            "" if f.heading is None else repr(f.heading),
            "" if f.speed is None else repr(f.speed),
            f.quality,
        ])
    return buf.getvalue()


def save_track(track: GnssTrack, path: str | Path) -> None:
    Path(path).write_text(track_to_csv(track), encoding="utf-8")
