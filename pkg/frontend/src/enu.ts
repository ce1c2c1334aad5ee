// Local planar chart for the session map.
//
// The UI never runs real geodesy; the server owns that. For drawing dots a
// local equirectangular approximation around the session centroid is enough:
// sessions span a few hundred meters, where the error of treating degrees as
// scaled meters is far below one pixel.

import type { SessionDoc, TargetDoc } from "./api.js";

const EARTH_RADIUS_M = 6371000.0;
const DEG = Math.PI / 180.0;

export interface Chart {
  lat0: number;
  lon0: number;
  metersPerDegLat: number;
  metersPerDegLon: number;
}

export interface EnuPoint {
  e: number;
  n: number;
}

export function makeChart(lat0: number, lon0: number): Chart {
  const metersPerDegLat = EARTH_RADIUS_M * DEG;
  return {
    lat0,
    lon0,
    metersPerDegLat,
    metersPerDegLon: metersPerDegLat * Math.cos(lat0 * DEG),
  };
}

// Chart centered on the mean of the target positions; (0, 0) only when the
// session has no targets at all.
export function chartForSession(session: SessionDoc): Chart {
  const pts = session.targets;
  if (pts.length === 0) {
    return makeChart(0, 0);
  }
  let lat = 0;
  let lon = 0;
  for (const p of pts) {
    lat += p.lat;
    lon += p.lon;
  }
  return makeChart(lat / pts.length, lon / pts.length);
}

export function toEnu(chart: Chart, lat: number, lon: number): EnuPoint {
  return {
    e: (lon - chart.lon0) * chart.metersPerDegLon,
    n: (lat - chart.lat0) * chart.metersPerDegLat,
  };
}

export function chartDistanceM(chart: Chart, aLat: number, aLon: number, bLat: number, bLon: number): number {
  const a = toEnu(chart, aLat, aLon);
  const b = toEnu(chart, bLat, bLon);
  return Math.hypot(a.e - b.e, a.n - b.n);
}

// Nearest ground-truth target within maxM of the estimate, for pre-filling
// the target picker after a preview click. Null when nothing is close.
export function suggestTarget(
  chart: Chart,
  targets: TargetDoc[],
  lat: number,
  lon: number,
  maxM = 25,
): TargetDoc | null {
  let best: TargetDoc | null = null;
  let bestD = maxM;
  for (const t of targets) {
    const d = chartDistanceM(chart, lat, lon, t.lat, t.lon);
    if (d <= bestD) {
      best = t;
      bestD = d;
    }
  }
  return best;
}

export interface MapFit {
  scale: number; // canvas px per meter
  centerE: number;
  centerN: number;
  width: number;
  height: number;
}

// Fit a set of ENU points into a canvas with padding, clamping the scale so
// a degenerate point cloud (single dot) still renders at a sane zoom.
export function fitMap(points: EnuPoint[], width: number, height: number, padPx = 24): MapFit {
  if (points.length === 0) {
    return { scale: 1, centerE: 0, centerN: 0, width, height };
  }
  let minE = Infinity;
  let maxE = -Infinity;
  let minN = Infinity;
  let maxN = -Infinity;
  for (const p of points) {
    minE = Math.min(minE, p.e);
    maxE = Math.max(maxE, p.e);
    minN = Math.min(minN, p.n);
    maxN = Math.max(maxN, p.n);
  }
  const spanE = Math.max(maxE - minE, 1e-9);
  const spanN = Math.max(maxN - minN, 1e-9);
  const usableW = Math.max(width - 2 * padPx, 1);
  const usableH = Math.max(height - 2 * padPx, 1);
  const scale = Math.min(usableW / spanE, usableH / spanN, 50);
  return {
    scale,
    centerE: (minE + maxE) / 2,
    centerN: (minN + maxN) / 2,
    width,
    height,
  };
}

// North up: canvas y grows downward, ENU north grows upward.
export function enuToCanvas(fit: MapFit, p: EnuPoint): { x: number; y: number } {
  return {
    x: fit.width / 2 + (p.e - fit.centerE) * fit.scale,
    y: fit.height / 2 - (p.n - fit.centerN) * fit.scale,
  };
}

// Scale bar length in meters: largest 1/2/5 step that fits in maxPx.
export function scaleBarMeters(fit: MapFit, maxPx = 120): number {
  const maxM = maxPx / fit.scale;
  let step = Math.pow(10, Math.floor(Math.log10(maxM)));
  for (const mult of [5, 2, 1]) {
    if (step * mult <= maxM) {
      return step * mult;
    }
  }
  return step;
}
