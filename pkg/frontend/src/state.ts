// Result rows and submission ordering.
//
// Every number the table displays is lifted verbatim from the server's
// response text via rawField; the parsed document is kept only for map
// plotting. Submissions go through a FIFO queue so rows land in click order
// even when the network reorders completions.

import { rawField } from "./api.js";
import type { AnnotationDoc, EstimateDoc, FetchLike } from "./api.js";
import { postGeolocate } from "./api.js";

export interface ErrorRow {
  t: number;
  cameraId: string;
  px: number;
  py: number;
  targetId: string;
  // Raw JSON tokens from the response body, displayed without reformatting.
  errorText: string;
  dText: string;
  bearingText: string;
  // Parsed copies for the map only.
  estimate: { lat: number; lon: number };
  vehicle: { t: number; lat: number; lon: number };
  truth: { lat: number; lon: number } | null;
}

export function rowFromEstimate(doc: EstimateDoc, raw: string, truth: { lat: number; lon: number } | null): ErrorRow {
  return {
    t: doc.t,
    cameraId: doc.camera_id,
    px: 0,
    py: 0,
    targetId: doc.target_id,
    errorText: rawField(raw, "error_m"),
    dText: rawField(raw, "d_m"),
    bearingText: rawField(raw, "bearing_deg"),
    estimate: { lat: doc.estimate.lat, lon: doc.estimate.lon },
    vehicle: { t: doc.vehicle.t, lat: doc.vehicle.lat, lon: doc.vehicle.lon },
    truth,
  };
}

// Serializes async jobs: each push waits for every earlier push to settle.
// A failed job surfaces its error to its own caller and does not block the
// jobs behind it.
export class SubmitQueue {
  private tail: Promise<unknown> = Promise.resolve();

  push<T>(job: () => Promise<T>): Promise<T> {
    const run = this.tail.then(job, job);
    this.tail = run.then(
      () => undefined,
      () => undefined,
    );
    return run;
  }
}

// Rebuild rows for annotations already on disk, in submission order. Each
// one is re-geolocated so the displayed tokens come from a real response
// body, same as a live click.
export async function restoreRows(
  annotations: AnnotationDoc[],
  truthById: Map<string, { lat: number; lon: number }>,
  fetchFn: FetchLike,
): Promise<ErrorRow[]> {
  const rows: ErrorRow[] = [];
  for (const ann of annotations) {
    const { doc, raw } = await postGeolocate(
      { camera_id: ann.camera_id, t: ann.t, px: ann.px, py: ann.py, target_id: ann.target_id },
      fetchFn,
    );
    const row = rowFromEstimate(doc, raw, truthById.get(ann.target_id) ?? null);
    row.px = ann.px;
    row.py = ann.py;
    rows.push(row);
  }
  return rows;
}
