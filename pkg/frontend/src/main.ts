// Browser entry point. Wires the DOM to the pure modules; all geometry and
// geodesy numbers shown anywhere come from server responses.

import { ApiError, getSession, postAnnotation, postGeolocate } from "./api.js";
import type { EstimateDoc, FrameRef, GeolocateBody, SessionDoc } from "./api.js";
import { displayToNative, fitFrame, nativeToDisplay } from "./coords.js";
import { chartForSession, fitMap, suggestTarget, toEnu } from "./enu.js";
import type { Chart, EnuPoint } from "./enu.js";
import { drawMap } from "./render.js";
import type { Canvas2DLike, MapScene } from "./render.js";
import { restoreRows, rowFromEstimate, SubmitQueue } from "./state.js";
import type { ErrorRow } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const cameraSelect = el<HTMLSelectElement>("camera-select");
const frameSelect = el<HTMLSelectElement>("frame-select");
const tInput = el<HTMLInputElement>("t-input");
const frameBox = el<HTMLDivElement>("frame-box");
const frameImg = el<HTMLImageElement>("frame-img");
const crosshair = el<HTMLDivElement>("crosshair");
const previewPanel = el<HTMLDivElement>("preview-panel");
const targetSelect = el<HTMLSelectElement>("target-select");
const submitBtn = el<HTMLButtonElement>("submit-btn");
const rowsBody = el<HTMLTableSectionElement>("rows-body");
const statusLine = el<HTMLDivElement>("status-line");
const mapCanvas = el<HTMLCanvasElement>("map-canvas");

// CanvasRenderingContext2D matches Canvas2DLike except for the style prop
// unions; string is the only value this code assigns.
const mapCtx = mapCanvas.getContext("2d") as unknown as Canvas2DLike;

let session: SessionDoc;
let chart: Chart;
let truthById: Map<string, { lat: number; lon: number }>;
const rows: ErrorRow[] = [];
const queue = new SubmitQueue();
let pendingSaves = 0;

let draft: GeolocateBody | null = null;

// Preview requests: at most one in flight; the newest draft wins when a
// click lands while a request is still out.
let previewBusy = false;
let previewQueued: GeolocateBody | null = null;
let previewGen = 0;

function setStatus(text: string): void {
  statusLine.textContent = text;
}

function activeCamera(): { id: string; width: number; height: number } {
  const cam = session.cameras.find((c) => c.id === cameraSelect.value);
  if (!cam) throw new Error("no camera selected");
  return { id: cam.id, width: cam.width, height: cam.height };
}

function activeFrames(): FrameRef[] {
  return session.frames[cameraSelect.value] ?? [];
}

function currentT(): number {
  const frames = activeFrames();
  if (frames.length > 0) {
    const ref = frames[frameSelect.selectedIndex];
    if (ref) return ref.t;
  }
  return Number(tInput.value);
}

function rebuildFrameControls(): void {
  const frames = activeFrames();
  frameSelect.innerHTML = "";
  if (frames.length > 0) {
    for (const f of frames) {
      const opt = document.createElement("option");
      opt.value = f.url;
      opt.textContent = `t = ${f.t}`;
      frameSelect.appendChild(opt);
    }
    frameSelect.hidden = false;
    tInput.hidden = true;
    showFrame();
  } else {
    // No rendered frames on disk: keep a click surface at the camera's
    // aspect ratio and let the user pick t directly.
    frameSelect.hidden = true;
    tInput.hidden = false;
    const [t0, t1] = session.track_span;
    tInput.min = String(t0);
    tInput.max = String(t1);
    tInput.step = "any";
    if (tInput.value === "") tInput.value = String(t0);
    frameImg.removeAttribute("src");
    frameImg.hidden = true;
  }
  clearDraft();
}

function showFrame(): void {
  const frames = activeFrames();
  const ref = frames[frameSelect.selectedIndex];
  if (ref) {
    frameImg.src = ref.url;
    frameImg.hidden = false;
  }
  clearDraft();
}

function clearDraft(): void {
  draft = null;
  crosshair.hidden = true;
  previewPanel.textContent = "click the frame to place an annotation";
  submitBtn.disabled = true;
}

function frameFitNow(): ReturnType<typeof fitFrame> {
  const cam = activeCamera();
  const rect = frameBox.getBoundingClientRect();
  return fitFrame(cam.width, cam.height, rect.width, rect.height);
}

function onFrameClick(ev: MouseEvent): void {
  const rect = frameBox.getBoundingClientRect();
  const fit = frameFitNow();
  const native = displayToNative(fit, ev.clientX - rect.left, ev.clientY - rect.top);
  if (!native) {
    return; // letterbox band, not part of the frame
  }
  const cam = activeCamera();
  draft = { camera_id: cam.id, t: currentT(), px: native.px, py: native.py };
  const disp = nativeToDisplay(fit, native.px, native.py);
  crosshair.style.left = `${disp.x}px`;
  crosshair.style.top = `${disp.y}px`;
  crosshair.hidden = false;
  submitBtn.disabled = true;
  requestPreview({ ...draft });
}

function requestPreview(body: GeolocateBody): void {
  if (previewBusy) {
    previewQueued = body;
    return;
  }
  previewBusy = true;
  const gen = ++previewGen;
  previewPanel.textContent = "locating…";
  postGeolocate(body, (url, init) => fetch(url, init))
    .then(({ doc, raw }) => {
      if (gen === previewGen) showPreview(body, doc, raw);
    })
    .catch((err: unknown) => {
      if (gen !== previewGen) return;
      if (err instanceof ApiError) {
        previewPanel.textContent = `${err.errorName}: ${err.message}`;
      } else {
        previewPanel.textContent = "network error, draft kept; click submit or retry";
      }
    })
    .finally(() => {
      previewBusy = false;
      const next = previewQueued;
      previewQueued = null;
      if (next) requestPreview(next);
    });
}

function showPreview(body: GeolocateBody, doc: EstimateDoc, raw: string): void {
  const row = rowFromEstimate(doc, raw, null);
  const parts = [`d = ${row.dText} m`, `bearing = ${row.bearingText}°`];
  if (doc.error_m !== null) {
    parts.push(`error = ${row.errorText} m`);
  }
  previewPanel.textContent = parts.join("   ");

  if (!body.target_id) {
    const near = suggestTarget(chart, session.targets, doc.estimate.lat, doc.estimate.lon);
    if (near && !targetSelect.value) {
      targetSelect.value = near.target_id;
    }
  }
  submitBtn.disabled = !draft || !targetSelect.value;
}

function onTargetChange(): void {
  submitBtn.disabled = !draft || !targetSelect.value;
  if (draft && targetSelect.value) {
    requestPreview({ ...draft, target_id: targetSelect.value });
  }
}

function onSubmit(): void {
  if (!draft || !targetSelect.value) return;
  const body = { ...draft, target_id: targetSelect.value } as Required<GeolocateBody>;
  pendingSaves += 1;
  setStatus(`saving (${pendingSaves} queued)…`);
  queue
    .push(async () => {
      await postAnnotation(body, (url, init) => fetch(url, init));
      return postGeolocate(body, (url, init) => fetch(url, init));
    })
    .then(({ doc, raw }) => {
      const row = rowFromEstimate(doc, raw, truthById.get(body.target_id) ?? null);
      row.px = body.px;
      row.py = body.py;
      rows.push(row);
      appendRow(row);
      redrawMap();
    })
    .catch((err: unknown) => {
      const text = err instanceof ApiError ? `${err.errorName}: ${err.message}` : "network error, annotation not saved";
      previewPanel.textContent = text;
    })
    .finally(() => {
      pendingSaves -= 1;
      setStatus(pendingSaves > 0 ? `saving (${pendingSaves} queued)…` : `${rows.length} annotations plotted`);
    });
  clearDraft();
}

function appendRow(row: ErrorRow): void {
  const tr = document.createElement("tr");
  const cells = [
    String(row.t),
    row.cameraId,
    String(row.px),
    String(row.py),
    row.targetId,
    row.dText,
    row.bearingText,
    row.errorText,
  ];
  for (const text of cells) {
    const td = document.createElement("td");
    td.textContent = text;
    tr.appendChild(td);
  }
  rowsBody.appendChild(tr);
}

function redrawMap(): void {
  const track: EnuPoint[] = rows
    .slice()
    .sort((a, b) => a.vehicle.t - b.vehicle.t)
    .map((r) => toEnu(chart, r.vehicle.lat, r.vehicle.lon));
  const points: EnuPoint[] = [
    ...session.targets.map((t) => toEnu(chart, t.lat, t.lon)),
    ...rows.map((r) => toEnu(chart, r.estimate.lat, r.estimate.lon)),
    ...track,
  ];
  const scene: MapScene = {
    chart,
    fit: fitMap(points, mapCanvas.width, mapCanvas.height),
    track,
    targets: session.targets,
    rows,
  };
  drawMap(mapCtx, scene);
}

async function boot(): Promise<void> {
  setStatus("loading session…");
  session = await getSession((url, init) => fetch(url, init));
  chart = chartForSession(session);
  truthById = new Map(session.targets.map((t) => [t.target_id, { lat: t.lat, lon: t.lon }]));

  for (const cam of session.cameras) {
    const opt = document.createElement("option");
    opt.value = cam.id;
    opt.textContent = cam.id;
    cameraSelect.appendChild(opt);
  }
  const blank = document.createElement("option");
  blank.value = "";
  blank.textContent = "(pick target)";
  targetSelect.appendChild(blank);
  for (const t of session.targets) {
    const opt = document.createElement("option");
    opt.value = t.target_id;
    opt.textContent = `${t.target_id} (${t.kind})`;
    targetSelect.appendChild(opt);
  }

  cameraSelect.addEventListener("change", rebuildFrameControls);
  frameSelect.addEventListener("change", showFrame);
  tInput.addEventListener("change", clearDraft);
  frameBox.addEventListener("click", onFrameClick);
  targetSelect.addEventListener("change", onTargetChange);
  submitBtn.addEventListener("click", onSubmit);

  rebuildFrameControls();

  if (session.annotations.length > 0) {
    setStatus(`restoring ${session.annotations.length} annotations…`);
    const restored = await restoreRows(session.annotations, truthById, (url, init) => fetch(url, init));
    for (const row of restored) {
      rows.push(row);
      appendRow(row);
    }
  }
  redrawMap();
  setStatus(`${rows.length} annotations plotted`);
}

boot().catch((err: unknown) => {
  setStatus(err instanceof Error ? `failed to load: ${err.message}` : "failed to load");
});
