// Map canvas drawing.
//
// Drawing goes through Canvas2DLike, a structural slice of
// CanvasRenderingContext2D, so tests can pass a recording stub and assert
// on geometry and labels without a DOM.

import type { Chart, EnuPoint, MapFit } from "./enu.js";
import { enuToCanvas, scaleBarMeters, toEnu } from "./enu.js";
import type { ErrorRow } from "./state.js";
import type { TargetDoc } from "./api.js";

export interface Canvas2DLike {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface MapScene {
  chart: Chart;
  fit: MapFit;
  track: EnuPoint[];
  targets: TargetDoc[];
  rows: ErrorRow[];
}

const COLORS = {
  background: "#10141a",
  track: "#4a6b8a",
  target: "#3fb950",
  estimate: "#e8b33d",
  link: "#d0691e",
  text: "#c9d1d9",
};

function dot(ctx: Canvas2DLike, x: number, y: number, r: number, color: string): void {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fill();
}

export function drawMap(ctx: Canvas2DLike, scene: MapScene): void {
  const { fit, chart } = scene;
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, fit.width, fit.height);

  if (scene.track.length > 1) {
    ctx.strokeStyle = COLORS.track;
    ctx.lineWidth = 2;
    ctx.beginPath();
    scene.track.forEach((p, i) => {
      const c = enuToCanvas(fit, p);
      if (i === 0) ctx.moveTo(c.x, c.y);
      else ctx.lineTo(c.x, c.y);
    });
    ctx.stroke();
  }

  ctx.font = "11px sans-serif";
  for (const t of scene.targets) {
    const c = enuToCanvas(fit, toEnu(chart, t.lat, t.lon));
    dot(ctx, c.x, c.y, 5, COLORS.target);
    ctx.fillStyle = COLORS.text;
    ctx.fillText(t.target_id, c.x + 8, c.y + 4);
  }

  for (const row of scene.rows) {
    const est = enuToCanvas(fit, toEnu(chart, row.estimate.lat, row.estimate.lon));
    if (row.truth) {
      const gt = enuToCanvas(fit, toEnu(chart, row.truth.lat, row.truth.lon));
      ctx.strokeStyle = COLORS.link;
      ctx.lineWidth = 1;
      ctx.beginPath();
      ctx.moveTo(gt.x, gt.y);
      ctx.lineTo(est.x, est.y);
      ctx.stroke();
      // Label the link with the error token exactly as the server wrote it.
      ctx.fillStyle = COLORS.text;
      ctx.fillText(`${row.errorText} m`, (gt.x + est.x) / 2 + 6, (gt.y + est.y) / 2 - 6);
    }
    dot(ctx, est.x, est.y, 3.5, COLORS.estimate);
  }

  drawScaleBar(ctx, fit);
}

function drawScaleBar(ctx: Canvas2DLike, fit: MapFit): void {
  const meters = scaleBarMeters(fit);
  const px = meters * fit.scale;
  const x0 = 16;
  const y0 = fit.height - 16;
  ctx.strokeStyle = COLORS.text;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x0 + px, y0);
  ctx.stroke();
  ctx.fillStyle = COLORS.text;
  ctx.font = "11px sans-serif";
  ctx.fillText(`${meters} m`, x0, y0 - 6);
}
