// Overlay rendering: image-space polylines and point handles drawn onto
// a canvas through the current view transform.  Pure coordinate math is
// kept separate from drawing so it can be tested without a canvas.

import { Overlay, Point, Role, ROLE_COLORS, ROLE_ORDER } from './types.js';

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export const IDENTITY_VIEW: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };

export function imageToCanvas(p: Point, vt: ViewTransform): Point {
  return { u: p.u * vt.scale + vt.offsetX, v: p.v * vt.scale + vt.offsetY };
}

export function canvasToImage(p: Point, vt: ViewTransform): Point {
  return { u: (p.u - vt.offsetX) / vt.scale, v: (p.v - vt.offsetY) / vt.scale };
}

// Minimal 2D context surface used here, so tests can pass a recording stub.
export interface Ctx2D {
  globalAlpha: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  save(): void;
  restore(): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
}

function drawPolyline(ctx: Ctx2D, pts: [number, number][], vt: ViewTransform): void {
  if (pts.length < 2) return;
  ctx.beginPath();
  const first = imageToCanvas({ u: pts[0][0], v: pts[0][1] }, vt);
  ctx.moveTo(first.u, first.v);
  for (let i = 1; i < pts.length; i++) {
    const p = imageToCanvas({ u: pts[i][0], v: pts[i][1] }, vt);
    ctx.lineTo(p.u, p.v);
  }
  ctx.stroke();
}

export interface RenderOptions {
  dimmed?: boolean; // submission in flight: previous overlay greyed out
  handleRadius?: number;
}

export function renderOverlay(
  ctx: Ctx2D,
  overlay: Overlay | null,
  picks: Partial<Record<Role, Point>>,
  vt: ViewTransform,
  opts: RenderOptions = {},
): void {
  ctx.save();
  ctx.globalAlpha = opts.dimmed ? 0.35 : 1.0;
  if (overlay) {
    ctx.lineWidth = 2;
    ctx.strokeStyle = '#ffd54a';
    drawPolyline(ctx, overlay.left, vt);
    drawPolyline(ctx, overlay.right, vt);
    ctx.strokeStyle = '#4ad5ff';
    drawPolyline(ctx, overlay.width_segment, vt);
  }
  const radius = opts.handleRadius ?? 5;
  for (const role of ROLE_ORDER) {
    const p = picks[role];
    if (!p) continue;
    const c = imageToCanvas(p, vt);
    ctx.beginPath();
    ctx.fillStyle = ROLE_COLORS[role];
    ctx.arc(c.u, c.v, radius, 0, Math.PI * 2);
    ctx.fill();
  }
  ctx.restore();
}
