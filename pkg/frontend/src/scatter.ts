/**
 * Canvas scatter of the embedding, plus hit-testing for click-to-inspect.
 *
 * The renderer draws through a minimal 2D-context interface so tests can
 * inject a recording fake; in the browser it receives the real
 * CanvasRenderingContext2D. Filtering hides points from both the draw
 * pass and the hit test, never from the document.
 */

import { colorsFor } from "./colors.js";
import { ExplorerState, colorValues, visibleIndices } from "./state.js";

export interface Canvas2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

export interface ViewTransform {
  toPixel(x: number, y: number): [number, number];
}

const PADDING = 20;

/** Affine map from embedding coordinates to pixel coordinates. */
export function makeTransform(
  xs: number[],
  ys: number[],
  width: number,
  height: number,
): ViewTransform {
  let xLo = Infinity, xHi = -Infinity, yLo = Infinity, yHi = -Infinity;
  for (let i = 0; i < xs.length; i++) {
    if (xs[i] < xLo) xLo = xs[i];
    if (xs[i] > xHi) xHi = xs[i];
    if (ys[i] < yLo) yLo = ys[i];
    if (ys[i] > yHi) yHi = ys[i];
  }
  const xSpan = xHi - xLo || 1;
  const ySpan = yHi - yLo || 1;
  const w = width - 2 * PADDING;
  const h = height - 2 * PADDING;
  return {
    toPixel(x: number, y: number): [number, number] {
      return [
        PADDING + ((x - xLo) / xSpan) * w,
        PADDING + ((y - yLo) / ySpan) * h,
      ];
    },
  };
}

export interface ScatterResult {
  pointsDrawn: number;
  transform: ViewTransform;
}

export function drawScatter(
  ctx: Canvas2D,
  state: ExplorerState,
  width: number,
  height: number,
): ScatterResult {
  const { x, y } = state.doc.records;
  const transform = makeTransform(x, y, width, height);
  const categorical = state.colorMode === "cluster" || state.colorMode === "traj_id";
  const colors = colorsFor(colorValues(state), categorical);

  ctx.clearRect(0, 0, width, height);
  let pointsDrawn = 0;
  for (const i of visibleIndices(state)) {
    const [px, py] = transform.toPixel(x[i], y[i]);
    ctx.fillStyle = colors[i];
    ctx.beginPath();
    ctx.arc(px, py, 2.5, 0, 2 * Math.PI);
    ctx.fill();
    pointsDrawn++;
  }

  if (state.selection !== null) {
    const [px, py] = transform.toPixel(x[state.selection], y[state.selection]);
    ctx.strokeStyle = "#000000";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(px, py, 6, 0, 2 * Math.PI);
    ctx.stroke();
  }
  return { pointsDrawn, transform };
}

/**
 * Nearest visible record within `radius` pixels of a click, or null.
 * Ties go to the lowest record index.
 */
export function hitTest(
  state: ExplorerState,
  transform: ViewTransform,
  px: number,
  py: number,
  radius = 8,
): number | null {
  const { x, y } = state.doc.records;
  let best: number | null = null;
  let bestDist = radius * radius;
  for (const i of visibleIndices(state)) {
    const [qx, qy] = transform.toPixel(x[i], y[i]);
    const d = (qx - px) * (qx - px) + (qy - py) * (qy - py);
    if (d < bestDist) {
      best = i;
      bestDist = d;
    }
  }
  return best;
}
