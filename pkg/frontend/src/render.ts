import type { Geometry, LayerDoc, Point, RewardDoc, ZodDef } from "./types.js";
import type { LayerToggles } from "./state.js";

// terrain palette: road gold, grass green, obstacle black, avoidance red,
// demonstrations blue
export const TERRAIN_COLORS: Record<string, string> = {
  road: "#d4a017",
  grass: "#3f7d2c",
  obstacle: "#1a1a1a",
  avoidance: "#c0392b",
};
export const DEMO_COLOR = "#1f5fd0";
export const PLAN_COLOR = "#13c4c4";
export const GT_COLOR = "#e8e8e8";

// the subset of CanvasRenderingContext2D the renderer touches, so tests can
// substitute a recording fake
export interface Canvas2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
}

export interface Viewport {
  scale: number; // canvas pixels per cell
  heightPx: number;
}

export function viewportFor(geometry: Geometry, maxWidthPx: number): Viewport {
  const scale = Math.max(1, Math.floor(maxWidthPx / geometry.width));
  return { scale, heightPx: geometry.height * scale };
}

/** World meters -> canvas pixels (y axis flipped). */
export function worldToCanvas(geometry: Geometry, vp: Viewport, p: Point): Point {
  const cx = ((p[0] - geometry.origin_x_m) / geometry.resolution_m) * vp.scale;
  const cy =
    vp.heightPx - ((p[1] - geometry.origin_y_m) / geometry.resolution_m) * vp.scale;
  return [cx, cy];
}

function cellRect(vp: Viewport, x: number, y: number): [number, number, number, number] {
  return [x * vp.scale, vp.heightPx - (y + 1) * vp.scale, vp.scale, vp.scale];
}

export function drawTerrain(
  ctx: Canvas2D,
  layers: Record<string, LayerDoc>,
  toggles: LayerToggles,
  vp: Viewport,
): void {
  const order: (keyof typeof TERRAIN_COLORS)[] = [
    "grass",
    "road",
    "obstacle",
    "avoidance",
  ];
  ctx.globalAlpha = 1.0;
  for (const kind of order) {
    const layer = layers[kind];
    if (!layer || !toggles[kind as keyof LayerToggles]) continue;
    ctx.fillStyle = TERRAIN_COLORS[kind];
    const cells = layer.cells;
    for (let y = 0; y < cells.length; y++) {
      const row = cells[y];
      for (let x = 0; x < row.length; x++) {
        if (row[x] === 1) {
          const [px, py, w, h] = cellRect(vp, x, y);
          ctx.fillRect(px, py, w, h);
        }
      }
    }
  }
}

/** Blue (low) to red (high) heat color; uniform maps render mid-gray. */
export function heatColor(value: number, lo: number, hi: number): string {
  const t = hi > lo ? (value - lo) / (hi - lo) : 0.5;
  const r = Math.round(255 * Math.min(1, Math.max(0, 1.8 * t - 0.2)));
  const g = Math.round(180 * (1 - Math.abs(t - 0.5) * 2));
  const b = Math.round(255 * Math.min(1, Math.max(0, 1.2 - 1.8 * t)));
  return `rgb(${r},${g},${b})`;
}

export function drawRewardHeatmap(
  ctx: Canvas2D,
  reward: RewardDoc,
  vp: Viewport,
  alpha = 0.55,
): void {
  const values = reward.values;
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of values) {
    for (const v of row) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  ctx.globalAlpha = alpha;
  for (let y = 0; y < values.length; y++) {
    for (let x = 0; x < values[y].length; x++) {
      ctx.fillStyle = heatColor(values[y][x], lo, hi);
      const [px, py, w, h] = cellRect(vp, x, y);
      ctx.fillRect(px, py, w, h);
    }
  }
  ctx.globalAlpha = 1.0;
}

export function drawPolyline(
  ctx: Canvas2D,
  geometry: Geometry,
  vp: Viewport,
  points: readonly Point[],
  color: string,
  width = 2,
): void {
  if (points.length === 0) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  const [x0, y0] = worldToCanvas(geometry, vp, points[0]);
  ctx.moveTo(x0, y0);
  for (const p of points.slice(1)) {
    const [x, y] = worldToCanvas(geometry, vp, p);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
}

export function drawZods(
  ctx: Canvas2D,
  geometry: Geometry,
  vp: Viewport,
  zods: ZodDef[],
): void {
  ctx.strokeStyle = TERRAIN_COLORS.avoidance;
  ctx.lineWidth = 2;
  for (const z of zods) {
    const [cx, cy] = worldToCanvas(geometry, vp, [z.center_x_m, z.center_y_m]);
    ctx.beginPath();
    ctx.arc(cx, cy, (z.radius_m / geometry.resolution_m) * vp.scale, 0, 2 * Math.PI);
    ctx.stroke();
  }
}
