/** Chart geometry is computed as plain data so it is testable headless;
 * the draw* functions only stroke what the compute* functions return. */

import type { ChannelPoint, TracePoint } from "./model.js";

export const CHANNEL_COLORS: Record<string, string> = {
  a: "#ff5252",
  b: "#40c4ff",
  c: "#69f0ae",
  d: "#ffd740",
};

export interface Polyline {
  color: string;
  points: Array<[number, number]>;
}

/** Four color-coded strip chart polylines over the rolling channel window. */
export function computeChannelPolylines(
  data: ChannelPoint[],
  width: number,
  height: number,
  maxPoints = 400,
): Polyline[] {
  const win = data.slice(-maxPoints);
  const names: Array<"a" | "b" | "c" | "d"> = ["a", "b", "c", "d"];
  if (win.length === 0) return names.map((n) => ({ color: CHANNEL_COLORS[n], points: [] }));
  const n = win.length;
  return names.map((name) => ({
    color: CHANNEL_COLORS[name],
    points: win.map((p, i) => [
      n === 1 ? width : (i / (maxPoints - 1)) * width,
      height - 4 - p[name] * (height - 8),
    ]),
  }));
}

/** Trace coordinates are GUI units in [-1, 1], y up; canvas rows grow down. */
export function computeTracePolyline(
  trace: TracePoint[],
  width: number,
  height: number,
): Array<[number, number]> {
  return trace.map((p) => [
    ((p.x + 1) / 2) * width,
    ((1 - (p.y + 1) / 2)) * height,
  ]);
}

export interface Bar {
  x: number;
  y: number;
  w: number;
  h: number;
  highlight: boolean;
}

export function computeProbBars(
  probs: number[],
  width: number,
  height: number,
): Bar[] {
  const n = probs.length;
  const slot = width / n;
  const top = Math.max(...probs);
  return probs.map((p, i) => ({
    x: i * slot + slot * 0.15,
    y: height - p * (height - 14),
    w: slot * 0.7,
    h: p * (height - 14),
    highlight: p === top,
  }));
}

/** Expand 784 grayscale bytes to RGBA for putImageData. */
export function imageToRgba(bytes: Uint8Array): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(new ArrayBuffer(28 * 28 * 4));
  for (let i = 0; i < 784; i++) {
    const v = bytes[i] ?? 0;
    out[i * 4] = v;
    out[i * 4 + 1] = v;
    out[i * 4 + 2] = v;
    out[i * 4 + 3] = 255;
  }
  return out;
}

export function drawPolylines(
  ctx: CanvasRenderingContext2D,
  lines: Polyline[],
  lineWidth = 1.5,
): void {
  for (const line of lines) {
    if (line.points.length < 2) continue;
    ctx.strokeStyle = line.color;
    ctx.lineWidth = lineWidth;
    ctx.beginPath();
    ctx.moveTo(line.points[0][0], line.points[0][1]);
    for (let i = 1; i < line.points.length; i++) {
      ctx.lineTo(line.points[i][0], line.points[i][1]);
    }
    ctx.stroke();
  }
}

export function drawTrace(
  ctx: CanvasRenderingContext2D,
  points: Array<[number, number]>,
): void {
  if (points.length === 0) return;
  ctx.strokeStyle = "#ffffff";
  ctx.lineWidth = 6;
  ctx.lineCap = "round";
  ctx.lineJoin = "round";
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (let i = 1; i < points.length; i++) ctx.lineTo(points[i][0], points[i][1]);
  ctx.stroke();
  if (points.length === 1) {
    ctx.fillStyle = "#ffffff";
    ctx.beginPath();
    ctx.arc(points[0][0], points[0][1], 3, 0, Math.PI * 2);
    ctx.fill();
  }
}

export function drawBars(ctx: CanvasRenderingContext2D, bars: Bar[]): void {
  bars.forEach((bar, digit) => {
    ctx.fillStyle = bar.highlight ? "#40c4ff" : "#546e7a";
    ctx.fillRect(bar.x, bar.y, bar.w, bar.h);
    ctx.fillStyle = "#b0bec5";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(String(digit), bar.x + bar.w / 2, ctx.canvas.height - 2);
  });
}
