import { describe, expect, it } from "vitest";

import {
  CHANNEL_COLORS,
  computeChannelPolylines,
  computeProbBars,
  computeTracePolyline,
  imageToRgba,
} from "../src/charts.js";
import type { ChannelPoint } from "../src/model.js";

function frames(n: number): ChannelPoint[] {
  return Array.from({ length: n }, (_, i) => ({
    t: i / 80,
    a: 0.1,
    b: 0.5,
    c: 0.9,
    d: 0.3,
  }));
}

describe("computeChannelPolylines", () => {
  it("produces four color-coded series", () => {
    const lines = computeChannelPolylines(frames(100), 400, 160);
    expect(lines).toHaveLength(4);
    expect(lines.map((l) => l.color)).toEqual(
      ["a", "b", "c", "d"].map((n) => CHANNEL_COLORS[n]),
    );
    expect(lines[0].points).toHaveLength(100);
  });

  it("windows to the most recent points", () => {
    const lines = computeChannelPolylines(frames(1000), 400, 160, 400);
    expect(lines[0].points).toHaveLength(400);
  });

  it("maps values into the canvas with higher values drawn higher", () => {
    const lines = computeChannelPolylines(frames(10), 400, 160);
    const yA = lines[0].points[0][1]; // value 0.1
    const yC = lines[2].points[0][1]; // value 0.9
    expect(yC).toBeLessThan(yA);
    for (const line of lines) {
      for (const [, y] of line.points) {
        expect(y).toBeGreaterThanOrEqual(0);
        expect(y).toBeLessThanOrEqual(160);
      }
    }
  });
});

describe("computeTracePolyline", () => {
  it("flips y so positive trace y is near the canvas top", () => {
    const pts = computeTracePolyline(
      [
        { x: 0, y: 1, z: 0.3 },
        { x: 0, y: -1, z: 0.3 },
      ],
      100,
      100,
    );
    expect(pts[0][1]).toBe(0);
    expect(pts[1][1]).toBe(100);
    expect(pts[0][0]).toBe(50);
  });
});

describe("computeProbBars", () => {
  it("highlights the winning digit and scales bars", () => {
    const probs = [0.01, 0.02, 0.8, 0.02, 0.05, 0.02, 0.02, 0.02, 0.02, 0.02];
    const bars = computeProbBars(probs, 420, 120);
    expect(bars).toHaveLength(10);
    expect(bars[2].highlight).toBe(true);
    expect(bars.filter((b) => b.highlight)).toHaveLength(1);
    const heights = bars.map((b) => b.h);
    expect(Math.max(...heights)).toBe(heights[2]);
  });
});

describe("imageToRgba", () => {
  it("expands 784 grayscale bytes to opaque RGBA", () => {
    const bytes = new Uint8Array(784);
    bytes[0] = 255;
    bytes[783] = 128;
    const rgba = imageToRgba(bytes);
    expect(rgba.length).toBe(784 * 4);
    expect([rgba[0], rgba[1], rgba[2], rgba[3]]).toEqual([255, 255, 255, 255]);
    expect(rgba[783 * 4]).toBe(128);
    expect(rgba[783 * 4 + 3]).toBe(255);
  });
});
