import { describe, expect, it } from "vitest";

import {
  HandSampleSource,
  Z_PRESSED_CM,
  Z_RELEASED_CM,
  canvasToPad,
} from "../src/pointer.js";

describe("canvasToPad", () => {
  it("maps the canvas corners to +/-4 cm with y up", () => {
    expect(canvasToPad(0, 0)).toEqual({ x: -4, y: 4 });
    expect(canvasToPad(1, 1)).toEqual({ x: 4, y: -4 });
    const center = canvasToPad(0.5, 0.5);
    expect(center.x).toBeCloseTo(0);
    expect(center.y).toBeCloseTo(0);
  });

  it("spans the full width on a drag", () => {
    const left = canvasToPad(0, 0.5).x;
    const right = canvasToPad(1, 0.5).x;
    expect(left).toBe(-4);
    expect(right).toBe(4);
  });

  it("clamps positions outside the canvas", () => {
    expect(canvasToPad(-0.5, 2).x).toBe(-4);
    expect(canvasToPad(-0.5, 2).y).toBe(-4);
  });
});

function runSamples(
  source: HandSampleSource,
  pressed: boolean,
  from: number,
  seconds: number,
  rateHz = 60,
) {
  source.setPressed(pressed);
  const out = [];
  const n = Math.round(seconds * rateHz);
  for (let i = 1; i <= n; i++) {
    const s = source.sample({ u: 0.5, v: 0.5, pressed }, from + i / rateHz);
    if (s) out.push(s);
  }
  return out;
}

describe("HandSampleSource", () => {
  it("starts at the released height and eases to the press height", () => {
    const source = new HandSampleSource();
    const first = source.sample({ u: 0.5, v: 0.5, pressed: false }, 0)!;
    expect(first.z).toBeCloseTo(Z_RELEASED_CM);
    const pressed = runSamples(source, true, 0, 0.6);
    const z = pressed[pressed.length - 1].z;
    expect(z).toBeLessThan(Z_PRESSED_CM + 0.05);
    // Ease is smooth: no sample jumps straight to the target.
    expect(pressed[0].z).toBeGreaterThan(4.0);
  });

  it("returns to the idle height continuously after release", () => {
    const source = new HandSampleSource();
    source.sample({ u: 0.5, v: 0.5, pressed: false }, 0);
    runSamples(source, true, 0, 0.6);
    const released = runSamples(source, false, 0.6, 0.8);
    const zs = released.map((s) => s.z);
    // Leaves the drawing height smoothly (the 4 cm crossing lands between
    // samples; the simulator interpolates) and settles back near idle.
    expect(zs[0]).toBeLessThan(4.0);
    expect(Math.max(...zs)).toBeGreaterThan(7.5);
    expect(zs[zs.length - 1]).toBeGreaterThan(4.0);
    for (let i = 1; i < zs.length; i++) expect(zs[i]).toBeGreaterThan(zs[i - 1]);
  });

  it("produces strictly monotone timestamps and drops replays", () => {
    const source = new HandSampleSource(0);
    expect(source.sample({ u: 0, v: 0, pressed: false }, 1.0)).not.toBeNull();
    expect(source.sample({ u: 0, v: 0, pressed: false }, 1.0)).toBeNull();
    expect(source.sample({ u: 0, v: 0, pressed: false }, 0.5)).toBeNull();
    expect(source.sample({ u: 0, v: 0, pressed: false }, 1.1)).not.toBeNull();
  });

  it("rate-limits below the configured interval", () => {
    const source = new HandSampleSource(1 / 30);
    let emitted = 0;
    for (let i = 1; i <= 1000; i++) {
      if (source.sample({ u: 0.5, v: 0.5, pressed: true }, i / 1000)) emitted++;
    }
    expect(emitted).toBeLessThanOrEqual(31);
    expect(emitted).toBeGreaterThanOrEqual(29);
  });

  it("honors the manual distance override", () => {
    const source = new HandSampleSource(0);
    source.setDistanceOverride(3.3);
    const s = source.sample({ u: 0.5, v: 0.5, pressed: false }, 0.1)!;
    expect(s.z).toBeCloseTo(3.3);
    source.setDistanceOverride(null);
    const s2 = source.sample({ u: 0.5, v: 0.5, pressed: false }, 0.2)!;
    expect(s2.z).toBeGreaterThan(4);
  });
});
