import { describe, expect, it } from "vitest";

import { MAX_CHANNEL_POINTS, UiSessionModel } from "../src/model.js";
import type { ClassificationMsg } from "../src/protocol.js";

function channelsMsg(t: number) {
  return { type: "channels", t, a: 0.1, b: 0.2, c: 0.3, d: 0.4 } as const;
}

const classification: ClassificationMsg = {
  type: "classification",
  digit: 7,
  confidence: 0.93,
  probs: [0, 0, 0, 0, 0, 0, 0, 0.93, 0.04, 0.03],
  image: Buffer.from(new Uint8Array(784)).toString("base64"),
};

describe("UiSessionModel", () => {
  it("bounds the channel buffer to the rolling window", () => {
    const m = new UiSessionModel();
    for (let i = 0; i < 1000; i++) m.apply(channelsMsg(i / 80));
    expect(m.channels.length).toBe(MAX_CHANNEL_POINTS);
    expect(m.channels[0].t).toBeCloseTo((1000 - MAX_CHANNEL_POINTS) / 80);
    expect(m.chartUpdates).toBe(1000);
  });

  it("updates the result panel exactly once per classification", () => {
    const m = new UiSessionModel();
    m.apply(classification);
    const first = m.lastClassification;
    expect(first?.seq).toBe(1);
    expect(first?.digit).toBe(7);
    expect(first?.confidence).toBeCloseTo(0.93);
    m.apply({ ...classification, digit: 3 });
    expect(m.lastClassification?.seq).toBe(2);
    expect(m.lastClassification?.digit).toBe(3);
  });

  it("starts a fresh trace on gesture_started and appends points", () => {
    const m = new UiSessionModel();
    m.apply({ type: "trace_point", x: 0.9, y: 0.9, z: 0.3 });
    m.apply({ type: "gesture_started" });
    expect(m.gestureActive).toBe(true);
    expect(m.trace).toEqual([]);
    m.apply({ type: "trace_point", x: 0.1, y: -0.2, z: 0.3 });
    expect(m.trace).toHaveLength(1);
  });

  it("clears the canvas with a notice on discard", () => {
    const m = new UiSessionModel();
    m.apply({ type: "gesture_started" });
    m.apply({ type: "trace_point", x: 0, y: 0, z: 0.3 });
    m.apply({ type: "gesture_discarded" });
    expect(m.trace).toEqual([]);
    expect(m.gestureActive).toBe(false);
    expect(m.discardedNotice).toBe(1);
  });

  it("records errors without disturbing other state", () => {
    const m = new UiSessionModel();
    m.apply(channelsMsg(0));
    m.apply({ type: "error", code: "no_model_loaded", msg: "no model" });
    expect(m.lastError).toContain("no_model_loaded");
    expect(m.channels).toHaveLength(1);
  });

  it("decodes the classification image to 784 bytes", () => {
    const m = new UiSessionModel();
    m.apply(classification);
    expect(m.lastClassification?.image.length).toBe(784);
  });
});
