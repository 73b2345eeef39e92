import { describe, expect, it } from "vitest";

import { SessionConnection } from "../src/connection.js";

describe("SessionConnection outbound guard", () => {
  it("refuses message types outside the protocol", () => {
    const conn = new SessionConnection("ws://unused", () => {}, () => {});
    expect(() =>
      conn.send({ type: "classification" } as never),
    ).toThrow(/not allowed/);
    expect(() => conn.send({ type: "evil" } as never)).toThrow(/not allowed/);
  });

  it("drops protocol messages silently while disconnected", () => {
    const conn = new SessionConnection("ws://unused", () => {}, () => {});
    expect(conn.send({ type: "reset" })).toBe(false);
    expect(conn.send({ type: "hand_sample", t: 0, x: 0, y: 0, z: 8 })).toBe(false);
    expect(conn.sent).toBe(0);
  });
});
