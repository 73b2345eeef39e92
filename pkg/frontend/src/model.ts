/** Client-side session state fed by inbound messages, polled by the renderer. */

import type { ClassificationMsg, InboundMsg } from "./protocol.js";

export interface ChannelPoint {
  t: number;
  a: number;
  b: number;
  c: number;
  d: number;
}

export interface TracePoint {
  x: number;
  y: number;
  z: number;
}

export interface ClassificationView {
  digit: number;
  confidence: number;
  probs: number[];
  image: Uint8Array;
  seq: number;
}

export type ConnectionState = "connecting" | "open" | "closed";

/** Channel history is bounded to the last ~5 s at 80 Hz. */
export const MAX_CHANNEL_POINTS = 400;
const MAX_TRACE_POINTS = 2000;

export class UiSessionModel {
  connection: ConnectionState = "connecting";
  channels: ChannelPoint[] = [];
  trace: TracePoint[] = [];
  gestureActive = false;
  lastClassification: ClassificationView | null = null;
  lastError: string | null = null;
  discardedNotice = 0; // bumps per discard; renderer shows a transient note
  chartUpdates = 0; // counts channel-buffer changes, for the update-rate meter
  private classificationSeq = 0;

  setConnection(state: ConnectionState): void {
    this.connection = state;
  }

  /** Fold one server message into the view state. */
  apply(msg: InboundMsg): void {
    switch (msg.type) {
      case "channels":
        this.channels.push({ t: msg.t, a: msg.a, b: msg.b, c: msg.c, d: msg.d });
        if (this.channels.length > MAX_CHANNEL_POINTS) {
          this.channels.splice(0, this.channels.length - MAX_CHANNEL_POINTS);
        }
        this.chartUpdates++;
        break;
      case "gesture_started":
        this.gestureActive = true;
        this.trace = [];
        break;
      case "trace_point":
        this.trace.push({ x: msg.x, y: msg.y, z: msg.z });
        if (this.trace.length > MAX_TRACE_POINTS) {
          this.trace.splice(0, this.trace.length - MAX_TRACE_POINTS);
        }
        break;
      case "classification":
        this.gestureActive = false;
        this.lastClassification = toView(msg, ++this.classificationSeq);
        break;
      case "gesture_discarded":
        this.gestureActive = false;
        this.trace = [];
        this.discardedNotice++;
        break;
      case "error":
        this.lastError = `${msg.code}: ${msg.msg}`;
        break;
    }
  }

  clearTrace(): void {
    this.trace = [];
    this.gestureActive = false;
  }
}

function toView(msg: ClassificationMsg, seq: number): ClassificationView {
  let image: Uint8Array;
  try {
    const bin = typeof atob === "function" ? atob(msg.image) : "";
    image = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) image[i] = bin.charCodeAt(i);
  } catch {
    image = new Uint8Array(784);
  }
  return {
    digit: msg.digit,
    confidence: msg.confidence,
    probs: msg.probs.slice(),
    image,
    seq,
  };
}
