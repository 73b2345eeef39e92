/** Stream message protocol spoken over the /ws/session socket. */

export interface HandSampleMsg {
  type: "hand_sample";
  t: number;
  x: number;
  y: number;
  z: number;
}

export interface ResetMsg {
  type: "reset";
}

export interface SetConfigMsg {
  type: "set_config";
  [key: string]: unknown;
}

/** The only message types a client may send. */
export type OutboundMsg = HandSampleMsg | ResetMsg | SetConfigMsg;

export interface ChannelsMsg {
  type: "channels";
  t: number;
  a: number;
  b: number;
  c: number;
  d: number;
}

export interface TracePointMsg {
  type: "trace_point";
  x: number;
  y: number;
  z: number;
}

export interface GestureStartedMsg {
  type: "gesture_started";
}

export interface ClassificationMsg {
  type: "classification";
  digit: number;
  confidence: number;
  probs: number[];
  /** base64 of the 784-byte 28x28 grayscale image the server classified */
  image: string;
}

export interface GestureDiscardedMsg {
  type: "gesture_discarded";
}

export interface ErrorMsg {
  type: "error";
  code: string;
  msg: string;
}

export type InboundMsg =
  | ChannelsMsg
  | TracePointMsg
  | GestureStartedMsg
  | ClassificationMsg
  | GestureDiscardedMsg
  | ErrorMsg;

export function parseInbound(raw: string): InboundMsg | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null || typeof (obj as any).type !== "string") {
    return null;
  }
  return obj as InboundMsg;
}

/** Decode the classification image payload into 784 grayscale bytes. */
export function decodeImage(b64: string): Uint8Array {
  const bin = typeof atob === "function" ? atob(b64) : Buffer.from(b64, "base64").toString("binary");
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
  return out;
}
