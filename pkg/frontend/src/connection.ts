/** WebSocket wrapper: JSON framing, state callbacks, outbound-type guard. */

import type { InboundMsg, OutboundMsg } from "./protocol.js";
import { parseInbound } from "./protocol.js";

const ALLOWED_OUTBOUND = new Set(["hand_sample", "reset", "set_config"]);

export class SessionConnection {
  private ws: WebSocket | null = null;
  sent = 0;

  constructor(
    private url: string,
    private onMessage: (msg: InboundMsg) => void,
    private onState: (state: "connecting" | "open" | "closed") => void,
  ) {}

  connect(): void {
    this.onState("connecting");
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => this.onState("open");
    this.ws.onclose = () => this.onState("closed");
    this.ws.onerror = () => this.onState("closed");
    this.ws.onmessage = (ev) => {
      const msg = parseInbound(String(ev.data));
      if (msg) this.onMessage(msg);
    };
  }

  get isOpen(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  /** Sends only protocol messages; drops silently while disconnected. */
  send(msg: OutboundMsg): boolean {
    if (!ALLOWED_OUTBOUND.has(msg.type)) {
      throw new Error(`outbound type not allowed: ${(msg as { type: string }).type}`);
    }
    if (!this.isOpen) return false;
    this.ws!.send(JSON.stringify(msg));
    this.sent++;
    return true;
  }

  close(): void {
    this.ws?.close();
  }
}
