/** Maps pointer position and press state to hand_sample messages.
 *
 * The canvas spans x, y in [-4, 4] cm over the pad (y up). Depth comes from
 * the press state: pressed eases to the drawing height, released eases back
 * to the idle height, each over 200 ms, so the server-side 4 cm threshold
 * sees the same approach/retract profile a physical hand would produce.
 */

import type { HandSampleMsg } from "./protocol.js";

export const CANVAS_RANGE_CM = 4.0;
export const Z_PRESSED_CM = 2.5;
export const Z_RELEASED_CM = 8.0;
export const EASE_MS = 200;

export interface PointerState {
  u: number; // 0..1 across the canvas, left to right
  v: number; // 0..1 down the canvas, top to bottom
  pressed: boolean;
}

export function canvasToPad(u: number, v: number): { x: number; y: number } {
  const clamp = (value: number) => Math.min(Math.max(value, 0), 1);
  return {
    x: (clamp(u) - 0.5) * 2 * CANVAS_RANGE_CM,
    y: (0.5 - clamp(v)) * 2 * CANVAS_RANGE_CM,
  };
}

export class HandSampleSource {
  private zCurrent = Z_RELEASED_CM;
  private zTarget = Z_RELEASED_CM;
  private lastT: number | null = null;
  private lastEmitT = -Infinity;
  private overrideZ: number | null = null;

  constructor(private minIntervalS: number = 1 / 60) {}

  setPressed(pressed: boolean): void {
    this.zTarget = pressed ? Z_PRESSED_CM : Z_RELEASED_CM;
  }

  /** Explicit distance control (slider); null returns control to the press state. */
  setDistanceOverride(zCm: number | null): void {
    this.overrideZ = zCm;
  }

  get depthCm(): number {
    return this.overrideZ ?? this.zCurrent;
  }

  /** Produce a sample for time tS, or null when rate-limited/not monotone. */
  sample(state: PointerState, tS: number): HandSampleMsg | null {
    if (this.lastT !== null && tS <= this.lastT) return null;
    if (tS - this.lastEmitT < this.minIntervalS - 1e-9) {
      return null;
    }
    const dt = this.lastT === null ? 0 : tS - this.lastT;
    this.lastT = tS;
    // First-order ease toward the target depth with ~EASE_MS time constant.
    const tau = EASE_MS / 1000 / 3;
    const alpha = dt <= 0 ? 1 : 1 - Math.exp(-dt / tau);
    this.zCurrent += alpha * (this.zTarget - this.zCurrent);
    this.lastEmitT = tS;
    const { x, y } = canvasToPad(state.u, state.v);
    return {
      type: "hand_sample",
      t: tS,
      x,
      y,
      z: this.overrideZ ?? this.zCurrent,
    };
  }
}
