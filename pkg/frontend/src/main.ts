/** DOM wiring: pointer capture -> hand samples out, messages -> model,
 * rAF render loop decoupled from message handling. */

import {
  computeChannelPolylines,
  computeProbBars,
  computeTracePolyline,
  drawBars,
  drawPolylines,
  drawTrace,
  imageToRgba,
} from "./charts.js";
import { SessionConnection } from "./connection.js";
import { UiSessionModel } from "./model.js";
import { HandSampleSource } from "./pointer.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const model = new UiSessionModel();
const source = new HandSampleSource();

const drawCanvas = el<HTMLCanvasElement>("draw-canvas");
const chartCanvas = el<HTMLCanvasElement>("chart-canvas");
const probCanvas = el<HTMLCanvasElement>("prob-canvas");
const glyphCanvas = el<HTMLCanvasElement>("glyph-canvas");
const resultText = el<HTMLDivElement>("result-text");
const distanceText = el<HTMLSpanElement>("distance-value");
const statusDot = el<HTMLSpanElement>("status-dot");
const noticeText = el<HTMLDivElement>("notice");
const distanceSlider = el<HTMLInputElement>("distance-slider");
const sliderEnable = el<HTMLInputElement>("slider-enable");
const resetButton = el<HTMLButtonElement>("reset-button");
const rateText = el<HTMLSpanElement>("rate-value");

const proto = location.protocol === "https:" ? "wss" : "ws";
const conn = new SessionConnection(
  `${proto}://${location.host}/ws/session`,
  (msg) => model.apply(msg),
  (state) => model.setConnection(state),
);
conn.connect();

// -- pointer capture ----------------------------------------------------------

const pointer = { u: 0.5, v: 0.5, pressed: false };

function pointerPos(ev: PointerEvent): void {
  const rect = drawCanvas.getBoundingClientRect();
  pointer.u = (ev.clientX - rect.left) / rect.width;
  pointer.v = (ev.clientY - rect.top) / rect.height;
}

drawCanvas.addEventListener("pointerdown", (ev) => {
  drawCanvas.setPointerCapture(ev.pointerId);
  pointerPos(ev);
  pointer.pressed = true;
  source.setPressed(true);
});
drawCanvas.addEventListener("pointermove", pointerPos);
const release = () => {
  pointer.pressed = false;
  source.setPressed(false);
};
drawCanvas.addEventListener("pointerup", release);
drawCanvas.addEventListener("pointercancel", release);

sliderEnable.addEventListener("change", () => {
  source.setDistanceOverride(sliderEnable.checked ? Number(distanceSlider.value) : null);
});
distanceSlider.addEventListener("input", () => {
  if (sliderEnable.checked) source.setDistanceOverride(Number(distanceSlider.value));
});
resetButton.addEventListener("click", () => {
  conn.send({ type: "reset" });
  model.clearTrace();
});

// Samples flow at ~40 Hz whenever the pointer is over the canvas.
setInterval(() => {
  const sample = source.sample(pointer, performance.now() / 1000);
  if (sample) conn.send(sample);
}, 25);

// -- render loop ----------------------------------------------------------------

let lastSeq = -1;
let lastNotice = 0;
let rateWindow: number[] = [];
let lastChartUpdates = 0;

function render(): void {
  const dctx = drawCanvas.getContext("2d")!;
  dctx.fillStyle = "#000000";
  dctx.fillRect(0, 0, drawCanvas.width, drawCanvas.height);
  drawTrace(dctx, computeTracePolyline(model.trace, drawCanvas.width, drawCanvas.height));

  const cctx = chartCanvas.getContext("2d")!;
  cctx.fillStyle = "#10181f";
  cctx.fillRect(0, 0, chartCanvas.width, chartCanvas.height);
  drawPolylines(
    cctx,
    computeChannelPolylines(model.channels, chartCanvas.width, chartCanvas.height),
  );

  if (model.chartUpdates !== lastChartUpdates) {
    rateWindow.push(performance.now());
    lastChartUpdates = model.chartUpdates;
  }
  rateWindow = rateWindow.filter((t) => performance.now() - t < 1000);
  rateText.textContent = String(rateWindow.length);

  const cls = model.lastClassification;
  if (cls && cls.seq !== lastSeq) {
    lastSeq = cls.seq;
    resultText.textContent = `${cls.digit} (${Math.round(cls.confidence * 100)}%)`;
    const pctx = probCanvas.getContext("2d")!;
    pctx.fillStyle = "#10181f";
    pctx.fillRect(0, 0, probCanvas.width, probCanvas.height);
    drawBars(pctx, computeProbBars(cls.probs, probCanvas.width, probCanvas.height));
    const gctx = glyphCanvas.getContext("2d")!;
    const img = new ImageData(imageToRgba(cls.image), 28, 28);
    gctx.putImageData(img, 0, 0);
  }

  if (model.discardedNotice !== lastNotice) {
    lastNotice = model.discardedNotice;
    noticeText.textContent = "gesture discarded (too short)";
    noticeText.classList.add("visible");
    setTimeout(() => noticeText.classList.remove("visible"), 1500);
  }

  distanceText.textContent = source.depthCm.toFixed(1);
  statusDot.className = `dot ${model.connection}`;
  requestAnimationFrame(render);
}

requestAnimationFrame(render);
