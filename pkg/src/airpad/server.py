"""Live session service: simulate, segment, classify, stream.

Sessions are transport-independent (handle() maps one inbound message to a
list of outbound ones) so the protocol is testable without sockets; the
aiohttp layer adds websocket plumbing, HTTP endpoints, static file serving,
and idle-session reaping.
"""

from __future__ import annotations

import asyncio
import base64
import dataclasses
import json
import time
import uuid
from collections import deque

from .errors import (
    MalformedMessage,
    NoModelLoaded,
    OutOfOrderTimestamp,
    PayloadSizeMismatch,
)
from .gesture import (
    DigitImage,
    SegmentEventKind,
    Segmenter,
    normalize_trace,
    rasterize,
    reconstruct,
)
from .nn import ModelBundle, predict
from .sensing import ElectrodeLayout, SensorConfig, SensorSimulator, calibration_run

DEFAULT_SESSION_TIMEOUT_S = 300.0
# Tunable SensorConfig fields a client may override via set_config.
_CONFIG_FIELDS = {"lambda_cm", "noise_sigma", "adc_bits", "seed"}


def classify_image(bundle: ModelBundle | None, payload: bytes) -> dict:
    """Single-shot endpoint body: exactly 784 pixel bytes."""
    if bundle is None:
        raise NoModelLoaded("no model loaded")
    if len(payload) != 784:
        raise PayloadSizeMismatch(f"expected 784 bytes, got {len(payload)}")
    image = DigitImage.from_bytes(payload)
    digit, confidence, probs = predict(bundle, image)
    return {
        "digit": digit,
        "confidence": confidence,
        "probs": [float(p) for p in probs],
    }


class Session:
    """One simulator + segmenter pair; mutable state owned by one consumer."""

    def __init__(
        self,
        session_id: str,
        bundle: ModelBundle | None = None,
        sensor_cfg: SensorConfig | None = None,
        layout: ElectrodeLayout | None = None,
    ):
        self.session_id = session_id
        self.bundle = bundle
        self.layout = layout or ElectrodeLayout()
        self.last_activity = time.monotonic()
        self._start_sim(sensor_cfg or SensorConfig())
        self.segmenter = Segmenter()

    def _start_sim(self, cfg: SensorConfig):
        self.sensor_cfg = cfg
        self.sim = SensorSimulator(cfg, self.layout)
        calibration_run(self.sim)
        self.sim.reanchor()  # client-clock timeline; filters/noise carry over

    def handle(self, msg: dict) -> list[dict]:
        self.last_activity = time.monotonic()
        try:
            mtype = msg.get("type")
            if mtype == "hand_sample":
                return self._on_hand_sample(msg)
            if mtype == "reset":
                self.sim.reanchor()
                self.segmenter.reset()
                return []
            if mtype == "set_config":
                return self._on_set_config(msg)
            raise MalformedMessage(f"unknown message type {mtype!r}")
        except (MalformedMessage, OutOfOrderTimestamp) as exc:
            return [_error("malformed_message", str(exc))]

    def _on_hand_sample(self, msg: dict) -> list[dict]:
        from .sensing import HandSample

        try:
            sample = HandSample(
                x_cm=float(msg["x"]), y_cm=float(msg["y"]),
                z_cm=float(msg["z"]), t_s=float(msg["t"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedMessage(f"bad hand_sample: {exc}") from exc

        out: list[dict] = []
        for frame in self.sim.feed(sample):
            out.append(
                {
                    "type": "channels",
                    "t": frame.t_s,
                    "a": frame.a,
                    "b": frame.b,
                    "c": frame.c,
                    "d": frame.d,
                }
            )
            event = self.segmenter.step(reconstruct(frame))
            if event.kind is SegmentEventKind.STARTED:
                out.append({"type": "gesture_started"})
                out.append(_trace_point(event.coord))
            elif event.kind is SegmentEventKind.POINT:
                out.append(_trace_point(event.coord))
            elif event.kind is SegmentEventKind.COMPLETED:
                out.append(self._classify_trace(event.trace))
            elif event.kind is SegmentEventKind.DISCARDED:
                out.append({"type": "gesture_discarded"})
        return out

    def _classify_trace(self, trace) -> dict:
        image = rasterize(normalize_trace(trace))
        if self.bundle is None:
            return _error("no_model_loaded", "classification suppressed: no model loaded")
        digit, confidence, probs = predict(self.bundle, image)
        return {
            "type": "classification",
            "digit": digit,
            "confidence": confidence,
            "probs": [float(p) for p in probs],
            "image": base64.b64encode(image.to_bytes()).decode("ascii"),
        }

    def _on_set_config(self, msg: dict) -> list[dict]:
        fields = {k: v for k, v in msg.items() if k != "type"}
        unknown = set(fields) - _CONFIG_FIELDS
        if unknown:
            raise MalformedMessage(f"unknown config fields: {sorted(unknown)}")
        try:
            cfg = dataclasses.replace(self.sensor_cfg, **fields)
        except Exception as exc:
            raise MalformedMessage(f"bad config: {exc}") from exc
        self._start_sim(cfg)
        self.segmenter.reset()
        return []


def _trace_point(coord) -> dict:
    return {"type": "trace_point", "x": coord.x_u, "y": coord.y_u, "z": coord.z_u}


def _error(code: str, msg: str) -> dict:
    return {"type": "error", "code": code, "msg": msg}


class OutboundQueue:
    """Bounded stream buffer: channels frames drop oldest-first under
    backpressure; gesture lifecycle messages are never dropped."""

    def __init__(self, max_channels: int = 400):
        self.max_channels = max_channels
        self._q: deque = deque()
        self._channels = 0
        self.dropped = 0

    def push(self, msg: dict):
        if msg["type"] == "channels":
            if self._channels >= self.max_channels:
                self._drop_oldest_channels()
            self._channels += 1
        self._q.append(msg)

    def _drop_oldest_channels(self):
        for i, m in enumerate(self._q):
            if m["type"] == "channels":
                del self._q[i]
                self._channels -= 1
                self.dropped += 1
                return

    def pop(self) -> dict | None:
        if not self._q:
            return None
        msg = self._q.popleft()
        if msg["type"] == "channels":
            self._channels -= 1
        return msg

    def __len__(self):
        return len(self._q)


class SessionManager:
    def __init__(
        self,
        bundle: ModelBundle | None = None,
        sensor_cfg: SensorConfig | None = None,
        timeout_s: float = DEFAULT_SESSION_TIMEOUT_S,
    ):
        self.bundle = bundle
        self.sensor_cfg = sensor_cfg or SensorConfig()
        self.timeout_s = timeout_s
        self.sessions: dict[str, Session] = {}

    def create(self) -> Session:
        sid = uuid.uuid4().hex
        session = Session(sid, bundle=self.bundle, sensor_cfg=self.sensor_cfg)
        self.sessions[sid] = session
        return session

    def drop(self, session_id: str):
        self.sessions.pop(session_id, None)

    def reap_idle(self, now: float | None = None) -> int:
        now = time.monotonic() if now is None else now
        stale = [
            sid
            for sid, s in self.sessions.items()
            if now - s.last_activity > self.timeout_s
        ]
        for sid in stale:
            del self.sessions[sid]
        return len(stale)


# -- aiohttp application -------------------------------------------------------


def build_app(manager: SessionManager, static_dir=None):
    from aiohttp import WSMsgType, web

    async def health(request):
        return web.json_response(
            {
                "status": "ok",
                "sessions": len(manager.sessions),
                "model_loaded": manager.bundle is not None,
            }
        )

    async def model_info(request):
        if manager.bundle is None:
            return web.json_response(
                {"error": "no_model_loaded", "msg": "no model loaded"}, status=503
            )
        return web.json_response(manager.bundle.info())

    async def classify(request):
        body = await request.read()
        if request.content_type == "application/json":
            try:
                payload = base64.b64decode(json.loads(body)["image"])
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                return web.json_response(
                    {"error": "malformed_message", "msg": f"bad request body: {exc}"},
                    status=400,
                )
        else:
            payload = body
        try:
            return web.json_response(classify_image(manager.bundle, payload))
        except PayloadSizeMismatch as exc:
            return web.json_response(
                {"error": "payload_size_mismatch", "msg": str(exc)}, status=400
            )
        except NoModelLoaded as exc:
            return web.json_response(
                {"error": "no_model_loaded", "msg": str(exc)}, status=503
            )

    async def ws_session(request):
        ws = web.WebSocketResponse(heartbeat=30)
        await ws.prepare(request)
        session = manager.create()
        queue = OutboundQueue()
        ready = asyncio.Event()

        async def sender():
            while True:
                await ready.wait()
                ready.clear()
                while True:
                    msg = queue.pop()
                    if msg is None:
                        break
                    await ws.send_json(msg)

        sender_task = asyncio.create_task(sender())
        try:
            async for raw in ws:
                if raw.type == WSMsgType.TEXT:
                    try:
                        msg = json.loads(raw.data)
                    except json.JSONDecodeError as exc:
                        queue.push(_error("malformed_message", f"bad JSON: {exc}"))
                        ready.set()
                        continue
                    for out in session.handle(msg):
                        queue.push(out)
                    ready.set()
                elif raw.type == WSMsgType.ERROR:
                    break
        finally:
            sender_task.cancel()
            manager.drop(session.session_id)
        return ws

    async def reaper(app):
        async def loop():
            while True:
                await asyncio.sleep(min(manager.timeout_s / 4, 60.0))
                manager.reap_idle()

        task = asyncio.create_task(loop())
        yield
        task.cancel()

    app = web.Application()
    app.router.add_get("/api/health", health)
    app.router.add_get("/api/model/info", model_info)
    app.router.add_post("/api/classify", classify)
    app.router.add_get("/ws/session", ws_session)
    if static_dir is not None:
        app.router.add_get(
            "/", lambda r: web.FileResponse(f"{static_dir}/index.html")
        )
        app.router.add_static("/", static_dir)
    app.cleanup_ctx.append(reaper)
    return app


def run_server(
    bundle: ModelBundle | None,
    host: str = "127.0.0.1",
    port: int = 8760,
    static_dir=None,
    sensor_cfg: SensorConfig | None = None,
    timeout_s: float = DEFAULT_SESSION_TIMEOUT_S,
):
    from aiohttp import web

    manager = SessionManager(bundle=bundle, sensor_cfg=sensor_cfg, timeout_s=timeout_s)
    app = build_app(manager, static_dir=static_dir)
    web.run_app(app, host=host, port=port)
