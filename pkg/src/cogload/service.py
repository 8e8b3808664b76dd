"""Live mode: telemetry ingest over WebSocket, the same pipeline engine
as batch replay, and feedback broadcast to subscribed clients.

Endpoints:
  WS  /ingest    one log-body JSON object per message; each acked
  WS  /feedback  FeedbackMessage push at the configured rate
  WS  /control   start/stop/config plus operator actions (instruction
                 buttons, simulator steering, self-touch trigger)
  GET /state     latest FeedbackMessage for polling clients
Static dashboard assets are served from / when a frontend build exists.
"""

from __future__ import annotations

import asyncio
import heapq
import json
import math
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import simulator as sim
from .attention import DISTRACTED
from .core import (
    RigidTransform,
    SessionConfig,
    WorkstationLayout,
    config_from_dict,
    default_layout,
)
from .engine import SessionEngine
from .headpose import load_face_model, project_points
from .scoring import band_index
from .sessionlog import (
    FaceRecord,
    InstructionRecord,
    MarkerRecord,
    NoiseRecord,
    Record,
    SkeletonRecord,
    record_from_obj,
)

PROTOCOL_VERSION = 1


class _LiveSim:
    """Server-side simulated operator driven by /control messages."""

    def __init__(self, layout: WorkstationLayout, config: SessionConfig, frame_rate: float = 15.0):
        self.layout = layout
        self.config = config
        self.frame_rate = frame_rate
        self.model = load_face_model()
        self.gaze_target: int | str = layout.by_label("assembly").id
        self.proximity: int = layout.by_label("assembly").id
        self.agitation = "calm"
        self.noise_dBA = config.workstation_factors.noise_dBA
        self.pending_touches: list[float] = []
        self.t = 0.0
        self._rng = np.random.default_rng(0)
        self._R = None
        self._neck = None
        self._phases = {j: self._rng.uniform(0.0, 2.0 * math.pi) for j in sim._JOINT_OFFSET}
        self._sway = {j: np.zeros(3) for j in sim._JOINT_OFFSET}
        self._last_noise_t = -1.0

    def trigger_self_touch(self) -> None:
        self.pending_touches.append(self.t + 0.3)

    def step(self) -> list[Record]:
        """Advance one frame of simulated telemetry."""
        dt = 1.0 / self.frame_rate
        t = self.t
        target_neck = sim._neck_base(self.layout, self.proximity)
        head_for_gaze = sim._head_base(target_neck)
        target_R = sim._look_at(head_for_gaze, sim._gaze_point(self.layout, head_for_gaze, self.gaze_target))
        if self._R is None:
            self._R, self._neck = target_R, target_neck
        else:
            # exponential approach toward the commanded pose (~0.3 s)
            s = min(1.0, dt / 0.3)
            self._neck = self._neck + s * (target_neck - self._neck)
            self._R = sim._slerp(self._R, target_R, s)
        neck = self._neck
        head_pos = sim._head_base(neck)

        amp, freq = sim._AGITATION[self.agitation]
        sway_decay = math.exp(-dt / sim._SWAY_TAU)
        sway_step = sim._SWAY_SIGMA * math.sqrt(dt)
        joints = {}
        for joint, offset in sim._JOINT_OFFSET.items():
            gain = sim._JOINT_GAIN[joint]
            wobble = amp * gain * np.array([
                math.sin(2.0 * math.pi * freq * t + self._phases[joint]),
                math.cos(2.0 * math.pi * freq * t + 1.7 * self._phases[joint]),
                0.5 * math.sin(2.0 * math.pi * freq * t + 0.4 * self._phases[joint]),
            ])
            self._sway[joint] = self._sway[joint] * sway_decay + self._rng.normal(0.0, sway_step, size=3)
            joints[joint] = tuple(neck + np.asarray(offset) + wobble + self._sway[joint])
        self.pending_touches = [s_t for s_t in self.pending_touches if s_t + 0.25 >= t]
        for s_t in self.pending_touches:
            if abs(t - s_t) <= 0.25:
                d = 0.05 + 0.5 * (abs(t - s_t) / 0.25)
                direction = np.array([-0.5, 0.6, -0.3])
                direction /= np.linalg.norm(direction)
                joints["right_wrist"] = tuple(np.asarray(joints["head"]) + d * direction)
                break

        records: list[Record] = []
        if t - self._last_noise_t >= 1.0:
            records.append(NoiseRecord(t, self.noise_dBA))
            self._last_noise_t = t
        records.append(SkeletonRecord(t, {j: (p[0], p[1], p[2], 1.0) for j, p in joints.items()}))
        pose = RigidTransform(self._R, head_pos)
        uv = project_points(self.model.points, pose, self.config.camera_intrinsics)
        records.append(FaceRecord(t, tuple((float(u), float(v)) for u, v in uv)))
        self.t += dt
        return records


class LiveSession:
    def __init__(self, session_id: str, config: SessionConfig, layout: WorkstationLayout):
        self.session_id = session_id
        self.config = config
        self.layout = layout
        self.engine = SessionEngine(config, layout)
        self.trace: list = []          # every emitted ScoreFrame, in order
        self.lock = asyncio.Lock()
        self.ended = False
        self.started = False
        self.seq = 0
        self.subscribers: list[asyncio.Queue] = []
        self.sim: _LiveSim | None = None
        self.sim_task: asyncio.Task | None = None
        self.started_wall = time.monotonic()
        # reorder buffer: tolerates out-of-order ingest inside the window
        self._pending: list[tuple[float, int, Record]] = []
        self._max_t = -math.inf
        # warning edge-trigger state
        self._prev_band = "green"
        self._last_warned_index = -1
        self._last_warning_wall = -math.inf
        self._fresh_warnings: list[dict] = []

    # -- ingest path --------------------------------------------------------

    def _feed(self, record: Record) -> None:
        frame = self.engine.process(record)
        if frame is not None:
            self.trace.append(frame)
        self._check_warning()

    def _check_warning(self) -> None:
        frame = self.engine.last_score
        if frame is None:
            return
        band = frame.color_band
        prev = self._prev_band
        self._prev_band = band
        if band_index(band) <= band_index(prev):
            return
        now = time.monotonic()
        rearmed = now - self._last_warning_wall >= self.config.service.warning_rearm
        if rearmed or band_index(band) > self._last_warned_index:
            self._fresh_warnings.append({"at": frame.timestamp, "from": prev, "to": band})
            self._last_warning_wall = now
            self._last_warned_index = band_index(band)

    def ingest(self, record: Record) -> tuple[bool, str | None]:
        window = self.config.service.reorder_window
        if record.t + window < self._max_t:
            return False, (
                f"timestamp {record.t:.3f} is more than the {window * 1000:.0f} ms "
                f"reorder window behind the stream head {self._max_t:.3f}"
            )
        self.seq += 1
        heapq.heappush(self._pending, (record.t, self.seq, record))
        self._max_t = max(self._max_t, record.t)
        while self._pending and self._pending[0][0] <= self._max_t - window:
            _, _, rec = heapq.heappop(self._pending)
            self._feed(rec)
        return True, None

    def flush(self) -> None:
        while self._pending:
            _, _, rec = heapq.heappop(self._pending)
            self._feed(rec)

    # -- feedback -----------------------------------------------------------

    def feedback_message(self, snapshot: bool = False) -> dict:
        engine = self.engine
        frame = engine.last_score
        attention = engine.last_attention
        levels = {str(w.id): 0.0 for w in self.layout.workstations}
        focus = DISTRACTED
        if attention is not None:
            levels = {str(k): v * 100.0 for k, v in attention.levels.items()}
            focus = attention.focus
        facing = engine.facing_direction()
        phase = "ended" if self.ended else engine.phase
        if not self.started and frame is None:
            phase = "idle" if not self.ended else "ended"
        events = engine.report()["events"]
        msg = {
            "v": PROTOCOL_VERSION,
            "kind": "feedback",
            "session": self.session_id,
            "timestamp": None if frame is None else frame.timestamp,
            "server_time": time.monotonic() - self.started_wall,
            "phase": phase,
            "attention": levels,
            "focus": focus,
            "facing": None if facing is None else {"theta": facing[0], "phi": facing[1]},
            "scores": None if frame is None else {
                "me_inst": frame.mental_effort_instantaneous,
                "me_overall": frame.mental_effort_overall,
                "stress": frame.stress_level,
                "band": frame.color_band,
                "stress_band": frame.stress_band,
            },
            "contributions": None if frame is None else frame.contributions,
            "counters": events,
            "warnings": self._fresh_warnings,
            "snapshot": snapshot,
        }
        if not snapshot:
            self._fresh_warnings = []
        return msg

    def publish(self, msg: dict) -> None:
        for q in self.subscribers:
            if q.full():
                try:
                    q.get_nowait()  # coalesce: drop the stalest message
                except asyncio.QueueEmpty:
                    pass
            q.put_nowait(msg)

    # -- sim mode -----------------------------------------------------------

    async def run_sim(self, calibration: float = 0.0) -> None:
        assert self.sim is not None
        dt = 1.0 / self.sim.frame_rate
        scale = max(self.config.service.sim_time_scale, 1e-6)
        if calibration > 0.0:
            async with self.lock:
                self._feed(MarkerRecord(self.sim.t, "calibration_start"))
            end = self.sim.t + calibration
            while self.sim.t < end and not self.ended:
                async with self.lock:
                    for rec in self.sim.step():
                        self._feed(rec)
                await asyncio.sleep(dt / scale)
            async with self.lock:
                self._feed(MarkerRecord(self.sim.t, "calibration_end"))
        while not self.ended:
            async with self.lock:
                for rec in self.sim.step():
                    self._feed(rec)
            await asyncio.sleep(dt / scale)


def create_app(
    config: SessionConfig | None = None,
    layout: WorkstationLayout | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    config = config or SessionConfig()
    layout = layout or default_layout()
    app = FastAPI(title="cogload live service")
    sessions: dict[str, LiveSession] = {}
    app.state.sessions = sessions

    def check_token(token: str | None) -> bool:
        required = config.service.token
        return required is None or token == required

    def get_session(name: str | None, create: bool = True) -> LiveSession:
        if name is None or not config.service.multi_session:
            name = "default"
        if name not in sessions:
            if not create:
                raise KeyError(name)
            sessions[name] = LiveSession(name, config, layout)
        return sessions[name]

    async def broadcast_loop(session: LiveSession) -> None:
        period = 1.0 / config.service.feedback_hz
        while not session.ended:
            async with session.lock:
                msg = session.feedback_message()
            session.publish(msg)
            await asyncio.sleep(period)

    @app.websocket("/ingest")
    async def ingest_ws(ws: WebSocket, session: str | None = Query(None), token: str | None = Query(None)):
        if not check_token(token):
            await ws.close(code=4401)
            return
        live = get_session(session)
        await ws.accept()
        live.started = True
        try:
            while True:
                text = await ws.receive_text()
                if live.ended:
                    await ws.send_text(json.dumps({"v": PROTOCOL_VERSION, "ok": False, "error": "session ended"}))
                    continue
                try:
                    obj = json.loads(text)
                    rec = record_from_obj(obj)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    await ws.send_text(json.dumps({"v": PROTOCOL_VERSION, "ok": False, "error": f"malformed frame: {exc}"}))
                    continue
                if rec is None:
                    await ws.send_text(json.dumps({"v": PROTOCOL_VERSION, "ok": True, "skipped": obj.get("kind")}))
                    continue
                async with live.lock:
                    ok, err = live.ingest(rec)
                if ok:
                    await ws.send_text(json.dumps({"v": PROTOCOL_VERSION, "ok": True, "seq": live.seq}))
                else:
                    await ws.send_text(json.dumps({"v": PROTOCOL_VERSION, "ok": False, "error": err}))
        except WebSocketDisconnect:
            async with live.lock:
                live.flush()

    @app.websocket("/feedback")
    async def feedback_ws(ws: WebSocket, session: str | None = Query(None), token: str | None = Query(None)):
        if not check_token(token):
            await ws.close(code=4401)
            return
        live = get_session(session)
        await ws.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=16)
        live.subscribers.append(queue)
        task = asyncio.ensure_future(broadcast_loop(live)) if len(live.subscribers) == 1 else None
        try:
            async with live.lock:
                snapshot = live.feedback_message(snapshot=True)
            await ws.send_text(json.dumps(snapshot))
            while True:
                msg = await queue.get()
                await ws.send_text(json.dumps(msg))
        except WebSocketDisconnect:
            pass
        finally:
            live.subscribers.remove(queue)
            if task is not None and not live.subscribers:
                task.cancel()

    @app.websocket("/control")
    async def control_ws(ws: WebSocket, session: str | None = Query(None), token: str | None = Query(None)):
        if not check_token(token):
            await ws.close(code=4401)
            return
        live = get_session(session)
        await ws.accept()
        try:
            while True:
                text = await ws.receive_text()
                try:
                    obj = json.loads(text)
                    reply = await handle_control(live, obj)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    reply = {"ok": False, "error": str(exc)}
                reply.setdefault("v", PROTOCOL_VERSION)
                await ws.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            pass

    async def handle_control(live: LiveSession, obj: dict) -> dict:
        action = obj.get("action")
        if action == "start":
            if live.ended:
                return {"ok": False, "error": "session ended; start a new session"}
            live.started = True
            if obj.get("mode") == "sim" and live.sim_task is None:
                live.sim = _LiveSim(live.layout, live.config, float(obj.get("frame_rate", 15.0)))
                live.sim_task = asyncio.ensure_future(live.run_sim(float(obj.get("calibration", 0.0))))
            return {"ok": True, "phase": live.engine.phase}
        if action == "stop":
            live.ended = True
            if live.sim_task is not None:
                live.sim_task.cancel()
                live.sim_task = None
            async with live.lock:
                live.flush()
            return {"ok": True, "phase": "ended"}
        if action == "config":
            if live.started:
                return {"ok": False, "error": "config can only change before the session starts"}
            live.config = config_from_dict(obj["config"])
            live.engine = SessionEngine(live.config, live.layout)
            return {"ok": True}
        if action == "instruction":
            event = obj["event"]
            steps = int(obj.get("steps", 1))
            t = live.sim.t if live.sim is not None else (live.engine.ledger.session_t + live.engine.task_start)
            async with live.lock:
                live._feed(InstructionRecord(t, event, steps))
            return {"ok": True, "counters": live.engine.report()["events"]}
        if action == "sim":
            if live.sim is None:
                return {"ok": False, "error": "simulator not running; start with mode=sim"}
            if "gaze_target" in obj:
                live.sim.gaze_target = obj["gaze_target"]
            if "proximity" in obj:
                live.sim.proximity = int(obj["proximity"])
            if "agitation" in obj:
                if obj["agitation"] not in sim.AGITATION_LEVELS:
                    return {"ok": False, "error": f"unknown agitation {obj['agitation']!r}"}
                live.sim.agitation = obj["agitation"]
            if "noise_dBA" in obj:
                live.sim.noise_dBA = float(obj["noise_dBA"])
            return {"ok": True}
        if action == "self_touch":
            if live.sim is None:
                return {"ok": False, "error": "simulator not running; start with mode=sim"}
            live.sim.trigger_self_touch()
            return {"ok": True}
        return {"ok": False, "error": f"unknown action {action!r}"}

    @app.get("/state")
    async def state(session: str | None = Query(None), token: str | None = Query(None)):
        if not check_token(token):
            raise HTTPException(status_code=401, detail="bad token")
        try:
            live = get_session(session, create=False)
        except KeyError:
            raise HTTPException(status_code=404, detail="no such session")
        async with live.lock:
            return JSONResponse(live.feedback_message(snapshot=True))

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "v": PROTOCOL_VERSION}

    dist = Path(static_dir) if static_dir else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        @app.get("/")
        async def index():
            return FileResponse(dist / "index.html")
        app.mount("/assets", StaticFiles(directory=dist / "assets"), name="assets")

    return app


def serve(config: SessionConfig, layout: WorkstationLayout, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(config, layout), host=host, port=port, log_level="warning")
