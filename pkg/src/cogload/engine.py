"""The online assessment pipeline: one engine instance per session,
fed body records in timestamp order. Batch replay and the live service
drive the same code path, so their outputs are identical by construction.

Frame cadence: a ScoreFrame is emitted for every pose-bearing record
(face or pose). Skeleton, noise, instruction and marker records update
state between emissions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import attention as att
from . import factors as fac
from . import headpose as hp
from . import instructions as ins
from . import kinematics as kin
from . import scoring
from .core import (
    CalibrationError,
    RigidTransform,
    SessionConfig,
    SkeletonFrame,
    WorkstationLayout,
)
from .kinematics import ActivityBaseline
from .scoring import ScoreFrame
from .sessionlog import (
    FaceRecord,
    InstructionRecord,
    MarkerRecord,
    NoiseRecord,
    PoseRecord,
    Record,
    SessionLog,
    SkeletonRecord,
)

CALIBRATION_START = "calibration_start"
CALIBRATION_END = "calibration_end"


class SessionEngine:
    def __init__(
        self,
        config: SessionConfig,
        layout: WorkstationLayout,
        baseline: ActivityBaseline | None = None,
        face_model: hp.FaceModel | None = None,
        statics: dict[str, float] | None = None,
        capture_factors: bool = False,
    ):
        self.config = config
        self.layout = layout
        self.face_model = face_model or hp.load_face_model()
        assembly = layout.by_label("assembly")
        if assembly is None:
            raise ValueError("layout has no assembly workstation")
        self.assembly_id = assembly.id
        storage = layout.by_label("storage")
        self.storage_id = storage.id if storage else None

        self.phase = "running"
        self.task_start = 0.0
        self.ledger = fac.AttentionLedger()
        self.instruction_state = ins.InstructionState()
        self.baseline = baseline
        self.statics = statics if statics is not None else fac.workstation_statics([], {}, config)

        self._filter_state: hp.PoseFilterState | None = None
        self._pose: RigidTransform | None = None
        self._last_pose_t: float | None = None
        self._prox: kin.ProximityState | None = None
        self._seen_skeleton = False
        self._self_touch = kin.SelfTouchState()
        self._activity = kin.ActivityTracker(baseline, config.sigma_floor)
        self._hyperactivity: float | None = None
        self._calibration_frames: list[SkeletonFrame] = []
        self._noise_sum = 0.0
        self._noise_count = 0
        self._last_attention: att.AttentionState | None = None
        self._last_score: ScoreFrame | None = None
        self.frames_emitted = 0
        self.pnp_failures = 0
        self.events_during_calibration = 0
        self.self_touch_events: list[kin.SelfTouchEvent] = []
        self._band_frames: dict[str, int] = {b: 0 for b in scoring.BANDS}
        self._score_sums = [0.0, 0.0, 0.0]  # me_inst, me_overall, stress
        self.capture_factors = capture_factors
        # (session t, factor-clock t, raw factors) per emitted frame
        self.factor_trace: list[tuple[float, float, fac.FactorVector]] = []

    # -- record dispatch ----------------------------------------------------

    def process(self, record: Record) -> ScoreFrame | None:
        if isinstance(record, MarkerRecord):
            self._on_marker(record)
        elif isinstance(record, NoiseRecord):
            self._noise_sum += record.dBA
            self._noise_count += 1
        elif isinstance(record, InstructionRecord):
            self._on_instruction(record)
        elif isinstance(record, SkeletonRecord):
            self._on_skeleton(record)
        elif isinstance(record, FaceRecord):
            return self._on_pose_bearing(record.t, self._solve_face(record))
        elif isinstance(record, PoseRecord):
            measured = RigidTransform.from_rotvec(np.asarray(record.rvec), np.asarray(record.tvec))
            return self._on_pose_bearing(record.t, hp.PnPSolution(measured, 0.0, 0, True))
        return None

    def _on_marker(self, record: MarkerRecord) -> None:
        if record.label == CALIBRATION_START:
            self.phase = "calibrating"
            self._calibration_frames = []
        elif record.label == CALIBRATION_END:
            if self.baseline is None:
                try:
                    self.baseline = kin.calibrate_baseline(
                        self._calibration_frames, self.config.activity_window_tau
                    )
                except CalibrationError:
                    self.baseline = None  # hyperactivity stays unavailable
            self._activity = kin.ActivityTracker(self.baseline, self.config.sigma_floor)
            self._calibration_frames = []
            self.phase = "running"
            self.task_start = record.t

    def _on_instruction(self, record: InstructionRecord) -> None:
        if self.phase != "running":
            self.events_during_calibration += 1
            return
        ev = ins.InstructionEvent(record.t, record.event, record.steps)
        self.instruction_state = ins.apply_event(self.instruction_state, ev)
        self.ledger.record_instruction(record.t - self.task_start, record.event, record.steps)

    def _on_skeleton(self, record: SkeletonRecord) -> None:
        frame = record.to_frame()
        if self.phase == "calibrating":
            self._calibration_frames.append(frame)
            return
        self._seen_skeleton = True
        prox = kin.classify_proximity(frame, self.layout)
        if prox is None:
            self.ledger.data_gaps += 1
        else:
            self._prox = prox
            self.ledger.set_proximity_label(
                record.t - self.task_start, self.layout.by_id(prox.nearest).label
            )
        self._self_touch, event = kin.detect_self_touch(frame, self.config, self._self_touch)
        if event is not None:
            self.self_touch_events.append(event)
            self.ledger.record_self_touch(event.instant - self.task_start)
        self._hyperactivity = self._activity.push(frame)

    def _solve_face(self, record: FaceRecord) -> hp.PnPSolution | None:
        initial = self._pose
        try:
            return hp.solve_pnp(
                self.face_model, record.to_frame(), self.config.camera_intrinsics,
                initial=initial, lm_params=self.config.lm,
            )
        except (hp.ProjectionDomainError, hp.SingularProblemError):
            self.pnp_failures += 1
            return None

    def _gate(self) -> tuple[int | None, bool]:
        """(nearest workstation id, gate radius satisfied). Sessions with
        no skeleton stream assume the operator is at the assembly bench."""
        if self._prox is None:
            if self._seen_skeleton:
                return None, False
            return self.assembly_id, True
        in_radius = self._prox.horizontal_distance <= self.config.proximity_gate_radius
        return self._prox.nearest, in_radius

    def _on_pose_bearing(self, t: float, measurement: hp.PnPSolution | None) -> ScoreFrame | None:
        if measurement is not None:
            self._filter_state, self._pose = hp.filter_pose(
                self._filter_state, measurement, t,
                self.config.kalman_process_noise, self.config.kalman_measurement_noise,
            )
        if self.phase != "running" or self._pose is None:
            return None
        dt = 0.0 if self._last_pose_t is None else t - self._last_pose_t
        self._last_pose_t = t

        nearest, in_radius = self._gate()
        levels = att.evaluate_levels(self._pose, self.layout, self.config)
        state = att.resolve_focus(t, levels, nearest, self.layout, self.config, gate_open=in_radius)
        self._last_attention = state
        self.ledger.tick(
            t - self.task_start, dt, state.gated, state.focus, self.instruction_state.current_index
        )
        mean_noise = self._noise_sum / self._noise_count if self._noise_count else None
        fv = fac.compute_factors(
            self.ledger, self.instruction_state, self.config, self.assembly_id,
            self.statics, mean_noise, self._hyperactivity,
        )
        if self.capture_factors:
            self.factor_trace.append((t - self.task_start, self.ledger.clock, fv))
        frame = scoring.build_score_frame(fv, self.config, t)
        self._last_score = frame
        self.frames_emitted += 1
        self._band_frames[frame.color_band] += 1
        self._score_sums[0] += frame.mental_effort_instantaneous
        self._score_sums[1] += frame.mental_effort_overall
        self._score_sums[2] += frame.stress_level
        return frame

    # -- observers ----------------------------------------------------------

    @property
    def last_score(self) -> ScoreFrame | None:
        return self._last_score

    @property
    def last_attention(self) -> att.AttentionState | None:
        return self._last_attention

    def facing_direction(self) -> tuple[float, float] | None:
        """(azimuth, elevation) of the head's facing axis relative to the
        camera's forward axis; (0, 0) means looking straight at the camera."""
        if self._pose is None:
            return None
        f = self._pose.rotation @ np.array([0.0, 0.0, -1.0])
        theta = math.atan2(f[0], -f[2])
        phi = math.asin(max(-1.0, min(1.0, -f[1])))
        return theta, phi

    def mean_noise(self) -> float | None:
        return self._noise_sum / self._noise_count if self._noise_count else None

    def report(self) -> dict:
        n = max(self.frames_emitted, 1)
        mean_scores = {
            "mental_effort_instantaneous": self._score_sums[0] / n,
            "mental_effort_overall": self._score_sums[1] / n,
            "stress_level": self._score_sums[2] / n,
        }
        final = self._last_score
        return {
            "duration": self.ledger.session_t,
            "in_gate_time": self.ledger.clock,
            "frames": self.frames_emitted,
            "pnp_failures": self.pnp_failures,
            "data_gaps": self.ledger.data_gaps,
            "attention_seconds": {str(k): v for k, v in sorted(self.ledger.attention_seconds.items())},
            "events": {
                "losses": sum(1 for e in self.ledger.loss_events if not e.was_switch),
                "switches": sum(1 for e in self.ledger.loss_events if e.was_switch),
                "check_backs": self.instruction_state.check_backs,
                "mistakes": len(self.instruction_state.mistakes),
                "self_touches": len(self.self_touch_events),
                "instructions_shown": self.instruction_state.instructions_shown,
                "instruction_checks": self.instruction_state.instruction_checks,
                "not_required_switches": ins.not_required_switches(self.instruction_state),
            },
            "mean_scores": mean_scores,
            "final_scores": None if final is None else {
                "mental_effort_instantaneous": final.mental_effort_instantaneous,
                "mental_effort_overall": final.mental_effort_overall,
                "stress_level": final.stress_level,
                "color_band": final.color_band,
            },
            "band_frames": dict(self._band_frames),
            "hyperactivity_available": self.baseline is not None,
        }


@dataclass
class ReplayResult:
    frames: list[ScoreFrame]
    report: dict
    engine: SessionEngine


def replay(
    log: SessionLog,
    config: SessionConfig | None = None,
    baseline: ActivityBaseline | None = None,
    capture_factors: bool = False,
    statics: dict[str, float] | None = None,
) -> ReplayResult:
    """Deterministic batch run of the online pipeline over a session log.

    The output is a pure function of (log, config): replaying the same
    log twice yields identical score traces. ``statics`` overrides the
    workstation factors (e.g. derived from a task catalogue).
    """
    cfg = config or log.header.config
    engine = SessionEngine(cfg, log.header.layout, baseline=baseline,
                           capture_factors=capture_factors, statics=statics)
    frames: list[ScoreFrame] = []
    for record in log.records:
        frame = engine.process(record)
        if frame is not None:
            frames.append(frame)
    return ReplayResult(frames, engine.report(), engine)


TRACE_HEADER = "t,me_inst,me_overall,stress,band"


def trace_lines(frames: list[ScoreFrame]) -> list[str]:
    """Score trace rows; floats use repr so traces are bit-exact."""
    lines = [TRACE_HEADER]
    for f in frames:
        lines.append(
            f"{f.timestamp!r},{f.mental_effort_instantaneous!r},"
            f"{f.mental_effort_overall!r},{f.stress_level!r},{f.color_band}"
        )
    return lines


def write_trace(path, frames: list[ScoreFrame]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(trace_lines(frames)) + "\n")
