"""Synthetic session-log generation from scenario scripts.

Every log is fully labeled: segment boundaries and scripted gestures are
embedded as marker records, so closed-loop tests can compare what the
pipeline recovers against what the script commanded. Face frames are
exact (optionally noise-perturbed) projections of the face model under
head poses that look at each segment's gaze target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml

from .core import (
    CogloadError,
    RigidTransform,
    SessionConfig,
    WorkstationLayout,
    default_layout,
    layout_from_dict,
    matrix_to_rotvec,
)
from .headpose import FaceModel, load_face_model, project_points
from .instructions import EVENT_KINDS
from .sessionlog import (
    FaceRecord,
    InstructionRecord,
    LogHeader,
    MarkerRecord,
    NoiseRecord,
    PoseRecord,
    Record,
    SessionLog,
    SkeletonRecord,
)


class ScenarioError(CogloadError):
    pass


AGITATION_LEVELS = ("calm", "elevated", "high")
TRANSITION_SECONDS = 0.5  # smooth head/body interpolation between segments

# amplitude (m) and frequency (Hz) of the scripted limb oscillation
_AGITATION = {
    "calm": (0.001, 0.5),
    "elevated": (0.012, 1.5),
    "high": (0.03, 2.5),
}

# postural sway: mean-reverting random drift present in every segment,
# so resting window sums have realistic variance
_SWAY_TAU = 1.5       # seconds, mean-reversion time constant
_SWAY_SIGMA = 0.012   # m/sqrt(s), drift intensity
# how strongly each joint participates in the oscillation
_JOINT_GAIN = {
    "head": 0.1, "neck": 0.1,
    "left_shoulder": 0.25, "right_shoulder": 0.25,
    "left_elbow": 0.6, "right_elbow": 0.6,
    "left_wrist": 1.0, "right_wrist": 1.0,
}
# resting joint offsets from the neck (x right, y down, z toward camera-)
_JOINT_OFFSET = {
    "head": (0.0, -0.35, 0.0),
    "neck": (0.0, 0.0, 0.0),
    "left_shoulder": (0.18, 0.05, 0.0),
    "right_shoulder": (-0.18, 0.05, 0.0),
    "left_elbow": (0.26, 0.32, -0.05),
    "right_elbow": (-0.26, 0.32, -0.05),
    "left_wrist": (0.22, 0.55, -0.15),
    "right_wrist": (-0.22, 0.55, -0.15),
}


@dataclass(frozen=True)
class Segment:
    span: float
    gaze_target: int | str = "away"       # workstation id or "away"
    proximity: int = 1
    agitation: str = "calm"
    noise_dBA: float | None = None
    events: tuple[tuple[float, str, int], ...] = ()   # (at, kind, steps), segment-relative
    self_touch: tuple[float, ...] = ()                # segment-relative instants


@dataclass(frozen=True)
class Scenario:
    seed: int
    segments: tuple[Segment, ...]
    frame_rate: float = 15.0
    landmark_noise_px: float = 0.5
    emit: str = "face"                    # "face" runs PnP on replay; "pose" skips it
    calibration: float = 0.0              # resting prelude length, seconds
    session_id: str = "sim"


def validate_scenario(scenario: Scenario, layout: WorkstationLayout) -> list[str]:
    problems = []
    if not scenario.segments:
        problems.append("scenario: needs at least one segment")
    if scenario.frame_rate <= 0:
        problems.append("scenario: frame_rate must be positive")
    if scenario.emit not in ("face", "pose"):
        problems.append(f"scenario: emit must be 'face' or 'pose', got {scenario.emit!r}")
    ids = {w.id for w in layout.workstations}
    for i, seg in enumerate(scenario.segments):
        if seg.span <= 0:
            problems.append(f"segment {i}: span must be positive")
        if seg.gaze_target != "away" and seg.gaze_target not in ids:
            problems.append(f"segment {i}: gaze target {seg.gaze_target!r} not in layout")
        if seg.proximity not in ids:
            problems.append(f"segment {i}: proximity workstation {seg.proximity!r} not in layout")
        if seg.agitation not in AGITATION_LEVELS:
            problems.append(f"segment {i}: unknown agitation {seg.agitation!r}")
        for at, kind, steps in seg.events:
            if not (0.0 <= at <= seg.span):
                problems.append(f"segment {i}: event at {at} outside span")
            if kind not in EVENT_KINDS:
                problems.append(f"segment {i}: unknown event kind {kind!r}")
            if steps < 1:
                problems.append(f"segment {i}: event steps must be >= 1")
        for at in seg.self_touch:
            if not (0.0 <= at <= seg.span):
                problems.append(f"segment {i}: self-touch at {at} outside span")
    return problems


def _neck_base(layout: WorkstationLayout, ws_id: int) -> np.ndarray:
    w = layout.by_id(ws_id).position
    # operator stands 35 cm behind the workstation, torso at desk height
    return np.array([w[0], 0.1, w[2] + 0.35])


def _head_base(neck: np.ndarray) -> np.ndarray:
    return neck + np.asarray(_JOINT_OFFSET["head"])


def _look_at(head_pos: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Rotation whose facing axis (-z of the head frame) points from
    head_pos toward target, roll-free w.r.t. the camera vertical."""
    d = target - head_pos
    norm = np.linalg.norm(d)
    if norm < 1e-9:
        raise ScenarioError("gaze target coincides with the head position")
    d = d / norm
    z_head = -d
    y_cam = np.array([0.0, 1.0, 0.0])
    x_head = np.cross(y_cam, z_head)
    n = np.linalg.norm(x_head)
    if n < 1e-6:
        raise ScenarioError("gaze target directly above/below the head (degenerate roll)")
    x_head /= n
    y_head = np.cross(z_head, x_head)
    return np.column_stack([x_head, y_head, z_head])


def _gaze_point(layout: WorkstationLayout, head_pos: np.ndarray, target: int | str) -> np.ndarray:
    if target == "away":
        # far off to the side: ~80 deg azimuth, outside every membership band
        return head_pos + np.array([math.sin(math.radians(80.0)), -0.1, -math.cos(math.radians(80.0))])
    return layout.by_id(target).position


def _slerp(R0: np.ndarray, R1: np.ndarray, s: float) -> np.ndarray:
    from .core import rotvec_to_matrix
    rel = matrix_to_rotvec(R0.T @ R1)
    return R0 @ rotvec_to_matrix(s * rel)


def _smoothstep(s: float) -> float:
    return s * s * (3.0 - 2.0 * s)


def synthesize(
    scenario: Scenario,
    layout: WorkstationLayout | None = None,
    config: SessionConfig | None = None,
    face_model: FaceModel | None = None,
) -> SessionLog:
    layout = layout or default_layout()
    config = config or SessionConfig()
    model = face_model or load_face_model()
    problems = validate_scenario(scenario, layout)
    if problems:
        raise ScenarioError("; ".join(problems))
    rng = np.random.default_rng(scenario.seed)

    cal = scenario.calibration
    starts = [cal]
    for seg in scenario.segments[:-1]:
        starts.append(starts[-1] + seg.span)
    total = cal + sum(seg.span for seg in scenario.segments)

    assembly_id = layout.by_label("assembly").id
    cal_segment = Segment(span=cal, gaze_target=assembly_id, proximity=assembly_id, agitation="calm")

    # precomputed per-segment body position and gaze rotation
    def seg_geometry(seg: Segment) -> tuple[np.ndarray, np.ndarray]:
        neck = _neck_base(layout, seg.proximity)
        head = _head_base(neck)
        R = _look_at(head, _gaze_point(layout, head, seg.gaze_target))
        return neck, R

    geometries = [seg_geometry(s) for s in scenario.segments]
    cal_geometry = seg_geometry(cal_segment)

    def state_at(t: float) -> tuple[Segment, np.ndarray, np.ndarray]:
        """Active segment plus interpolated neck position and gaze rotation."""
        if t < cal:
            return cal_segment, cal_geometry[0], cal_geometry[1]
        k = len(starts) - 1
        for i, s0 in enumerate(starts):
            if t < s0 + scenario.segments[i].span:
                k = i
                break
        seg = scenario.segments[k]
        neck, R = geometries[k]
        u = t - starts[k]
        if u < TRANSITION_SECONDS:
            prev_neck, prev_R = geometries[k - 1] if k > 0 else cal_geometry
            if k == 0 and cal == 0.0:
                return seg, neck, R  # nothing to blend from
            s = _smoothstep(u / TRANSITION_SECONDS)
            neck = prev_neck + s * (neck - prev_neck)
            R = _slerp(prev_R, R, s)
        return seg, neck, R

    timed: list[tuple[float, int, Record]] = []  # (t, priority, record)

    if cal > 0.0:
        timed.append((0.0, 0, MarkerRecord(0.0, "calibration_start")))
        timed.append((cal, 0, MarkerRecord(cal, "calibration_end")))
    for i, seg in enumerate(scenario.segments):
        timed.append((starts[i], 0, MarkerRecord(starts[i], "segment", {
            "index": i,
            "gaze_target": seg.gaze_target,
            "proximity": seg.proximity,
            "agitation": seg.agitation,
            "span": seg.span,
        })))
        for at, kind, steps in seg.events:
            t = starts[i] + at
            timed.append((t, 2, InstructionRecord(t, kind, steps)))
        for at in seg.self_touch:
            t = starts[i] + at
            timed.append((t, 0, MarkerRecord(t, "self_touch_scripted", {"at": t})))
        dBA = seg.noise_dBA if seg.noise_dBA is not None else config.workstation_factors.noise_dBA
        s = 0.0
        while s < seg.span:
            t = starts[i] + s
            timed.append((t, 1, NoiseRecord(t, dBA)))
            s += 1.0

    # scripted hand-to-head dips, absolute instants
    touches = [starts[i] + at for i, seg in enumerate(scenario.segments) for at in seg.self_touch]

    dt = 1.0 / scenario.frame_rate
    n_frames = int(round(total / dt))
    phases = {j: rng.uniform(0.0, 2.0 * math.pi) for j in _JOINT_OFFSET}
    sway = {j: np.zeros(3) for j in _JOINT_OFFSET}
    sway_decay = math.exp(-dt / _SWAY_TAU)
    sway_step = _SWAY_SIGMA * math.sqrt(dt)

    for k in range(n_frames):
        t = k * dt
        seg, neck, R = state_at(t)
        amp, freq = _AGITATION[seg.agitation]
        joints: dict[str, tuple[float, float, float]] = {}
        head_pos = _head_base(neck)
        for joint, offset in _JOINT_OFFSET.items():
            gain = _JOINT_GAIN[joint]
            wobble = amp * gain * np.array([
                math.sin(2.0 * math.pi * freq * t + phases[joint]),
                math.cos(2.0 * math.pi * freq * t + 1.7 * phases[joint]),
                0.5 * math.sin(2.0 * math.pi * freq * t + 0.4 * phases[joint]),
            ])
            sway[joint] = sway[joint] * sway_decay + rng.normal(0.0, sway_step, size=3)
            joints[joint] = tuple(neck + np.asarray(offset) + wobble + sway[joint])
        # overlay the scripted self-touch gesture on the right wrist
        for s_t in touches:
            if abs(t - s_t) <= 0.25:
                d = 0.05 + 0.5 * (abs(t - s_t) / 0.25)
                direction = np.array([-0.5, 0.6, -0.3])
                direction /= np.linalg.norm(direction)
                joints["right_wrist"] = tuple(np.asarray(joints["head"]) + d * direction)
                break
        timed.append((t, 3, SkeletonRecord(t, {j: (p[0], p[1], p[2], 1.0) for j, p in joints.items()})))

        pose = RigidTransform(R, head_pos)
        if scenario.emit == "pose":
            rv = matrix_to_rotvec(R)
            timed.append((t, 4, PoseRecord(t, (rv[0], rv[1], rv[2]), tuple(head_pos))))
        else:
            uv = project_points(model.points, pose, config.camera_intrinsics)
            if scenario.landmark_noise_px > 0.0:
                uv = uv + rng.normal(0.0, scenario.landmark_noise_px, size=uv.shape)
            timed.append((t, 4, FaceRecord(t, tuple((float(u), float(v)) for u, v in uv))))

    timed.sort(key=lambda item: (item[0], item[1]))
    header = LogHeader(
        session_id=scenario.session_id,
        start_wallclock="1970-01-01T00:00:00Z",
        frame_rate=scenario.frame_rate,
        layout=layout,
        config=config,
    )
    return SessionLog(header, tuple(rec for _, _, rec in timed))


# ---------------------------------------------------------------------------
# Scenario files (YAML)
# ---------------------------------------------------------------------------

def scenario_from_dict(doc: dict) -> Scenario:
    try:
        segments = []
        for seg in doc["segments"]:
            events = tuple(
                (float(e["at"]), str(e["event"]), int(e.get("steps", 1)))
                for e in seg.get("events", [])
            )
            segments.append(Segment(
                span=float(seg["span"]),
                gaze_target=seg.get("gaze_target", "away"),
                proximity=int(seg.get("proximity", 1)),
                agitation=str(seg.get("agitation", "calm")),
                noise_dBA=None if seg.get("noise_dBA") is None else float(seg["noise_dBA"]),
                events=events,
                self_touch=tuple(float(x) for x in seg.get("self_touch", [])),
            ))
        return Scenario(
            seed=int(doc.get("seed", 0)),
            segments=tuple(segments),
            frame_rate=float(doc.get("frame_rate", 15.0)),
            landmark_noise_px=float(doc.get("landmark_noise_px", 0.5)),
            emit=str(doc.get("emit", "face")),
            calibration=float(doc.get("calibration", 0.0)),
            session_id=str(doc.get("session_id", "sim")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario document: {exc}") from exc


def load_scenario_file(path) -> tuple[Scenario, WorkstationLayout | None]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: scenario document must be a mapping")
    scenario = scenario_from_dict(doc)
    layout = layout_from_dict(doc["layout"]) if "layout" in doc else None
    return scenario, layout
