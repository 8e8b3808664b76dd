"""Shared domain types, units, frame conventions and session configuration.

Conventions used throughout the engine:

* Camera frame: +x right, +y down, +z forward (into the scene). Pixel
  projection follows the pinhole model ``u = fx*x/z + cx``.
* Head frame: aligned with the camera frame when the operator faces the
  camera, so the facing direction is -z in head coordinates and the
  identity rotation means "looking straight at the camera".
* The horizontal plane is the camera (x, z) plane; +y is vertical (down).
* Timestamps are seconds since session start. Wall-clock anchoring lives
  only in log headers.
* Angles are radians in memory; config files use degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

Timestamp = float


class CogloadError(Exception):
    """Base class for engine errors."""


class ConfigError(CogloadError):
    pass


class CalibrationError(CogloadError):
    pass


class OrderingError(CogloadError):
    """A stream record arrived with a non-monotonic timestamp."""


# Canonical 25-joint skeleton naming. Trackers that report fewer joints
# simply omit entries; only the upper-body subset is required downstream.
JOINT_NAMES = (
    "head", "neck", "nose",
    "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",
    "left_wrist", "right_wrist",
    "left_hand", "right_hand",
    "spine", "mid_hip",
    "left_hip", "right_hip",
    "left_knee", "right_knee",
    "left_ankle", "right_ankle",
    "left_foot", "right_foot",
    "left_eye", "right_eye",
    "left_ear", "right_ear",
)

UPPER_BODY_JOINTS = (
    "head", "neck",
    "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",
    "left_wrist", "right_wrist",
)

# Mental-effort factor names in their canonical reporting order.
MENTAL_EFFORT_FACTORS = (
    "concentration_loss",
    "learning_delay",
    "concentration_demand",
    "instructions_cost",
    "task_difficulty",
    "frustration_by_failure",
    "tool_identification",
)

STATIC_FACTORS = (
    "components",
    "tools",
    "physical_effort",
    "variant_flora",
    "noise_level",
)

# Factors whose raw value already lies in [0, 1]; everything else is
# normalized by a per-variant threshold.
INTRINSIC_FACTORS = frozenset(MENTAL_EFFORT_FACTORS[:2]) | {
    "tool_identification",
    *STATIC_FACTORS,
}

WORKSTATION_LABELS = ("assembly", "instructions", "storage", "other")


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def rotvec_to_matrix(rvec: np.ndarray) -> np.ndarray:
    """Rodrigues formula, series-expanded near zero angle."""
    v = np.asarray(rvec, dtype=float).reshape(3)
    theta = float(np.linalg.norm(v))
    K = _skew(v)
    if theta < 1e-8:
        a = 1.0 - theta * theta / 6.0
        b = 0.5 - theta * theta / 24.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * (K @ K)


def matrix_to_rotvec(R: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rotvec_to_matrix`, robust at 0 and near pi."""
    R = np.asarray(R, dtype=float)
    cos_theta = max(-1.0, min(1.0, (np.trace(R) - 1.0) / 2.0))
    theta = math.acos(cos_theta)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < 1e-8:
        return 0.5 * w
    if theta < math.pi - 1e-6:
        return (theta / (2.0 * math.sin(theta))) * w
    # Near pi the skew part vanishes; recover the axis from R + I.
    B = (R + np.eye(3)) / 2.0
    k = int(np.argmax(np.diag(B)))
    axis = B[:, k] / math.sqrt(max(B[k, k], 1e-12))
    axis = axis / np.linalg.norm(axis)
    # Resolve the sign ambiguity so that rotvec_to_matrix round-trips.
    if np.linalg.norm(w) > 1e-12 and np.dot(axis, w) < 0.0:
        axis = -axis
    return theta * axis


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation + translation expressing one frame in another.

    ``apply`` maps points from the child frame into the parent frame,
    e.g. a camera<-head transform maps head-frame points to camera frame.
    """

    rotation: np.ndarray      # (3, 3) orthonormal, det +1
    translation: np.ndarray   # (3,) meters

    def __post_init__(self):
        R = _readonly(np.asarray(self.rotation, dtype=float).reshape(3, 3))
        t = _readonly(np.asarray(self.translation, dtype=float).reshape(3))
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_rotvec(cls, rvec: np.ndarray, tvec: np.ndarray) -> "RigidTransform":
        return cls(rotvec_to_matrix(rvec), np.asarray(tvec, dtype=float))

    def rotvec(self) -> np.ndarray:
        return matrix_to_rotvec(self.rotation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self o other: apply ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def is_orthonormal(self, tol: float = 1e-9) -> bool:
        R = self.rotation
        return (
            np.abs(R @ R.T - np.eye(3)).max() <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol
        )


@dataclass(frozen=True, eq=False)
class Workstation:
    id: int
    label: str
    position: np.ndarray  # camera frame, meters

    def __post_init__(self):
        object.__setattr__(self, "position", _readonly(np.asarray(self.position, dtype=float).reshape(3)))


@dataclass(frozen=True, eq=False)
class WorkstationLayout:
    workstations: tuple[Workstation, ...]

    def __post_init__(self):
        object.__setattr__(self, "workstations", tuple(self.workstations))

    @property
    def count(self) -> int:
        return len(self.workstations)

    def by_id(self, ws_id: int) -> Workstation:
        for w in self.workstations:
            if w.id == ws_id:
                return w
        raise KeyError(f"no workstation with id {ws_id}")

    def by_label(self, label: str) -> Workstation | None:
        for w in self.workstations:
            if w.label == label:
                return w
        return None

    def validate(self) -> list[str]:
        problems = []
        ids = [w.id for w in self.workstations]
        if not self.workstations:
            problems.append("layout: must declare at least one workstation")
            return problems
        if sorted(ids) != list(range(1, len(ids) + 1)):
            problems.append("layout: workstation ids must be unique and contiguous from 1")
        for w in self.workstations:
            if w.label not in WORKSTATION_LABELS:
                problems.append(f"layout: workstation {w.id} has unknown label {w.label!r}")
        n_assembly = sum(1 for w in self.workstations if w.label == "assembly")
        if n_assembly != 1:
            problems.append("layout: exactly one workstation must be labeled 'assembly'")
        for label in ("instructions", "storage"):
            if sum(1 for w in self.workstations if w.label == label) > 1:
                problems.append(f"layout: at most one workstation may be labeled {label!r}")
        return problems


@dataclass(frozen=True)
class Keypoint:
    position: tuple[float, float, float]  # camera frame, meters
    confidence: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)


@dataclass(frozen=True)
class SkeletonFrame:
    timestamp: Timestamp
    keypoints: dict[str, Keypoint]

    def get(self, joint: str) -> Keypoint | None:
        kp = self.keypoints.get(joint)
        if kp is None or kp.confidence <= 0.0:
            return None
        return kp


@dataclass(frozen=True, eq=False)
class FaceFrame:
    timestamp: Timestamp
    landmarks: np.ndarray  # (68, 2) pixel coordinates, canonical 68-point order

    def __post_init__(self):
        lm = np.asarray(self.landmarks, dtype=float)
        if lm.shape != (68, 2):
            raise ValueError(f"face frame needs 68 landmarks, got shape {lm.shape}")
        object.__setattr__(self, "landmarks", _readonly(lm))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Defaults model a 4K industrial camera at ~60 deg horizontal FOV;
    the pose-recovery tolerances are pinned to this class of optics."""
    fx: float = 3500.0
    fy: float = 3500.0
    cx: float = 2048.0
    cy: float = 1152.0


@dataclass(frozen=True)
class FactorThresholds:
    instantaneous: float
    overall: float

    def for_variant(self, variant: str) -> float:
        if variant == "instantaneous":
            return self.instantaneous
        if variant == "overall":
            return self.overall
        raise ConfigError(f"unknown factor variant {variant!r}")


@dataclass(frozen=True)
class WorkstationFactorInputs:
    n_components: int = 0
    n_tools: int = 0
    physical_effort: float = 0.0
    variant_flora: float = 0.0
    noise_dBA: float = 45.0


@dataclass(frozen=True)
class LMParams:
    max_iterations: int = 50
    damping_init: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 0.1
    step_tolerance: float = 1e-10
    residual_tolerance: float = 1e-12


@dataclass(frozen=True)
class ServiceSettings:
    feedback_hz: float = 10.0
    reorder_window: float = 0.1     # seconds of tolerated ingest reordering
    warning_rearm: float = 10.0     # seconds before the same band re-warns
    token: str | None = None
    multi_session: bool = False
    sim_time_scale: float = 1.0


def _default_thresholds() -> dict[str, FactorThresholds]:
    return {
        "concentration_demand": FactorThresholds(12.0, 26.0),
        "instructions_cost": FactorThresholds(13.0, 26.1),
        "task_difficulty": FactorThresholds(6.0, 10.7),
        "frustration_by_failure": FactorThresholds(2.0, 4.7),
    }


def _default_weights() -> dict[str, float]:
    w = {
        "concentration_loss": 1.6,
        "learning_delay": 3.2,
        "concentration_demand": 1.6,
        "instructions_cost": 4.0,
        "task_difficulty": 2.2,
        "frustration_by_failure": 3.0,
        "tool_identification": 1.4,
    }
    w.update({name: 0.0 for name in STATIC_FACTORS})
    return w


@dataclass(frozen=True)
class SessionConfig:
    # raised-cosine control points, radians
    alpha_min_az: float = math.radians(10.0)
    alpha_max_az: float = math.radians(40.0)
    alpha_min_el: float = math.radians(15.0)
    alpha_max_el: float = math.radians(45.0)
    attention_threshold: float = 0.5
    gate_labels: tuple[str, ...] = ("assembly", "instructions")
    proximity_gate_radius: float = 1.5
    self_touch_distance: float = 0.15
    self_touch_hysteresis: float = 0.03
    self_touch_refractory: float = 2.0
    activity_window_tau: float = 2.0
    sigma_floor: float = 1e-4
    factor_thresholds: dict[str, FactorThresholds] = field(default_factory=_default_thresholds)
    factor_weights: dict[str, float] = field(default_factory=_default_weights)
    self_touch_impact: float = 0.2
    color_band_cutpoints: tuple[float, float, float] = (0.25, 0.5, 0.75)
    stress_band_cutpoints: tuple[float, float, float] = (0.5, 1.0, 1.5)
    components_cap: int = 20
    tools_cap: int = 10
    workstation_factors: WorkstationFactorInputs = field(default_factory=WorkstationFactorInputs)
    camera_intrinsics: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    lm: LMParams = field(default_factory=LMParams)
    # white-noise-acceleration intensity; sized for ~0.5 s head saccades
    # so the filtered pose lags attention shifts by only a frame or two
    kalman_process_noise: float = 5.0
    kalman_measurement_noise: float = 1e-2
    service: ServiceSettings = field(default_factory=ServiceSettings)

    def weight(self, factor: str) -> float:
        return self.factor_weights.get(factor, 0.0)

    def mental_effort_weight_sum(self) -> float:
        return math.fsum(self.factor_weights.get(f, 0.0) for f in MENTAL_EFFORT_FACTORS + STATIC_FACTORS)


def validate_config(config: SessionConfig) -> list[str]:
    """Check every SessionConfig invariant; violations are data, not failures."""
    v: list[str] = []
    for name, lo, hi in (
        ("azimuth", config.alpha_min_az, config.alpha_max_az),
        ("elevation", config.alpha_min_el, config.alpha_max_el),
    ):
        if not (0.0 < lo < hi):
            v.append(f"{name} control points: need 0 < alpha_min < alpha_max, got ({lo}, {hi})")
    if not (0.0 < config.attention_threshold < 1.0):
        v.append(f"attention_threshold: must lie in (0, 1), got {config.attention_threshold}")
    for label in config.gate_labels:
        if label not in WORKSTATION_LABELS:
            v.append(f"gate_labels: unknown workstation label {label!r}")
    if config.proximity_gate_radius <= 0.0:
        v.append("proximity_gate_radius: must be positive")
    if config.self_touch_distance <= 0.0:
        v.append("self_touch_distance: must be positive")
    if config.self_touch_hysteresis < 0.0:
        v.append("self_touch_hysteresis: must be non-negative")
    if config.self_touch_refractory < 0.0:
        v.append("self_touch_refractory: must be non-negative")
    if config.activity_window_tau <= 0.0:
        v.append("activity_window_tau: must be positive")
    if config.sigma_floor <= 0.0:
        v.append("sigma_floor: must be positive")
    for name, weight in config.factor_weights.items():
        if weight < 0.0:
            v.append(f"factor_weights[{name}]: must be non-negative, got {weight}")
        if weight > 0.0 and name not in INTRINSIC_FACTORS and name not in config.factor_thresholds:
            v.append(f"factor_weights[{name}]: weighted factor has no normalization threshold")
    for name, th in config.factor_thresholds.items():
        if th.instantaneous <= 0.0 or th.overall <= 0.0:
            v.append(f"factor_thresholds[{name}]: thresholds must be positive")
    for label, cuts in (
        ("color_band_cutpoints", config.color_band_cutpoints),
        ("stress_band_cutpoints", config.stress_band_cutpoints),
    ):
        if len(cuts) != 3 or not (cuts[0] < cuts[1] < cuts[2]):
            v.append(f"{label}: need three strictly ascending values, got {cuts}")
        elif label == "color_band_cutpoints" and not (0.0 < cuts[0] and cuts[2] < 1.0):
            v.append(f"{label}: cutpoints must lie in (0, 1), got {cuts}")
    wf = config.workstation_factors
    if wf.n_components < 0 or wf.n_tools < 0:
        v.append("workstation_factors: component/tool counts must be non-negative")
    for name, value in (("physical_effort", wf.physical_effort), ("variant_flora", wf.variant_flora)):
        if not (0.0 <= value <= 1.0):
            v.append(f"workstation_factors.{name}: must lie in [0, 1], got {value}")
    if config.components_cap <= 0 or config.tools_cap <= 0:
        v.append("components_cap/tools_cap: must be positive")
    intr = config.camera_intrinsics
    if intr.fx <= 0.0 or intr.fy <= 0.0:
        v.append("camera_intrinsics: focal lengths must be positive")
    if config.lm.max_iterations < 1:
        v.append("lm.max_iterations: must be at least 1")
    if config.kalman_process_noise <= 0.0 or config.kalman_measurement_noise <= 0.0:
        v.append("kalman noise parameters must be positive")
    if config.service.feedback_hz <= 0.0:
        v.append("service.feedback_hz: must be positive")
    return v


# ---------------------------------------------------------------------------
# Config document (YAML) round-trip. Angles in degrees, distances in meters.
# ---------------------------------------------------------------------------

def config_to_dict(config: SessionConfig) -> dict:
    return {
        "v": 1,
        "attention": {
            "azimuth_deg": {
                "min": math.degrees(config.alpha_min_az),
                "max": math.degrees(config.alpha_max_az),
            },
            "elevation_deg": {
                "min": math.degrees(config.alpha_min_el),
                "max": math.degrees(config.alpha_max_el),
            },
            "threshold": config.attention_threshold,
            "gate_labels": list(config.gate_labels),
        },
        "proximity": {"gate_radius_m": config.proximity_gate_radius},
        "self_touch": {
            "distance_m": config.self_touch_distance,
            "hysteresis_m": config.self_touch_hysteresis,
            "refractory_s": config.self_touch_refractory,
            "impact": config.self_touch_impact,
        },
        "activity": {
            "window_tau_s": config.activity_window_tau,
            "sigma_floor": config.sigma_floor,
        },
        "factors": {
            "thresholds": {
                name: {"instantaneous": th.instantaneous, "overall": th.overall}
                for name, th in sorted(config.factor_thresholds.items())
            },
            "weights": dict(sorted(config.factor_weights.items())),
            "components_cap": config.components_cap,
            "tools_cap": config.tools_cap,
        },
        "scores": {
            "band_cutpoints": list(config.color_band_cutpoints),
            "stress_band_cutpoints": list(config.stress_band_cutpoints),
        },
        "workstation": {
            "n_components": config.workstation_factors.n_components,
            "n_tools": config.workstation_factors.n_tools,
            "physical_effort": config.workstation_factors.physical_effort,
            "variant_flora": config.workstation_factors.variant_flora,
            "noise_dBA": config.workstation_factors.noise_dBA,
        },
        "camera": {
            "fx": config.camera_intrinsics.fx,
            "fy": config.camera_intrinsics.fy,
            "cx": config.camera_intrinsics.cx,
            "cy": config.camera_intrinsics.cy,
        },
        "pnp": {
            "max_iterations": config.lm.max_iterations,
            "damping_init": config.lm.damping_init,
            "damping_up": config.lm.damping_up,
            "damping_down": config.lm.damping_down,
            "step_tolerance": config.lm.step_tolerance,
            "residual_tolerance": config.lm.residual_tolerance,
        },
        "pose_filter": {
            "process_noise": config.kalman_process_noise,
            "measurement_noise": config.kalman_measurement_noise,
        },
        "service": {
            "feedback_hz": config.service.feedback_hz,
            "reorder_window_s": config.service.reorder_window,
            "warning_rearm_s": config.service.warning_rearm,
            "token": config.service.token,
            "multi_session": config.service.multi_session,
            "sim_time_scale": config.service.sim_time_scale,
        },
    }


def config_from_dict(doc: dict) -> SessionConfig:
    base = SessionConfig()
    try:
        att = doc.get("attention", {})
        az = att.get("azimuth_deg", {})
        el = att.get("elevation_deg", {})
        st = doc.get("self_touch", {})
        act = doc.get("activity", {})
        fac = doc.get("factors", {})
        sco = doc.get("scores", {})
        ws = doc.get("workstation", {})
        cam = doc.get("camera", {})
        pnp = doc.get("pnp", {})
        pf = doc.get("pose_filter", {})
        svc = doc.get("service", {})
        thresholds = {
            name: FactorThresholds(float(t["instantaneous"]), float(t["overall"]))
            for name, t in fac.get("thresholds", {}).items()
        } or dict(base.factor_thresholds)
        weights = {name: float(w) for name, w in fac.get("weights", {}).items()} or dict(base.factor_weights)
        return SessionConfig(
            alpha_min_az=math.radians(float(az.get("min", math.degrees(base.alpha_min_az)))),
            alpha_max_az=math.radians(float(az.get("max", math.degrees(base.alpha_max_az)))),
            alpha_min_el=math.radians(float(el.get("min", math.degrees(base.alpha_min_el)))),
            alpha_max_el=math.radians(float(el.get("max", math.degrees(base.alpha_max_el)))),
            attention_threshold=float(att.get("threshold", base.attention_threshold)),
            gate_labels=tuple(att.get("gate_labels", base.gate_labels)),
            proximity_gate_radius=float(doc.get("proximity", {}).get("gate_radius_m", base.proximity_gate_radius)),
            self_touch_distance=float(st.get("distance_m", base.self_touch_distance)),
            self_touch_hysteresis=float(st.get("hysteresis_m", base.self_touch_hysteresis)),
            self_touch_refractory=float(st.get("refractory_s", base.self_touch_refractory)),
            self_touch_impact=float(st.get("impact", base.self_touch_impact)),
            activity_window_tau=float(act.get("window_tau_s", base.activity_window_tau)),
            sigma_floor=float(act.get("sigma_floor", base.sigma_floor)),
            factor_thresholds=thresholds,
            factor_weights=weights,
            components_cap=int(fac.get("components_cap", base.components_cap)),
            tools_cap=int(fac.get("tools_cap", base.tools_cap)),
            color_band_cutpoints=tuple(sco.get("band_cutpoints", base.color_band_cutpoints)),
            stress_band_cutpoints=tuple(sco.get("stress_band_cutpoints", base.stress_band_cutpoints)),
            workstation_factors=WorkstationFactorInputs(
                n_components=int(ws.get("n_components", 0)),
                n_tools=int(ws.get("n_tools", 0)),
                physical_effort=float(ws.get("physical_effort", 0.0)),
                variant_flora=float(ws.get("variant_flora", 0.0)),
                noise_dBA=float(ws.get("noise_dBA", 45.0)),
            ),
            camera_intrinsics=CameraIntrinsics(
                fx=float(cam.get("fx", base.camera_intrinsics.fx)),
                fy=float(cam.get("fy", base.camera_intrinsics.fy)),
                cx=float(cam.get("cx", base.camera_intrinsics.cx)),
                cy=float(cam.get("cy", base.camera_intrinsics.cy)),
            ),
            lm=LMParams(
                max_iterations=int(pnp.get("max_iterations", base.lm.max_iterations)),
                damping_init=float(pnp.get("damping_init", base.lm.damping_init)),
                damping_up=float(pnp.get("damping_up", base.lm.damping_up)),
                damping_down=float(pnp.get("damping_down", base.lm.damping_down)),
                step_tolerance=float(pnp.get("step_tolerance", base.lm.step_tolerance)),
                residual_tolerance=float(pnp.get("residual_tolerance", base.lm.residual_tolerance)),
            ),
            kalman_process_noise=float(pf.get("process_noise", base.kalman_process_noise)),
            kalman_measurement_noise=float(pf.get("measurement_noise", base.kalman_measurement_noise)),
            service=ServiceSettings(
                feedback_hz=float(svc.get("feedback_hz", base.service.feedback_hz)),
                reorder_window=float(svc.get("reorder_window_s", base.service.reorder_window)),
                warning_rearm=float(svc.get("warning_rearm_s", base.service.warning_rearm)),
                token=svc.get("token"),
                multi_session=bool(svc.get("multi_session", False)),
                sim_time_scale=float(svc.get("sim_time_scale", 1.0)),
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config document: {exc}") from exc


def layout_to_dict(layout: WorkstationLayout) -> list[dict]:
    return [
        {"id": w.id, "label": w.label, "position": [float(x) for x in w.position]}
        for w in layout.workstations
    ]


def layout_from_dict(doc: list[dict]) -> WorkstationLayout:
    try:
        stations = tuple(
            Workstation(id=int(w["id"]), label=str(w["label"]), position=np.asarray(w["position"], dtype=float))
            for w in doc
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed layout document: {exc}") from exc
    return WorkstationLayout(stations)


def load_config_file(path) -> tuple[SessionConfig, WorkstationLayout | None]:
    """Load a YAML config document; returns the config plus optional layout."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config document must be a mapping")
    config = config_from_dict(doc)
    layout = layout_from_dict(doc["layout"]) if "layout" in doc else None
    return config, layout


def save_config_file(path, config: SessionConfig, layout: WorkstationLayout | None = None) -> None:
    doc = config_to_dict(config)
    if layout is not None:
        doc["layout"] = layout_to_dict(layout)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def default_layout() -> WorkstationLayout:
    """Desk-scale three-workstation arrangement used by fixtures and demos."""
    return WorkstationLayout((
        Workstation(1, "assembly", np.array([0.0, 0.45, 0.75])),
        Workstation(2, "instructions", np.array([0.45, 0.05, 0.85])),
        Workstation(3, "storage", np.array([-0.9, 0.3, 1.4])),
    ))
