"""Skeleton-stream consumers: workstation proximity, self-touch episodes
and the hyperactivity descriptor against a resting baseline."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    CalibrationError,
    SessionConfig,
    SkeletonFrame,
    Timestamp,
    UPPER_BODY_JOINTS,
    WorkstationLayout,
)


@dataclass(frozen=True)
class ProximityState:
    timestamp: Timestamp
    nearest: int               # workstation id
    horizontal_distance: float


@dataclass(frozen=True)
class SelfTouchEvent:
    instant: Timestamp
    hand: str  # "left" | "right"


@dataclass(frozen=True)
class SelfTouchState:
    """Per-hand episode bookkeeping; episodes de-duplicate occurrences."""
    left_open: bool = False
    right_open: bool = False
    last_left: float = -math.inf
    last_right: float = -math.inf


@dataclass(frozen=True)
class ActivityBaseline:
    joints: tuple[str, ...]
    mu: dict[str, float]      # mean windowed displacement sum, meters
    sigma: dict[str, float]   # sample standard deviation of window sums
    tau: float                # window length, seconds


def horizontal_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Distance in the camera (x, z) plane; y is vertical."""
    dx = a[0] - b[0]
    dz = a[2] - b[2]
    return math.hypot(dx, dz)


def classify_proximity(frame: SkeletonFrame, layout: WorkstationLayout) -> ProximityState | None:
    """Nearest workstation by horizontal neck distance; ties to lowest id.

    Returns None when the neck keypoint is missing so the caller can hold
    its previous state and tally a data gap.
    """
    neck = frame.get("neck")
    if neck is None:
        return None
    pos = neck.as_array()
    best_id = None
    best_d = math.inf
    for w in layout.workstations:
        d = horizontal_distance(pos, w.position)
        if d < best_d or (d == best_d and (best_id is None or w.id < best_id)):
            best_d = d
            best_id = w.id
    return ProximityState(frame.timestamp, best_id, best_d)


def _hand_position(frame: SkeletonFrame, side: str) -> np.ndarray | None:
    # Prefer the hand keypoint, fall back to the wrist.
    kp = frame.get(f"{side}_hand") or frame.get(f"{side}_wrist")
    return None if kp is None else kp.as_array()


def detect_self_touch(
    frame: SkeletonFrame,
    config: SessionConfig,
    state: SelfTouchState,
) -> tuple[SelfTouchState, SelfTouchEvent | None]:
    """Episode-based hand-to-head contact detection.

    An event is emitted when a hand first dips below the contact
    distance; the episode stays open until the hand retreats past
    distance + hysteresis, and a refractory period suppresses rapid
    re-triggering. At most one event is emitted per call (left before
    right if both cross in the same frame).
    """
    head = frame.get("head")
    if head is None:
        return state, None
    head_pos = head.as_array()
    t = frame.timestamp
    event: SelfTouchEvent | None = None

    for side in ("left", "right"):
        hand = _hand_position(frame, side)
        if hand is None:
            continue  # episode held
        dist = float(np.linalg.norm(hand - head_pos))
        is_open = state.left_open if side == "left" else state.right_open
        last = state.last_left if side == "left" else state.last_right
        if is_open:
            if dist >= config.self_touch_distance + config.self_touch_hysteresis:
                state = replace(state, **{f"{side}_open": False})
        elif dist < config.self_touch_distance:
            state = replace(state, **{f"{side}_open": True})
            if t - last >= config.self_touch_refractory and event is None:
                event = SelfTouchEvent(t, side)
                state = replace(state, **{f"last_{side}": t})
    return state, event


def _displacement_samples(
    frames: list[SkeletonFrame], joints: tuple[str, ...]
) -> tuple[list[float], dict[str, list[float]]]:
    """Per-joint inter-frame displacements; sample i is stamped with the
    later frame's timestamp."""
    times: list[float] = []
    disp: dict[str, list[float]] = {j: [] for j in joints}
    for prev, cur in zip(frames, frames[1:]):
        times.append(cur.timestamp)
        for j in joints:
            a = prev.get(j)
            b = cur.get(j)
            if a is None or b is None:
                raise CalibrationError(f"joint {j!r} missing from skeleton stream")
            disp[j].append(float(np.linalg.norm(b.as_array() - a.as_array())))
    return times, disp


def window_sums(
    frames: list[SkeletonFrame], tau: float, joints: tuple[str, ...] = UPPER_BODY_JOINTS
) -> dict[str, float]:
    """Sum of inter-frame displacements within the trailing tau seconds."""
    if len(frames) < 2:
        return {j: 0.0 for j in joints}
    times, disp = _displacement_samples(frames, joints)
    t_end = frames[-1].timestamp
    out = {}
    for j in joints:
        out[j] = sum(d for t, d in zip(times, disp[j]) if t > t_end - tau)
    return out


def calibrate_baseline(
    resting_frames: list[SkeletonFrame],
    tau: float,
    joints: tuple[str, ...] = UPPER_BODY_JOINTS,
) -> ActivityBaseline:
    """Mean/stddev of sliding-window displacement sums from a resting
    recording spanning at least 10 windows."""
    if len(resting_frames) < 2:
        raise CalibrationError("resting recording too short: need at least two frames")
    span = resting_frames[-1].timestamp - resting_frames[0].timestamp
    if span < 10.0 * tau:
        raise CalibrationError(
            f"resting recording spans {span:.2f}s; calibration needs at least {10.0 * tau:.2f}s"
        )
    times, disp = _displacement_samples(resting_frames, joints)
    t0 = resting_frames[0].timestamp
    ends = [t for t in times if t >= t0 + tau]
    if not ends:
        raise CalibrationError("no complete window inside the resting recording")
    mu: dict[str, float] = {}
    sigma: dict[str, float] = {}
    for j in joints:
        sums = []
        for t_end in ends:
            sums.append(sum(d for t, d in zip(times, disp[j]) if t > t_end - tau and t <= t_end))
        arr = np.asarray(sums)
        mu[j] = float(arr.mean())
        sigma[j] = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return ActivityBaseline(tuple(joints), mu, sigma, tau)


def activity_from_sums(
    sums: dict[str, float], baseline: ActivityBaseline, sigma_floor: float
) -> float:
    """Mean over joints of the window-sum exceedance ratio."""
    total = 0.0
    for j in baseline.joints:
        sigma = max(baseline.sigma[j], sigma_floor)
        delta = sums[j] - baseline.mu[j]
        if delta > sigma:
            total += delta / sigma
    return total / len(baseline.joints)


def activity_level(
    recent_frames: list[SkeletonFrame],
    baseline: ActivityBaseline | None,
    sigma_floor: float = 1e-4,
) -> float:
    if baseline is None:
        raise CalibrationError("hyperactivity requires a resting baseline")
    sums = window_sums(recent_frames, baseline.tau, baseline.joints)
    return activity_from_sums(sums, baseline, sigma_floor)


class ActivityTracker:
    """Streaming window of skeleton frames feeding the activity descriptor.

    Keeps the raw frames inside the trailing window and recomputes the
    window sums on demand, so streaming values match the pure
    :func:`activity_level` recomputation exactly.
    """

    def __init__(self, baseline: ActivityBaseline | None, sigma_floor: float):
        self.baseline = baseline
        self.sigma_floor = sigma_floor
        self._frames: deque[SkeletonFrame] = deque()
        self._first_t: float | None = None

    def push(self, frame: SkeletonFrame) -> float | None:
        """Returns the current descriptor, or None until calibrated and
        the window is fully populated."""
        if self._first_t is None:
            self._first_t = frame.timestamp
        self._frames.append(frame)
        if self.baseline is None:
            # keep a single frame of history so calibration hand-off is cheap
            while len(self._frames) > 1:
                self._frames.popleft()
            return None
        tau = self.baseline.tau
        # retain one sample before the window edge: displacement samples
        # are stamped on the later frame
        while len(self._frames) > 2 and self._frames[1].timestamp <= frame.timestamp - tau:
            self._frames.popleft()
        if frame.timestamp - self._first_t < tau:
            return None
        sums = window_sums(list(self._frames), tau, self.baseline.joints)
        return activity_from_sums(sums, self.baseline, self.sigma_floor)
