"""Per-frame attention resolution: workstation directions in the head
frame, raised-cosine fuzzy membership, and focus selection.

Spherical convention (documented with the face model): the head's facing
axis is -z of the head frame, "up" is -y, "right" is +x. Azimuth is
measured from the facing axis toward +x, elevation from the horizontal
plane toward up. A workstation the head looks straight at sits at
(theta, phi) = (0, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CogloadError,
    ConfigError,
    RigidTransform,
    SessionConfig,
    Timestamp,
    WorkstationLayout,
)

DISTRACTED = 0  # focus sentinel: no workstation holds the operator's attention


@dataclass(frozen=True)
class SphericalDirection:
    azimuth: float    # radians, (-pi, pi]
    elevation: float  # radians, [-pi/2, pi/2]
    radius: float     # meters, > 0


@dataclass(frozen=True)
class AttentionState:
    timestamp: Timestamp
    levels: dict[int, float]   # workstation id -> attention level in [0, 1]
    focus: int                 # workstation id, or DISTRACTED
    gated: bool                # proximity gate permitted attention evaluation


def workstation_in_head_frame(head_pose: RigidTransform, workstation_pos: np.ndarray) -> np.ndarray:
    """Map a camera-frame workstation position into the head frame."""
    return head_pose.inverse().apply(np.asarray(workstation_pos, dtype=float))


def cartesian_to_spherical(p: np.ndarray) -> SphericalDirection:
    p = np.asarray(p, dtype=float).reshape(3)
    radius = float(np.linalg.norm(p))
    if radius == 0.0:
        raise CogloadError("cannot compute direction of the zero vector")
    forward = -p[2]
    right = p[0]
    up = -p[1]
    azimuth = math.atan2(right, forward)
    elevation = math.asin(max(-1.0, min(1.0, up / radius)))
    return SphericalDirection(azimuth, elevation, radius)


def membership(alpha: float, alpha_min: float, alpha_max: float) -> float:
    """Raised-cosine fuzzy membership of an angle.

    Flat at 1 inside |alpha| <= alpha_min, decays smoothly to 0 at
    alpha_max, 0 beyond; continuous at both knots.
    """
    if not (0.0 < alpha_min < alpha_max):
        raise ConfigError(f"need 0 < alpha_min < alpha_max, got ({alpha_min}, {alpha_max})")
    a = abs(alpha)
    if a <= alpha_min:
        return 1.0
    if a > alpha_max:
        return 0.0
    return 0.5 * (1.0 + math.cos(math.pi * (a - alpha_min) / (alpha_max - alpha_min)))


def attention_level(theta: float, phi: float, config: SessionConfig) -> float:
    """Product of the azimuth and elevation memberships."""
    return membership(theta, config.alpha_min_az, config.alpha_max_az) * membership(
        phi, config.alpha_min_el, config.alpha_max_el
    )


def evaluate_levels(head_pose: RigidTransform, layout: WorkstationLayout, config: SessionConfig) -> dict[int, float]:
    """Attention level toward every workstation for one head pose."""
    inv = head_pose.inverse()
    levels: dict[int, float] = {}
    for w in layout.workstations:
        direction = cartesian_to_spherical(inv.apply(w.position))
        levels[w.id] = attention_level(direction.azimuth, direction.elevation, config)
    return levels


def resolve_focus(
    timestamp: Timestamp,
    levels: dict[int, float],
    nearest_workstation: int | None,
    layout: WorkstationLayout,
    config: SessionConfig,
    gate_open: bool = True,
) -> AttentionState:
    """Select the focused workstation, or DISTRACTED.

    The proximity gate: attention is only evaluated while the operator is
    near a gate workstation (assembly or instructions by default). When
    the gate is closed every output level is zeroed. Ties break toward
    the lowest workstation id for deterministic replay.
    """
    gated = gate_open and nearest_workstation is not None
    if gated:
        label = layout.by_id(nearest_workstation).label
        gated = label in config.gate_labels
    if not gated:
        return AttentionState(timestamp, {ws_id: 0.0 for ws_id in levels}, DISTRACTED, False)

    focus = DISTRACTED
    best = -1.0
    for ws_id in sorted(levels):
        value = levels[ws_id]
        if value >= config.attention_threshold and value > best:
            best = value
            focus = ws_id
    return AttentionState(timestamp, dict(levels), focus, True)
