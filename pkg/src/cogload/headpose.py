"""Camera->head pose estimation from 2D facial landmarks.

Pipeline: iterative PnP (Levenberg-Marquardt on the 6-DoF pose, rotation
as a rotation vector) minimizing the sum of squared reprojection
distances, followed by a constant-velocity Kalman filter that stabilizes
the pose frame to frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import (
    CameraIntrinsics,
    CogloadError,
    FaceFrame,
    LMParams,
    OrderingError,
    RigidTransform,
    Timestamp,
    _readonly,
    _skew,
    rotvec_to_matrix,
)


class ProjectionDomainError(CogloadError):
    """A point to project has non-positive depth in the camera frame."""


class SingularProblemError(CogloadError):
    """The PnP problem is degenerate (e.g. all landmarks coincident)."""


@dataclass(frozen=True, eq=False)
class FaceModel:
    """68 canonical 3D face landmarks in the head frame, meters.

    Head frame: +x right, +y down, +z into the head; the face points
    along -z, so the nose tip has the most negative z of the model.
    """

    points: np.ndarray  # (68, 3)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.shape != (68, 3):
            raise ValueError(f"face model needs 68 points, got shape {pts.shape}")
        centered = pts - pts.mean(axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-9) != 3:
            raise ValueError("face model points are coplanar; need full 3D extent")
        object.__setattr__(self, "points", _readonly(pts))


def load_face_model(path=None) -> FaceModel:
    """Read a 68-row `index x y z` table; '#' lines are comments."""
    if path is None:
        text = resources.files("cogload.data").joinpath("face_model_68.txt").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    rows: dict[int, tuple[float, float, float]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"face model line {lineno}: expected 'index x y z'")
        rows[int(parts[0])] = (float(parts[1]), float(parts[2]), float(parts[3]))
    if sorted(rows) != list(range(68)):
        raise ValueError("face model must define indices 0..67 exactly once")
    return FaceModel(np.array([rows[i] for i in range(68)]))


@dataclass(frozen=True)
class PnPSolution:
    pose: RigidTransform        # camera <- head
    residual: float             # RMS reprojection error, pixels
    iterations: int
    converged: bool
    residual_history: tuple[float, ...] = ()  # cost after each accepted step


def project_points(points: np.ndarray, pose: RigidTransform, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Pinhole projection of head-frame points; raises on non-positive depth."""
    cam = pose.apply(np.atleast_2d(points))
    z = cam[:, 2]
    if np.any(z <= 0.0):
        raise ProjectionDomainError("point behind the camera (non-positive depth)")
    u = intrinsics.fx * cam[:, 0] / z + intrinsics.cx
    v = intrinsics.fy * cam[:, 1] / z + intrinsics.cy
    return np.column_stack([u, v])


def project(point: np.ndarray, pose: RigidTransform, intrinsics: CameraIntrinsics) -> tuple[float, float]:
    uv = project_points(np.asarray(point, dtype=float).reshape(1, 3), pose, intrinsics)
    return float(uv[0, 0]), float(uv[0, 1])


def reprojection_error(
    pose: RigidTransform,
    model: FaceModel,
    observed: FaceFrame,
    intrinsics: CameraIntrinsics,
) -> float:
    """Sum of squared pixel distances between observed and projected landmarks."""
    projected = project_points(model.points, pose, intrinsics)
    d = projected - observed.landmarks
    return float(np.sum(d * d))


def reprojection_rms(
    pose: RigidTransform,
    model: FaceModel,
    observed: FaceFrame,
    intrinsics: CameraIntrinsics,
) -> float:
    return math.sqrt(reprojection_error(pose, model, observed, intrinsics) / len(model.points))


def _rotation_jacobian(rvec: np.ndarray, R: np.ndarray) -> list[np.ndarray]:
    """d(R)/d(rvec_i) for i = 0..2 (Gallego & Yezzi compact formula)."""
    theta_sq = float(rvec @ rvec)
    if theta_sq < 1e-16:
        return [_skew(e) for e in np.eye(3)]
    out = []
    ImR = np.eye(3) - R
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        w = np.cross(rvec, ImR @ e)
        out.append((rvec[i] * _skew(rvec) + _skew(w)) @ R / theta_sq)
    return out


def residuals_and_jacobian(
    params: np.ndarray,
    model: FaceModel,
    observed: FaceFrame,
    intrinsics: CameraIntrinsics,
) -> tuple[np.ndarray, np.ndarray]:
    """Stacked pixel residuals (2N,) and their Jacobian (2N, 6).

    ``params`` is [rvec, tvec]; residual ordering is (du0, dv0, du1, ...).
    """
    rvec, tvec = params[:3], params[3:]
    R = rotvec_to_matrix(rvec)
    pts = model.points
    cam = pts @ R.T + tvec
    z = cam[:, 2]
    if np.any(z <= 0.0):
        raise ProjectionDomainError("pose places the face model at non-positive depth")
    n = len(pts)
    u = intrinsics.fx * cam[:, 0] / z + intrinsics.cx
    v = intrinsics.fy * cam[:, 1] / z + intrinsics.cy
    res = np.empty(2 * n)
    res[0::2] = u - observed.landmarks[:, 0]
    res[1::2] = v - observed.landmarks[:, 1]

    # d(camera point)/d(rvec): one (N, 3) block per rotation component.
    dR = _rotation_jacobian(rvec, R)
    dcam_dr = np.stack([pts @ dRi.T for dRi in dR], axis=2)  # (N, 3, 3)

    inv_z = 1.0 / z
    du_dcam = np.zeros((n, 3))
    du_dcam[:, 0] = intrinsics.fx * inv_z
    du_dcam[:, 2] = -intrinsics.fx * cam[:, 0] * inv_z * inv_z
    dv_dcam = np.zeros((n, 3))
    dv_dcam[:, 1] = intrinsics.fy * inv_z
    dv_dcam[:, 2] = -intrinsics.fy * cam[:, 1] * inv_z * inv_z

    J = np.empty((2 * n, 6))
    J[0::2, :3] = np.einsum("nk,nkj->nj", du_dcam, dcam_dr)
    J[1::2, :3] = np.einsum("nk,nkj->nj", dv_dcam, dcam_dr)
    J[0::2, 3:] = du_dcam
    J[1::2, 3:] = dv_dcam
    return res, J


def solve_pnp(
    model: FaceModel,
    observed: FaceFrame,
    intrinsics: CameraIntrinsics,
    initial: RigidTransform | None = None,
    lm_params: LMParams | None = None,
) -> PnPSolution:
    """Levenberg-Marquardt PnP: the pose minimizing reprojection error.

    The damping multiplies diag(J^T J); steps are accepted only when they
    reduce the cost, so the accepted-step residual sequence is
    non-increasing. Convergence: step norm below ``step_tolerance`` or
    accepted cost change below ``residual_tolerance``.
    """
    lm = lm_params or LMParams()
    if initial is None:
        initial = RigidTransform(np.eye(3), np.array([0.0, 0.0, 1.0]))
    n = len(model.points)
    params = np.concatenate([initial.rotvec(), initial.translation])
    res, J = residuals_and_jacobian(params, model, observed, intrinsics)
    cost = float(res @ res)

    JTJ = J.T @ J
    eig = np.linalg.eigvalsh(JTJ)
    if eig[-1] <= 0.0 or eig[0] / eig[-1] < 1e-14:
        raise SingularProblemError("reprojection Jacobian is rank-deficient")

    history = [cost]

    def solution(iterations: int, converged: bool) -> PnPSolution:
        pose = RigidTransform.from_rotvec(params[:3], params[3:])
        return PnPSolution(pose, math.sqrt(cost / n), iterations, converged, tuple(history))

    if cost <= lm.residual_tolerance:
        return solution(0, True)

    lam = lm.damping_init
    for it in range(1, lm.max_iterations + 1):
        g = J.T @ res
        D = np.maximum(np.diag(JTJ), 1e-12)
        try:
            step = np.linalg.solve(JTJ + lam * np.diag(D), -g)
        except np.linalg.LinAlgError as exc:
            raise SingularProblemError("normal equations singular") from exc
        if np.linalg.norm(step) < lm.step_tolerance:
            return solution(it, True)
        trial = params + step
        try:
            trial_res, trial_J = residuals_and_jacobian(trial, model, observed, intrinsics)
            trial_cost = float(trial_res @ trial_res)
        except ProjectionDomainError:
            trial_cost = math.inf
        if trial_cost < cost:
            improvement = cost - trial_cost
            params, res, J, cost = trial, trial_res, trial_J, trial_cost
            history.append(cost)
            JTJ = J.T @ J
            lam = max(lam * lm.damping_down, 1e-12)
            if improvement <= lm.residual_tolerance or cost <= lm.residual_tolerance:
                return solution(it, True)
        else:
            lam *= lm.damping_up
            if lam > 1e14:
                # Damping exhausted: no further step can improve the fit.
                return solution(it, True)
    return solution(lm.max_iterations, False)


# ---------------------------------------------------------------------------
# Pose stabilization: constant-velocity Kalman filter on [t, rvec] + rates.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PoseFilterState:
    x: np.ndarray              # (12,) [t(3), rvec(3), vel_t(3), vel_r(3)]
    P: np.ndarray              # (12, 12) covariance
    last_timestamp: Timestamp

    def __post_init__(self):
        object.__setattr__(self, "x", _readonly(np.asarray(self.x, dtype=float).reshape(12)))
        object.__setattr__(self, "P", _readonly(np.asarray(self.P, dtype=float).reshape(12, 12)))

    def pose(self) -> RigidTransform:
        return RigidTransform.from_rotvec(self.x[3:6], self.x[0:3])


def _nearest_rotvec_branch(rvec: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Pick the 2*pi-equivalent rotation vector closest to ``reference``."""
    theta = float(np.linalg.norm(rvec))
    if theta < 1e-9:
        return rvec
    axis = rvec / theta
    best = rvec
    best_d = float(np.linalg.norm(rvec - reference))
    for k in (-1, 1):
        cand = (theta + 2.0 * math.pi * k) * axis
        d = float(np.linalg.norm(cand - reference))
        if d < best_d:
            best, best_d = cand, d
    return best


def filter_pose(
    state: PoseFilterState | None,
    measurement: PnPSolution,
    timestamp: Timestamp,
    process_noise: float = 1e-4,
    measurement_noise: float = 1e-2,
) -> tuple[PoseFilterState, RigidTransform]:
    """Predict-update step; returns the new state and the smoothed pose."""
    z = np.concatenate([measurement.pose.translation, measurement.pose.rotvec()])
    if state is None:
        x = np.concatenate([z, np.zeros(6)])
        P = np.diag([measurement_noise] * 6 + [1.0] * 6)
        st = PoseFilterState(x, P, timestamp)
        return st, st.pose()

    if timestamp < state.last_timestamp:
        raise OrderingError(
            f"pose filter fed backwards: {timestamp} < {state.last_timestamp}"
        )
    dt = timestamp - state.last_timestamp

    F = np.eye(12)
    F[0:6, 6:12] = dt * np.eye(6)
    # Continuous white-noise-acceleration process model, per DoF.
    q = process_noise
    Q = np.zeros((12, 12))
    Q[0:6, 0:6] = q * (dt ** 3 / 3.0) * np.eye(6)
    Q[0:6, 6:12] = q * (dt ** 2 / 2.0) * np.eye(6)
    Q[6:12, 0:6] = q * (dt ** 2 / 2.0) * np.eye(6)
    Q[6:12, 6:12] = q * dt * np.eye(6)

    x_pred = F @ state.x
    P_pred = F @ state.P @ F.T + Q

    z = np.concatenate([z[:3], _nearest_rotvec_branch(z[3:], x_pred[3:6])])
    H = np.zeros((6, 12))
    H[:, :6] = np.eye(6)
    R = measurement_noise * np.eye(6)
    S = H @ P_pred @ H.T + R
    K = P_pred @ H.T @ np.linalg.inv(S)
    x_new = x_pred + K @ (z - H @ x_pred)
    IKH = np.eye(12) - K @ H
    P_new = IKH @ P_pred @ IKH.T + K @ R @ K.T  # Joseph form keeps P PSD
    P_new = (P_new + P_new.T) / 2.0

    st = PoseFilterState(x_new, P_new, timestamp)
    return st, st.pose()
