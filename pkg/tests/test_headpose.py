import math

import numpy as np
import pytest

from cogload.core import CameraIntrinsics, FaceFrame, RigidTransform, matrix_to_rotvec
from cogload.headpose import (
    FaceModel,
    PnPSolution,
    ProjectionDomainError,
    SingularProblemError,
    filter_pose,
    project,
    project_points,
    reprojection_error,
    reprojection_rms,
    residuals_and_jacobian,
    solve_pnp,
)


def pose_from(rvec, tvec):
    return RigidTransform.from_rotvec(np.asarray(rvec, float), np.asarray(tvec, float))


def random_pose(rng, depth_range=(0.6, 1.2)):
    rvec = rng.normal(size=3)
    rvec = rvec / np.linalg.norm(rvec) * rng.uniform(0.0, 0.5)
    tvec = np.array([rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(*depth_range)])
    return pose_from(rvec, tvec)


def rotation_error(a: RigidTransform, b: RigidTransform) -> float:
    return float(np.linalg.norm(matrix_to_rotvec(a.rotation.T @ b.rotation)))


class TestFaceModel:
    def test_bundled_model_loads(self, face_model):
        assert face_model.points.shape == (68, 3)

    def test_coplanar_model_rejected(self):
        flat = np.zeros((68, 3))
        flat[:, 0] = np.arange(68)
        flat[:, 1] = np.arange(68) ** 2
        with pytest.raises(ValueError, match="coplanar"):
            FaceModel(flat)

    def test_wrong_count_rejected(self):
        with pytest.raises(ValueError, match="68"):
            FaceModel(np.zeros((10, 3)))


class TestProjection:
    def test_optical_axis_hits_principal_point(self):
        intr = CameraIntrinsics(fx=500, fy=500, cx=320, cy=320)
        assert project(np.array([0.0, 0.0, 1.0]), RigidTransform.identity(), intr) == (320.0, 320.0)

    def test_unit_offset(self):
        intr = CameraIntrinsics(fx=500, fy=500, cx=320, cy=320)
        u, v = project(np.array([0.1, 0.0, 1.0]), RigidTransform.identity(), intr)
        assert (u, v) == (370.0, 320.0)

    def test_negative_depth_raises(self):
        intr = CameraIntrinsics()
        with pytest.raises(ProjectionDomainError):
            project(np.array([0.0, 0.0, -1.0]), RigidTransform.identity(), intr)

    def test_matches_independent_projector(self, rng, intrinsics):
        # second implementation: homogeneous K[R|t] matrix product
        K = np.array([
            [intrinsics.fx, 0, intrinsics.cx],
            [0, intrinsics.fy, intrinsics.cy],
            [0, 0, 1],
        ])
        for _ in range(100):
            pose = random_pose(rng)
            p = rng.normal(scale=0.05, size=3)
            P = np.hstack([pose.rotation, pose.translation.reshape(3, 1)])
            h = K @ P @ np.append(p, 1.0)
            expected = h[:2] / h[2]
            got = project(p, pose, intrinsics)
            assert np.abs(np.asarray(got) - expected).max() < 1e-9


class TestReprojectionError:
    def test_exact_projection_zero(self, face_model, intrinsics):
        pose = pose_from([0.1, 0.2, 0.0], [0.0, 0.0, 0.9])
        obs = FaceFrame(0.0, project_points(face_model.points, pose, intrinsics))
        assert reprojection_error(pose, face_model, obs, intrinsics) == 0.0

    def test_single_perturbation(self, face_model, intrinsics):
        pose = pose_from([0.0, 0.0, 0.0], [0.0, 0.0, 0.9])
        uv = project_points(face_model.points, pose, intrinsics)
        uv = uv.copy()
        uv[10] += np.array([3.0, 4.0])
        obs = FaceFrame(0.0, uv)
        assert reprojection_error(pose, face_model, obs, intrinsics) == pytest.approx(25.0, abs=1e-12)

    def test_matches_naive_loop(self, face_model, intrinsics, rng):
        pose = random_pose(rng)
        uv = project_points(face_model.points, pose, intrinsics) + rng.normal(size=(68, 2))
        obs = FaceFrame(0.0, uv)
        naive = 0.0
        for i in range(68):
            pu, pv = project(face_model.points[i], pose, intrinsics)
            naive += (pu - uv[i, 0]) ** 2 + (pv - uv[i, 1]) ** 2
        assert reprojection_error(pose, face_model, obs, intrinsics) == pytest.approx(naive, abs=1e-9)
        rms = reprojection_rms(pose, face_model, obs, intrinsics)
        assert rms == pytest.approx(math.sqrt(naive / 68), abs=1e-12)


class TestSolvePnP:
    def test_recovers_synthetic_pose(self, face_model, intrinsics):
        truth = pose_from([0.0, math.radians(15.0), 0.0], [0.05, -0.02, 0.8])
        obs = FaceFrame(0.0, project_points(face_model.points, truth, intrinsics))
        sol = solve_pnp(face_model, obs, intrinsics)
        assert sol.converged
        assert rotation_error(sol.pose, truth) < 1e-6
        assert np.linalg.norm(sol.pose.translation - truth.translation) < 1e-6

    def test_already_optimal_is_untouched(self, face_model, intrinsics):
        truth = pose_from([0.05, -0.1, 0.02], [0.0, 0.05, 0.9])
        obs = FaceFrame(0.0, project_points(face_model.points, truth, intrinsics))
        sol = solve_pnp(face_model, obs, intrinsics, initial=truth)
        assert sol.converged
        assert sol.iterations == 0
        assert sol.residual == 0.0
        assert np.allclose(sol.pose.rotation, truth.rotation)
        assert np.allclose(sol.pose.translation, truth.translation)

    def test_noisy_recovery(self, face_model, intrinsics, rng):
        failures = 0
        for _ in range(20):
            truth = random_pose(rng, depth_range=(0.75, 0.85))
            uv = project_points(face_model.points, truth, intrinsics)
            obs = FaceFrame(0.0, uv + rng.normal(scale=1.0, size=uv.shape))
            sol = solve_pnp(face_model, obs, intrinsics)
            if rotation_error(sol.pose, truth) > 5e-3 or np.linalg.norm(sol.pose.translation - truth.translation) > 5e-3:
                failures += 1
        assert failures == 0

    def test_residual_history_non_increasing(self, face_model, intrinsics, rng):
        for _ in range(10):
            truth = random_pose(rng)
            uv = project_points(face_model.points, truth, intrinsics)
            obs = FaceFrame(0.0, uv + rng.normal(scale=2.0, size=uv.shape))
            sol = solve_pnp(face_model, obs, intrinsics)
            hist = sol.residual_history
            assert all(b <= a for a, b in zip(hist, hist[1:]))

    def test_degenerate_landmarks_raise(self, intrinsics):
        # coincident landmarks violate the FaceModel invariant, so build
        # the degenerate model behind its back to exercise the guard
        model = object.__new__(FaceModel)
        object.__setattr__(model, "points", np.zeros((68, 3)))
        obs = FaceFrame(0.0, np.tile([320.0, 240.0], (68, 1)))
        with pytest.raises(SingularProblemError):
            solve_pnp(model, obs, intrinsics)

    def test_negative_initial_depth_raises(self, face_model, intrinsics):
        truth = pose_from([0, 0, 0], [0, 0, 0.8])
        obs = FaceFrame(0.0, project_points(face_model.points, truth, intrinsics))
        bad_init = pose_from([0, 0, 0], [0, 0, -1.0])
        with pytest.raises(ProjectionDomainError):
            solve_pnp(face_model, obs, intrinsics, initial=bad_init)

    def test_gauge_consistency(self, face_model, intrinsics, rng):
        truth = random_pose(rng)
        obs = FaceFrame(0.0, project_points(face_model.points, truth, intrinsics))
        base = reprojection_error(truth, face_model, obs, intrinsics)

        Q = random_pose(rng, depth_range=(-0.1, 0.1))
        moved_model = FaceModel(Q.inverse().apply(face_model.points))
        moved_pose = truth.compose(Q)
        moved = reprojection_error(moved_pose, moved_model, obs, intrinsics)
        assert abs(moved - base) < 1e-9


class TestJacobian:
    def test_matches_central_differences(self, face_model, intrinsics, rng):
        h = 1e-6
        for _ in range(50):
            truth = random_pose(rng)
            uv = project_points(face_model.points, truth, intrinsics)
            obs = FaceFrame(0.0, uv + rng.normal(scale=2.0, size=uv.shape))
            params = np.concatenate([truth.rotvec(), truth.translation])
            _, J = residuals_and_jacobian(params, face_model, obs, intrinsics)
            J_fd = np.zeros_like(J)
            for i in range(6):
                dp = np.zeros(6)
                dp[i] = h
                rp, _ = residuals_and_jacobian(params + dp, face_model, obs, intrinsics)
                rm, _ = residuals_and_jacobian(params - dp, face_model, obs, intrinsics)
                J_fd[:, i] = (rp - rm) / (2 * h)
            scale = np.abs(J_fd).max()
            assert np.abs(J - J_fd).max() / scale < 1e-4


def constant_measurement(pose):
    return PnPSolution(pose, 0.0, 0, True)


class TestPoseFilter:
    def test_converges_to_constant_measurement(self):
        target = pose_from([0.1, -0.2, 0.05], [0.02, -0.01, 0.85])
        meas = constant_measurement(target)
        state = None
        for k in range(200):
            state, filtered = filter_pose(state, meas, k / 30.0)
        assert np.abs(filtered.translation - target.translation).max() < 1e-4
        assert np.abs(state.x[3:6] - target.rotvec()).max() < 1e-4

    def test_outlier_is_smoothed(self):
        base = pose_from([0, 0, 0], [0.0, 0.0, 0.8])
        state = None
        for k in range(60):
            state, filtered = filter_pose(state, constant_measurement(base), k / 30.0)
        jumped = pose_from([0, 0, 0], [0.5, 0.0, 0.8])
        state, filtered = filter_pose(state, constant_measurement(jumped), 2.0)
        deviation = abs(filtered.translation[0] - base.translation[0])
        assert deviation < 0.5
        assert deviation > 0.0

    def test_ramp_lag_matches_constant_velocity_model(self):
        # a constant-velocity Kalman filter tracks a ramp with zero
        # steady-state lag; allow 10% of one frame's motion as residual
        v = 0.1  # m/s along x
        dt = 1.0 / 30.0
        state = None
        for k in range(600):
            t = k * dt
            meas = constant_measurement(pose_from([0, 0, 0], [v * t, 0.0, 0.8]))
            state, filtered = filter_pose(state, meas, t)
        lag = v * (599 * dt) - filtered.translation[0]
        assert abs(lag) <= 0.1 * v * dt

    def test_covariance_stays_symmetric_psd(self, rng):
        state = None
        for k in range(300):
            pose = random_pose(rng)
            state, _ = filter_pose(state, constant_measurement(pose), k / 30.0)
            P = state.P
            assert np.abs(P - P.T).max() < 1e-9
            assert np.linalg.eigvalsh(P).min() > -1e-9

    def test_backwards_timestamp_rejected(self):
        from cogload.core import OrderingError

        state, _ = filter_pose(None, constant_measurement(pose_from([0, 0, 0], [0, 0, 1.0])), 1.0)
        with pytest.raises(OrderingError):
            filter_pose(state, constant_measurement(pose_from([0, 0, 0], [0, 0, 1.0])), 0.5)
