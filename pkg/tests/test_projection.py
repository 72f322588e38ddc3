import numpy as np
import pytest

from splatnav.camera import Camera, pose_world_to_camera
from splatnav.projection import (
    RenderStats,
    build_cov3d,
    project_cloud,
    project_gaussian,
    projection_jacobian,
)
from splatnav.synthetic import random_cloud
from splatnav.transforms import quat_normalize


@pytest.fixture
def identity_camera():
    """Camera at origin looking along its +z axis (camera frame == world)."""
    return Camera(fx=80.0, fy=80.0, cx=32.0, cy=32.0, width=64, height=64,
                  near=0.1, far=50.0, world_to_camera=np.eye(4))


def test_on_axis_point_projects_to_principal_point(identity_camera):
    splat = project_gaussian(np.array([0.0, 0.0, 2.0]), 0.01 * np.eye(3), identity_camera)
    np.testing.assert_allclose(splat.mean2d, [32.0, 32.0], atol=1e-12)
    assert splat.depth == pytest.approx(2.0)


def test_isotropic_on_axis_cov2d_closed_form(identity_camera):
    s = 0.05
    z = 2.0
    splat = project_gaussian(np.array([0.0, 0.0, z]), s * s * np.eye(3), identity_camera)
    expected = (identity_camera.fx * s / z) ** 2
    # regularization adds 0.3 px^2 on the diagonal
    np.testing.assert_allclose(splat.cov2d, np.diag([expected + 0.3, expected + 0.3]), atol=1e-9)


def test_jacobian_matches_central_finite_differences():
    rng = np.random.default_rng(0)
    fx, fy = 90.0, 75.0

    def pinhole(p):
        return np.array([fx * p[0] / p[2], fy * p[1] / p[2]])

    for _ in range(20):
        p = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 5.0)])
        j = projection_jacobian(p, fx, fy)
        eps = 1e-5
        fd = np.zeros((2, 3))
        for axis in range(3):
            dp = np.zeros(3)
            dp[axis] = eps
            fd[:, axis] = (pinhole(p + dp) - pinhole(p - dp)) / (2 * eps)
        denom = np.maximum(np.abs(fd), 1e-6)
        assert np.abs(j - fd).max() / denom.max() < 1e-4


def test_jacobian_fd_on_randomized_camera_poses():
    rng = np.random.default_rng(3)
    for trial in range(10):
        cam_pos = rng.uniform(-2, 2, size=3)
        heading = rng.uniform(-np.pi, np.pi)
        cam = Camera.from_hfov(64, 64, 80.0, 0.1, 100.0, pose_world_to_camera(cam_pos, heading))
        point = cam_pos + rng.uniform(-1, 1, size=3)
        point_cam = cam.rotation @ point + cam.world_to_camera[:3, 3]
        if not (cam.near < point_cam[2] < cam.far):
            continue

        def project_world(p):
            q = cam.rotation @ p + cam.world_to_camera[:3, 3]
            return np.array([cam.fx * q[0] / q[2], cam.fy * q[1] / q[2]])

        analytic = projection_jacobian(point_cam, cam.fx, cam.fy) @ cam.rotation
        eps = 1e-5
        fd = np.zeros((2, 3))
        for axis in range(3):
            dp = np.zeros(3)
            dp[axis] = eps
            fd[:, axis] = (project_world(point + dp) - project_world(point - dp)) / (2 * eps)
        rel = np.abs(analytic - fd).max() / np.maximum(np.abs(fd).max(), 1e-9)
        assert rel < 1e-4


def test_depth_culling(identity_camera):
    assert project_gaussian(np.array([0.0, 0.0, -1.0]), 0.01 * np.eye(3), identity_camera) is None
    assert project_gaussian(np.array([0.0, 0.0, 60.0]), 0.01 * np.eye(3), identity_camera) is None
    assert project_gaussian(np.array([0.0, 0.0, 0.05]), 0.01 * np.eye(3), identity_camera) is None


def test_offscreen_footprint_culling(identity_camera):
    # projects far left of the frame, small footprint -> culled
    assert project_gaussian(np.array([-10.0, 0.0, 2.0]), 1e-4 * np.eye(3), identity_camera) is None
    # huge footprint from the same center overlaps the frame -> kept
    assert project_gaussian(np.array([-10.0, 0.0, 2.0]), 25.0 * np.eye(3), identity_camera) is not None


def test_build_cov3d_is_rotated_scale_square():
    rng = np.random.default_rng(2)
    log_scales = rng.uniform(-3, 0, size=(5, 3))
    quats = quat_normalize(rng.normal(size=(5, 4)))
    covs = build_cov3d(log_scales, quats)
    for i in range(5):
        evals = np.sort(np.linalg.eigvalsh(covs[i]))
        np.testing.assert_allclose(evals, np.sort(np.exp(2 * log_scales[i])), rtol=1e-9)


def test_project_cloud_matches_single_splat_path(identity_camera):
    cloud = random_cloud(80, seed=4, sh_degree=0, box=1.0, center=(0.0, 0.0, 3.0))
    means2d, conics, depths, colors, alphas, radii, stats = project_cloud(cloud, identity_camera)
    covs = build_cov3d(cloud.log_scales, cloud.rotations)
    kept = 0
    for i in range(cloud.n):
        single = project_gaussian(cloud.positions[i].astype(np.float64), covs[i], identity_camera)
        if single is None:
            continue
        kept += 1
        row = np.argmin(np.abs(depths - single.depth))
        np.testing.assert_allclose(means2d[row], single.mean2d, atol=1e-8)
        inv = np.linalg.inv(single.cov2d)
        np.testing.assert_allclose(conics[row], [inv[0, 0], inv[0, 1], inv[1, 1]], atol=1e-8)
    assert kept == depths.size
    assert stats.n_drawn == kept


def test_degenerate_covariance_counted(identity_camera):
    cloud = random_cloud(3, seed=5, sh_degree=0, box=0.5, center=(0.0, 0.0, 2.0))
    cloud.log_scales[1] = 400.0  # exp overflows to inf -> degenerate cov2d
    stats = RenderStats()
    out = project_cloud(cloud, identity_camera, stats)
    assert stats.n_degenerate == 1
    assert out[2].size == 2


def test_depth_sorted_with_stable_ties(identity_camera):
    positions = np.array([[0.1, 0.0, 2.0], [0.0, 0.0, 2.0], [0.0, 0.0, 1.0]])
    cloud = random_cloud(3, seed=6, sh_degree=0)
    cloud.positions = positions.astype(np.float32)
    means2d, conics, depths, *_ = project_cloud(cloud, identity_camera)
    assert list(depths) == sorted(depths)
    # equal depths keep original index order: splat 0 (x=0.1) before splat 1
    assert means2d[1][0] > means2d[2][0]
