import numpy as np
import pytest

from splatnav.avatar import Skeleton
from splatnav.camera import Camera, pose_world_to_camera
from splatnav.cloud import GaussianCloud
from splatnav.nav import NavGrid
from splatnav.synthetic import make_avatar_bundle, make_humanoid_skeleton, random_cloud
from splatnav.transforms import quat_normalize


@pytest.fixture(scope="session")
def humanoid_skeleton():
    return make_humanoid_skeleton()


@pytest.fixture(scope="session")
def walking_bundle():
    return make_avatar_bundle(n_gaussians=120, seed=3, waypoints=((0.0, 0.0), (2.0, 0.0)), speed=0.8, fps=30.0)


@pytest.fixture
def small_cloud():
    return random_cloud(50, seed=11, sh_degree=1, box=1.5, center=(0.0, 0.0, 1.0))


@pytest.fixture
def front_camera():
    """64x64 camera at (-4, 0, 1) looking along +x."""
    w2c = pose_world_to_camera(np.array([-4.0, 0.0, 1.0]), heading=0.0)
    return Camera.from_hfov(64, 64, 90.0, 0.1, 100.0, w2c)


def make_cloud(positions, colors=None, opacity=4.0, scale=0.3, sh_degree=0, rotations=None):
    """Hand-built cloud: DC coefficients chosen so eval_sh returns `colors`."""
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    n = positions.shape[0]
    k = (sh_degree + 1) ** 2
    sh = np.zeros((n, k, 3))
    if colors is not None:
        colors = np.atleast_2d(np.asarray(colors, dtype=np.float64))
        sh[:, 0, :] = (colors - 0.5) / 0.28209479177387814
    if rotations is None:
        rotations = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (n, 1))
    else:
        rotations = quat_normalize(np.atleast_2d(rotations))
    return GaussianCloud(
        positions=positions.astype(np.float32),
        sh_coeffs=sh.astype(np.float32),
        opacities=np.full(n, opacity, dtype=np.float32),
        log_scales=np.full((n, 3), np.log(scale), dtype=np.float32),
        rotations=rotations.astype(np.float32),
    ).validate()


def make_grid(walkable, resolution=1.0, origin=(0.0, 0.0)):
    return NavGrid(
        resolution=resolution,
        origin=np.asarray(origin, dtype=np.float64),
        walkable=np.asarray(walkable, dtype=bool),
    )


def two_joint_skeleton(length=0.4):
    """Root at origin, one child joint straight up."""
    return Skeleton(
        parents=np.array([-1, 0]),
        rest_positions=np.array([[0.0, 0.0, 0.0], [0.0, 0.0, length]]),
    ).validate()
