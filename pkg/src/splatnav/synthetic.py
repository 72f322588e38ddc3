"""Procedurally generated assets: random splat clouds, a coarse humanoid
skeleton, walking avatar bundles, and a ready-to-run demo scene."""

import json
import os

import numpy as np

from .avatar import AvatarBundle, Skeleton, save_avatar_bundle
from .cloud import GaussianCloud, sh_coeff_count
from .ply import save_gaussian_ply
from .rig import bake_capsules, generate_walk_trajectory
from .transforms import quat_normalize


def random_cloud(n, seed=0, sh_degree=0, box=5.0, center=(0.0, 0.0, 1.0), scale_range=(0.02, 0.15)):
    """Uniform random gaussians inside a box of half-extent `box` meters."""
    rng = np.random.default_rng(seed)
    k = sh_coeff_count(sh_degree)
    positions = rng.uniform(-box, box, size=(n, 3)) + np.asarray(center)
    sh = np.zeros((n, k, 3))
    sh[:, 0, :] = rng.uniform(-1.5, 1.5, size=(n, 3))
    if k > 1:
        sh[:, 1:, :] = rng.normal(0.0, 0.15, size=(n, k - 1, 3))
    opacities = rng.normal(0.5, 1.5, size=n)
    log_scales = np.log(rng.uniform(scale_range[0], scale_range[1], size=(n, 3)))
    rotations = quat_normalize(rng.normal(size=(n, 4)))
    cloud = GaussianCloud(
        positions=positions.astype(np.float32),
        sh_coeffs=sh.astype(np.float32),
        opacities=opacities.astype(np.float32),
        log_scales=log_scales.astype(np.float32),
        rotations=rotations.astype(np.float32),
    )
    return cloud.validate()


def make_humanoid_skeleton():
    """Coarse 11-joint biped, canonical facing +x, z up, feet near z=0."""
    joints = [
        (-1, (0.0, 0.0, 0.95)),   # pelvis
        (0, (0.0, 0.0, 1.25)),    # spine
        (1, (0.0, 0.0, 1.60)),    # head
        (0, (0.0, 0.10, 0.90)),   # left hip
        (3, (0.0, 0.10, 0.50)),   # left knee
        (4, (0.0, 0.10, 0.05)),   # left foot
        (0, (0.0, -0.10, 0.90)),  # right hip
        (6, (0.0, -0.10, 0.50)),  # right knee
        (7, (0.0, -0.10, 0.05)),  # right foot
        (1, (0.0, 0.28, 0.85)),   # left hand
        (1, (0.0, -0.28, 0.85)),  # right hand
    ]
    parents = np.array([p for p, _ in joints], dtype=np.int64)
    rest = np.array([pos for _, pos in joints], dtype=np.float64)
    return Skeleton(parents=parents, rest_positions=rest).validate()


def make_avatar_bundle(n_gaussians=400, seed=0, waypoints=((0.0, 0.0), (2.0, 0.0)), speed=0.8, fps=30.0,
                       sh_degree=0):
    """Walking avatar: splats scattered along the bones, weights blended
    between each bone's parent and child joints."""
    rng = np.random.default_rng(seed)
    skeleton = make_humanoid_skeleton()
    rest = skeleton.rest_positions
    bones = skeleton.bones()
    j = skeleton.n_joints
    k = sh_coeff_count(sh_degree)

    bone_idx = rng.integers(0, len(bones), size=n_gaussians)
    u = rng.uniform(0.0, 1.0, size=n_gaussians)
    positions = np.empty((n_gaussians, 3))
    weights = np.zeros((n_gaussians, j))
    for g in range(n_gaussians):
        parent, child = bones[bone_idx[g]]
        base = rest[parent] + u[g] * (rest[child] - rest[parent])
        positions[g] = base + rng.normal(0.0, 0.04, size=3)
        weights[g, parent] = 1.0 - u[g]
        weights[g, child] = u[g]

    sh = np.zeros((n_gaussians, k, 3))
    sh[:, 0, :] = rng.uniform(-1.0, 1.0, size=(n_gaussians, 3))
    cloud = GaussianCloud(
        positions=positions.astype(np.float32),
        sh_coeffs=sh.astype(np.float32),
        opacities=rng.normal(2.0, 0.5, size=n_gaussians).astype(np.float32),
        log_scales=np.log(rng.uniform(0.015, 0.05, size=(n_gaussians, 3))).astype(np.float32),
        rotations=quat_normalize(rng.normal(size=(n_gaussians, 4))).astype(np.float32),
    ).validate()

    inv_bind = np.tile(np.eye(4), (j, 1, 1))
    inv_bind[:, :3, 3] = -rest

    trajectory = generate_walk_trajectory(waypoints, skeleton, speed, fps)
    capsule_track = bake_capsules(skeleton, trajectory)
    bundle = AvatarBundle(
        canonical=cloud,
        lbs_weights=weights,
        inv_bind=inv_bind,
        skeleton=skeleton,
        trajectory=trajectory,
        capsule_track=capsule_track,
    )
    return bundle.validate()


def make_demo_scene(path, n_scene_gaussians=2000, n_avatars=2, seed=0, size=8.0,
                    camera_size=128):
    """Write a complete scene directory (PLY, avatar bundles, config JSON)."""
    os.makedirs(path, exist_ok=True)
    scene_cloud = random_cloud(n_scene_gaussians, seed=seed, sh_degree=1, box=size / 2.0,
                               center=(size / 2.0, size / 2.0, 1.2))
    ply_path = os.path.join(path, "scene.ply")
    save_gaussian_ply(scene_cloud, ply_path)

    avatar_entries = []
    for i in range(n_avatars):
        rng = np.random.default_rng(seed + 100 + i)
        margin = 1.0
        pts = rng.uniform(margin, size - margin, size=(3, 2))
        bundle = make_avatar_bundle(seed=seed + 200 + i, waypoints=[tuple(p) for p in pts], speed=0.7)
        bundle_dir = os.path.join(path, f"avatar_{i}")
        save_avatar_bundle(bundle, bundle_dir)
        avatar_entries.append(
            {"bundle": f"avatar_{i}", "start_offset": round(0.5 * i, 3), "enabled": True, "loop": True}
        )

    config = {
        "scene_ply": "scene.ply",
        "background": [1.0, 1.0, 1.0],
        "navgrid": {"size": [size, size], "resolution": 0.25, "origin": [0.0, 0.0]},
        "avatars": avatar_entries,
        "camera": {"width": camera_size, "height": camera_size, "hfov_deg": 90.0,
                   "near": 0.1, "far": 50.0, "mount_height": 1.25},
    }
    config_path = os.path.join(path, "scene.json")
    with open(config_path, "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2)
    return config_path
