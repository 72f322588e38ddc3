"""Avatar bundle container and directory I/O.

A bundle directory holds `manifest.json` plus raw little-endian float32
blobs:

  canonical.f32   pos | f_dc | f_rest | opacity | log_scale | rot, one
                  field block after another; f_rest is (K-1, 3) per splat,
                  coefficient-major
  weights.f32     N x J skinning weights, row-major
  inv_bind.f32    J x 16 inverse bind matrices, row-major 4x4
  trajectory.f32  T x (J+1) x 7 as quat wxyz + translation, root last
  capsules.f32    T x C x 7 as p0 xyz, p1 xyz, radius
"""

import json
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cloud import GaussianCloud, sh_coeff_count
from .errors import ConsistencyError, SchemaError, ValidationError

WEIGHT_RENORM_TOL = 1e-3
WEIGHT_SUM_TOL = 1e-5

_MANIFEST_KEYS = ("n_gaussians", "n_joints", "sh_degree", "fps", "n_frames", "n_capsules", "skeleton")


@dataclass
class Skeleton:
    """Joint tree: parents (J,) with parent[0] == -1 and parent[j] < j,
    rest_positions (J, 3) world meters."""

    parents: np.ndarray
    rest_positions: np.ndarray

    @property
    def n_joints(self):
        return self.parents.shape[0]

    def validate(self):
        j = self.n_joints
        if j < 1:
            raise ValidationError("skeleton needs at least one joint")
        if self.rest_positions.shape != (j, 3):
            raise ValidationError(f"rest_positions shape {self.rest_positions.shape} != ({j}, 3)")
        if self.parents[0] != -1:
            raise ValidationError("joint 0 must be the root (parent == -1)")
        for i in range(1, j):
            if not 0 <= self.parents[i] < i:
                raise ValidationError(f"parent of joint {i} is {self.parents[i]}; tree must be topologically ordered")
        if not np.isfinite(self.rest_positions).all():
            raise ValidationError("non-finite skeleton rest positions")
        return self

    def bones(self):
        """(parent, child) pairs, one per non-root joint, in child order."""
        return [(int(self.parents[j]), j) for j in range(1, self.n_joints)]


@dataclass
class Trajectory:
    """Per-frame world joint transforms plus a root transform.

    quats: (T, J+1, 4) wxyz, trans: (T, J+1, 3); index J is the root.
    """

    fps: float
    quats: np.ndarray
    trans: np.ndarray

    @property
    def n_frames(self):
        return self.quats.shape[0]

    @property
    def n_joints(self):
        return self.quats.shape[1] - 1

    @property
    def duration(self):
        return self.n_frames / self.fps

    def validate(self):
        if self.n_frames < 1:
            raise ValidationError("trajectory needs at least one frame")
        if self.fps <= 0:
            raise ValidationError(f"trajectory fps must be positive, got {self.fps}")
        if self.trans.shape != self.quats.shape[:2] + (3,) or self.quats.shape[2] != 4:
            raise ValidationError("trajectory quats/trans shapes disagree")
        if not (np.isfinite(self.quats).all() and np.isfinite(self.trans).all()):
            raise ValidationError("non-finite trajectory data")
        norms = np.linalg.norm(self.quats, axis=-1)
        if (norms <= 0).any():
            raise ValidationError("zero-norm trajectory quaternion")
        if np.abs(norms - 1.0).max() > 1e-5:
            self.quats = self.quats / norms[..., None]
        return self


@dataclass
class CapsuleTrack:
    """Per-frame capsules: frames (T, C, 7) = endpoint p0, endpoint p1, radius."""

    frames: np.ndarray

    @property
    def n_frames(self):
        return self.frames.shape[0]

    @property
    def n_capsules(self):
        return self.frames.shape[1]

    def validate(self):
        if self.frames.ndim != 3 or self.frames.shape[2] != 7:
            raise ValidationError(f"capsule track shape {self.frames.shape}, expected (T, C, 7)")
        if not np.isfinite(self.frames).all():
            raise ValidationError("non-finite capsule track values")
        if self.frames.shape[1] > 0 and (self.frames[:, :, 6] <= 0).any():
            raise ValidationError("capsule radii must be positive")
        return self


@dataclass
class AvatarBundle:
    canonical: GaussianCloud
    lbs_weights: np.ndarray
    inv_bind: np.ndarray
    skeleton: Skeleton
    trajectory: Trajectory
    capsule_track: Optional[CapsuleTrack]

    @property
    def n_joints(self):
        return self.skeleton.n_joints

    @property
    def duration(self):
        return self.trajectory.duration

    def validate(self):
        self.canonical.validate()
        self.skeleton.validate()
        self.trajectory.validate()
        n, j = self.canonical.n, self.skeleton.n_joints
        if self.lbs_weights.shape != (n, j):
            raise ConsistencyError(f"weights shape {self.lbs_weights.shape} != ({n}, {j})")
        if self.inv_bind.shape != (j, 4, 4):
            raise ConsistencyError(f"inv_bind shape {self.inv_bind.shape} != ({j}, 4, 4)")
        if self.trajectory.n_joints != j:
            raise ConsistencyError(
                f"trajectory has {self.trajectory.n_joints} joints, skeleton has {j}"
            )
        if not np.isfinite(self.inv_bind).all():
            raise ValidationError("non-finite inverse bind matrices")
        if n > 0:
            if (self.lbs_weights < 0).any():
                raise ValidationError("negative skinning weights")
            sums = self.lbs_weights.sum(axis=1)
            dev = np.abs(sums - 1.0)
            if dev.max() > WEIGHT_RENORM_TOL:
                bad = int(np.argmax(dev))
                raise ValidationError(
                    f"weight row {bad} sums to {sums[bad]:.6f}; deviation exceeds {WEIGHT_RENORM_TOL}"
                )
            if dev.max() > WEIGHT_SUM_TOL:
                self.lbs_weights = self.lbs_weights / sums[:, None]
        if self.capsule_track is not None:
            self.capsule_track.validate()
            if self.capsule_track.n_frames != self.trajectory.n_frames:
                raise ConsistencyError(
                    f"capsule track has {self.capsule_track.n_frames} frames, "
                    f"trajectory has {self.trajectory.n_frames}"
                )
        return self


def _read_blob(dirpath, name, count):
    path = os.path.join(dirpath, name)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"avatar bundle is missing blob '{name}' in {dirpath}")
    data = np.fromfile(path, dtype="<f4")
    if data.size != count:
        raise ConsistencyError(f"blob '{name}' holds {data.size} floats, manifest implies {count}")
    return data


def load_avatar_bundle(path, require_capsules=True):
    """Load and validate an avatar bundle directory."""
    manifest_path = os.path.join(path, "manifest.json")
    if not os.path.isfile(manifest_path):
        raise FileNotFoundError(f"avatar bundle is missing manifest.json in {path}")
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    missing = [key for key in _MANIFEST_KEYS if key not in manifest]
    if missing:
        raise SchemaError(f"manifest.json missing keys: {missing}")

    n = int(manifest["n_gaussians"])
    j = int(manifest["n_joints"])
    degree = int(manifest["sh_degree"])
    fps = float(manifest["fps"])
    t = int(manifest["n_frames"])
    c = int(manifest["n_capsules"])
    k = sh_coeff_count(degree)

    skel_entries = manifest["skeleton"]
    if len(skel_entries) != j:
        raise SchemaError(f"manifest skeleton lists {len(skel_entries)} joints, n_joints is {j}")
    parents = np.array([entry["parent"] for entry in skel_entries], dtype=np.int64)
    rest_pos = np.array([entry["rest_pos"] for entry in skel_entries], dtype=np.float64)
    skeleton = Skeleton(parents, rest_pos)

    floats_per_splat = 3 + 3 + 3 * (k - 1) + 1 + 3 + 4
    raw = _read_blob(path, "canonical.f32", n * floats_per_splat)
    off = 0

    def take(shape):
        nonlocal off
        count = int(np.prod(shape))
        block = raw[off:off + count].reshape(shape)
        off += count
        return block.copy()

    positions = take((n, 3))
    f_dc = take((n, 3))
    f_rest = take((n, k - 1, 3)) if k > 1 else np.zeros((n, 0, 3), dtype=np.float32)
    opacities = take((n,))
    log_scales = take((n, 3))
    rotations = take((n, 4))
    sh = np.zeros((n, k, 3), dtype=np.float32)
    sh[:, 0, :] = f_dc
    if k > 1:
        sh[:, 1:, :] = f_rest
    canonical = GaussianCloud(positions, sh, opacities, log_scales, rotations)

    weights = _read_blob(path, "weights.f32", n * j).reshape(n, j).astype(np.float64)
    inv_bind = _read_blob(path, "inv_bind.f32", j * 16).reshape(j, 4, 4).astype(np.float64)
    traj_raw = _read_blob(path, "trajectory.f32", t * (j + 1) * 7).reshape(t, j + 1, 7).astype(np.float64)
    trajectory = Trajectory(fps=fps, quats=traj_raw[:, :, :4], trans=traj_raw[:, :, 4:])

    capsule_track = None
    capsules_path = os.path.join(path, "capsules.f32")
    if os.path.isfile(capsules_path):
        cap_raw = _read_blob(path, "capsules.f32", t * c * 7).reshape(t, c, 7).astype(np.float64)
        capsule_track = CapsuleTrack(cap_raw)
    elif require_capsules:
        raise FileNotFoundError(f"avatar bundle is missing blob 'capsules.f32' in {path}")

    bundle = AvatarBundle(canonical, weights, inv_bind, skeleton, trajectory, capsule_track)
    return bundle.validate()


def save_avatar_bundle(bundle, path):
    """Write a bundle directory (manifest.json + float32 blobs)."""
    os.makedirs(path, exist_ok=True)
    cloud = bundle.canonical
    n = cloud.n
    j = bundle.skeleton.n_joints
    k = cloud.sh_coeffs.shape[1]
    t = bundle.trajectory.n_frames
    c = bundle.capsule_track.n_capsules if bundle.capsule_track is not None else 0

    manifest = {
        "n_gaussians": n,
        "n_joints": j,
        "sh_degree": cloud.sh_degree,
        "fps": bundle.trajectory.fps,
        "n_frames": t,
        "n_capsules": c,
        "skeleton": [
            {"parent": int(bundle.skeleton.parents[i]), "rest_pos": bundle.skeleton.rest_positions[i].tolist()}
            for i in range(j)
        ],
    }
    with open(os.path.join(path, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)

    blocks = [
        cloud.positions.reshape(-1),
        cloud.sh_coeffs[:, 0, :].reshape(-1),
        cloud.sh_coeffs[:, 1:, :].reshape(-1),
        cloud.opacities.reshape(-1),
        cloud.log_scales.reshape(-1),
        cloud.rotations.reshape(-1),
    ]
    canonical = np.concatenate([np.asarray(b, dtype="<f4") for b in blocks])
    canonical.tofile(os.path.join(path, "canonical.f32"))

    np.asarray(bundle.lbs_weights, dtype="<f4").tofile(os.path.join(path, "weights.f32"))
    np.asarray(bundle.inv_bind, dtype="<f4").reshape(j, 16).tofile(os.path.join(path, "inv_bind.f32"))
    traj = np.concatenate([bundle.trajectory.quats, bundle.trajectory.trans], axis=2)
    np.asarray(traj, dtype="<f4").tofile(os.path.join(path, "trajectory.f32"))
    if bundle.capsule_track is not None:
        np.asarray(bundle.capsule_track.frames, dtype="<f4").tofile(os.path.join(path, "capsules.f32"))
