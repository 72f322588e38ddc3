"""Avatar deformation and kinematics.

Positions deform by blending per-joint rigid transforms (inverse bind
matrices folded in) and then applying the root transform. The blend is
computed in delta form, p + sum_j w_j (M_j p - p), which is algebraically
identical for weights summing to one and keeps the identity pose bit-exact.
Splat rotations blend by weighted quaternion averaging in the hemisphere of
each point's dominant joint.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .avatar import CapsuleTrack, Trajectory
from .cloud import GaussianCloud
from .errors import ContractViolation
from .transforms import (
    matrix_to_quat,
    quat_multiply,
    quat_nlerp,
    quat_normalize,
    quat_to_matrix,
    rigid_matrices,
)

CAPSULE_RADIUS_FACTOR = 0.25
CAPSULE_RADIUS_MIN = 0.03
CAPSULE_RADIUS_MAX = 0.12

GAIT_SWING_RAD = 0.3


@dataclass
class JointPose:
    """World joint transforms (J,4) quats + (J,3) translations, plus a root transform."""

    quats: np.ndarray
    trans: np.ndarray
    root_quat: np.ndarray
    root_trans: np.ndarray

    @property
    def n_joints(self):
        return self.quats.shape[0]


@dataclass
class CapsuleSet:
    """C capsules: endpoints p0, p1 (C,3) and radii (C,)."""

    p0: np.ndarray
    p1: np.ndarray
    radius: np.ndarray

    @property
    def n(self):
        return self.p0.shape[0]


def empty_capsule_set():
    return CapsuleSet(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0,)))


def merge_capsule_sets(sets):
    sets = [s for s in sets if s.n > 0]
    if not sets:
        return empty_capsule_set()
    return CapsuleSet(
        np.concatenate([s.p0 for s in sets]),
        np.concatenate([s.p1 for s in sets]),
        np.concatenate([s.radius for s in sets]),
    )


def sample_pose(trajectory, t):
    """Interpolate joint transforms at time t (seconds); clamps past the end."""
    if t < 0:
        raise ContractViolation(f"sample time must be nonnegative, got {t}")
    pos = t * trajectory.fps
    f = int(math.floor(pos))
    last = trajectory.n_frames - 1
    j = trajectory.n_joints

    def frame(k):
        return JointPose(
            quats=trajectory.quats[k, :j].copy(),
            trans=trajectory.trans[k, :j].copy(),
            root_quat=trajectory.quats[k, j].copy(),
            root_trans=trajectory.trans[k, j].copy(),
        )

    if f >= last:
        return frame(last)
    lam = pos - f
    if lam == 0.0:
        return frame(f)
    qa, qb = trajectory.quats[f], trajectory.quats[f + 1]
    ta, tb = trajectory.trans[f], trajectory.trans[f + 1]
    quats = quat_nlerp(qa, qb, lam)
    trans = ta + lam * (tb - ta)
    return JointPose(quats=quats[:j], trans=trans[:j], root_quat=quats[j], root_trans=trans[j])


def lbs_deform(bundle, pose):
    """Deform the canonical cloud to a posed world-space cloud."""
    j = bundle.n_joints
    if pose.n_joints != j:
        raise ContractViolation(f"pose has {pose.n_joints} joints, bundle has {j}")
    cloud = bundle.canonical
    positions = np.asarray(cloud.positions, dtype=np.float64)
    weights = bundle.lbs_weights

    joint_mats = rigid_matrices(pose.quats, pose.trans) @ bundle.inv_bind  # (J,4,4)
    rot = joint_mats[:, :3, :3]
    off = joint_mats[:, :3, 3]
    transformed = np.einsum("jab,nb->jna", rot, positions) + off[:, None, :]
    delta = transformed - positions[None, :, :]
    blended = positions + np.einsum("nj,jnc->nc", weights, delta)

    root_rot = quat_to_matrix(pose.root_quat)
    out_positions = blended @ root_rot.T + pose.root_trans

    # per-joint effective rotations, blended in the dominant joint's hemisphere
    eff_quats = np.stack([matrix_to_quat(joint_mats[k, :3, :3]) for k in range(j)])
    eff_quats = quat_multiply(pose.root_quat[None, :], eff_quats)
    dominant = np.argmax(weights, axis=1)
    dots = eff_quats @ eff_quats[dominant].T  # (J, N)
    signs = np.where(dots.T < 0.0, -1.0, 1.0)  # (N, J)
    blend_q = (weights * signs) @ eff_quats
    norms = np.linalg.norm(blend_q, axis=1)
    degenerate = norms < 1e-12
    if degenerate.any():
        blend_q[degenerate] = eff_quats[dominant[degenerate]]
    blend_q = quat_normalize(blend_q)
    out_rotations = quat_multiply(blend_q, np.asarray(cloud.rotations, dtype=np.float64))

    return GaussianCloud(
        positions=out_positions,
        sh_coeffs=cloud.sh_coeffs,
        opacities=cloud.opacities,
        log_scales=cloud.log_scales,
        rotations=out_rotations,
    )


def _root_applied_joint_positions(trajectory):
    """(T, J, 3) world joint positions with the root transform applied."""
    j = trajectory.n_joints
    root_rot = quat_to_matrix(trajectory.quats[:, j])  # (T,3,3)
    pos = np.einsum("tab,tjb->tja", root_rot, trajectory.trans[:, :j])
    return pos + trajectory.trans[:, j][:, None, :]


def bake_capsules(skeleton, trajectory):
    """One capsule per bone, endpoints at the posed parent/child joints.

    Radius is 0.25 x rest bone length clamped to [0.03, 0.12] m.
    """
    bones = skeleton.bones()
    t = trajectory.n_frames
    frames = np.zeros((t, len(bones), 7))
    if not bones:
        return CapsuleTrack(frames)

    rest = skeleton.rest_positions
    pos = _root_applied_joint_positions(trajectory)
    for b, (parent, child) in enumerate(bones):
        length = float(np.linalg.norm(rest[child] - rest[parent]))
        if length == 0.0:
            warnings.warn(f"bone {parent}->{child} has zero rest length; capsule degenerates to a sphere")
        radius = min(max(CAPSULE_RADIUS_FACTOR * length, CAPSULE_RADIUS_MIN), CAPSULE_RADIUS_MAX)
        frames[:, b, 0:3] = pos[:, parent]
        frames[:, b, 3:6] = pos[:, child]
        frames[:, b, 6] = radius
    return CapsuleTrack(frames)


def sample_capsules(track, t, fps):
    """Capsules at time t by temporal linear interpolation, clamped at the ends."""
    if track.n_capsules == 0:
        return empty_capsule_set()
    pos = max(t, 0.0) * fps
    f = int(math.floor(pos))
    last = track.n_frames - 1
    if f >= last:
        data = track.frames[last]
    else:
        lam = pos - f
        data = track.frames[f] if lam == 0.0 else track.frames[f] + lam * (track.frames[f + 1] - track.frames[f])
    return CapsuleSet(p0=data[:, 0:3].copy(), p1=data[:, 3:6].copy(), radius=data[:, 6].copy())


def _rotate_by_quat(q, v):
    return np.einsum("...ab,...b->...a", quat_to_matrix(q), v)


def generate_walk_trajectory(waypoints, skeleton, speed, fps):
    """Procedural walk: root follows the piecewise-linear waypoint path at a
    constant speed facing travel direction; limbs swing sinusoidally with a
    1 m stride (gait period 1/speed seconds)."""
    if speed <= 0:
        raise ContractViolation(f"speed must be positive, got {speed}")
    pts = np.asarray(waypoints, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ContractViolation("need at least two 2D waypoints")

    kept = [pts[0]]
    dropped = 0
    for p in pts[1:]:
        if np.linalg.norm(p - kept[-1]) < 1e-9:
            dropped += 1
        else:
            kept.append(p)
    if dropped:
        warnings.warn(f"collapsed {dropped} coincident waypoint(s)")
    pts = np.stack(kept)
    if pts.shape[0] < 2:
        raise ContractViolation("waypoints collapse to a single point")

    seg = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = float(cum[-1])

    duration = total / speed
    n_frames = int(round(duration * fps)) + 1
    times = np.arange(n_frames) / fps
    s = np.clip(speed * times, 0.0, total)
    seg_idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg_len) - 1)
    frac = (s - cum[seg_idx]) / seg_len[seg_idx]
    xy = pts[seg_idx] + frac[:, None] * seg[seg_idx]
    yaw = np.arctan2(seg[seg_idx, 1], seg[seg_idx, 0])

    j = skeleton.n_joints
    quats = np.zeros((n_frames, j + 1, 4))
    trans = np.zeros((n_frames, j + 1, 3))

    # gait phase advances 2*pi per meter travelled
    phase = 2.0 * math.pi * s
    rest = skeleton.rest_positions
    quats[:, 0] = np.array([1.0, 0.0, 0.0, 0.0])
    trans[:, 0] = rest[0]
    for joint in range(1, j):
        parent = int(skeleton.parents[joint])
        swing = GAIT_SWING_RAD * np.sin(phase + (0.0 if joint % 2 else math.pi))
        half = 0.5 * swing
        # swing about the lateral (canonical +y) axis
        local_q = np.stack([np.cos(half), np.zeros(n_frames), np.sin(half), np.zeros(n_frames)], axis=1)
        offset = rest[joint] - rest[parent]
        quats[:, joint] = quat_multiply(quats[:, parent], local_q)
        trans[:, joint] = trans[:, parent] + _rotate_by_quat(quats[:, parent], offset[None, :])

    quats[:, j] = np.stack([np.cos(yaw / 2.0), np.zeros(n_frames), np.zeros(n_frames), np.sin(yaw / 2.0)], axis=1)
    trans[:, j, 0] = xy[:, 0]
    trans[:, j, 1] = xy[:, 1]

    return Trajectory(fps=float(fps), quats=quats, trans=trans).validate()


def identity_trajectory(skeleton, n_frames, fps):
    """Trajectory holding the rest pose (identity root) for n_frames frames."""
    j = skeleton.n_joints
    quats = np.zeros((n_frames, j + 1, 4))
    quats[:, :, 0] = 1.0
    trans = np.zeros((n_frames, j + 1, 3))
    trans[:, :j] = skeleton.rest_positions[None, :, :]
    return Trajectory(fps=float(fps), quats=quats, trans=trans)
