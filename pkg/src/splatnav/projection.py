"""EWA projection of 3D gaussians to screen space.

cov2d = J W cov3d W^T J^T with J the affine Jacobian of the pinhole
projection evaluated at the camera-space mean, plus a 0.3 px^2 diagonal
regularization. Splats are culled when the depth leaves (near, far) or the
3-sigma footprint misses the frame.
"""

from dataclasses import dataclass, field

import numpy as np

from .sh import eval_sh_batch
from .transforms import quat_to_matrix

COV_REGULARIZATION = 0.3
FOOTPRINT_SIGMA = 3.0
DEGENERATE_DET = 1e-12


@dataclass
class ScreenSplat:
    mean2d: np.ndarray
    cov2d: np.ndarray
    depth: float
    color: np.ndarray = field(default_factory=lambda: np.zeros(3))
    alpha: float = 0.0


@dataclass
class RenderStats:
    n_input: int = 0
    n_culled_depth: int = 0
    n_culled_frame: int = 0
    n_degenerate: int = 0
    n_drawn: int = 0


def build_cov3d(log_scales, rotations):
    """(N, 3, 3) world covariances R diag(exp(s)^2) R^T from raw parameters.

    Overflowing scales produce non-finite covariances on purpose; the
    projection's determinant check skips them as degenerate.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        scales = np.exp(np.asarray(log_scales, dtype=np.float64))
        quats = np.asarray(rotations, dtype=np.float64)
        norms = np.linalg.norm(quats, axis=-1, keepdims=True)
        r = quat_to_matrix(quats / norms)
        m = r * scales[:, None, :]
        return m @ m.transpose(0, 2, 1)


def projection_jacobian(cam_point, fx, fy):
    """2x3 Jacobian of (x, y, z) -> (fx x/z + cx, fy y/z + cy) at a camera-space point."""
    x, y, z = cam_point
    return np.array(
        [
            [fx / z, 0.0, -fx * x / (z * z)],
            [0.0, fy / z, -fy * y / (z * z)],
        ]
    )


def _radii_from_cov(cov2d):
    """Per-splat 3-sigma footprint radius from (N, 2, 2) covariances."""
    a = cov2d[:, 0, 0]
    b = cov2d[:, 0, 1]
    c = cov2d[:, 1, 1]
    mid = 0.5 * (a + c)
    det = a * c - b * b
    lam_max = mid + np.sqrt(np.maximum(mid * mid - det, 0.0))
    return FOOTPRINT_SIGMA * np.sqrt(np.maximum(lam_max, 0.0))


def project_gaussian(mean, cov3d, camera):
    """Project one gaussian; returns a ScreenSplat or None when culled."""
    mean = np.asarray(mean, dtype=np.float64)
    cov3d = np.asarray(cov3d, dtype=np.float64)
    w = camera.rotation
    cam = w @ mean + camera.world_to_camera[:3, 3]
    z = cam[2]
    if not (camera.near < z < camera.far):
        return None
    mean2d = np.array([camera.fx * cam[0] / z + camera.cx, camera.fy * cam[1] / z + camera.cy])
    j = projection_jacobian(cam, camera.fx, camera.fy)
    m = j @ w
    cov2d = m @ cov3d @ m.T + COV_REGULARIZATION * np.eye(2)
    radius = _radii_from_cov(cov2d[None])[0]
    if (
        mean2d[0] + radius < 0.0
        or mean2d[0] - radius > camera.width
        or mean2d[1] + radius < 0.0
        or mean2d[1] - radius > camera.height
    ):
        return None
    return ScreenSplat(mean2d=mean2d, cov2d=cov2d, depth=float(z))


def project_cloud(cloud, camera, stats=None):
    """Vectorized projection of a whole cloud.

    Returns packed arrays sorted by (depth, original index):
    means2d (M,2), conics (M,3) as (a,b,c) of the inverse covariance,
    depths (M,), colors (M,3), alphas (M,) base opacity, radii (M,).
    """
    if stats is None:
        stats = RenderStats()
    stats.n_input += cloud.n
    empty = (
        np.zeros((0, 2)),
        np.zeros((0, 3)),
        np.zeros((0,)),
        np.zeros((0, 3)),
        np.zeros((0,)),
        np.zeros((0,)),
        stats,
    )
    if cloud.n == 0:
        return empty

    positions = np.asarray(cloud.positions, dtype=np.float64)
    w = camera.rotation
    t = camera.world_to_camera[:3, 3]
    cam = positions @ w.T + t
    z = cam[:, 2]

    in_depth = (z > camera.near) & (z < camera.far)
    stats.n_culled_depth += int(cloud.n - in_depth.sum())
    if not in_depth.any():
        return empty
    idx = np.nonzero(in_depth)[0]
    cam = cam[idx]
    z = z[idx]

    cov3d = build_cov3d(cloud.log_scales[idx], cloud.rotations[idx])
    n = idx.size
    j = np.zeros((n, 2, 3))
    inv_z = 1.0 / z
    j[:, 0, 0] = camera.fx * inv_z
    j[:, 0, 2] = -camera.fx * cam[:, 0] * inv_z * inv_z
    j[:, 1, 1] = camera.fy * inv_z
    j[:, 1, 2] = -camera.fy * cam[:, 1] * inv_z * inv_z
    with np.errstate(over="ignore", invalid="ignore"):
        m = j @ w
        cov2d = m @ cov3d @ m.transpose(0, 2, 1)
        cov2d[:, 0, 0] += COV_REGULARIZATION
        cov2d[:, 1, 1] += COV_REGULARIZATION

        a = cov2d[:, 0, 0]
        b = cov2d[:, 0, 1]
        c = cov2d[:, 1, 1]
        det = a * c - b * b
    ok_det = det > DEGENERATE_DET
    stats.n_degenerate += int(n - ok_det.sum())

    mean2d = np.stack([camera.fx * cam[:, 0] * inv_z + camera.cx, camera.fy * cam[:, 1] * inv_z + camera.cy], axis=1)
    with np.errstate(invalid="ignore"):
        radii = np.where(ok_det, _radii_from_cov(cov2d), 0.0)
    on_frame = (
        (mean2d[:, 0] + radii >= 0.0)
        & (mean2d[:, 0] - radii <= camera.width)
        & (mean2d[:, 1] + radii >= 0.0)
        & (mean2d[:, 1] - radii <= camera.height)
    )
    stats.n_culled_frame += int((ok_det & ~on_frame).sum())
    keep = ok_det & on_frame
    if not keep.any():
        return empty

    idx = idx[keep]
    mean2d = mean2d[keep]
    z = z[keep]
    radii = radii[keep]
    det = det[keep]
    conics = np.stack([c[keep] / det, -b[keep] / det, a[keep] / det], axis=1)

    view_dirs = positions[idx] - camera.center
    norms = np.linalg.norm(view_dirs, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    colors = eval_sh_batch(cloud.sh_coeffs[idx], view_dirs / norms)
    alphas = 1.0 / (1.0 + np.exp(-np.asarray(cloud.opacities[idx], dtype=np.float64)))

    order = np.lexsort((idx, z))
    stats.n_drawn += idx.size
    return (
        np.ascontiguousarray(mean2d[order]),
        np.ascontiguousarray(conics[order]),
        np.ascontiguousarray(z[order]),
        np.ascontiguousarray(colors[order]),
        np.ascontiguousarray(alphas[order]),
        np.ascontiguousarray(radii[order]),
        stats,
    )
