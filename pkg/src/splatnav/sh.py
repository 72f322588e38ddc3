"""Real spherical harmonics color evaluation, degrees 0..3.

Uses the standard real SH basis constants; colors are decoded as
clamp(0.5 + sum_k basis_k(dir) * c_k, 0, 1).
"""

import numpy as np

from .errors import ContractViolation

C0 = 0.28209479177387814
C1 = 0.4886025119029199
C2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792, 0.5462742152960396)
C3 = (-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
      -0.4570457994644658, 1.445305721320277, -0.5900435899266435)

_K_TO_DEGREE = {1: 0, 4: 1, 9: 2, 16: 3}


def eval_sh_batch(coeffs, dirs):
    """Evaluate SH colors for (N, K, 3) coefficients and unit (N, 3) directions."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    k = coeffs.shape[1]
    degree = _K_TO_DEGREE[k]
    x, y, z = dirs[:, 0:1], dirs[:, 1:2], dirs[:, 2:3]

    rgb = C0 * coeffs[:, 0]
    if degree > 0:
        rgb = rgb - C1 * y * coeffs[:, 1] + C1 * z * coeffs[:, 2] - C1 * x * coeffs[:, 3]
    if degree > 1:
        xx, yy, zz = x * x, y * y, z * z
        xy, yz, xz = x * y, y * z, x * z
        rgb = (rgb
               + C2[0] * xy * coeffs[:, 4]
               + C2[1] * yz * coeffs[:, 5]
               + C2[2] * (2.0 * zz - xx - yy) * coeffs[:, 6]
               + C2[3] * xz * coeffs[:, 7]
               + C2[4] * (xx - yy) * coeffs[:, 8])
    if degree > 2:
        rgb = (rgb
               + C3[0] * y * (3.0 * xx - yy) * coeffs[:, 9]
               + C3[1] * xy * z * coeffs[:, 10]
               + C3[2] * y * (4.0 * zz - xx - yy) * coeffs[:, 11]
               + C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * coeffs[:, 12]
               + C3[4] * x * (4.0 * zz - xx - yy) * coeffs[:, 13]
               + C3[5] * z * (xx - yy) * coeffs[:, 14]
               + C3[6] * x * (xx - 3.0 * yy) * coeffs[:, 15])
    return np.clip(rgb + 0.5, 0.0, 1.0)


def eval_sh(coeffs, view_dir):
    """RGB in [0,1] for one splat's (K, 3) coefficients and a unit view direction."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    view_dir = np.asarray(view_dir, dtype=np.float64)
    if coeffs.ndim != 2 or coeffs.shape[0] not in _K_TO_DEGREE or coeffs.shape[1] != 3:
        raise ContractViolation(f"coeffs shape {coeffs.shape} is not (K, 3) with K in {sorted(_K_TO_DEGREE)}")
    norm = np.linalg.norm(view_dir)
    if abs(norm - 1.0) > 1e-4:
        raise ContractViolation(f"view direction norm {norm:.6f} is not unit length")
    return eval_sh_batch(coeffs[None], view_dir[None])[0]
