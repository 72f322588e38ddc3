"""Gaussian cloud container and validation.

A cloud stores raw (pre-activation) splat parameters: opacities are logits
and scales are log-meters; sigmoid/exp are applied at render time.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SUPPORTED_SH_DEGREES = (0, 1, 2, 3)
QUAT_NORM_TOL = 1e-5


def sh_coeff_count(degree):
    """Number of SH coefficients per color channel for a given degree."""
    if degree not in SUPPORTED_SH_DEGREES:
        raise ValidationError(f"unsupported SH degree {degree}; expected one of {SUPPORTED_SH_DEGREES}")
    return (degree + 1) ** 2


def sh_degree_from_coeff_count(k):
    for degree in SUPPORTED_SH_DEGREES:
        if (degree + 1) ** 2 == k:
            return degree
    raise ValidationError(f"no SH degree has {k} coefficients per channel")


@dataclass
class GaussianCloud:
    """N splats: positions (N,3), sh_coeffs (N,K,3), opacities (N,) logits,
    log_scales (N,3), rotations (N,4) unit quaternions (w,x,y,z)."""

    positions: np.ndarray
    sh_coeffs: np.ndarray
    opacities: np.ndarray
    log_scales: np.ndarray
    rotations: np.ndarray

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def sh_degree(self):
        return sh_degree_from_coeff_count(self.sh_coeffs.shape[1])

    def validate(self):
        """Check invariants, renormalizing quaternions in place. Raises ValidationError."""
        n = self.positions.shape[0]
        shapes = {
            "positions": (self.positions, (n, 3)),
            "opacities": (self.opacities, (n,)),
            "log_scales": (self.log_scales, (n, 3)),
            "rotations": (self.rotations, (n, 4)),
        }
        for name, (arr, want) in shapes.items():
            if arr.shape != want:
                raise ValidationError(f"{name} has shape {arr.shape}, expected {want}")
        if self.sh_coeffs.ndim != 3 or self.sh_coeffs.shape[0] != n or self.sh_coeffs.shape[2] != 3:
            raise ValidationError(f"sh_coeffs has shape {self.sh_coeffs.shape}, expected (N, K, 3)")
        sh_degree_from_coeff_count(self.sh_coeffs.shape[1])

        for name, arr in (
            ("positions", self.positions),
            ("sh_coeffs", self.sh_coeffs),
            ("opacities", self.opacities),
            ("log_scales", self.log_scales),
            ("rotations", self.rotations),
        ):
            bad = ~np.isfinite(arr)
            if bad.any():
                idx = np.unique(np.nonzero(bad)[0])
                head = ", ".join(str(i) for i in idx[:10])
                more = "..." if idx.size > 10 else ""
                raise ValidationError(f"non-finite values in {name} at splat indices [{head}{more}]")

        if n > 0:
            norms = np.linalg.norm(self.rotations, axis=1)
            if (norms <= 0).any():
                idx = np.nonzero(norms <= 0)[0]
                raise ValidationError(f"zero-norm rotation quaternions at indices {idx[:10].tolist()}")
            if np.abs(norms - 1.0).max() > QUAT_NORM_TOL:
                self.rotations = self.rotations / norms[:, None]
        return self

    def copy(self):
        return GaussianCloud(
            self.positions.copy(),
            self.sh_coeffs.copy(),
            self.opacities.copy(),
            self.log_scales.copy(),
            self.rotations.copy(),
        )


def empty_cloud(sh_degree=0):
    k = sh_coeff_count(sh_degree)
    return GaussianCloud(
        positions=np.zeros((0, 3), dtype=np.float32),
        sh_coeffs=np.zeros((0, k, 3), dtype=np.float32),
        opacities=np.zeros((0,), dtype=np.float32),
        log_scales=np.zeros((0, 3), dtype=np.float32),
        rotations=np.zeros((0, 4), dtype=np.float32),
    )


def concat_clouds(clouds):
    """Concatenate clouds; SH coefficients are zero-padded to the highest degree."""
    clouds = [c for c in clouds if c.n > 0]
    if not clouds:
        return empty_cloud()
    k_max = max(c.sh_coeffs.shape[1] for c in clouds)
    sh = []
    for c in clouds:
        coeffs = c.sh_coeffs
        if coeffs.shape[1] < k_max:
            pad = np.zeros((coeffs.shape[0], k_max - coeffs.shape[1], 3), dtype=coeffs.dtype)
            coeffs = np.concatenate([coeffs, pad], axis=1)
        sh.append(coeffs)
    return GaussianCloud(
        positions=np.concatenate([c.positions for c in clouds], axis=0),
        sh_coeffs=np.concatenate(sh, axis=0),
        opacities=np.concatenate([c.opacities for c in clouds], axis=0),
        log_scales=np.concatenate([c.log_scales for c in clouds], axis=0),
        rotations=np.concatenate([c.rotations for c in clouds], axis=0),
    )
