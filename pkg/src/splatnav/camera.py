"""Pinhole RGB-D camera.

Camera frame follows the CV convention: +x right, +y down, +z forward.
World frame is z-up; the ground plane is XY and agent headings are radians
about +z measured from +x.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    near: float
    far: float
    world_to_camera: np.ndarray

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValidationError("focal lengths must be positive")
        if not 0 < self.near < self.far:
            raise ValidationError(f"need 0 < near < far, got near={self.near}, far={self.far}")
        if self.width < 1 or self.height < 1:
            raise ValidationError("camera size must be at least 1x1")
        self.world_to_camera = np.asarray(self.world_to_camera, dtype=np.float64)
        if self.world_to_camera.shape != (4, 4):
            raise ValidationError("world_to_camera must be 4x4")

    @property
    def rotation(self):
        return self.world_to_camera[:3, :3]

    @property
    def center(self):
        """Camera position in world coordinates."""
        r = self.world_to_camera[:3, :3]
        t = self.world_to_camera[:3, 3]
        return -r.T @ t

    @classmethod
    def from_hfov(cls, width, height, hfov_deg, near, far, world_to_camera=None):
        """Square-pixel camera from a horizontal field of view."""
        f = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        if world_to_camera is None:
            world_to_camera = np.eye(4)
        return cls(f, f, width / 2.0, height / 2.0, width, height, near, far, world_to_camera)


def pose_world_to_camera(position, heading, pitch=0.0):
    """world_to_camera for a camera at `position` looking along `heading`.

    Positive pitch tilts the view downward.
    """
    position = np.asarray(position, dtype=np.float64)
    c, s = math.cos(heading), math.sin(heading)
    x_cam = np.array([s, -c, 0.0])
    y_cam = np.array([0.0, 0.0, -1.0])
    z_cam = np.array([c, s, 0.0])
    r = np.stack([x_cam, y_cam, z_cam], axis=0)
    if pitch != 0.0:
        cp, sp = math.cos(pitch), math.sin(pitch)
        # rotate about the camera x axis (tilts forward vector toward -y_cam/up)
        r = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]]) @ r
    m = np.eye(4)
    m[:3, :3] = r
    m[:3, 3] = -r @ position
    return m


def agent_camera(agent_xy, heading, defaults):
    """Camera mounted on the agent from scene camera defaults."""
    position = np.array([agent_xy[0], agent_xy[1], defaults.mount_height], dtype=np.float64)
    return Camera.from_hfov(
        defaults.width,
        defaults.height,
        defaults.hfov_deg,
        defaults.near,
        defaults.far,
        pose_world_to_camera(position, heading),
    )
