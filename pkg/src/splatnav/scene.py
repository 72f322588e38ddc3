"""Scene description files: JSON with keys scene_ply, background, navgrid, avatars, camera."""

import json
import os
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import SchemaError

_TOP_KEYS = {"scene_ply", "background", "navgrid", "avatars", "camera"}
_AVATAR_KEYS = {"bundle", "start_offset", "enabled", "loop"}
_CAMERA_KEYS = {"width", "height", "hfov_deg", "near", "far", "mount_height"}


@dataclass
class CameraDefaults:
    width: int = 256
    height: int = 256
    hfov_deg: float = 90.0
    near: float = 0.1
    far: float = 100.0
    mount_height: float = 1.25


@dataclass
class AvatarEntry:
    bundle: str
    start_offset: float = 0.0
    enabled: bool = True
    loop: bool = True


@dataclass
class SceneConfig:
    scene_ply: Optional[str]
    background: np.ndarray
    navgrid: Optional[dict]
    avatars: list
    camera: CameraDefaults
    base_dir: str
    unknown_keys: list = field(default_factory=list)


def _resolve(base_dir, p):
    return p if os.path.isabs(p) else os.path.normpath(os.path.join(base_dir, p))


def load_scene_config(path):
    """Load and resolve a scene config; referenced paths must exist."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise SchemaError("scene config must be a JSON object")
    base_dir = os.path.dirname(os.path.abspath(path))

    unknown = sorted(set(doc) - _TOP_KEYS)
    for entry in doc.get("avatars", []) or []:
        if isinstance(entry, dict):
            unknown += [f"avatars[].{key}" for key in sorted(set(entry) - _AVATAR_KEYS)]
    camera_doc = doc.get("camera", {}) or {}
    if isinstance(camera_doc, dict):
        unknown += [f"camera.{key}" for key in sorted(set(camera_doc) - _CAMERA_KEYS)]
    if unknown:
        warnings.warn(f"scene config has unknown keys: {unknown}", stacklevel=2)

    scene_ply = doc.get("scene_ply")
    navgrid = doc.get("navgrid")
    if scene_ply is None and navgrid is None:
        raise SchemaError("scene config needs at least one of 'scene_ply' or 'navgrid'")
    if scene_ply is not None:
        scene_ply = _resolve(base_dir, scene_ply)
        if not os.path.isfile(scene_ply):
            raise SchemaError(f"scene_ply does not exist: {scene_ply}")

    background = np.asarray(doc.get("background", (1.0, 1.0, 1.0)), dtype=np.float64)
    if background.shape != (3,) or background.min() < 0.0 or background.max() > 1.0:
        raise SchemaError(f"background must be an RGB triple in [0,1], got {doc.get('background')!r}")

    if navgrid is not None:
        if not isinstance(navgrid, dict):
            raise SchemaError("'navgrid' must be an object (image source or procedural spec)")
        navgrid = dict(navgrid)
        if "image" in navgrid:
            navgrid["image"] = _resolve(base_dir, navgrid["image"])
            if not os.path.isfile(navgrid["image"]):
                raise SchemaError(f"navgrid image does not exist: {navgrid['image']}")

    avatars = []
    for i, entry in enumerate(doc.get("avatars", []) or []):
        if "bundle" not in entry:
            raise SchemaError(f"avatar entry {i} is missing 'bundle'")
        bundle = _resolve(base_dir, entry["bundle"])
        if not os.path.isdir(bundle):
            raise SchemaError(f"avatar bundle directory does not exist: {bundle}")
        avatars.append(
            AvatarEntry(
                bundle=bundle,
                start_offset=float(entry.get("start_offset", 0.0)),
                enabled=bool(entry.get("enabled", True)),
                loop=bool(entry.get("loop", True)),
            )
        )

    known_camera = {key: camera_doc[key] for key in _CAMERA_KEYS if key in camera_doc}
    camera = CameraDefaults(**known_camera)

    return SceneConfig(
        scene_ply=scene_ply,
        background=background,
        navgrid=navgrid,
        avatars=avatars,
        camera=camera,
        base_dir=base_dir,
        unknown_keys=unknown,
    )
