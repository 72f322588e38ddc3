"""Frame export: 8-bit PNG color, PFM or raw .f32 depth with JSON sidecar."""

import json

import numpy as np
from PIL import Image

from .errors import PlyParseError


def save_color_png(color, path):
    """Write an (H, W, 3) float color image in [0,1] as 8-bit PNG."""
    arr = np.clip(np.asarray(color), 0.0, 1.0)
    img = (arr * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(img, mode="RGB").save(path)


def load_color_png(path):
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def save_depth_pfm(depth, path):
    """Write depth as grayscale PFM, little-endian float32 (scale -1.0)."""
    depth = np.asarray(depth, dtype="<f4")
    h, w = depth.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(depth[::-1].tobytes())  # PFM stores rows bottom-to-top


def load_depth_pfm(path):
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"Pf":
            raise PlyParseError(f"not a grayscale PFM file: magic {magic!r}")
        w, h = (int(v) for v in f.readline().split())
        scale = float(f.readline())
        data = np.frombuffer(f.read(w * h * 4), dtype="<f4" if scale < 0 else ">f4")
    return data.reshape(h, w)[::-1].astype(np.float64)


def save_depth_f32(depth, path, far):
    """Write depth as raw little-endian float32 plus a JSON sidecar."""
    depth = np.asarray(depth, dtype="<f4")
    h, w = depth.shape
    depth.tofile(path)
    with open(str(path) + ".json", "w", encoding="utf-8") as f:
        json.dump({"width": w, "height": h, "far": far}, f)


def load_depth_f32(path):
    with open(str(path) + ".json", "r", encoding="utf-8") as f:
        meta = json.load(f)
    data = np.fromfile(path, dtype="<f4")
    return data.reshape(meta["height"], meta["width"]).astype(np.float64), meta
