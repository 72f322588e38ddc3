"""Tile-based splat rasterization, brute-force reference, and depth compositing.

Splats are depth-sorted globally (stable, ties broken by splat index),
binned to 16x16 tiles by their 3-sigma axis-aligned bounding box, and
alpha-composited front to back. Per-splat alpha is
sigmoid(opacity) * exp(-0.5 * d^T cov2d^-1 d), clipped to 0.99, with zero
contribution outside the 3-sigma support so that tile binning is lossless;
accumulation stops once transmittance drops below 1e-4. The depth channel
is the alpha-weighted expected depth (far where nothing accumulated).

Tiles write disjoint pixels, so results are bit-identical for any tile
schedule; SPLATNAV_THREADS > 1 runs tile ranges of the compiled kernel on
a thread pool.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import raster
from .cloud import concat_clouds
from .errors import ContractViolation
from .projection import project_cloud

TILE_SIZE = 16


@dataclass
class FrameRGBD:
    """color (H,W,3) in [0,1]; alpha (H,W) in [0,1]; depth (H,W) meters, far where empty."""

    color: np.ndarray
    alpha: np.ndarray
    depth: np.ndarray

    @property
    def shape(self):
        return self.alpha.shape


def _thread_count():
    raw = os.environ.get("SPLATNAV_THREADS", "").strip()
    if not raw:
        return 1
    return max(1, int(raw))


def _run_kernel(kernel, n_tiles, args):
    threads = _thread_count()
    if threads <= 1 or kernel.KERNEL_NAME != "cython" or n_tiles < 2:
        kernel.blend_tile_range(0, n_tiles, *args)
        return
    threads = min(threads, n_tiles)
    bounds = np.linspace(0, n_tiles, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(kernel.blend_tile_range, int(bounds[i]), int(bounds[i + 1]), *args)
            for i in range(threads)
        ]
        for fut in futures:
            fut.result()


def _finalize(color_acc, alpha_acc, trans, depth_acc, background, far):
    alpha = np.minimum(alpha_acc, 1.0)
    if background is None:
        safe = np.maximum(alpha_acc, 1e-300)
        color = np.where(alpha_acc[..., None] > 0.0, color_acc / safe[..., None], 0.0)
    else:
        color = color_acc + np.asarray(background, dtype=np.float64)[None, None, :] * trans[..., None]
    color = np.clip(color, 0.0, 1.0)
    safe = np.maximum(alpha_acc, 1e-300)
    depth = np.where(alpha_acc > 0.0, depth_acc / safe, far)
    return FrameRGBD(color=color, alpha=alpha, depth=depth)


def _bin_tiles(means2d, radii, tiles_x, tiles_y):
    """CSR tile lists; input splats are depth-sorted, so per-tile order stays sorted."""
    n_tiles = tiles_x * tiles_y
    tx0 = np.clip(np.floor((means2d[:, 0] - radii) / TILE_SIZE), 0, tiles_x - 1).astype(np.int64)
    tx1 = np.clip(np.floor((means2d[:, 0] + radii) / TILE_SIZE), 0, tiles_x - 1).astype(np.int64)
    ty0 = np.clip(np.floor((means2d[:, 1] - radii) / TILE_SIZE), 0, tiles_y - 1).astype(np.int64)
    ty1 = np.clip(np.floor((means2d[:, 1] + radii) / TILE_SIZE), 0, tiles_y - 1).astype(np.int64)
    spans_x = tx1 - tx0 + 1
    counts = spans_x * (ty1 - ty0 + 1)
    total = int(counts.sum())
    splat_rep = np.repeat(np.arange(means2d.shape[0], dtype=np.int64), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    local = np.arange(total, dtype=np.int64) - starts
    span_rep = spans_x[splat_rep]
    tx = tx0[splat_rep] + local % span_rep
    ty = ty0[splat_rep] + local // span_rep
    tile_id = ty * tiles_x + tx
    order = np.argsort(tile_id, kind="stable")
    pair_splat = splat_rep[order].astype(np.int32)
    tile_starts = np.zeros(n_tiles + 1, dtype=np.int64)
    np.cumsum(np.bincount(tile_id[order], minlength=n_tiles), out=tile_starts[1:])
    return tile_starts, pair_splat


def _raster_common(cloud, camera, background, stats, kernel, tiled):
    kernel = raster.get_kernel(kernel)
    h, w = camera.height, camera.width
    means2d, conics, depths, colors, alphas, radii, stats = project_cloud(cloud, camera, stats)

    color_acc = np.zeros((h, w, 3))
    alpha_acc = np.zeros((h, w))
    trans = np.ones((h, w))
    depth_acc = np.zeros((h, w))

    if depths.size:
        if tiled:
            tiles_x = math.ceil(w / TILE_SIZE)
            tiles_y = math.ceil(h / TILE_SIZE)
            tile_size = TILE_SIZE
            tile_starts, pair_splat = _bin_tiles(means2d, radii, tiles_x, tiles_y)
        else:
            tiles_x, tiles_y = 1, 1
            tile_size = max(w, h)
            tile_starts = np.array([0, depths.size], dtype=np.int64)
            pair_splat = np.arange(depths.size, dtype=np.int32)
        args = (
            tiles_x, tile_size, w, h, tile_starts, pair_splat,
            means2d, conics, depths, colors, alphas,
            color_acc, alpha_acc, trans, depth_acc,
        )
        _run_kernel(kernel, tiles_x * tiles_y, args)

    return _finalize(color_acc, alpha_acc, trans, depth_acc, background, camera.far)


def rasterize(cloud, camera, background, stats=None, kernel=None):
    """Render a cloud to an RGB-D frame with the tile pipeline.

    background is an RGB triple filling the remaining transmittance, or
    None for layer mode: color is then the alpha-normalized splat color and
    empty pixels stay black with alpha 0 (for later compositing).
    """
    return _raster_common(cloud, camera, background, stats, kernel, tiled=True)


def rasterize_reference(cloud, camera, background, stats=None, kernel=None):
    """Brute-force oracle: every pixel loops over all projected splats in
    depth order with the same blending math, no tiling."""
    return _raster_common(cloud, camera, background, stats, kernel, tiled=False)


def composite(front, back):
    """Merge a translucent RGB-D layer over an opaque frame by depth.

    Where the front layer is nearer, colors alpha-blend and the front depth
    wins when its alpha is at least 0.5; otherwise the back pixel passes
    through unchanged.
    """
    if front.shape != back.shape:
        raise ContractViolation(f"frame shapes differ: {front.shape} vs {back.shape}")
    use_front = front.depth < back.depth
    fa = front.alpha[..., None]
    blended = front.color * fa + back.color * (1.0 - fa)
    color = np.where(use_front[..., None], blended, back.color)
    depth = np.where(use_front & (front.alpha >= 0.5), front.depth, back.depth)
    alpha = np.where(use_front, front.alpha + back.alpha * (1.0 - front.alpha), back.alpha)
    return FrameRGBD(color=color, alpha=alpha, depth=depth)


def render_observation(scene_cloud, avatar_clouds, camera, background, stats=None, kernel=None):
    """Scene pass plus one concatenated avatar layer, depth-composited."""
    frame = rasterize(scene_cloud, camera, background, stats=stats, kernel=kernel)
    avatar_clouds = [c for c in avatar_clouds if c.n > 0]
    if not avatar_clouds:
        return frame
    merged = concat_clouds(avatar_clouds)
    layer = rasterize(merged, camera, None, stats=stats, kernel=kernel)
    return composite(layer, frame)
