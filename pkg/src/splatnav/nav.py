"""Walkability grid with geodesic queries, dynamic capsule obstacles, and
step clipping.

The grid is a 2D navmesh stand-in: world XY is discretized at a fixed
resolution, free cells are eroded by the agent radius (Chebyshev), and
geodesic distances are 8-connected Dijkstra lengths. Dynamic avatar
capsules are tested in 3D against the agent's vertical capsule.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import InvalidEndpointError, NavGridBuildError, ValidationError
from .rig import CapsuleSet, merge_capsule_sets, sample_capsules

SNAP_RADIUS = 0.5
DEFAULT_RESOLUTION = 0.05
DEFAULT_AGENT_RADIUS = 0.18
DEFAULT_AGENT_HEIGHT = 1.5
_SEG_EPS = 1e-12


@dataclass
class NavGrid:
    """resolution meters/cell; origin = world XY of cell (0,0)'s center;
    walkable (H,W) booleans, rows along +y, columns along +x."""

    resolution: float
    origin: np.ndarray
    walkable: np.ndarray

    @property
    def shape(self):
        return self.walkable.shape

    def world_to_cell(self, p):
        j = int(round((p[0] - self.origin[0]) / self.resolution))
        i = int(round((p[1] - self.origin[1]) / self.resolution))
        return i, j

    def cell_to_world(self, i, j):
        return np.array([self.origin[0] + j * self.resolution, self.origin[1] + i * self.resolution])

    def in_bounds(self, i, j):
        h, w = self.walkable.shape
        return 0 <= i < h and 0 <= j < w

    def is_walkable(self, p):
        i, j = self.world_to_cell(p)
        return self.in_bounds(i, j) and bool(self.walkable[i, j])


@dataclass
class AgentBody:
    """Vertical capsule: base at z=0, axis from z=radius to z=height-radius."""

    position: np.ndarray
    heading: float = 0.0
    radius: float = DEFAULT_AGENT_RADIUS
    height: float = DEFAULT_AGENT_HEIGHT

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        if self.radius <= 0:
            raise ValidationError("agent radius must be positive")
        if self.height <= 2 * self.radius:
            raise ValidationError("agent height must exceed twice the radius")


@dataclass
class ObstacleSet:
    """Capsules of all active avatars for the current step."""

    capsules: CapsuleSet

    @property
    def n(self):
        return self.capsules.n


def empty_obstacles():
    return ObstacleSet(CapsuleSet(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0,))))


def _erode(free, cells):
    """Chebyshev erosion: a cell stays free iff every cell within the given
    Chebyshev radius is free; cells beyond the border count as occupied."""
    if cells <= 0:
        return free.copy()
    padded = np.pad(free, cells, mode="constant", constant_values=False)
    out = np.ones_like(free)
    for di in range(-cells, cells + 1):
        for dj in range(-cells, cells + 1):
            view = padded[cells + di:cells + di + free.shape[0], cells + dj:cells + dj + free.shape[1]]
            out &= view
    return out


def _occupancy_from_source(source, resolution, origin):
    if isinstance(source, (str,)):
        source = {"image": source}
    if not isinstance(source, dict):
        raise NavGridBuildError(f"unsupported navgrid source: {source!r}")

    if "image" in source:
        import json
        import os

        path = source["image"]
        sidecar = {}
        sidecar_path = path + ".json"
        if os.path.isfile(sidecar_path):
            with open(sidecar_path, "r", encoding="utf-8") as f:
                sidecar = json.load(f)
        resolution = source.get("resolution", sidecar.get("resolution", resolution))
        origin = source.get("origin", sidecar.get("origin", origin))
        with Image.open(path) as img:
            gray = np.asarray(img.convert("L"))
        free = gray >= 128
        return free, float(resolution), np.asarray(origin, dtype=np.float64)

    # procedural: size in meters plus rectangular obstacles in world coords
    resolution = float(source.get("resolution", resolution))
    origin = np.asarray(source.get("origin", origin), dtype=np.float64)
    size = source.get("size")
    if size is None:
        raise NavGridBuildError("procedural navgrid spec needs 'size': [width_m, height_m]")
    w = int(round(size[0] / resolution)) + 1
    h = int(round(size[1] / resolution)) + 1
    free = np.ones((h, w), dtype=bool)
    for rect in source.get("obstacles", []):
        x0, y0, x1, y1 = rect
        j0 = max(0, int(math.floor((min(x0, x1) - origin[0]) / resolution)))
        j1 = min(w - 1, int(math.ceil((max(x0, x1) - origin[0]) / resolution)))
        i0 = max(0, int(math.floor((min(y0, y1) - origin[1]) / resolution)))
        i1 = min(h - 1, int(math.ceil((max(y0, y1) - origin[1]) / resolution)))
        if j1 >= j0 and i1 >= i0:
            free[i0:i1 + 1, j0:j1 + 1] = False
    return free, resolution, origin


def build_navgrid(source, resolution=DEFAULT_RESOLUTION, agent_radius=DEFAULT_AGENT_RADIUS, origin=(0.0, 0.0)):
    """Build a configuration-space grid from an occupancy image or procedural spec."""
    free, resolution, origin = _occupancy_from_source(source, resolution, np.asarray(origin, dtype=np.float64))
    cells = int(math.ceil(agent_radius / resolution)) if agent_radius > 0 else 0
    walkable = _erode(free, cells)
    if not walkable.any():
        raise NavGridBuildError("no walkable cells after erosion")
    return NavGrid(resolution=float(resolution), origin=origin, walkable=walkable)


def snap_to_walkable(grid, p):
    """Nearest walkable cell (i, j) whose center is within 0.5 m of p."""
    res = grid.resolution
    ci, cj = grid.world_to_cell(p)
    reach = int(math.ceil(SNAP_RADIUS / res)) + 1
    best = None
    best_d = SNAP_RADIUS
    h, w = grid.walkable.shape
    for i in range(max(0, ci - reach), min(h, ci + reach + 1)):
        for j in range(max(0, cj - reach), min(w, cj + reach + 1)):
            if not grid.walkable[i, j]:
                continue
            d = math.hypot(grid.origin[0] + j * res - p[0], grid.origin[1] + i * res - p[1])
            if d <= best_d:
                if best is None or d < best_d or (i, j) < best:
                    best = (i, j)
                    best_d = d
    if best is None:
        raise InvalidEndpointError(f"no walkable cell within {SNAP_RADIUS} m of {tuple(np.asarray(p))}")
    return best


def _neighbors(i, j, h, w):
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            ni, nj = i + di, j + dj
            if 0 <= ni < h and 0 <= nj < w:
                yield ni, nj, di != 0 and dj != 0


def distance_field(grid, goal, blocked=None):
    """Dijkstra distances (meters) from the goal cell to every walkable cell.

    blocked: optional (H,W) mask of additionally blocked cells.
    """
    h, w = grid.walkable.shape
    open_cells = grid.walkable if blocked is None else (grid.walkable & ~blocked)
    gi, gj = snap_to_walkable(grid, goal) if blocked is None else _snap_open(grid, goal, open_cells)
    straight = grid.resolution
    diagonal = grid.resolution * math.sqrt(2.0)
    dist = np.full((h, w), np.inf)
    dist[gi, gj] = 0.0
    heap = [(0.0, gi, gj)]
    while heap:
        d, i, j = heapq.heappop(heap)
        if d > dist[i, j]:
            continue
        for ni, nj, diag in _neighbors(i, j, h, w):
            if not open_cells[ni, nj]:
                continue
            nd = d + (diagonal if diag else straight)
            if nd < dist[ni, nj]:
                dist[ni, nj] = nd
                heapq.heappush(heap, (nd, ni, nj))
    return dist


def _snap_open(grid, p, open_cells):
    sub = NavGrid(grid.resolution, grid.origin, open_cells)
    return snap_to_walkable(sub, p)


def geodesic_distance(grid, a, b):
    """8-connected Dijkstra path length between snapped endpoints; inf when unreachable."""
    ai, aj = snap_to_walkable(grid, a)
    bi, bj = snap_to_walkable(grid, b)
    if (ai, aj) == (bi, bj):
        return 0.0
    h, w = grid.walkable.shape
    straight = grid.resolution
    diagonal = grid.resolution * math.sqrt(2.0)
    dist = np.full((h, w), np.inf)
    dist[ai, aj] = 0.0
    heap = [(0.0, ai, aj)]
    while heap:
        d, i, j = heapq.heappop(heap)
        if (i, j) == (bi, bj):
            return d
        if d > dist[i, j]:
            continue
        for ni, nj, diag in _neighbors(i, j, h, w):
            if not grid.walkable[ni, nj]:
                continue
            nd = d + (diagonal if diag else straight)
            if nd < dist[ni, nj]:
                dist[ni, nj] = nd
                heapq.heappush(heap, (nd, ni, nj))
    return math.inf


def _segment_to_segments(p0, p1, q0, q1):
    """Distances from one segment to many: p0/p1 (3,), q0/q1 (C,3) -> (C,)."""
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = float(d1 @ d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = r @ d1

    if a <= _SEG_EPS:
        t = np.clip(np.where(e > _SEG_EPS, f / np.maximum(e, _SEG_EPS), 0.0), 0.0, 1.0)
        s = np.zeros_like(t)
    else:
        b = d2 @ d1
        denom = a * e - b * b
        s = np.where(denom > _SEG_EPS, np.clip((b * f - c * e) / np.maximum(denom, _SEG_EPS), 0.0, 1.0), 0.0)
        t = np.where(e > _SEG_EPS, (b * s + f) / np.maximum(e, _SEG_EPS), 0.0)
        t_low = t < 0.0
        t_high = t > 1.0
        s = np.where(t_low, np.clip(-c / a, 0.0, 1.0), s)
        s = np.where(t_high, np.clip((b - c) / a, 0.0, 1.0), s)
        t = np.clip(t, 0.0, 1.0)
        s = np.where(e <= _SEG_EPS, np.clip(-c / a, 0.0, 1.0), s)
        t = np.where(e <= _SEG_EPS, 0.0, t)

    cp = p0[None, :] + s[:, None] * d1[None, :]
    cq = q0 + t[:, None] * d2
    return np.linalg.norm(cp - cq, axis=1)


def capsule_clearance(position, radius, height, obstacles):
    """Signed clearance of a vertical agent capsule against an obstacle set."""
    if obstacles.n == 0:
        return math.inf
    p0 = np.array([position[0], position[1], radius])
    p1 = np.array([position[0], position[1], height - radius])
    caps = obstacles.capsules
    dist = _segment_to_segments(p0, p1, caps.p0, caps.p1)
    return float(np.min(dist - (radius + caps.radius)))


def min_clearance(agent, obstacles):
    """Minimum signed clearance between the agent capsule and all obstacle
    capsules; +inf when the set is empty."""
    return capsule_clearance(agent.position, agent.radius, agent.height, obstacles)


def clip_step(agent, desired_step, grid, obstacles, bisection_iters=10):
    """Sweep the desired planar step and truncate at the collision boundary.

    Substeps are at most resolution/2 long; the stopping point is refined
    with bisection so the final pose keeps a walkable cell and nonnegative
    clearance. No wall sliding: blocked motion truncates.
    """
    step = np.asarray(desired_step, dtype=np.float64)
    length = float(np.linalg.norm(step))
    if length == 0.0:
        return np.zeros(2)

    def ok(frac):
        p = agent.position + frac * step
        if not grid.is_walkable(p):
            return False
        return capsule_clearance(p, agent.radius, agent.height, obstacles) >= 0.0

    if not ok(0.0):
        return np.zeros(2)
    n_sub = max(1, int(math.ceil(length / (grid.resolution / 2.0))))
    lo = 0.0
    hi = None
    for k in range(1, n_sub + 1):
        frac = k / n_sub
        if ok(frac):
            lo = frac
        else:
            hi = frac
            break
    if hi is None:
        return step.copy()
    for _ in range(bisection_iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo * step


def is_step_blocked(agent, desired_step, grid, obstacles):
    """True iff clip_step would shorten the requested displacement by > 1e-6 m."""
    achieved = clip_step(agent, desired_step, grid, obstacles)
    return float(np.linalg.norm(achieved)) < float(np.linalg.norm(desired_step)) - 1e-6


def refresh_obstacles(avatars):
    """Union of sampled capsules for entries (CapsuleTrack, clock_seconds, fps)."""
    sets = [sample_capsules(track, clock, fps) for track, clock, fps in avatars]
    return ObstacleSet(merge_capsule_sets(sets))
