"""Desk-scale scaling benchmark: throughput and peak memory versus gaussian
count and avatar count.

Absolute frame rates are hardware-bound; only the scaling shape (FPS
nonincreasing, memory approximately linear) is meaningful.
"""

import math
import time
import tracemalloc
from dataclasses import dataclass, field

import numpy as np

from . import raster
from .camera import Camera, pose_world_to_camera
from .errors import ContractViolation
from .renderer import render_observation
from .synthetic import make_avatar_bundle, random_cloud
from .tasks import AvatarRuntime


@dataclass
class BenchSpec:
    gaussian_counts: list = field(default_factory=lambda: [10_000, 50_000, 100_000])
    avatar_counts: list = field(default_factory=lambda: [0, 1, 2])
    width: int = 256
    height: int = 256
    frames: int = 6
    warmup: int = 2
    seed: int = 0
    avatar_gaussians: int = 2000
    avatar_scene_gaussians: int = 20_000
    kernel: str = None

    def __post_init__(self):
        if self.frames < 1:
            raise ContractViolation("frames per measurement must be >= 1")
        if any(c < 0 for c in list(self.gaussian_counts) + list(self.avatar_counts)):
            raise ContractViolation("sweep counts must be nonnegative")
        if not self.gaussian_counts and not self.avatar_counts:
            raise ContractViolation("benchmark spec has zero sweep points")


@dataclass
class BenchReport:
    rows: list

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write("config,n_gaussians,n_avatars,fps,peak_bytes\n")
            for r in self.rows:
                f.write(f"{r['config']},{r['n_gaussians']},{r['n_avatars']},{r['fps']:.4f},{r['peak_bytes']}\n")

    def format_table(self):
        lines = ["config            n_gauss   n_avat   fps        peak_MB"]
        for r in self.rows:
            lines.append(
                f"{r['config']:<18}{r['n_gaussians']:<10}{r['n_avatars']:<9}"
                f"{r['fps']:<11.2f}{r['peak_bytes'] / 1e6:.1f}"
            )
        return "\n".join(lines)


def _bench_camera(spec):
    # camera just outside the splat box, looking through it
    w2c = pose_world_to_camera(np.array([-6.0, 0.0, 1.0]), heading=0.0)
    return Camera.from_hfov(spec.width, spec.height, 90.0, 0.1, 100.0, w2c)


def run_benchmark(spec, kernel=None):
    """Run the gaussian-count and avatar-count sweeps; returns a BenchReport."""
    kernel = kernel if kernel is not None else spec.kernel
    kernel_mod = raster.get_kernel(kernel)
    label = kernel_mod.KERNEL_NAME
    camera = _bench_camera(spec)
    background = np.array([1.0, 1.0, 1.0])
    rows = []

    for n in spec.gaussian_counts:
        tracemalloc.start()
        cloud = random_cloud(n, seed=spec.seed, sh_degree=1, box=4.0, center=(0.0, 0.0, 1.0))
        render_observation(cloud, [], camera, background, kernel=label)
        peak_asset = tracemalloc.get_traced_memory()[1]
        tracemalloc.stop()

        def render_once(i, cloud=cloud):
            render_observation(cloud, [], camera, background, kernel=label)

        for i in range(spec.warmup):
            render_once(i)
        t0 = time.perf_counter()
        for i in range(spec.frames):
            render_once(i)
        elapsed = time.perf_counter() - t0
        rows.append(
            {
                "config": f"gaussians/{label}",
                "n_gaussians": n,
                "n_avatars": 0,
                "fps": spec.frames / elapsed if elapsed > 0 else math.inf,
                "peak_bytes": int(peak_asset),
            }
        )

    if spec.avatar_counts:
        for k in spec.avatar_counts:
            tracemalloc.start()
            cloud = random_cloud(spec.avatar_scene_gaussians, seed=spec.seed, sh_degree=1,
                                 box=4.0, center=(0.0, 0.0, 1.0))
            avatars = [
                AvatarRuntime(
                    make_avatar_bundle(
                        n_gaussians=spec.avatar_gaussians,
                        seed=spec.seed + 10 + i,
                        waypoints=((-2.0 + i, -1.5), (2.0 - 0.3 * i, 1.5)),
                    ),
                    start_offset=0.3 * i,
                )
                for i in range(k)
            ]

            def render_once(i, cloud=cloud, avatars=avatars):
                t = 0.1 * i
                avatar_clouds = [a.deformed_cloud(t) for a in avatars]
                render_observation(cloud, avatar_clouds, camera, background, kernel=label)

            render_once(0)
            peak_asset = tracemalloc.get_traced_memory()[1]
            tracemalloc.stop()

            for i in range(spec.warmup):
                render_once(i + 1)
            t0 = time.perf_counter()
            for i in range(spec.frames):
                render_once(spec.warmup + 1 + i)
            elapsed = time.perf_counter() - t0
            rows.append(
                {
                    "config": f"avatars/{label}",
                    "n_gaussians": spec.avatar_scene_gaussians + k * spec.avatar_gaussians,
                    "n_avatars": k,
                    "fps": spec.frames / elapsed if elapsed > 0 else math.inf,
                    "peak_bytes": int(peak_asset),
                }
            )

    return BenchReport(rows=rows)


def run_benchmark_compare(spec):
    """Run the sweep once per available kernel (shape-vs-shape comparison)."""
    rows = []
    for name in sorted(raster.available_kernels()):
        rows.extend(run_benchmark(spec, kernel=name).rows)
    return BenchReport(rows=rows)


def linear_fit_r2(x, y):
    """R^2 of the least-squares line through (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    coeffs = np.polyfit(x, y, 1)
    pred = np.polyval(coeffs, x)
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot
