import pytest

from splatnav import raster
from splatnav.bench import BenchReport, BenchSpec, linear_fit_r2, run_benchmark, run_benchmark_compare
from splatnav.errors import ContractViolation


def tiny_spec(**kw):
    defaults = dict(
        gaussian_counts=[500, 2000],
        avatar_counts=[0, 1],
        width=64,
        height=64,
        frames=2,
        warmup=1,
        seed=0,
        avatar_gaussians=200,
        avatar_scene_gaussians=1000,
    )
    defaults.update(kw)
    return BenchSpec(**defaults)


def test_report_rows_and_csv_columns(tmp_path):
    report = run_benchmark(tiny_spec())
    assert len(report.rows) == 4
    for row in report.rows:
        assert set(row) == {"config", "n_gaussians", "n_avatars", "fps", "peak_bytes"}
        assert row["fps"] > 0
        assert row["peak_bytes"] > 0
    path = tmp_path / "bench.csv"
    report.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "config,n_gaussians,n_avatars,fps,peak_bytes"
    assert len(lines) == 5


def test_memory_scales_linearly_in_gaussians():
    spec = tiny_spec(gaussian_counts=[1000, 4000, 8000, 16000], avatar_counts=[], frames=1)
    report = run_benchmark(spec)
    ns = [r["n_gaussians"] for r in report.rows]
    mem = [r["peak_bytes"] for r in report.rows]
    assert linear_fit_r2(ns, mem) >= 0.95


def test_avatar_memory_grows_with_count():
    spec = tiny_spec(gaussian_counts=[], avatar_counts=[0, 2, 4], frames=1)
    report = run_benchmark(spec)
    mem = [r["peak_bytes"] for r in report.rows]
    assert mem[0] < mem[1] < mem[2]


def test_zero_sweep_points_rejected():
    with pytest.raises(ContractViolation):
        BenchSpec(gaussian_counts=[], avatar_counts=[], frames=1)
    with pytest.raises(ContractViolation):
        BenchSpec(frames=0)
    with pytest.raises(ContractViolation):
        BenchSpec(gaussian_counts=[-5])


def test_compare_kernels_runs_each_available():
    spec = tiny_spec(gaussian_counts=[500], avatar_counts=[])
    report = run_benchmark_compare(spec)
    kernels = sorted(raster.available_kernels())
    assert len(report.rows) == len(kernels)
    configs = {r["config"] for r in report.rows}
    assert configs == {f"gaussians/{k}" for k in kernels}


def test_fps_repeatability_same_seed():
    # measurement window ~1s so wall-clock jitter stays well under the margin
    spec = tiny_spec(gaussian_counts=[20000], avatar_counts=[], width=128, height=128,
                     frames=12, warmup=3)
    a = run_benchmark(spec).rows[0]["fps"]
    b = run_benchmark(spec).rows[0]["fps"]
    assert abs(a - b) / max(a, b) <= 0.15


def test_linear_fit_r2_exact_line():
    assert linear_fit_r2([1, 2, 3, 4], [2.0, 4.0, 6.0, 8.0]) == pytest.approx(1.0)
    assert linear_fit_r2([1, 2, 3, 4], [5.0, 5.0, 5.0, 5.0]) == pytest.approx(1.0)
