import numpy as np

from splatnav.frame_io import (
    load_color_png,
    load_depth_f32,
    load_depth_pfm,
    save_color_png,
    save_depth_f32,
    save_depth_pfm,
)


def test_png_round_trip_quantized(tmp_path):
    rng = np.random.default_rng(0)
    color = rng.uniform(0, 1, size=(16, 24, 3))
    path = tmp_path / "c.png"
    save_color_png(color, path)
    loaded = load_color_png(path)
    assert loaded.shape == color.shape
    assert np.abs(loaded - color).max() <= 0.5 / 255.0 + 1e-9


def test_pfm_round_trip_exact(tmp_path):
    rng = np.random.default_rng(1)
    depth = rng.uniform(0.1, 50.0, size=(9, 13)).astype(np.float32).astype(np.float64)
    path = tmp_path / "d.pfm"
    save_depth_pfm(depth, path)
    loaded = load_depth_pfm(path)
    np.testing.assert_array_equal(loaded, depth)


def test_f32_round_trip_with_sidecar(tmp_path):
    depth = np.arange(12, dtype=np.float64).reshape(3, 4)
    path = tmp_path / "d.f32"
    save_depth_f32(depth, path, far=100.0)
    loaded, meta = load_depth_f32(path)
    np.testing.assert_array_equal(loaded, depth)
    assert meta == {"width": 4, "height": 3, "far": 100.0}
