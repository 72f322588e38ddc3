import json

import numpy as np
import pytest

from splatnav.avatar import CapsuleTrack, load_avatar_bundle, save_avatar_bundle
from splatnav.errors import ConsistencyError, SchemaError, ValidationError
from splatnav.synthetic import make_avatar_bundle


def test_save_load_round_trip(tmp_path, walking_bundle):
    out = tmp_path / "bundle"
    save_avatar_bundle(walking_bundle, out)
    loaded = load_avatar_bundle(out)
    assert loaded.canonical.n == walking_bundle.canonical.n
    assert loaded.n_joints == walking_bundle.n_joints
    assert loaded.trajectory.n_frames == walking_bundle.trajectory.n_frames
    assert loaded.capsule_track.frames.shape == walking_bundle.capsule_track.frames.shape
    np.testing.assert_allclose(
        loaded.canonical.positions, walking_bundle.canonical.positions, atol=0
    )
    np.testing.assert_allclose(loaded.lbs_weights.sum(axis=1), 1.0, atol=1e-5)


def test_small_bundle_shapes(tmp_path):
    bundle = make_avatar_bundle(n_gaussians=10, seed=0, waypoints=((0, 0), (1, 0)), speed=1.0, fps=4.0)
    out = tmp_path / "b"
    save_avatar_bundle(bundle, out)
    loaded = load_avatar_bundle(out)
    t = loaded.trajectory.n_frames
    c = loaded.capsule_track.n_capsules
    assert loaded.capsule_track.frames.shape == (t, c, 7)
    assert c == loaded.n_joints - 1


def test_duration_reported(tmp_path, walking_bundle):
    out = tmp_path / "bundle"
    save_avatar_bundle(walking_bundle, out)
    with open(out / "manifest.json") as f:
        manifest = json.load(f)
    loaded = load_avatar_bundle(out)
    assert loaded.duration == pytest.approx(manifest["n_frames"] / manifest["fps"])


def test_manifest_duration_example(tmp_path, walking_bundle):
    # fps=30, 60 frames -> 2.0 s
    bundle = make_avatar_bundle(n_gaussians=8, seed=1, waypoints=((0, 0), (1.9667, 0)), speed=1.0, fps=30.0)
    assert bundle.trajectory.n_frames == 60
    assert bundle.duration == pytest.approx(2.0)


def test_missing_blob_names_it(tmp_path, walking_bundle):
    out = tmp_path / "bundle"
    save_avatar_bundle(walking_bundle, out)
    (out / "inv_bind.f32").unlink()
    with pytest.raises(FileNotFoundError, match="inv_bind.f32"):
        load_avatar_bundle(out)


def test_missing_capsules_requires_flag(tmp_path, walking_bundle):
    out = tmp_path / "bundle"
    save_avatar_bundle(walking_bundle, out)
    (out / "capsules.f32").unlink()
    with pytest.raises(FileNotFoundError, match="capsules.f32"):
        load_avatar_bundle(out)
    loaded = load_avatar_bundle(out, require_capsules=False)
    assert loaded.capsule_track is None


def test_frame_count_mismatch(tmp_path, walking_bundle):
    out = tmp_path / "bundle"
    save_avatar_bundle(walking_bundle, out)
    track = walking_bundle.capsule_track
    short = np.asarray(track.frames[:-3], dtype="<f4")
    short.tofile(out / "capsules.f32")
    with open(out / "manifest.json") as f:
        manifest = json.load(f)
    manifest["n_frames"] = walking_bundle.trajectory.n_frames  # unchanged; blob is short
    with pytest.raises(ConsistencyError, match="capsules.f32"):
        load_avatar_bundle(out)


def test_weight_renormalization_within_tolerance(tmp_path, walking_bundle):
    out = tmp_path / "bundle"
    save_avatar_bundle(walking_bundle, out)
    weights = np.fromfile(out / "weights.f32", dtype="<f4").reshape(
        walking_bundle.canonical.n, walking_bundle.n_joints
    )
    weights = weights * (1.0 + 5e-4)  # row sums off by 5e-4 < 1e-3
    weights.astype("<f4").tofile(out / "weights.f32")
    loaded = load_avatar_bundle(out)
    np.testing.assert_allclose(loaded.lbs_weights.sum(axis=1), 1.0, atol=1e-9)


def test_weight_sum_beyond_tolerance_rejected(tmp_path, walking_bundle):
    out = tmp_path / "bundle"
    save_avatar_bundle(walking_bundle, out)
    weights = np.fromfile(out / "weights.f32", dtype="<f4").reshape(
        walking_bundle.canonical.n, walking_bundle.n_joints
    )
    weights[0] = weights[0] * 1.01  # off by 1e-2 > 1e-3
    weights.astype("<f4").tofile(out / "weights.f32")
    with pytest.raises(ValidationError, match="row 0"):
        load_avatar_bundle(out)


def test_missing_manifest_key(tmp_path, walking_bundle):
    out = tmp_path / "bundle"
    save_avatar_bundle(walking_bundle, out)
    with open(out / "manifest.json") as f:
        manifest = json.load(f)
    del manifest["n_joints"]
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f)
    with pytest.raises(SchemaError, match="n_joints"):
        load_avatar_bundle(out)


def test_capsule_track_invariants():
    bad = CapsuleTrack(frames=np.zeros((2, 1, 7)))
    with pytest.raises(ValidationError, match="radii"):
        bad.validate()
    ok = CapsuleTrack(frames=np.concatenate([np.zeros((2, 1, 6)), np.full((2, 1, 1), 0.1)], axis=2))
    ok.validate()
