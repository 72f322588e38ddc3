import json
import os

import numpy as np
import pytest

from splatnav.avatar import load_avatar_bundle, save_avatar_bundle
from splatnav.cli import main
from splatnav.synthetic import make_avatar_bundle, make_demo_scene


@pytest.fixture(scope="module")
def demo_scene(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo")
    return make_demo_scene(str(root), n_scene_gaussians=400, n_avatars=2, seed=1, camera_size=48)


def test_render_writes_outputs(demo_scene, tmp_path):
    out = tmp_path / "frame"
    rc = main(["render", "--scene", demo_scene, "--pose", "1.0", "4.0", "0.0",
               "--time", "0.5", "--out", str(out)])
    assert rc == 0
    assert (tmp_path / "frame.png").exists()
    assert (tmp_path / "frame.pfm").exists()


def test_render_deterministic_bytes(demo_scene, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["render", "--scene", demo_scene, "--pose", "1.0", "4.0", "0.3",
                     "--time", "1.0", "--out", str(out)]) == 0
        outs.append((tmp_path / f"{name}.png").read_bytes())
    assert outs[0] == outs[1]


def test_render_f32_depth(demo_scene, tmp_path):
    out = tmp_path / "frame"
    rc = main(["render", "--scene", demo_scene, "--pose", "1.0", "4.0", "0.0",
               "--out", str(out), "--depth-format", "f32"])
    assert rc == 0
    assert (tmp_path / "frame.f32").exists()
    with open(tmp_path / "frame.f32.json") as f:
        meta = json.load(f)
    assert meta["width"] == 48 and meta["height"] == 48


def test_render_missing_scene_fails_cleanly(tmp_path, capsys):
    rc = main(["render", "--scene", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_episode_writes_traces_and_summary(demo_scene, tmp_path):
    out = tmp_path / "eps"
    rc = main(["episode", "--scene", demo_scene, "--task", "pointnav_avatar",
               "--policy", "shortest_path", "--seed", "3", "--episodes", "2",
               "--out", str(out), "--max-steps", "120"])
    assert rc == 0
    assert (out / "ep_000.jsonl").exists()
    assert (out / "ep_001.jsonl").exists()
    assert (out / "summary.csv").exists()


def test_episode_seed_determinism_byte_identical(demo_scene, tmp_path):
    blobs = []
    for run in ("r1", "r2"):
        out = tmp_path / run
        rc = main(["episode", "--scene", demo_scene, "--task", "pointnav",
                   "--policy", "random", "--seed", "7", "--episodes", "2",
                   "--out", str(out), "--max-steps", "60"])
        assert rc == 0
        blobs.append(b"".join((out / f"ep_{i:03d}.jsonl").read_bytes() for i in range(2)))
    assert blobs[0] == blobs[1]


def test_episode_dump_frames(demo_scene, tmp_path):
    out = tmp_path / "dump"
    rc = main(["episode", "--scene", demo_scene, "--task", "pointnav", "--policy", "random",
               "--seed", "1", "--episodes", "1", "--out", str(out),
               "--max-steps", "5", "--dump-frames"])
    assert rc == 0
    frames = list((out / "ep_000_frames").glob("*.png"))
    assert len(frames) >= 1


def test_score_round_trip(demo_scene, tmp_path, capsys):
    out = tmp_path / "eps"
    main(["episode", "--scene", demo_scene, "--task", "pointnav", "--policy", "shortest_path",
          "--seed", "2", "--episodes", "1", "--out", str(out), "--max-steps", "200"])
    capsys.readouterr()
    csv_out = tmp_path / "scores.csv"
    rc = main(["score", "--traces", str(out), "--csv", str(csv_out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "SR (%)" in printed
    assert csv_out.exists()


def test_bake_fills_missing_capsules(tmp_path):
    bundle = make_avatar_bundle(n_gaussians=16, seed=5, fps=10.0)
    bundle_dir = tmp_path / "bundle"
    track = bundle.capsule_track
    bundle.capsule_track = None
    save_avatar_bundle(bundle, bundle_dir)
    assert not (bundle_dir / "capsules.f32").exists()
    rc = main(["bake", "--bundle", str(bundle_dir)])
    assert rc == 0
    loaded = load_avatar_bundle(bundle_dir)
    np.testing.assert_allclose(loaded.capsule_track.frames, track.frames, atol=1e-6)


def test_validate_scene_and_assets(demo_scene, tmp_path, capsys):
    scene_dir = os.path.dirname(demo_scene)
    rc = main(["validate", "--scene", demo_scene,
               "--ply", os.path.join(scene_dir, "scene.ply"),
               "--bundle", os.path.join(scene_dir, "avatar_0")])
    assert rc == 0
    printed = capsys.readouterr().out
    assert printed.count("OK") == 3


def test_validate_rejects_corrupt_ply(tmp_path, capsys):
    bad = tmp_path / "bad.ply"
    bad.write_bytes(b"not a ply at all\nend_header\n")
    rc = main(["validate", "--ply", str(bad)])
    assert rc == 1


def test_validate_needs_a_target(capsys):
    assert main(["validate"]) == 1


def test_bench_cli_writes_csv(tmp_path):
    out = tmp_path / "bench.csv"
    rc = main(["bench", "--gaussians", "500,1500", "--avatars", "", "--width", "48",
               "--height", "48", "--frames", "1", "--warmup", "0", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("config,")
    assert len(lines) == 3


def test_unknown_flag_rejected(demo_scene, tmp_path):
    with pytest.raises(SystemExit):
        main(["render", "--scene", demo_scene, "--out", str(tmp_path / "x"), "--wibble"])


def test_replay_policy_through_cli(demo_scene, tmp_path):
    actions = tmp_path / "actions.txt"
    actions.write_text("move_forward\nturn_left\nmove_forward\nstop\n")
    out = tmp_path / "replay"
    rc = main(["episode", "--scene", demo_scene, "--task", "pointnav", "--policy", "replay",
               "--actions", str(actions), "--seed", "0", "--episodes", "1", "--out", str(out)])
    assert rc == 0
    records = [json.loads(line) for line in (out / "ep_000.jsonl").read_text().splitlines()]
    steps = [r for r in records if r["type"] == "step"]
    assert [s["action"] for s in steps] == ["move_forward", "turn_left", "move_forward", "stop"]
