"""Command-line surface: render stills, run scripted episodes, bake capsules,
validate assets, score traces, and benchmark."""

import argparse
import json
import os
import sys

import numpy as np

from .avatar import load_avatar_bundle, save_avatar_bundle
from .bench import BenchSpec, run_benchmark, run_benchmark_compare
from .camera import Camera, pose_world_to_camera
from .errors import SplatNavError
from .frame_io import save_color_png, save_depth_f32, save_depth_pfm
from .metrics import aggregate, episode_metrics, format_summary_table, summary_csv
from .nav import build_navgrid
from .ply import load_gaussian_ply
from .policies import make_policy
from .rig import bake_capsules
from .scene import load_scene_config
from .tasks import (
    AvatarRuntime,
    SimScene,
    TaskSpec,
    full_trace,
    reset_episode,
    step_episode,
    write_trace,
)


def build_sim_scene(config, width=None, height=None, need_grid=False):
    """Assemble a SimScene from a loaded SceneConfig."""
    cloud = load_gaussian_ply(config.scene_ply) if config.scene_ply else None
    navgrid = None
    if config.navgrid is not None:
        navgrid = build_navgrid(config.navgrid)
    elif need_grid:
        raise SplatNavError("this command needs a 'navgrid' entry in the scene config")
    avatars = [
        AvatarRuntime(load_avatar_bundle(entry.bundle), entry.start_offset, entry.enabled, entry.loop)
        for entry in config.avatars
    ]
    camera_defaults = config.camera
    if width is not None:
        camera_defaults.width = width
    if height is not None:
        camera_defaults.height = height
    return SimScene(
        navgrid=navgrid,
        cloud=cloud,
        avatars=avatars,
        background=config.background,
        camera_defaults=camera_defaults,
    )


def cmd_render(args):
    config = load_scene_config(args.scene)
    scene = build_sim_scene(config, args.width, args.height)
    if scene.cloud is None:
        raise SplatNavError("scene config has no 'scene_ply' to render")
    defaults = scene.camera_defaults
    w2c = pose_world_to_camera(
        np.array([args.pose[0], args.pose[1], defaults.mount_height]), args.pose[2], args.pitch
    )
    camera = Camera.from_hfov(defaults.width, defaults.height, defaults.hfov_deg,
                              defaults.near, defaults.far, w2c)
    from .renderer import render_observation

    avatar_clouds = [a.deformed_cloud(args.time) for a in scene.avatars if a.enabled]
    frame = render_observation(scene.cloud, avatar_clouds, camera, scene.background)
    save_color_png(frame.color, args.out + ".png")
    if args.depth_format == "pfm":
        save_depth_pfm(frame.depth, args.out + ".pfm")
    else:
        save_depth_f32(frame.depth, args.out + ".f32", far=defaults.far)
    print(f"wrote {args.out}.png and depth ({args.depth_format})")
    return 0


def cmd_episode(args):
    config = load_scene_config(args.scene)
    scene = build_sim_scene(config, args.width, args.height, need_grid=True)
    task = TaskSpec(kind=args.task)
    if args.max_steps is not None:
        task.pointnav.max_steps = args.max_steps
        task.track.max_steps = args.max_steps
    os.makedirs(args.out, exist_ok=True)

    all_metrics = []
    for ep in range(args.episodes):
        seed = args.seed + ep
        policy = make_policy(args.policy, scene, task, args.actions)
        state = reset_episode(scene, task, seed)
        obs = None
        frame_dir = None
        if args.dump_frames:
            frame_dir = os.path.join(args.out, f"ep_{ep:03d}_frames")
            os.makedirs(frame_dir, exist_ok=True)
        while not state.done:
            action = policy(state, obs)
            obs, _, _, _ = step_episode(scene, state, task, action, render=scene.cloud is not None)
            if frame_dir is not None and obs["rgbd"] is not None:
                save_color_png(obs["rgbd"].color, os.path.join(frame_dir, f"{state.step_index:04d}.png"))
        records = full_trace(state, task)
        trace_path = os.path.join(args.out, f"ep_{ep:03d}.jsonl")
        write_trace(records, trace_path)
        m = episode_metrics(records)
        all_metrics.append(m)
        print(f"episode {ep}: seed={seed} steps={state.step_index} success={m.success} "
              f"spl={m.spl:.3f} cr={m.cr:.3f}")

    summary = aggregate(all_metrics)
    print(format_summary_table(summary))
    with open(os.path.join(args.out, "summary.csv"), "w", encoding="utf-8") as f:
        f.write(summary_csv(summary))
    return 0


def cmd_bake(args):
    bundle = load_avatar_bundle(args.bundle, require_capsules=False)
    track = bake_capsules(bundle.skeleton, bundle.trajectory)
    bundle.capsule_track = track
    bundle.validate()
    save_avatar_bundle(bundle, args.bundle)
    print(f"baked {track.n_capsules} capsules x {track.n_frames} frames into {args.bundle}")
    return 0


def cmd_validate(args):
    checked = 0
    if args.ply:
        cloud = load_gaussian_ply(args.ply)
        print(f"OK ply: {args.ply} ({cloud.n} splats, SH degree {cloud.sh_degree})")
        checked += 1
    if args.bundle:
        bundle = load_avatar_bundle(args.bundle)
        print(f"OK bundle: {args.bundle} ({bundle.canonical.n} splats, {bundle.n_joints} joints, "
              f"{bundle.trajectory.n_frames} frames)")
        checked += 1
    if args.scene:
        config = load_scene_config(args.scene)
        scene = build_sim_scene(config)
        parts = []
        if scene.cloud is not None:
            parts.append(f"{scene.cloud.n} scene splats")
        if scene.navgrid is not None:
            parts.append(f"navgrid {scene.navgrid.shape}")
        parts.append(f"{len(scene.avatars)} avatars")
        print(f"OK scene: {args.scene} ({', '.join(parts)})")
        checked += 1
    if checked == 0:
        raise SplatNavError("nothing to validate: pass --scene, --ply, or --bundle")
    return 0


def cmd_score(args):
    from .tasks import read_trace

    paths = []
    for p in args.traces:
        if os.path.isdir(p):
            paths.extend(sorted(
                os.path.join(p, name) for name in os.listdir(p) if name.endswith(".jsonl")
            ))
        else:
            paths.append(p)
    if not paths:
        raise SplatNavError("no trace files found")
    per_episode = [episode_metrics(read_trace(p)) for p in paths]
    summary = aggregate(per_episode)
    print(format_summary_table(summary))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as f:
            f.write(summary_csv(summary))
        print(f"wrote {args.csv}")
    return 0


def cmd_bench(args):
    spec = BenchSpec(
        gaussian_counts=[int(v) for v in args.gaussians.split(",") if v] if args.gaussians else [],
        avatar_counts=[int(v) for v in args.avatars.split(",") if v] if args.avatars else [],
        width=args.width,
        height=args.height,
        frames=args.frames,
        warmup=args.warmup,
        seed=args.seed,
    )
    report = run_benchmark_compare(spec) if args.compare_kernels else run_benchmark(spec)
    print(report.format_table())
    if args.out:
        report.to_csv(args.out)
        print(f"wrote {args.out}")
    return 0


def make_parser():
    parser = argparse.ArgumentParser(prog="splatnav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render the scene and avatars at a time point")
    p.add_argument("--scene", required=True)
    p.add_argument("--pose", nargs=3, type=float, metavar=("X", "Y", "YAW"), default=[0.0, 0.0, 0.0])
    p.add_argument("--pitch", type=float, default=0.0)
    p.add_argument("--time", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--depth-format", choices=("pfm", "f32"), default="pfm")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("episode", help="run scripted-policy episodes")
    p.add_argument("--scene", required=True)
    p.add_argument("--task", choices=("pointnav", "pointnav_avatar", "tracknav"), default="pointnav")
    p.add_argument("--policy", choices=("shortest_path", "random", "replay"), default="shortest_path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-frames", action="store_true")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--actions", default=None, help="action file for the replay policy")
    p.set_defaults(func=cmd_episode)

    p = sub.add_parser("bake", help="bake proxy capsules into a bundle directory")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_bake)

    p = sub.add_parser("validate", help="validate assets")
    p.add_argument("--scene")
    p.add_argument("--ply")
    p.add_argument("--bundle")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", help="compute metrics from exported traces")
    p.add_argument("--traces", nargs="+", required=True)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("bench", help="throughput and memory scaling sweep")
    p.add_argument("--gaussians", default="10000,50000,100000")
    p.add_argument("--avatars", default="0,1,2")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--frames", type=int, default=6)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--compare-kernels", action="store_true")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SplatNavError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
