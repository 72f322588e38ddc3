import math

import numpy as np
import pytest

from splatnav.errors import ContractViolation
from splatnav.metrics import episode_metrics, aggregate
from splatnav.nav import build_navgrid
from splatnav.policies import RandomPolicy, ReplayPolicy, ShortestPathPolicy, make_policy
from splatnav.synthetic import make_avatar_bundle
from splatnav.tasks import (
    MOVE_FORWARD,
    STOP,
    AvatarRuntime,
    SimScene,
    TaskSpec,
    full_trace,
    reset_episode,
    step_episode,
)


def free_scene():
    return SimScene(navgrid=build_navgrid({"size": [10.0, 10.0], "resolution": 0.25}))


def run_episode(scene, task, seed, policy):
    state = reset_episode(scene, task, seed)
    while not state.done:
        step_episode(scene, state, task, policy(state, None))
    return state


def test_shortest_path_free_grid_succeeds():
    scene = free_scene()
    task = TaskSpec(kind="pointnav")
    results = []
    for seed in range(10):
        state = run_episode(scene, task, seed, ShortestPathPolicy(scene, task))
        results.append(episode_metrics(full_trace(state, task)))
    summary = aggregate(results)
    assert summary["sr"] == 1.0
    assert summary["spl"] >= 0.95


def test_shortest_path_stops_at_goal():
    scene = free_scene()
    task = TaskSpec(kind="pointnav")
    state = run_episode(scene, task, 3, ShortestPathPolicy(scene, task))
    assert state.termination == "stop"
    assert np.linalg.norm(state.agent.position - state.goal) <= task.pointnav.success_distance


def test_shortest_path_avoids_crossing_avatar():
    scene = free_scene()
    bundle = make_avatar_bundle(n_gaussians=30, seed=9,
                                waypoints=((5.0, 2.0), (5.0, 8.0), (5.0, 2.0)), speed=0.7, fps=10.0)
    scene.avatars.append(AvatarRuntime(bundle))
    task = TaskSpec(kind="pointnav_avatar")
    for seed in (0, 1, 2, 3, 4):
        state = reset_episode(scene, task, seed)
        policy = ShortestPathPolicy(scene, task)
        while not state.done:
            _, _, _, info = step_episode(scene, state, task, policy(state, None))
            assert info["clearance"] >= -1e-6
        m = episode_metrics(full_trace(state, task))
        assert m.success


def test_random_policy_is_seed_deterministic():
    scene = free_scene()
    task = TaskSpec(kind="pointnav")
    task.pointnav.max_steps = 50
    traces = []
    for _ in range(2):
        state = run_episode(scene, task, 21, RandomPolicy())
        traces.append(full_trace(state, task))
    assert traces[0] == traces[1]


def test_replay_policy_plays_back_exact_sequence():
    scene = free_scene()
    task = TaskSpec(kind="pointnav")
    actions = [MOVE_FORWARD, MOVE_FORWARD, "turn_left", MOVE_FORWARD]
    state = reset_episode(scene, task, 5)
    policy = ReplayPolicy(actions)
    played = []
    while not state.done:
        a = policy(state, None)
        played.append(a)
        step_episode(scene, state, task, a)
    assert played == actions + [STOP]


def test_replay_rejects_unknown_action():
    with pytest.raises(ContractViolation):
        ReplayPolicy(["moonwalk"])


def test_make_policy_names():
    scene = free_scene()
    task = TaskSpec(kind="pointnav")
    assert isinstance(make_policy("shortest_path", scene, task), ShortestPathPolicy)
    assert isinstance(make_policy("random", scene, task), RandomPolicy)
    with pytest.raises(ContractViolation):
        make_policy("dd_ppo", scene, task)
    with pytest.raises(ContractViolation):
        make_policy("replay", scene, task)


def test_tracknav_follower_tracks_target():
    scene = free_scene()
    bundle = make_avatar_bundle(n_gaussians=30, seed=12,
                                waypoints=((3.0, 5.0), (7.0, 5.0), (3.0, 5.0)), speed=0.5, fps=10.0)
    scene.avatars.append(AvatarRuntime(bundle))
    task = TaskSpec(kind="tracknav")
    task.track.max_steps = 150
    state = run_episode(scene, task, 2, ShortestPathPolicy(scene, task))
    m = episode_metrics(full_trace(state, task))
    assert m.tr > 0.2  # follower reaches and holds the band for a useful fraction
    assert m.cc == 0
