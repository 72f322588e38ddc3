"""Episode state machine and reward functions for point-goal and
human-tracking navigation.

Reward shaping follows a two-stage avatar proximity penalty on signed
clearance, a saturating personal-space intrusion measure, geodesic progress
toward the goal, and for tracking: band/approach/anti-circling terms with
streak bonuses.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .camera import agent_camera
from .errors import ContractViolation, EpisodeGenerationError
from .nav import (
    AgentBody,
    clip_step,
    distance_field,
    empty_obstacles,
    min_clearance,
    refresh_obstacles,
)
from .renderer import render_observation
from .rig import lbs_deform, sample_pose
from .transforms import quat_to_matrix

TRACE_SCHEMA = "splatnav.trace.v1"

STOP = "stop"
MOVE_FORWARD = "move_forward"
TURN_LEFT = "turn_left"
TURN_RIGHT = "turn_right"
ACTIONS = (STOP, MOVE_FORWARD, TURN_LEFT, TURN_RIGHT)


@dataclass
class ActionSpace:
    forward_step: float = 0.25
    turn_angle: float = math.radians(10.0)

    def __post_init__(self):
        if self.forward_step <= 0:
            raise ContractViolation("forward_step must be positive")
        if not 0 < self.turn_angle < math.pi:
            raise ContractViolation("turn_angle must lie in (0, pi)")


@dataclass
class AvatarPenaltyParams:
    d_int: float = 1.0
    d_crit: float = 0.5
    p1: float = 0.1
    alpha1: float = 2.0
    alpha2: float = 4.0
    p_col: float = 0.6
    p_max: float = 0.6
    eps_col: float = 1e-5

    def __post_init__(self):
        if not 0 < self.d_crit < self.d_int:
            raise ContractViolation("need 0 < d_crit < d_int")
        if not 0 < self.p1 < self.p_col <= self.p_max:
            raise ContractViolation("need 0 < p1 < p_col <= p_max")
        if self.alpha1 < 1 or self.alpha2 < 1:
            raise ContractViolation("penalty exponents must be >= 1")


def tracknav_penalty_params():
    """Scaled-down penalty for the closer operating range of tracking."""
    return AvatarPenaltyParams(p1=0.03, p_col=0.12, p_max=0.12, alpha1=2.0, alpha2=3.0)


@dataclass
class PointNavRewardParams:
    lambda_prog: float = 1.0
    lambda_avatar: float = 1.0
    r_slack: float = -0.01
    r_succ: float = 2.5
    success_distance: float = 0.2
    max_steps: int = 500
    penalty: AvatarPenaltyParams = field(default_factory=AvatarPenaltyParams)

    def __post_init__(self):
        if self.success_distance <= 0:
            raise ContractViolation("success_distance must be positive")
        if self.max_steps < 1:
            raise ContractViolation("max_steps must be at least 1")


@dataclass
class TrackParams:
    d_min: float = 1.2
    d_max: float = 2.5
    theta_view: float = math.radians(45.0)
    theta_rear: float = math.radians(60.0)
    lambda_app: float = 0.8
    r_peak: float = 0.36
    eta: float = 0.58
    sigma_factor: float = 0.85
    b_step: float = 0.08
    b_streak: float = 0.12
    streak_cap: int = 50
    p_view: float = 0.10
    p_rear: float = 0.10
    radial_w: float = 0.9
    tangential_w: float = 0.45
    max_steps: int = 500
    penalty: AvatarPenaltyParams = field(default_factory=tracknav_penalty_params)

    def __post_init__(self):
        if not 0 < self.d_min < self.d_max:
            raise ContractViolation("need 0 < d_min < d_max")
        for angle in (self.theta_view, self.theta_rear):
            if not 0 < angle < math.pi:
                raise ContractViolation("track angles must lie in (0, pi)")


def intrusion(c, d_int):
    """Personal-space intrusion: 0 outside, linear inside, saturating at d_int on overlap."""
    if c >= d_int:
        return 0.0
    if c >= 0.0:
        return d_int - c
    return d_int


def avatar_penalty(c, params):
    """Two-stage proximity penalty, returned as a nonpositive reward term."""
    if c >= params.d_int:
        return -0.0
    if c >= params.d_crit:
        ratio = (params.d_int - c) / (params.d_int - params.d_crit)
        p = params.p1 * ratio ** params.alpha1
    else:
        ratio = max(c, 0.0) / params.d_crit
        p = params.p1 + (params.p_col - params.p1) * (1.0 - ratio ** params.alpha2)
    return -min(p, params.p_max)


def collision_flag(c, eps_col=1e-5):
    return c <= eps_col


def band_reward(dist, params):
    """Gaussian-shaped in-band bonus, r_peak at the center, r_peak*eta at the
    edges, zero outside the band."""
    if dist < params.d_min or dist > params.d_max:
        return 0.0
    h = 0.5 * (params.d_max - params.d_min)
    sigma = params.sigma_factor * h
    delta = abs(dist - 0.5 * (params.d_min + params.d_max))
    w_edge = math.exp(-0.5 * (h / sigma) ** 2)
    bump = (math.exp(-0.5 * (delta / sigma) ** 2) - w_edge) / (1.0 - w_edge)
    return params.r_peak * (params.eta + (1.0 - params.eta) * bump)


def band_gap(dist, params):
    """Unsigned distance to the nearest band boundary; 0 inside the band."""
    return max(params.d_min - dist, dist - params.d_max, 0.0)


def _angle_between(u, v):
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    cosang = float(np.dot(u, v) / (nu * nv))
    return math.acos(min(1.0, max(-1.0, cosang)))


def track_conditions(agent, avatar_xy, avatar_facing, params):
    """(in_band, view_ok, rear_ok) for the three tracking conditions."""
    avatar_xy = np.asarray(avatar_xy, dtype=np.float64)
    facing = np.asarray(avatar_facing, dtype=np.float64)
    to_avatar = avatar_xy - agent.position
    dist = float(np.linalg.norm(to_avatar))
    in_band = params.d_min <= dist <= params.d_max
    heading_vec = np.array([math.cos(agent.heading), math.sin(agent.heading)])
    view_ok = _angle_between(heading_vec, to_avatar) <= params.theta_view
    rear_ok = _angle_between(-facing, -to_avatar) <= params.theta_rear
    return in_band, view_ok, rear_ok


def track_indicator(agent, avatar_xy, avatar_facing, params):
    """True iff distance band, view cone, and rear sector all hold."""
    in_band, view_ok, rear_ok = track_conditions(agent, avatar_xy, avatar_facing, params)
    return in_band and view_ok and rear_ok


def pointnav_reward(prev, cur, params):
    """Progress + avatar penalty + slack + success bonus; returns a breakdown.

    prev/cur need .d_goal and cur needs .clearance and .success.
    """
    progress = params.lambda_prog * (prev.d_goal - cur.d_goal)
    avatar = params.lambda_avatar * avatar_penalty(cur.clearance, params.penalty)
    success = params.r_succ if cur.success else 0.0
    total = progress + avatar + params.r_slack + success
    return {
        "progress": progress,
        "avatar": avatar,
        "slack": params.r_slack,
        "success": success,
        "total": total,
    }


def tracknav_reward(prev, cur, params):
    """Dense tracking reward; prev/cur are TrackStepView-like objects."""
    approach = params.lambda_app * (prev.e - cur.e)
    band = band_reward(cur.dist, params)
    avatar = avatar_penalty(cur.clearance, params.penalty)
    orientation = 0.0
    if cur.in_band and not cur.view_ok:
        orientation -= params.p_view
    if cur.in_band and not cur.rear_ok:
        orientation -= params.p_rear
    radial = params.radial_w * (prev.dist - cur.dist)
    disp = np.asarray(cur.agent_xy, dtype=np.float64) - np.asarray(prev.agent_xy, dtype=np.float64)
    to_target = np.asarray(prev.target_xy, dtype=np.float64) - np.asarray(prev.agent_xy, dtype=np.float64)
    norm = np.linalg.norm(to_target)
    if norm > 1e-12:
        u = to_target / norm
        tangential_mag = float(np.linalg.norm(disp - np.dot(disp, u) * u))
    else:
        tangential_mag = float(np.linalg.norm(disp))
    tangential = -params.tangential_w * tangential_mag
    track_step = params.b_step if cur.track else 0.0
    streak = params.b_streak * min(cur.streak, params.streak_cap) / params.streak_cap
    total = approach + band + avatar + orientation + radial + tangential + track_step + streak
    return {
        "approach": approach,
        "band": band,
        "avatar": avatar,
        "orientation": orientation,
        "radial": radial,
        "tangential": tangential,
        "track_step": track_step,
        "streak": streak,
        "total": total,
    }


@dataclass
class TrackStepView:
    """Snapshot of the quantities tracknav_reward consumes for one step."""

    agent_xy: np.ndarray
    target_xy: np.ndarray
    dist: float
    e: float
    clearance: float = math.inf
    in_band: bool = False
    view_ok: bool = True
    rear_ok: bool = True
    track: bool = False
    streak: int = 0


@dataclass
class PointNavStepView:
    d_goal: float
    clearance: float = math.inf
    success: bool = False


@dataclass
class TaskSpec:
    kind: str = "pointnav"
    actions: ActionSpace = field(default_factory=ActionSpace)
    pointnav: PointNavRewardParams = field(default_factory=PointNavRewardParams)
    track: TrackParams = field(default_factory=TrackParams)
    min_separation: float = 2.0
    fps_sim: float = 10.0
    target_avatar: int = 0

    def __post_init__(self):
        if self.kind not in ("pointnav", "pointnav_avatar", "tracknav"):
            raise ContractViolation(f"unknown task kind {self.kind!r}")

    @property
    def max_steps(self):
        return self.track.max_steps if self.kind == "tracknav" else self.pointnav.max_steps


class AvatarRuntime:
    """An avatar instance inside a scene: bundle plus clocking/looping state."""

    def __init__(self, bundle, start_offset=0.0, enabled=True, loop=True):
        self.bundle = bundle
        self.start_offset = float(start_offset)
        self.enabled = bool(enabled)
        self.loop = bool(loop)

    def clock(self, sim_time):
        """Local trajectory time for a given simulation time."""
        t = self.start_offset + sim_time
        duration = self.bundle.duration
        if self.loop and duration > 0:
            return math.fmod(t, duration)
        return min(t, duration)

    def pose(self, sim_time):
        return sample_pose(self.bundle.trajectory, self.clock(sim_time))

    def root_xy_facing(self, sim_time):
        pose = self.pose(sim_time)
        xy = pose.root_trans[:2].copy()
        forward = quat_to_matrix(pose.root_quat) @ np.array([1.0, 0.0, 0.0])
        f2 = forward[:2]
        norm = np.linalg.norm(f2)
        facing = f2 / norm if norm > 1e-12 else np.array([1.0, 0.0])
        return xy, facing

    def deformed_cloud(self, sim_time):
        return lbs_deform(self.bundle, self.pose(sim_time))


@dataclass
class SimScene:
    """Everything an episode needs: splat cloud, navgrid, avatars, camera."""

    navgrid: object
    cloud: object = None
    avatars: list = field(default_factory=list)
    background: np.ndarray = field(default_factory=lambda: np.ones(3))
    camera_defaults: object = None


def active_avatars(scene, task):
    """Avatars participating in this task; plain pointnav ignores them all."""
    if task.kind == "pointnav":
        return []
    return [a for a in scene.avatars if a.enabled]


def _obstacles_at(avatars, sim_time):
    if not avatars:
        return empty_obstacles()
    entries = [
        (a.bundle.capsule_track, a.clock(sim_time), a.bundle.trajectory.fps)
        for a in avatars
        if a.bundle.capsule_track is not None
    ]
    if not entries:
        return empty_obstacles()
    return refresh_obstacles(entries)


@dataclass
class EpisodeState:
    agent: AgentBody
    goal: object
    task_kind: str
    seed: int
    step_index: int = 0
    sim_time: float = 0.0
    clocks: list = field(default_factory=list)
    d_goal: float = math.inf
    e: float = 0.0
    dist: float = math.inf
    streak: int = 0
    done: bool = False
    success: bool = False
    termination: Optional[str] = None
    shortest_path: float = 0.0
    trace: list = field(default_factory=list)
    rng: object = None
    field_to_goal: object = None
    prev_target_xy: object = None
    start_pose: tuple = (0.0, 0.0, 0.0)


def _walkable_cells(grid):
    idx = np.argwhere(grid.walkable)
    if idx.shape[0] < 2:
        raise EpisodeGenerationError("navgrid has fewer than two walkable cells")
    return idx


def reset_episode(scene, task, seed):
    """Deterministic episode sampling: start/goal drawn uniformly over
    walkable cells with a minimum geodesic separation."""
    grid = scene.navgrid
    rng = np.random.default_rng(seed)
    cells = _walkable_cells(grid)
    avatars = active_avatars(scene, task)

    def spawn_ok(xy):
        # reject spawns that an avatar would sweep over in the first moments
        body = AgentBody(position=xy)
        if not avatars:
            return True
        horizon = int(round(1.5 * task.fps_sim))
        for k in range(horizon + 1):
            if min_clearance(body, _obstacles_at(avatars, k / task.fps_sim)) < 0.2:
                return False
        return True

    if task.kind in ("pointnav", "pointnav_avatar"):
        for _ in range(1000):
            si, gi = rng.integers(0, cells.shape[0], size=2)
            start = grid.cell_to_world(*cells[si])
            goal = grid.cell_to_world(*cells[gi])
            field_map = distance_field(grid, goal)
            d0 = field_map[cells[si][0], cells[si][1]]
            if not math.isfinite(d0) or d0 < task.min_separation:
                continue
            if not spawn_ok(start):
                continue
            heading = float(rng.uniform(-math.pi, math.pi))
            state = EpisodeState(
                agent=AgentBody(position=start, heading=heading),
                goal=np.asarray(goal, dtype=np.float64),
                task_kind=task.kind,
                seed=seed,
                d_goal=float(d0),
                shortest_path=float(d0),
                rng=rng,
                field_to_goal=field_map,
            )
            state.start_pose = (float(start[0]), float(start[1]), heading)
            state.clocks = [a.clock(0.0) for a in avatars]
            return state
        raise EpisodeGenerationError("no qualifying start/goal pair after 1000 draws")

    # tracknav: goal is the target avatar index
    if not avatars:
        raise EpisodeGenerationError("tracknav requires at least one enabled avatar")
    target = avatars[min(task.target_avatar, len(avatars) - 1)]
    target_xy, _ = target.root_xy_facing(0.0)
    for _ in range(1000):
        si = int(rng.integers(0, cells.shape[0]))
        start = grid.cell_to_world(*cells[si])
        if np.linalg.norm(start - target_xy) < task.track.d_min:
            continue
        if not spawn_ok(start):
            continue
        heading = float(rng.uniform(-math.pi, math.pi))
        dist = float(np.linalg.norm(start - target_xy))
        state = EpisodeState(
            agent=AgentBody(position=start, heading=heading),
            goal=int(task.target_avatar),
            task_kind=task.kind,
            seed=seed,
            dist=dist,
            e=band_gap(dist, task.track),
            rng=rng,
            prev_target_xy=target_xy,
        )
        state.start_pose = (float(start[0]), float(start[1]), heading)
        state.clocks = [a.clock(0.0) for a in avatars]
        return state
    raise EpisodeGenerationError("no qualifying tracknav start after 1000 draws")


def _wrap_angle(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def step_episode(scene, state, task, action, render=True, kernel=None):
    """Advance one step: clocks, obstacles, action, clearance, observation,
    reward, termination. Returns (observation, reward_breakdown, done, info)."""
    if state.done:
        raise ContractViolation("step_episode called on a finished episode")
    if action not in ACTIONS:
        raise ContractViolation(f"unknown action {action!r}")

    grid = scene.navgrid
    avatars = active_avatars(scene, task)
    state.sim_time += 1.0 / task.fps_sim
    state.clocks = [a.clock(state.sim_time) for a in avatars]
    obstacles = _obstacles_at(avatars, state.sim_time)

    prev_pos = state.agent.position.copy()
    achieved_len = 0.0
    if action == MOVE_FORWARD:
        step_vec = task.actions.forward_step * np.array(
            [math.cos(state.agent.heading), math.sin(state.agent.heading)]
        )
        achieved = clip_step(state.agent, step_vec, grid, obstacles)
        state.agent.position = state.agent.position + achieved
        achieved_len = float(np.linalg.norm(achieved))
    elif action == TURN_LEFT:
        state.agent.heading = _wrap_angle(state.agent.heading + task.actions.turn_angle)
    elif action == TURN_RIGHT:
        state.agent.heading = _wrap_angle(state.agent.heading - task.actions.turn_angle)

    clearance = min_clearance(state.agent, obstacles)
    pen = task.pointnav.penalty if task.kind != "tracknav" else task.track.penalty
    intr = intrusion(clearance, pen.d_int)
    collided = collision_flag(clearance, pen.eps_col)

    observation = {"rgbd": None, "goal_vector": None}
    if render and scene.cloud is not None and scene.camera_defaults is not None:
        camera = agent_camera(state.agent.position, state.agent.heading, scene.camera_defaults)
        avatar_clouds = [a.deformed_cloud(state.sim_time) for a in avatars]
        observation["rgbd"] = render_observation(
            scene.cloud, avatar_clouds, camera, scene.background, kernel=kernel
        )

    record = {
        "type": "step",
        "i": state.step_index,
        "action": action,
        "pose": [float(state.agent.position[0]), float(state.agent.position[1]), float(state.agent.heading)],
        "step_length": achieved_len,
        "clearance": float(clearance),
        "intrusion": float(intr),
        "collision": bool(collided),
        "track": None,
    }

    if task.kind in ("pointnav", "pointnav_avatar"):
        ci, cj = grid.world_to_cell(state.agent.position)
        d_cur = float(state.field_to_goal[ci, cj])
        if not math.isfinite(d_cur):
            raise EpisodeGenerationError("goal became unreachable; episode invalid")
        euclid = float(np.linalg.norm(state.agent.position - state.goal))
        success_now = action == STOP and euclid <= task.pointnav.success_distance
        breakdown = pointnav_reward(
            PointNavStepView(d_goal=state.d_goal),
            PointNavStepView(d_goal=d_cur, clearance=clearance, success=success_now),
            task.pointnav,
        )
        state.d_goal = d_cur
        record["d_goal"] = d_cur
        goal_vec = state.goal - state.agent.position
        bearing = _wrap_angle(math.atan2(goal_vec[1], goal_vec[0]) - state.agent.heading)
        observation["goal_vector"] = np.array([euclid, bearing])
        state.step_index += 1
        if action == STOP:
            state.done = True
            state.success = success_now
            state.termination = "stop"
        elif state.step_index >= task.max_steps:
            state.done = True
            state.termination = "max_steps"
    else:
        target = avatars[min(task.target_avatar, len(avatars) - 1)]
        target_xy, facing = target.root_xy_facing(state.sim_time)
        dist = float(np.linalg.norm(state.agent.position - target_xy))
        e_cur = band_gap(dist, task.track)
        in_band, view_ok, rear_ok = track_conditions(state.agent, target_xy, facing, task.track)
        tracked = in_band and view_ok and rear_ok
        state.streak = state.streak + 1 if tracked else 0
        prev_view = TrackStepView(
            agent_xy=prev_pos, target_xy=state.prev_target_xy, dist=state.dist, e=state.e
        )
        cur_view = TrackStepView(
            agent_xy=state.agent.position.copy(),
            target_xy=target_xy,
            dist=dist,
            e=e_cur,
            clearance=clearance,
            in_band=in_band,
            view_ok=view_ok,
            rear_ok=rear_ok,
            track=tracked,
            streak=state.streak,
        )
        breakdown = tracknav_reward(prev_view, cur_view, task.track)
        state.dist = dist
        state.e = e_cur
        state.prev_target_xy = target_xy
        record["track"] = bool(tracked)
        record["target_dist"] = dist
        record["e"] = e_cur
        rel = target_xy - state.agent.position
        bearing = _wrap_angle(math.atan2(rel[1], rel[0]) - state.agent.heading)
        facing_rel = _wrap_angle(math.atan2(facing[1], facing[0]) - state.agent.heading)
        observation["goal_vector"] = np.array([dist, math.sin(bearing), math.cos(bearing), facing_rel])
        state.step_index += 1
        if state.step_index >= task.max_steps:
            state.done = True
            state.termination = "max_steps"

    record["reward"] = breakdown
    state.trace.append(record)

    info = {
        "clearance": clearance,
        "intrusion": intr,
        "collision": collided,
        "clocks": list(state.clocks),
        "obstacle_count": obstacles.n,
    }
    return observation, breakdown, state.done, info


def trace_header(state, task):
    header = {
        "type": "header",
        "schema": TRACE_SCHEMA,
        "task": task.kind,
        "seed": state.seed,
        "start": list(state.start_pose),
        "max_steps": task.max_steps,
        "fps_sim": task.fps_sim,
    }
    if state.task_kind in ("pointnav", "pointnav_avatar"):
        header["goal"] = [float(state.goal[0]), float(state.goal[1])]
        header["shortest_path"] = state.shortest_path
        header["success_distance"] = task.pointnav.success_distance
    else:
        header["goal"] = int(state.goal)
    return header


def trace_end(state):
    if state.task_kind in ("pointnav", "pointnav_avatar"):
        dtg = float(np.linalg.norm(state.agent.position - state.goal))
    else:
        dtg = float(state.dist)
    return {
        "type": "end",
        "steps": state.step_index,
        "success": bool(state.success),
        "termination": state.termination,
        "dtg": dtg,
        "path_length": float(sum(rec["step_length"] for rec in state.trace)),
    }


def full_trace(state, task):
    """Header + step records + end record for a finished episode."""
    return [trace_header(state, task)] + state.trace + [trace_end(state)]


def write_trace(records, path):
    """JSON-lines trace export; exact float repr keeps runs byte-comparable."""
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec) + "\n")


def read_trace(path):
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
