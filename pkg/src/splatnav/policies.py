"""Scripted policies standing in for learned agents: a geodesic follower,
a random walker, and action replay."""

import math

import numpy as np

from .errors import ContractViolation, InvalidEndpointError
from .nav import AgentBody, clip_step, distance_field, min_clearance
from .tasks import ACTIONS, MOVE_FORWARD, STOP, TURN_LEFT, TURN_RIGHT, _obstacles_at, active_avatars


def _wrap(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


class ShortestPathPolicy:
    """Greedy descent of the goal distance field, re-planned each step around
    the current (and near-future) avatar capsules.

    Moving avatars can walk into a stationary agent, so the follower scores
    candidate positions by the worst clearance they will see over the next
    second if the agent froze there: it refuses forward steps into a swept
    corridor, waits at a safe distance while an avatar crosses, and flees
    sideways when the sweep approaches its own spot.
    """

    LOOKAHEAD = tuple(0.3 * k for k in range(7))  # mask sampling, seconds
    HORIZON_TICKS = 10                            # frozen-agent clearance horizon
    FLEE_CLEARANCE = 0.55
    SAFE_CLEARANCE = 0.4
    BLOCK_MARGIN = 0.12

    def __init__(self, scene, task):
        self.scene = scene
        self.task = task

    # --- threat model -------------------------------------------------------

    def _future_min_clearance(self, position, sim_from):
        """Worst clearance at a frozen position over the next HORIZON_TICKS."""
        body = AgentBody(position=np.asarray(position, dtype=np.float64))
        avatars = active_avatars(self.scene, self.task)
        worst = math.inf
        for k in range(self.HORIZON_TICKS + 1):
            obstacles = _obstacles_at(avatars, sim_from + k / self.task.fps_sim)
            worst = min(worst, min_clearance(body, obstacles))
            if worst < 0.0:
                break
        return worst

    def _blocked_mask(self, sim_time, agent_radius):
        grid = self.scene.navgrid
        avatars = active_avatars(self.scene, self.task)
        h, w = grid.walkable.shape
        jj, ii = np.meshgrid(np.arange(w), np.arange(h))
        cx = grid.origin[0] + jj * grid.resolution
        cy = grid.origin[1] + ii * grid.resolution
        blocked = np.zeros((h, w), dtype=bool)
        any_caps = False
        for dt in self.LOOKAHEAD:
            obstacles = _obstacles_at(avatars, sim_time + dt)
            caps = obstacles.capsules
            for k in range(caps.n):
                any_caps = True
                a = caps.p0[k][:2]
                b = caps.p1[k][:2]
                ab = b - a
                denom = float(ab @ ab)
                px = cx - a[0]
                py = cy - a[1]
                if denom > 1e-12:
                    t = np.clip((px * ab[0] + py * ab[1]) / denom, 0.0, 1.0)
                else:
                    t = 0.0
                dx = px - t * ab[0]
                dy = py - t * ab[1]
                blocked |= np.hypot(dx, dy) < (caps.radius[k] + agent_radius + self.BLOCK_MARGIN)
        return blocked if any_caps else None

    def _nearest_capsule_direction(self, pos, obstacles):
        caps = obstacles.capsules
        best = None
        best_d = math.inf
        for k in range(caps.n):
            a = caps.p0[k][:2]
            b = caps.p1[k][:2]
            ab = b - a
            denom = float(ab @ ab)
            t = float(np.clip((pos - a) @ ab / denom, 0.0, 1.0)) if denom > 1e-12 else 0.0
            closest = a + t * ab
            d = float(np.linalg.norm(pos - closest))
            if d < best_d:
                best_d = d
                best = closest
        if best is None:
            return None
        away = pos - best
        norm = np.linalg.norm(away)
        return away / norm if norm > 1e-9 else np.array([1.0, 0.0])

    # --- steering -----------------------------------------------------------

    def _steer(self, state, desired):
        dh = _wrap(desired - state.agent.heading)
        if abs(dh) > self.task.actions.turn_angle * 0.6:
            return TURN_LEFT if dh > 0 else TURN_RIGHT
        return MOVE_FORWARD

    def _forward_end(self, state, obstacles):
        step_vec = self.task.actions.forward_step * np.array(
            [math.cos(state.agent.heading), math.sin(state.agent.heading)]
        )
        achieved = clip_step(state.agent, step_vec, self.scene.navgrid, obstacles)
        return state.agent.position + achieved, float(np.linalg.norm(achieved))

    def _guarded(self, state, action, obstacles, sim_next):
        """Clearance guard around the navigation layer's intended action."""
        if obstacles.n == 0:
            return action
        stay_score = self._future_min_clearance(state.agent.position, sim_next)

        if action == MOVE_FORWARD:
            end, achieved = self._forward_end(state, obstacles)
            if achieved < 0.02:
                return TURN_LEFT
            move_score = self._future_min_clearance(end, sim_next)
            if move_score >= self.SAFE_CLEARANCE or move_score >= stay_score:
                return action
            # the intended step walks into a sweep; wait facing the plan
            if stay_score >= self.SAFE_CLEARANCE:
                return TURN_LEFT
            action = None  # fall through to flee

        if stay_score < self.FLEE_CLEARANCE or action is None:
            end, achieved = self._forward_end(state, obstacles)
            move_score = self._future_min_clearance(end, sim_next) if achieved > 0.05 else -math.inf
            if move_score > stay_score + 0.01:
                return MOVE_FORWARD
            away = self._nearest_capsule_direction(state.agent.position, obstacles)
            if away is None:
                return TURN_LEFT
            # deep inside a sweep one step may not clear it, but any motion
            # with a decent along-away component still reduces exposure
            heading_vec = np.array([math.cos(state.agent.heading), math.sin(state.agent.heading)])
            if achieved > 0.05 and float(heading_vec @ away) >= 0.3:
                return MOVE_FORWARD
            dh = _wrap(math.atan2(away[1], away[0]) - state.agent.heading)
            return TURN_LEFT if dh > 0 else TURN_RIGHT
        return action

    # --- main ---------------------------------------------------------------

    def __call__(self, state, obs):
        task = self.task
        grid = self.scene.navgrid
        pos = state.agent.position
        sim_next = state.sim_time + 1.0 / task.fps_sim
        avatars = active_avatars(self.scene, task)
        obstacles = _obstacles_at(avatars, sim_next)

        if task.kind == "tracknav":
            target = avatars[min(task.target_avatar, len(avatars) - 1)]
            target_xy, facing = target.root_xy_facing(sim_next)
            band_center = 0.5 * (task.track.d_min + task.track.d_max)
            follow = target_xy - band_center * facing
            if float(np.linalg.norm(follow - pos)) <= 0.2:
                desired = math.atan2(target_xy[1] - pos[1], target_xy[0] - pos[0])
                if abs(_wrap(desired - state.agent.heading)) > task.actions.turn_angle * 0.6:
                    return self._guarded(state, self._steer(state, desired), obstacles, sim_next)
                return STOP  # in position; stop holds still without ending the episode
            desired = math.atan2(follow[1] - pos[1], follow[0] - pos[0])
            return self._guarded(state, self._steer(state, desired), obstacles, sim_next)

        goal = np.asarray(state.goal, dtype=np.float64)
        euclid = float(np.linalg.norm(goal - pos))
        if euclid <= task.pointnav.success_distance:
            return STOP

        field_map = state.field_to_goal
        if obstacles.n > 0:
            blocked = self._blocked_mask(sim_next, state.agent.radius)
            ci, cj = grid.world_to_cell(pos)
            if blocked is not None and not blocked[ci, cj]:
                try:
                    replanned = distance_field(grid, goal, blocked=blocked)
                    if math.isfinite(replanned[ci, cj]):
                        field_map = replanned
                except InvalidEndpointError:
                    pass  # an avatar is parked on the goal; keep the static plan

        if euclid <= 3.0 * task.actions.forward_step:
            target = goal
        else:
            ci, cj = grid.world_to_cell(pos)
            h, w = grid.walkable.shape
            best = None
            best_val = field_map[ci, cj]
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ni, nj = ci + di, cj + dj
                    if 0 <= ni < h and 0 <= nj < w and field_map[ni, nj] < best_val:
                        best_val = field_map[ni, nj]
                        best = (ni, nj)
            target = grid.cell_to_world(*best) if best is not None else goal

        desired = math.atan2(target[1] - pos[1], target[0] - pos[0])
        return self._guarded(state, self._steer(state, desired), obstacles, sim_next)


class RandomPolicy:
    """Uniform-ish random actions drawn from the episode's RNG (stop is rare
    so episodes are not trivially one step long)."""

    def __call__(self, state, obs):
        r = state.rng.random()
        if r < 0.04:
            return STOP
        if r < 0.60:
            return MOVE_FORWARD
        if r < 0.80:
            return TURN_LEFT
        return TURN_RIGHT


class ReplayPolicy:
    """Plays back a recorded action sequence."""

    def __init__(self, actions):
        for a in actions:
            if a not in ACTIONS:
                raise ContractViolation(f"unknown action {a!r} in replay sequence")
        self.actions = list(actions)
        self.cursor = 0

    def __call__(self, state, obs):
        if self.cursor >= len(self.actions):
            return STOP
        action = self.actions[self.cursor]
        self.cursor += 1
        return action


def make_policy(name, scene, task, actions_file=None):
    if name == "shortest_path":
        return ShortestPathPolicy(scene, task)
    if name == "random":
        return RandomPolicy()
    if name == "replay":
        if actions_file is None:
            raise ContractViolation(f"replay policy needs an action file")
        with open(actions_file, "r", encoding="utf-8") as f:
            actions = [line.strip() for line in f if line.strip()]
        return ReplayPolicy(actions)
    raise ContractViolation(f"unknown policy {name!r}")
