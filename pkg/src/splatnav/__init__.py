"""splatnav: a navigation-centric embodied simulator on gaussian splats.

Renders 3DGS scenes and skinned gaussian avatars into RGB-D observations,
enforces avatar collision through proxy capsules on a navigation grid, and
runs point-goal and human-tracking episodes with dense rewards and metrics.
"""

__version__ = "0.1.0"

from .avatar import AvatarBundle, CapsuleTrack, Skeleton, Trajectory, load_avatar_bundle, save_avatar_bundle
from .camera import Camera, agent_camera, pose_world_to_camera
from .cloud import GaussianCloud, concat_clouds, empty_cloud
from .metrics import EpisodeMetrics, aggregate, episode_metrics
from .nav import (
    AgentBody,
    NavGrid,
    ObstacleSet,
    build_navgrid,
    clip_step,
    geodesic_distance,
    is_step_blocked,
    min_clearance,
    refresh_obstacles,
)
from .ply import load_gaussian_ply, save_gaussian_ply
from .projection import ScreenSplat, project_gaussian
from .renderer import FrameRGBD, composite, rasterize, rasterize_reference, render_observation
from .rig import (
    CapsuleSet,
    JointPose,
    bake_capsules,
    generate_walk_trajectory,
    lbs_deform,
    sample_capsules,
    sample_pose,
)
from .scene import SceneConfig, load_scene_config
from .sh import eval_sh
from .tasks import (
    ActionSpace,
    AvatarPenaltyParams,
    EpisodeState,
    PointNavRewardParams,
    SimScene,
    TaskSpec,
    TrackParams,
    avatar_penalty,
    band_reward,
    collision_flag,
    intrusion,
    pointnav_reward,
    reset_episode,
    step_episode,
    track_indicator,
    tracknav_reward,
)
