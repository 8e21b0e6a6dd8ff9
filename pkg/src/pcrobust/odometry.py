"""Point-to-point ICP odometry.

A reduced KISS-ICP-style pipeline: voxel subsampling, a coarse-then-fine
correspondence gate, Huber-weighted closed-form alignment, constant-velocity
initialisation and a sliding local map of recent frames.  Motion compensation
is not modelled.

With ``local_map_frames=1`` and ``refine_corr_dist=None`` every frame is
registered against the previous frame only, with a single fixed gate.  On
ring-sampled scans that variant is biased: sparse ground rings pull the
estimate toward the previous ring positions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from collections import deque
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .pointcloud import PointCloud, voxel_downsample
from .pose import Pose, Trajectory, project_to_rotation

log = logging.getLogger(__name__)

MIN_POINTS = 10
MIN_CORRESPONDENCES = 6


class RegistrationError(RuntimeError):
    def __init__(self, message: str, pose: Pose):
        super().__init__(message)
        self.pose = pose


@dataclass(frozen=True)
class OdometryConfig:
    voxel_size: float = 0.5
    max_corr_dist: float = 1.0
    max_iterations: int = 50
    convergence_eps: float = 1e-4
    robust_delta: float = 0.5
    use_constant_velocity: bool = True
    # second, tighter pass started from the coarse result; None disables it
    refine_corr_dist: Optional[float] = 0.3
    refine_delta: float = 0.05
    local_map_frames: int = 10

    def __post_init__(self):
        for name in ("voxel_size", "max_corr_dist", "convergence_eps", "robust_delta", "refine_delta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.refine_corr_dist is not None and not self.refine_corr_dist > 0:
            raise ValueError("refine_corr_dist must be positive or None")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.local_map_frames < 1:
            raise ValueError("local_map_frames must be >= 1")

    @property
    def stages(self) -> list[tuple[float, float]]:
        out = [(self.max_corr_dist, self.robust_delta)]
        if self.refine_corr_dist is not None:
            out.append((self.refine_corr_dist, self.refine_delta))
        return out

    @classmethod
    def kitti(cls, **kw) -> "OdometryConfig":
        return cls(**{"voxel_size": 1.0, **kw})

    @classmethod
    def frame_to_frame(cls, **kw) -> "OdometryConfig":
        """Single fixed gate, previous frame as the only target."""
        return cls(**{"refine_corr_dist": None, "local_map_frames": 1, **kw})


def huber_weights(residuals: np.ndarray, delta: float) -> np.ndarray:
    r = np.maximum(residuals, 1e-300)
    return np.where(residuals <= delta, 1.0, delta / r)


def weighted_rigid_fit(src: np.ndarray, dst: np.ndarray, w: np.ndarray) -> Pose:
    """Least-squares rigid transform mapping ``src`` onto ``dst`` (cross-covariance SVD)."""
    w = w / w.sum()
    mu_s = w @ src
    mu_d = w @ dst
    h = (src - mu_s).T @ ((dst - mu_d) * w[:, None])
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return Pose(r, mu_d - r @ mu_s)


def _rotation_angle(r: np.ndarray) -> float:
    return float(np.arccos(np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)))


def register(source: PointCloud, target: PointCloud, init: Pose = Pose(), cfg: OdometryConfig = OdometryConfig(),
             target_tree: cKDTree | None = None) -> Pose:
    """Pose that maps ``source`` coordinates into the ``target`` frame.

    Both clouds are used as given (subsample them beforehand).
    """
    if len(source) < MIN_POINTS or len(target) < MIN_POINTS:
        raise RegistrationError(
            f"registration needs >= {MIN_POINTS} points per cloud ({len(source)}, {len(target)})", init
        )
    tree = target_tree or target.kdtree()
    pose = init
    for gate, delta in cfg.stages:
        pose = _icp(source.xyz, target.xyz, tree, pose, gate, delta, cfg)
    return pose


def _icp(src: np.ndarray, dst: np.ndarray, tree: cKDTree, pose: Pose, gate: float, delta: float,
         cfg: OdometryConfig) -> Pose:
    prev_idx = None
    for _ in range(cfg.max_iterations):
        moved = pose.apply(src)
        dist, idx = tree.query(moved, distance_upper_bound=gate)
        valid = np.isfinite(dist)
        if valid.sum() < MIN_CORRESPONDENCES:
            raise RegistrationError(f"only {int(valid.sum())} correspondences within {gate} m", pose)
        if prev_idx is not None and np.array_equal(idx, prev_idx):
            break  # fixed point: the next solve would reproduce the current pose
        prev_idx = idx
        step = weighted_rigid_fit(moved[valid], dst[idx[valid]], huber_weights(dist[valid], delta))
        pose = Pose(project_to_rotation(step.rotation @ pose.rotation),
                    step.rotation @ pose.translation + step.translation)
        if np.linalg.norm(step.translation) < cfg.convergence_eps and _rotation_angle(step.rotation) < cfg.convergence_eps:
            break
    return pose


def run_odometry(frames: Sequence[PointCloud], cfg: OdometryConfig = OdometryConfig()) -> Trajectory:
    """Chain registrations into sensor poses (first pose = identity).

    Frame k is registered against the union of the last ``local_map_frames``
    raw frames, expressed in frame k-1 through the poses estimated so far.
    Failed registrations fall back to the motion prediction and are flagged.
    """
    if len(frames) < 2:
        raise ValueError("odometry needs at least two frames")
    ids = [f.frame_id for f in frames]
    if any(b <= a for a, b in zip(ids, ids[1:])):
        ids = list(range(len(frames)))
    poses = [Pose()]
    flagged: set[int] = set()
    window: deque = deque([0], maxlen=cfg.local_map_frames)
    last_motion = Pose()
    for k in range(1, len(frames)):
        cur = voxel_downsample(frames[k], cfg.voxel_size)
        to_prev = poses[-1].inverse()
        target = PointCloud(np.vstack([(to_prev @ poses[j]).apply(frames[j].xyz) for j in window]))
        init = last_motion if cfg.use_constant_velocity else Pose()
        try:
            motion = register(cur, target, init, cfg)
        except RegistrationError as exc:
            log.warning("frame %d: %s; using prediction", ids[k], exc)
            motion = init
            flagged.add(ids[k])
        poses.append((poses[-1] @ motion).orthonormalized())
        last_motion = motion
        window.append(k)
    return Trajectory(ids, poses, flagged)
