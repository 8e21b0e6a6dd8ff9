"""Relative pose error and KITTI-style segment drift."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .pose import Pose, Trajectory

KITTI_LENGTHS = (100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0)


def rel(a: Pose, b: Pose) -> Pose:
    """Motion from ``a`` to ``b``: ``a^-1 * b``."""
    return a.inverse() @ b


def rotation_angle(r: np.ndarray) -> float:
    return float(np.arccos(np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)))


def error_pose(est_i: Pose, est_j: Pose, gt_i: Pose, gt_j: Pose) -> Pose:
    return rel(rel(gt_i, gt_j), rel(est_i, est_j))


@dataclass
class PairError:
    i: int
    j: int
    trans_err: float
    rot_err: float


@dataclass
class RpeReport:
    rpe_trans: float
    rpe_rot: float
    per_pair: list[PairError] = field(default_factory=list)
    drift_percent: Optional[float] = None


def consecutive_pairs(traj: Trajectory) -> list[tuple[int, int]]:
    return list(zip(traj.frame_ids, traj.frame_ids[1:]))


def rpe(est: Trajectory, gt: Trajectory, pairs: Optional[Iterable[tuple[int, int]]] = None) -> RpeReport:
    pairs = consecutive_pairs(gt) if pairs is None else list(pairs)
    if not pairs:
        raise ValueError("empty pair set")
    est_idx, gt_idx = est._index(), gt._index()
    per_pair = []
    for i, j in pairs:
        for f in (i, j):
            if f not in est_idx or f not in gt_idx:
                raise KeyError(f"frame {f} missing from {'estimate' if f not in est_idx else 'ground truth'}")
        e = error_pose(est.poses[est_idx[i]], est.poses[est_idx[j]], gt.poses[gt_idx[i]], gt.poses[gt_idx[j]])
        per_pair.append(PairError(i, j, float(np.linalg.norm(e.translation)), rotation_angle(e.rotation)))
    return RpeReport(
        rpe_trans=float(np.mean([p.trans_err for p in per_pair])),
        rpe_rot=float(np.mean([p.rot_err for p in per_pair])),
        per_pair=per_pair,
    )


def path_distances(traj: Trajectory) -> np.ndarray:
    steps = np.linalg.norm(np.diff(traj.positions(), axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def kitti_drift(est: Trajectory, gt: Trajectory, lengths: Sequence[float] = KITTI_LENGTHS) -> float:
    """Mean translation error per metre over fixed-length ground-truth segments, in percent.

    Every frame is a segment start; a segment ends at the first frame whose
    accumulated ground-truth path length exceeds the start's by more than L.
    """
    if len(est) != len(gt) or est.frame_ids != gt.frame_ids:
        raise ValueError("estimate and ground truth must cover the same frames")
    dist = path_distances(gt)
    lengths = sorted(float(l) for l in lengths)
    if not lengths or dist[-1] < lengths[0]:
        raise ValueError(f"ground-truth path ({dist[-1]:.1f} m) shorter than the smallest segment length")
    errs = []
    for length in lengths:
        for first in range(len(dist)):
            last = int(np.searchsorted(dist, dist[first] + length, side="right"))
            if last >= len(dist):
                break
            e = error_pose(est.poses[first], est.poses[last], gt.poses[first], gt.poses[last])
            errs.append(np.linalg.norm(e.translation) / length)
    if not errs:
        raise ValueError("no complete segment of the requested lengths")
    return 100.0 * float(np.mean(errs))


def end_point_drift(est: Trajectory, gt: Trajectory) -> float:
    """Final position error as a fraction of ground-truth path length."""
    return float(np.linalg.norm(est.poses[-1].translation - gt.poses[-1].translation) / path_distances(gt)[-1])
