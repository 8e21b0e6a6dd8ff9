"""KITTI odometry file formats: velodyne ``.bin`` scans and pose text files."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Union

import numpy as np

from .pointcloud import PointCloud
from .pose import Pose, Trajectory

PathLike = Union[str, os.PathLike]

_RECORD = np.dtype("<f4")


class KittiFormatError(ValueError):
    pass


def read_kitti_bin(path: PathLike, frame_id: int = 0) -> PointCloud:
    raw = Path(path).read_bytes()
    if len(raw) % 16:
        raise KittiFormatError(f"{path}: {len(raw)} bytes is not a whole number of 16-byte points")
    data = np.frombuffer(raw, dtype=_RECORD).reshape(-1, 4)
    try:
        return PointCloud(data[:, :3], data[:, 3], frame_id=frame_id)
    except ValueError as exc:
        raise KittiFormatError(f"{path}: {exc}") from exc


def kitti_bin_bytes(cloud: PointCloud) -> bytes:
    rec = np.empty((len(cloud), 4), dtype=_RECORD)
    rec[:, :3] = cloud.xyz
    rec[:, 3] = cloud.intensity
    return rec.tobytes()


def write_kitti_bin(cloud: PointCloud, path: PathLike) -> None:
    Path(path).write_bytes(kitti_bin_bytes(cloud))


def list_kitti_scans(directory: PathLike) -> list[Path]:
    return sorted(Path(directory).glob("*.bin"))


def read_kitti_sequence(directory: PathLike) -> list[PointCloud]:
    return [read_kitti_bin(p, frame_id=int(p.stem)) for p in list_kitti_scans(directory)]


def read_poses(path: PathLike, first_frame: int = 0) -> Trajectory:
    """One line per frame: row-major 3x4 ``[R|t]`` as 12 whitespace-separated floats."""
    poses = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            vals = line.split()
            if len(vals) != 12:
                raise KittiFormatError(f"{path}:{lineno}: expected 12 values, got {len(vals)}")
            m = np.asarray(vals, dtype=np.float64).reshape(3, 4)
            poses.append(Pose(m[:, :3], m[:, 3]))
    return Trajectory.from_poses(poses, start=first_frame)


def format_pose(p: Pose) -> str:
    return " ".join(f"{v:.16e}" for v in p.as_matrix()[:3].reshape(-1))


def write_poses(traj: Trajectory, path: PathLike) -> None:
    with open(path, "w") as f:
        for p in traj.poses:
            f.write(format_pose(p) + "\n")
