"""Rigid SE(3) transforms and trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


def project_to_rotation(m: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (Frobenius norm) via SVD."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=np.float64))
    d = np.sign(np.linalg.det(u @ vt)) or 1.0
    return u @ np.diag([1.0, 1.0, d]) @ vt


def rotation_about(axis: Sequence[float], angle: float) -> np.ndarray:
    """Rodrigues rotation about an arbitrary axis."""
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    k = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


@dataclass(frozen=True, eq=False)
class Pose:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=np.float64)
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_translation(cls, t: Sequence[float]) -> "Pose":
        return cls(np.eye(3), t)

    @classmethod
    def from_yaw(cls, yaw: float, t: Sequence[float] = (0.0, 0.0, 0.0)) -> "Pose":
        return cls(rotation_about((0, 0, 1), yaw), t)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    __matmul__ = compose

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def apply(self, xyz: np.ndarray) -> np.ndarray:
        return np.asarray(xyz) @ self.rotation.T + self.translation

    def orthonormalized(self) -> "Pose":
        return Pose(project_to_rotation(self.rotation), self.translation)

    def is_valid(self, tol: float = 1e-9) -> bool:
        r = self.rotation
        return (
            bool(np.all(np.isfinite(r)) and np.all(np.isfinite(self.translation)))
            and np.max(np.abs(r.T @ r - np.eye(3))) < tol
            and abs(np.linalg.det(r) - 1.0) <= tol
        )

    def allclose(self, other: "Pose", atol: float = 1e-9) -> bool:
        return np.allclose(self.rotation, other.rotation, atol=atol) and np.allclose(
            self.translation, other.translation, atol=atol
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )

    __hash__ = None


def compose(a: Pose, b: Pose) -> Pose:
    return a.compose(b)


def inverse(a: Pose) -> Pose:
    return a.inverse()


@dataclass
class Trajectory:
    """Ordered ``(frame_id, pose)`` sequence; ``flagged`` holds frame ids whose
    pose came from a fallback rather than a converged registration."""

    frame_ids: list[int]
    poses: list[Pose]
    flagged: set[int] = field(default_factory=set)

    def __post_init__(self):
        self.frame_ids = [int(f) for f in self.frame_ids]
        if len(self.frame_ids) != len(self.poses):
            raise ValueError("frame_ids and poses differ in length")
        if any(b <= a for a, b in zip(self.frame_ids, self.frame_ids[1:])):
            raise ValueError("frame ids must be strictly increasing")

    @classmethod
    def from_poses(cls, poses: Iterable[Pose], start: int = 0,
                   flagged: Optional[Iterable[int]] = None) -> "Trajectory":
        poses = list(poses)
        return cls(list(range(start, start + len(poses))), poses, set(flagged or ()))

    def __len__(self) -> int:
        return len(self.poses)

    def __iter__(self):
        return iter(zip(self.frame_ids, self.poses))

    def pose_at(self, frame_id: int) -> Pose:
        try:
            return self.poses[self._index()[frame_id]]
        except KeyError:
            raise KeyError(f"frame {frame_id} not in trajectory") from None

    def _index(self) -> dict[int, int]:
        return {f: i for i, f in enumerate(self.frame_ids)}

    def left_multiplied(self, g: Pose) -> "Trajectory":
        return Trajectory(list(self.frame_ids), [g @ p for p in self.poses], set(self.flagged))

    def positions(self) -> np.ndarray:
        return np.array([p.translation for p in self.poses]).reshape(-1, 3)
