"""Point-cloud data model and the geometric primitives shared by every stage.

A :class:`PointCloud` stores its points column-wise as numpy arrays
(``xyz`` float64 of shape ``(N, 3)``, ``intensity`` float64 of shape ``(N,)``
and an optional integer ``layer`` array).  Arrays are frozen on construction,
so a cloud can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_BEAM_COUNT = 64


class EmptyCloudError(ValueError):
    """Raised when an operation needs at least one point (or a minimum count)."""


class Point(NamedTuple):
    x: float
    y: float
    z: float
    intensity: float = 0.0
    layer: Optional[int] = None


class SphericalPoint(NamedTuple):
    r: float
    azimuth: float
    polar: float


@dataclass(frozen=True)
class BoundingBox:
    min_corner: np.ndarray
    max_corner: np.ndarray

    def contains(self, xyz: np.ndarray) -> np.ndarray:
        xyz = np.atleast_2d(xyz)
        return np.all((xyz >= self.min_corner) & (xyz <= self.max_corner), axis=1)

    @property
    def extent(self) -> np.ndarray:
        return self.max_corner - self.min_corner


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    xyz: np.ndarray
    intensity: Optional[np.ndarray] = None
    layer: Optional[np.ndarray] = None
    frame_id: int = 0
    beam_count: int = DEFAULT_BEAM_COUNT
    _tree: list = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        n = xyz.shape[0]
        if not np.all(np.isfinite(xyz)):
            raise ValueError("point coordinates must be finite")
        if self.intensity is None:
            intensity = np.zeros(n)
        else:
            intensity = np.asarray(self.intensity, dtype=np.float64).reshape(-1)
            if intensity.shape[0] != n:
                raise ValueError(f"intensity has {intensity.shape[0]} entries for {n} points")
            if n and (np.any(~np.isfinite(intensity)) or intensity.min() < 0.0 or intensity.max() > 1.0):
                raise ValueError("intensity must lie in [0, 1]")
        if self.beam_count < 1:
            raise ValueError("beam_count must be >= 1")
        layer = None
        if self.layer is not None:
            layer = np.asarray(self.layer, dtype=np.int64).reshape(-1)
            if layer.shape[0] != n:
                raise ValueError(f"layer has {layer.shape[0]} entries for {n} points")
            if n and (layer.min() < 0 or layer.max() >= self.beam_count):
                raise ValueError(f"layer indices must lie in [0, {self.beam_count})")
        object.__setattr__(self, "xyz", _frozen(xyz))
        object.__setattr__(self, "intensity", _frozen(intensity))
        object.__setattr__(self, "layer", None if layer is None else _frozen(layer))

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def __getitem__(self, i: int) -> Point:
        x, y, z = self.xyz[i]
        layer = None if self.layer is None else int(self.layer[i])
        return Point(float(x), float(y), float(z), float(self.intensity[i]), layer)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        if (self.layer is None) != (other.layer is None):
            return False
        return (
            self.frame_id == other.frame_id
            and self.beam_count == other.beam_count
            and np.array_equal(self.xyz, other.xyz)
            and np.array_equal(self.intensity, other.intensity)
            and (self.layer is None or np.array_equal(self.layer, other.layer))
        )

    __hash__ = None

    @classmethod
    def from_points(cls, points: Sequence[Point], frame_id: int = 0,
                    beam_count: int = DEFAULT_BEAM_COUNT) -> "PointCloud":
        points = [Point(*p) for p in points]
        xyz = np.array([[p.x, p.y, p.z] for p in points], dtype=np.float64).reshape(-1, 3)
        intensity = np.array([p.intensity for p in points], dtype=np.float64)
        layers = [p.layer for p in points]
        if points and all(l is not None for l in layers):
            layer = np.array(layers, dtype=np.int64)
        else:
            layer = None
        return cls(xyz, intensity, layer, frame_id=frame_id, beam_count=beam_count)

    @property
    def points(self) -> list[Point]:
        return [self[i] for i in range(len(self))]

    @property
    def ranges(self) -> np.ndarray:
        return np.linalg.norm(self.xyz, axis=1)

    def kdtree(self) -> cKDTree:
        """Build (once) and return a kd-tree over the point positions."""
        if not self._tree:
            self._tree.append(cKDTree(self.xyz))
        return self._tree[0]

    def select(self, idx: np.ndarray) -> "PointCloud":
        """Sub-cloud with the given indices (or boolean mask), in that order."""
        idx = np.asarray(idx)
        return PointCloud(
            self.xyz[idx],
            self.intensity[idx],
            None if self.layer is None else self.layer[idx],
            frame_id=self.frame_id,
            beam_count=self.beam_count,
        )

    def replace(self, xyz=None, intensity=None, layer=None, **kw) -> "PointCloud":
        return PointCloud(
            self.xyz if xyz is None else xyz,
            self.intensity if intensity is None else intensity,
            self.layer if layer is None else layer,
            frame_id=kw.get("frame_id", self.frame_id),
            beam_count=kw.get("beam_count", self.beam_count),
        )

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "PointCloud":
        return self.replace(xyz=self.xyz @ np.asarray(rotation).T + np.asarray(translation))


def bounding_box(cloud: PointCloud) -> BoundingBox:
    if len(cloud) == 0:
        raise EmptyCloudError("bounding box of an empty cloud is undefined")
    return BoundingBox(cloud.xyz.min(axis=0), cloud.xyz.max(axis=0))


# --- coordinate systems -----------------------------------------------------

def cartesian_to_spherical(xyz: np.ndarray) -> np.ndarray:
    """Vectorised CCS -> SCS. Returns columns (r, azimuth, polar)."""
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    r = np.linalg.norm(xyz, axis=1)
    azimuth = np.arctan2(xyz[:, 1], xyz[:, 0])
    # arctan2 returns -pi for (-x, -0.0); fold onto the half-open interval
    azimuth = np.where(azimuth == -np.pi, np.pi, azimuth)
    polar = np.arctan2(np.hypot(xyz[:, 0], xyz[:, 1]), xyz[:, 2])
    zero = r == 0.0
    azimuth[zero] = 0.0
    polar[zero] = 0.0
    return np.column_stack([r, azimuth, polar])


def spherical_to_cartesian(rap: np.ndarray) -> np.ndarray:
    rap = np.asarray(rap, dtype=np.float64).reshape(-1, 3)
    r, azimuth, polar = rap[:, 0], rap[:, 1], rap[:, 2]
    s = np.sin(polar)
    return np.column_stack([r * s * np.cos(azimuth), r * s * np.sin(azimuth), r * np.cos(polar)])


def to_spherical(p: Point) -> SphericalPoint:
    r, az, pol = cartesian_to_spherical(np.array([p[0], p[1], p[2]]))[0]
    return SphericalPoint(float(r), float(az), float(pol))


def to_cartesian(s: SphericalPoint, intensity: float = 0.0) -> Point:
    x, y, z = spherical_to_cartesian(np.array([s[0], s[1], s[2]]))[0]
    return Point(float(x), float(y), float(z), intensity)


# --- spatial queries --------------------------------------------------------

def _sorted_neighbors(xyz: np.ndarray, query: np.ndarray, candidates: np.ndarray, k: int) -> np.ndarray:
    d2 = np.sum((xyz[candidates] - query) ** 2, axis=1)
    order = np.lexsort((candidates, d2))
    return candidates[order[:k]]


def knn_indices(cloud: PointCloud, queries: np.ndarray, k: int) -> list[np.ndarray]:
    """k nearest neighbours for each query row, ascending distance, ties by index.

    The kd-tree proposes candidates; every point tied with the k-th distance is
    then pulled in by a radius query so tie-breaking is exact.
    """
    n = len(cloud)
    if n == 0:
        raise EmptyCloudError("knn on an empty cloud")
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, n)
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
    tree = cloud.kdtree()
    dist, _ = tree.query(queries, k=k)
    dist = np.asarray(dist).reshape(len(queries), -1)
    out = []
    for q, dk in zip(queries, dist[:, -1]):
        cand = np.asarray(tree.query_ball_point(q, dk * (1 + 1e-9) + 1e-12), dtype=np.int64)
        out.append(_sorted_neighbors(cloud.xyz, q, np.sort(cand), k))
    return out


def knn(cloud: PointCloud, query: Union[Point, Sequence[float], np.ndarray], k: int) -> np.ndarray:
    q = np.asarray(query[:3] if isinstance(query, Point) else query, dtype=np.float64)[:3]
    return knn_indices(cloud, q, k)[0]


def resolve_count(n: int, selector: Union[int, float]) -> int:
    """Turn a count or a fraction of ``n`` into a count (fractions round half up)."""
    if isinstance(selector, (bool, np.bool_)):
        raise TypeError("selector must be a count or a fraction")
    if isinstance(selector, (int, np.integer)):
        m = int(selector)
    else:
        f = float(selector)
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"fraction {f} outside [0, 1]")
        m = int(np.floor(f * n + 0.5))
    if not 0 <= m <= n:
        raise ValueError(f"cannot select {m} of {n} items")
    return m


def random_subset(n: int, fraction_or_count: Union[int, float], seed) -> np.ndarray:
    """Sorted indices of a uniform sample without replacement.

    ``seed`` may be an integer or a ``numpy.random.Generator`` (which is advanced).
    """
    m = resolve_count(n, fraction_or_count)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if m == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(n, size=m, replace=False)).astype(np.int64)


def voxel_keys(xyz: np.ndarray, voxel_size: float) -> np.ndarray:
    return np.floor(np.asarray(xyz) / voxel_size).astype(np.int64)


def voxel_downsample(cloud: PointCloud, voxel_size: float) -> PointCloud:
    """Keep, per occupied voxel, the point closest to that voxel's centroid.

    Survivors are returned in their original relative order.
    """
    if not voxel_size > 0:
        raise ValueError("voxel_size must be positive")
    if len(cloud) == 0:
        return cloud
    keys = voxel_keys(cloud.xyz, voxel_size)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    counts = np.bincount(inverse)
    centroid = np.column_stack(
        [np.bincount(inverse, weights=cloud.xyz[:, a]) / counts for a in range(3)]
    )
    d2 = np.sum((cloud.xyz - centroid[inverse]) ** 2, axis=1)
    order = np.lexsort((np.arange(len(cloud)), d2, inverse))
    first = np.ones(len(order), dtype=bool)
    first[1:] = inverse[order][1:] != inverse[order][:-1]
    keep = np.sort(order[first])
    return cloud.select(keep)


def elevation_angles(xyz: np.ndarray) -> np.ndarray:
    return np.arctan2(xyz[:, 2], np.hypot(xyz[:, 0], xyz[:, 1]))


def infer_layers(cloud: PointCloud, beam_count: int = DEFAULT_BEAM_COUNT) -> PointCloud:
    """Assign ring indices by binning elevation uniformly between its extremes."""
    if beam_count < 1:
        raise ValueError("beam_count must be >= 1")
    if len(cloud) == 0:
        raise EmptyCloudError("cannot infer layers of an empty cloud")
    elev = elevation_angles(cloud.xyz)
    lo, hi = elev.min(), elev.max()
    if hi > lo:
        layer = np.floor((elev - lo) / (hi - lo) * beam_count).astype(np.int64)
        layer = np.clip(layer, 0, beam_count - 1)
    else:
        layer = np.zeros(len(cloud), dtype=np.int64)
    return PointCloud(cloud.xyz, cloud.intensity, layer, frame_id=cloud.frame_id, beam_count=beam_count)
