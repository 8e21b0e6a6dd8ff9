"""Bilateral point-cloud filter: each point slides along its normal by a
Gaussian-weighted mean of its neighbours' normal offsets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .pointcloud import EmptyCloudError, PointCloud, knn


class DegenerateNeighborhoodError(ValueError):
    pass


@dataclass(frozen=True)
class BilateralParams:
    radius: float = 0.5
    sigma_d: float = 0.25
    sigma_n: float = 0.05
    iterations: int = 1
    normal_k: int = 20

    def __post_init__(self):
        if not (self.radius > 0 and self.sigma_d > 0 and self.sigma_n > 0):
            raise ValueError("radius, sigma_d and sigma_n must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.normal_k < 3:
            raise ValueError("normal_k must be >= 3")


def _orient_towards_origin(normals: np.ndarray, xyz: np.ndarray) -> np.ndarray:
    flip = np.einsum("ij,ij->i", normals, xyz) > 0
    normals[flip] *= -1.0
    return normals


def _smallest_eigvec(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(cov)
    return v[..., :, 0], w


def estimate_normal(cloud: PointCloud, index: int, k: int = 20) -> np.ndarray:
    """Unit normal at one point from the PCA of its k nearest neighbours,
    oriented so that it points towards the sensor origin."""
    n = len(cloud)
    if not 3 <= k <= n:
        raise ValueError(f"need 3 <= k <= N, got k={k}, N={n}")
    hood = cloud.xyz[knn(cloud, cloud.xyz[index], k)]
    centered = hood - hood.mean(axis=0)
    cov = centered.T @ centered / k
    normal, w = _smallest_eigvec(cov)
    if w[-1] <= 1e-24:
        raise DegenerateNeighborhoodError(f"neighbourhood of point {index} is a single location")
    normal = normal / np.linalg.norm(normal)
    return _orient_towards_origin(normal[None, :], cloud.xyz[index][None, :])[0]


def estimate_normals(xyz: np.ndarray, k: int = 20, tree: cKDTree | None = None) -> np.ndarray:
    """Batch version of :func:`estimate_normal`. Degenerate neighbourhoods get a zero normal."""
    k = min(k, len(xyz))
    tree = tree or cKDTree(xyz)
    _, idx = tree.query(xyz, k=k)
    hood = xyz[idx.reshape(len(xyz), k)]
    centered = hood - hood.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    normals, w = _smallest_eigvec(cov)
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    normals[w[:, -1] <= 1e-24] = 0.0
    return _orient_towards_origin(normals, xyz)


def _gauss(x: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-(x * x) / (2.0 * sigma * sigma))


def filter_step(xyz: np.ndarray, params: BilateralParams) -> np.ndarray:
    """One Jacobi-style iteration: all updates read the input positions."""
    tree = cKDTree(xyz)
    normals = estimate_normals(xyz, params.normal_k, tree)
    pairs = tree.query_pairs(params.radius, output_type="ndarray")
    if len(pairs) == 0:
        return xyz.copy()
    i = np.concatenate([pairs[:, 0], pairs[:, 1]])
    j = np.concatenate([pairs[:, 1], pairs[:, 0]])
    diff = xyz[j] - xyz[i]
    dist = np.linalg.norm(diff, axis=1)
    offset = np.einsum("ij,ij->i", normals[i], diff)
    w = _gauss(dist, params.sigma_d) * _gauss(offset, params.sigma_n)
    num = np.bincount(i, weights=w * offset, minlength=len(xyz))
    den = np.bincount(i, weights=w, minlength=len(xyz))
    delta = np.zeros(len(xyz))
    ok = den > 0
    delta[ok] = num[ok] / den[ok]
    return xyz + delta[:, None] * normals


def bilateral_filter(cloud: PointCloud, params: BilateralParams = BilateralParams()) -> PointCloud:
    if len(cloud) < 4:
        raise EmptyCloudError("bilateral filter needs at least 4 points")
    xyz = cloud.xyz
    for _ in range(params.iterations):
        xyz = filter_step(xyz, params)
    return cloud.replace(xyz=xyz)
