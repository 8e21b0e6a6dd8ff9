"""Density corruptions: local densification/thinning, cutout, beam and layer deletion."""

from __future__ import annotations

import numpy as np

from ..pointcloud import EmptyCloudError, PointCloud, infer_layers, knn_indices, random_subset, resolve_count
from .profile import CorruptionSpec, SeverityProfile


def _require(cloud: PointCloud, n: int, what: str) -> None:
    if len(cloud) < n:
        raise EmptyCloudError(f"{what} needs at least {n} points, cloud has {len(cloud)}")


def cluster_neighborhoods(cloud: PointCloud, clusters: int, neighbors: int, rng: np.random.Generator):
    """Pick ``clusters`` distinct seed points and return their k-NN index arrays."""
    seeds = random_subset(len(cloud), min(int(clusters), len(cloud)), rng)
    if len(seeds) == 0:
        return seeds, []
    return seeds, knn_indices(cloud, cloud.xyz[seeds], neighbors)


def local_density_increase(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    p = profile.for_spec(spec)
    k = int(p["neighbors"])
    _require(cloud, k, "local_inc")
    m = int(p["points_per_cluster"])
    rng = np.random.default_rng(spec.seed)
    _, hoods = cluster_neighborhoods(cloud, int(p["clusters"]), k, rng)
    if not hoods:
        return cloud
    a_idx, b_idx = [], []
    for hood in hoods:
        first = rng.integers(0, k, size=m)
        # second member of the pair is always a different neighbour
        second = (first + rng.integers(1, k, size=m)) % k
        a_idx.append(hood[first])
        b_idx.append(hood[second])
    a = np.concatenate(a_idx)
    b = np.concatenate(b_idx)
    xyz = 0.5 * (cloud.xyz[a] + cloud.xyz[b])
    intensity = 0.5 * (cloud.intensity[a] + cloud.intensity[b])
    return PointCloud(
        np.vstack([cloud.xyz, xyz]),
        np.concatenate([cloud.intensity, intensity]),
        None if cloud.layer is None else np.concatenate([cloud.layer, cloud.layer[a]]),
        frame_id=cloud.frame_id,
        beam_count=cloud.beam_count,
    )


def local_density_decrease(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    p = profile.for_spec(spec)
    k = int(p["neighbors"])
    _require(cloud, k, "local_dec")
    remove = int(p["remove_per_cluster"])
    rng = np.random.default_rng(spec.seed)
    _, hoods = cluster_neighborhoods(cloud, int(p["clusters"]), k, rng)
    keep = np.ones(len(cloud), dtype=bool)
    for hood in hoods:
        keep[hood[random_subset(len(hood), remove, rng)]] = False
    return cloud.select(np.flatnonzero(keep))


def cutout(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    p = profile.for_spec(spec)
    k = int(p["neighbors"])
    _require(cloud, k, "cutout")
    rng = np.random.default_rng(spec.seed)
    _, hoods = cluster_neighborhoods(cloud, int(p["clusters"]), k, rng)
    keep = np.ones(len(cloud), dtype=bool)
    for hood in hoods:
        keep[hood] = False
    return cloud.select(np.flatnonzero(keep))


def beam_deletion(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    d = float(profile.for_spec(spec)["fraction"])
    if not 0.0 <= d <= 1.0:
        raise ValueError(f"beam_del fraction {d} outside [0, 1]")
    n_keep = int(np.floor((1.0 - d) * len(cloud) + 0.5))
    keep = random_subset(len(cloud), n_keep, np.random.default_rng(spec.seed))
    return cloud.select(keep)


def layer_deletion(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    p = profile.for_spec(spec)
    if cloud.layer is None:
        if len(cloud) == 0:
            raise EmptyCloudError("layer_del: no layer indices and none can be inferred from an empty cloud")
        cloud = infer_layers(cloud, int(p["beam_count"]))
    n_layers = resolve_count(cloud.beam_count, int(p["layers"]))
    dropped = random_subset(cloud.beam_count, n_layers, np.random.default_rng(spec.seed))
    return cloud.select(np.flatnonzero(~np.isin(cloud.layer, dropped)))


def deleted_layers(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> np.ndarray:
    """The layer set S that :func:`layer_deletion` removes for this spec."""
    p = profile.for_spec(spec)
    beams = cloud.beam_count if cloud.layer is not None else int(p["beam_count"])
    return random_subset(beams, resolve_count(beams, int(p["layers"])), np.random.default_rng(spec.seed))
