"""Noise corruptions: re-positioning in Cartesian or range space, and point synthesis."""

from __future__ import annotations

import numpy as np

from ..pointcloud import EmptyCloudError, PointCloud, bounding_box, elevation_angles, random_subset
from .profile import CorruptionSpec, SeverityProfile


def _rng(spec: CorruptionSpec) -> np.random.Generator:
    return np.random.default_rng(spec.seed)


# --- Cartesian (CCS) --------------------------------------------------------

def gaussian_noise_ccs(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    sigma = float(profile.for_spec(spec)["sigma"])
    delta = _rng(spec).standard_normal((len(cloud), 3))
    return cloud.replace(xyz=cloud.xyz + delta * sigma)


def uniform_noise_ccs(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    a = float(profile.for_spec(spec)["amplitude"])
    delta = _rng(spec).uniform(-1.0, 1.0, (len(cloud), 3))
    return cloud.replace(xyz=cloud.xyz + delta * a)


def _impulse_targets(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile, dims: int):
    p = profile.for_spec(spec)
    rng = _rng(spec)
    idx = random_subset(len(cloud), float(p["fraction"]), rng)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(len(idx), dims))
    return idx, signs * float(p["magnitude"])


def impulse_noise_ccs(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    idx, delta = _impulse_targets(cloud, spec, profile, 3)
    xyz = cloud.xyz.copy()
    xyz[idx] += delta
    return cloud.replace(xyz=xyz)


# --- range only (SCS) -------------------------------------------------------

def perturb_range(xyz: np.ndarray, delta_r: np.ndarray) -> np.ndarray:
    """Shift each point along its own ray by ``delta_r``, clamping range at 0.

    Azimuth and polar angle are untouched; a point at the origin uses the
    zero-angle convention of the spherical transform, i.e. the +z ray.
    """
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    r = np.linalg.norm(xyz, axis=1)
    new_r = np.maximum(r + np.broadcast_to(delta_r, r.shape), 0.0)
    unit = np.zeros_like(xyz)
    nz = r > 0
    unit[nz] = xyz[nz] / r[nz, None]
    unit[~nz] = (0.0, 0.0, 1.0)
    out = unit * new_r[:, None]
    # exact identity where the range did not move
    same = new_r == r
    out[same] = xyz[same]
    return out


def gaussian_noise_scs(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    sigma = float(profile.for_spec(spec)["sigma"])
    dr = _rng(spec).standard_normal(len(cloud)) * sigma
    return cloud.replace(xyz=perturb_range(cloud.xyz, dr))


def uniform_noise_scs(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    a = float(profile.for_spec(spec)["amplitude"])
    dr = _rng(spec).uniform(-1.0, 1.0, len(cloud)) * a
    return cloud.replace(xyz=perturb_range(cloud.xyz, dr))


def impulse_noise_scs(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    idx, delta = _impulse_targets(cloud, spec, profile, 1)
    xyz = cloud.xyz.copy()
    xyz[idx] = perturb_range(xyz[idx], delta[:, 0])
    return cloud.replace(xyz=xyz)


# --- point synthesis --------------------------------------------------------

def _append(cloud: PointCloud, xyz, intensity, layer) -> PointCloud:
    return PointCloud(
        np.vstack([cloud.xyz, xyz]),
        np.concatenate([cloud.intensity, intensity]),
        None if cloud.layer is None else np.concatenate([cloud.layer, layer]),
        frame_id=cloud.frame_id,
        beam_count=cloud.beam_count,
    )


def _layers_by_elevation(cloud: PointCloud, xyz: np.ndarray) -> np.ndarray:
    """Layer of the source point whose elevation is closest to each new point."""
    elev = elevation_angles(cloud.xyz)
    order = np.argsort(elev, kind="stable")
    e = elev[order]
    q = elevation_angles(xyz)
    hi = np.clip(np.searchsorted(e, q), 0, len(e) - 1)
    lo = np.clip(hi - 1, 0, len(e) - 1)
    pick = np.where(np.abs(q - e[lo]) <= np.abs(e[hi] - q), lo, hi)
    return cloud.layer[order[pick]]


def background_noise(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    if len(cloud) == 0:
        raise EmptyCloudError("background noise needs a bounding box")
    p = profile.for_spec(spec)
    n_add = int(p["count"]) if "count" in p else int(np.floor(float(p["percent"]) / 100.0 * len(cloud) + 0.5))
    box = bounding_box(cloud)
    xyz = _rng(spec).uniform(box.min_corner, box.max_corner, size=(n_add, 3))
    # uniform() is half-open; keep the closed-box contract under rounding
    xyz = np.clip(xyz, box.min_corner, box.max_corner)
    layer = None if cloud.layer is None else _layers_by_elevation(cloud, xyz)
    return _append(cloud, xyz, np.zeros(n_add), layer)


def upsample(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    if len(cloud) == 0:
        raise EmptyCloudError("upsample needs source points")
    p = profile.for_spec(spec)
    rng = _rng(spec)
    src = random_subset(len(cloud), float(p["fraction"]), rng)
    jitter = float(p["jitter"])
    xyz = cloud.xyz[src] + rng.uniform(-jitter, jitter, size=(len(src), 3))
    layer = None if cloud.layer is None else cloud.layer[src]
    return _append(cloud, xyz, cloud.intensity[src], layer)
