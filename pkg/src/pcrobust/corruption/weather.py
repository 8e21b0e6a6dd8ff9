"""Parametric weather approximations.

These are deliberately simple stand-ins for full scattering simulators:
two-way exponential attenuation of the return intensity, loss of returns
that fall below a detection floor, and Bernoulli replacement of a return by a
droplet echo on the same ray.  Wet ground darkens (or loses) returns within a
height band around the road surface.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..pointcloud import PointCloud
from ..seeding import STAGE_WET_GROUND, derive_frame_seed
from .profile import CorruptionSpec, SeverityProfile


def _scatter(cloud: PointCloud, params: dict, rng: np.random.Generator, echo_limit: float):
    """Core attenuation/scatter pass. Returns (corrupted cloud, source index per output point)."""
    n = len(cloud)
    r = cloud.ranges
    # all random draws are made for every point, so results depend only on the seed
    u_drop = rng.random(n)
    u_scatter = rng.random(n)
    u_echo = rng.random(n)

    intensity = cloud.intensity * np.exp(-2.0 * float(params["attenuation"]) * r)
    alive = intensity >= float(params["intensity_floor"])
    alive &= u_drop >= float(params.get("drop_prob", 0.0))

    xyz = cloud.xyz.copy()
    echo = alive & (u_scatter < float(params["scatter_prob"])) & (r > 0)
    if echo.any():
        limit = np.minimum(r[echo], echo_limit)
        echo_r = (1.0 - u_echo[echo]) * limit  # (0, limit]
        xyz[echo] = cloud.xyz[echo] * (echo_r / r[echo])[:, None]

    src = np.flatnonzero(alive)
    out = PointCloud(
        xyz[src],
        np.minimum(intensity[src], cloud.intensity[src]),
        None if cloud.layer is None else cloud.layer[src],
        frame_id=cloud.frame_id,
        beam_count=cloud.beam_count,
    )
    return out, src


def precipitation_with_sources(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile,
                               mode: Optional[str] = None):
    mode = mode or spec.kind.removesuffix("_wg")
    if mode not in ("rain", "snow"):
        raise ValueError(f"precipitation mode must be rain or snow, got {mode!r}")
    p = profile.params(mode, spec.severity, spec.overrides)
    return _scatter(cloud, p, np.random.default_rng(spec.seed), float(p["scatter_range_max"]))


def simulate_precipitation(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile,
                           mode: Optional[str] = None) -> PointCloud:
    return precipitation_with_sources(cloud, spec, profile, mode)[0]


def fog_with_sources(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile):
    p = profile.params("fog", spec.severity, spec.overrides)
    return _scatter(cloud, p, np.random.default_rng(spec.seed), float(p["halo_max"]))


def simulate_fog(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    return fog_with_sources(cloud, spec, profile)[0]


def ground_mask(cloud: PointCloud, ground_z: float, band: float) -> np.ndarray:
    return np.abs(cloud.xyz[:, 2] - ground_z) <= band


def wet_ground(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    p = profile.params("rain_wg", spec.severity, spec.overrides)
    rng = np.random.default_rng(derive_frame_seed(spec.seed, 0, STAGE_WET_GROUND))
    ground = ground_mask(cloud, float(p["ground_z"]), float(p["ground_band"]))
    u = rng.random(len(cloud))
    keep = ~ground | (u >= float(p["wet_drop_prob"]))
    intensity = np.where(ground, cloud.intensity * float(p["wet_factor"]), cloud.intensity)
    intensity = np.minimum(intensity, cloud.intensity)
    return cloud.replace(intensity=intensity).select(np.flatnonzero(keep))


def rain_wet_ground(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    return wet_ground(simulate_precipitation(cloud, spec, profile, "rain"), spec, profile)


def snow_wet_ground(cloud: PointCloud, spec: CorruptionSpec, profile: SeverityProfile) -> PointCloud:
    return wet_ground(simulate_precipitation(cloud, spec, profile, "snow"), spec, profile)
