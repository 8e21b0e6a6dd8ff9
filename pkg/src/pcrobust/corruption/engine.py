from __future__ import annotations

from typing import Callable, Optional

from ..pointcloud import PointCloud
from . import density, noise, weather
from .profile import KINDS, CorruptionSpec, SeverityProfile

CorruptionFn = Callable[[PointCloud, CorruptionSpec, SeverityProfile], PointCloud]

REGISTRY: dict[str, CorruptionFn] = {
    "rain": weather.simulate_precipitation,
    "snow": weather.simulate_precipitation,
    "rain_wg": weather.rain_wet_ground,
    "snow_wg": weather.snow_wet_ground,
    "fog": weather.simulate_fog,
    "bg_noise": noise.background_noise,
    "upsample": noise.upsample,
    "uni_noise": noise.uniform_noise_ccs,
    "gau_noise": noise.gaussian_noise_ccs,
    "imp_noise": noise.impulse_noise_ccs,
    "uni_noise_rad": noise.uniform_noise_scs,
    "gau_noise_rad": noise.gaussian_noise_scs,
    "imp_noise_rad": noise.impulse_noise_scs,
    "local_inc": density.local_density_increase,
    "local_dec": density.local_density_decrease,
    "beam_del": density.beam_deletion,
    "layer_del": density.layer_deletion,
    "cutout": density.cutout,
}
assert set(REGISTRY) == set(KINDS)

_DEFAULT_PROFILE: list[SeverityProfile] = []


def default_profile() -> SeverityProfile:
    if not _DEFAULT_PROFILE:
        _DEFAULT_PROFILE.append(SeverityProfile.default())
    return _DEFAULT_PROFILE[0]


def corrupt(cloud: PointCloud, spec: CorruptionSpec, profile: Optional[SeverityProfile] = None) -> PointCloud:
    """Apply ``spec`` to ``cloud``; the result depends only on (cloud, spec, profile)."""
    fn = REGISTRY.get(spec.kind)
    if fn is None:
        raise ValueError(f"unknown corruption kind {spec.kind!r}")
    return fn(cloud, spec, profile or default_profile())
