from .profile import (
    DENSITY_KINDS,
    KINDS,
    NOISE_KINDS,
    SEVERITIES,
    WEATHER_KINDS,
    CorruptionSpec,
    ProfileError,
    SeverityProfile,
    kind_ordinal,
)
from .noise import (
    background_noise,
    gaussian_noise_ccs,
    gaussian_noise_scs,
    impulse_noise_ccs,
    impulse_noise_scs,
    perturb_range,
    uniform_noise_ccs,
    uniform_noise_scs,
    upsample,
)
from .density import beam_deletion, cutout, layer_deletion, local_density_decrease, local_density_increase
from .weather import simulate_fog, simulate_precipitation, wet_ground
from .engine import REGISTRY, corrupt, default_profile

__all__ = [
    "KINDS", "WEATHER_KINDS", "NOISE_KINDS", "DENSITY_KINDS", "SEVERITIES",
    "CorruptionSpec", "SeverityProfile", "ProfileError", "kind_ordinal",
    "corrupt", "default_profile", "REGISTRY",
    "gaussian_noise_ccs", "uniform_noise_ccs", "impulse_noise_ccs",
    "gaussian_noise_scs", "uniform_noise_scs", "impulse_noise_scs", "perturb_range",
    "background_noise", "upsample",
    "local_density_increase", "local_density_decrease", "cutout", "beam_deletion", "layer_deletion",
    "simulate_precipitation", "simulate_fog", "wet_ground",
]
