"""Corruption identifiers, per-call specs, and the severity -> parameter table."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

WEATHER_KINDS = ("rain", "snow", "rain_wg", "snow_wg", "fog")
NOISE_KINDS = (
    "bg_noise",
    "upsample",
    "uni_noise",
    "gau_noise",
    "imp_noise",
    "uni_noise_rad",
    "gau_noise_rad",
    "imp_noise_rad",
)
DENSITY_KINDS = ("local_inc", "local_dec", "beam_del", "layer_del", "cutout")
KINDS = WEATHER_KINDS + NOISE_KINDS + DENSITY_KINDS

SEVERITIES = (1, 2, 3, 4, 5)


def kind_ordinal(kind: str) -> int:
    try:
        return KINDS.index(kind)
    except ValueError:
        raise ValueError(f"unknown corruption kind {kind!r}") from None


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int = 1
    seed: int = 0
    overrides: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        kind_ordinal(self.kind)
        if isinstance(self.severity, bool) or int(self.severity) != self.severity or not 1 <= self.severity <= 5:
            raise ValueError(f"severity must be an integer in [1, 5], got {self.severity!r}")

    def with_kind(self, kind: str) -> "CorruptionSpec":
        return CorruptionSpec(kind, self.severity, self.seed, self.overrides)


def _levels(*vals):
    return list(vals)


# Tables are keyed by corruption kind; "wet_ground" holds the extra rows shared
# by rain_wg and snow_wg. A list is a per-severity row (index 0 = severity 1),
# a scalar is constant across severities.
DEFAULT_TABLE: dict[str, dict[str, Any]] = {
    "gau_noise": {"sigma": _levels(0.02, 0.04, 0.06, 0.08, 0.10)},
    "uni_noise": {"amplitude": _levels(0.02, 0.04, 0.06, 0.08, 0.10)},
    "imp_noise": {"fraction": _levels(0.05, 0.10, 0.15, 0.20, 0.25), "magnitude": 0.10},
    "gau_noise_rad": {"sigma": _levels(0.02, 0.04, 0.06, 0.08, 0.10)},
    "uni_noise_rad": {"amplitude": _levels(0.02, 0.04, 0.06, 0.08, 0.10)},
    "imp_noise_rad": {"fraction": _levels(0.05, 0.10, 0.15, 0.20, 0.25), "magnitude": 0.10},
    "bg_noise": {"percent": _levels(1, 2, 3, 4, 5)},
    "upsample": {"fraction": _levels(0.02, 0.04, 0.06, 0.08, 0.10), "jitter": 0.1},
    "local_inc": {"clusters": _levels(10, 20, 30, 40, 50), "neighbors": 100, "points_per_cluster": 80},
    "local_dec": {"clusters": _levels(10, 20, 30, 40, 50), "neighbors": 100, "remove_per_cluster": 75},
    "cutout": {"clusters": _levels(10, 20, 30, 40, 50), "neighbors": 20},
    "beam_del": {"fraction": _levels(0.10, 0.20, 0.30, 0.40, 0.50)},
    "layer_del": {"layers": _levels(8, 16, 24, 32, 40), "beam_count": 64},
    "rain": {
        "attenuation": _levels(0.003, 0.006, 0.009, 0.012, 0.015),
        "scatter_prob": _levels(0.0005, 0.0010, 0.0015, 0.0020, 0.0025),
        "scatter_range_max": 30.0,
        "drop_prob": 0.0,
        "intensity_floor": 0.02,
    },
    "snow": {
        "attenuation": _levels(0.0045, 0.009, 0.0135, 0.018, 0.0225),
        "scatter_prob": _levels(0.0010, 0.0020, 0.0030, 0.0040, 0.0050),
        "scatter_range_max": 30.0,
        "drop_prob": 0.0,
        "intensity_floor": 0.02,
    },
    "fog": {
        "attenuation": _levels(0.01, 0.02, 0.03, 0.045, 0.06),
        "scatter_prob": _levels(0.002, 0.004, 0.006, 0.008, 0.010),
        "halo_max": 15.0,
        "drop_prob": 0.0,
        "intensity_floor": 0.02,
    },
    "wet_ground": {
        "ground_z": -1.73,
        "ground_band": 0.2,
        "wet_factor": 0.5,
        "wet_drop_prob": _levels(0.1, 0.2, 0.3, 0.4, 0.5),
    },
}

# which tables feed each kind; later tables win on key clashes
_SOURCES = {kind: (kind,) for kind in KINDS}
_SOURCES["rain_wg"] = ("rain", "wet_ground")
_SOURCES["snow_wg"] = ("snow", "wet_ground")


class ProfileError(ValueError):
    pass


@dataclass
class SeverityProfile:
    table: dict[str, dict[str, Any]] = field(default_factory=lambda: copy.deepcopy(DEFAULT_TABLE))

    def __post_init__(self):
        self.validate()

    @classmethod
    def default(cls) -> "SeverityProfile":
        return cls()

    def validate(self) -> None:
        for kind, params in self.table.items():
            if kind not in KINDS and kind != "wet_ground":
                raise ProfileError(f"unknown table {kind!r}")
            for name, value in params.items():
                if isinstance(value, (list, tuple)):
                    if len(value) != len(SEVERITIES):
                        raise ProfileError(f"{kind}.{name}: need {len(SEVERITIES)} levels, got {len(value)}")
                    if any(b < a for a, b in zip(value, value[1:])):
                        raise ProfileError(f"{kind}.{name}: levels must be non-decreasing")

    def params(self, kind: str, severity: int, overrides: Optional[Mapping[str, Any]] = None) -> dict[str, Any]:
        """Concrete parameters for one (kind, severity), overrides applied last."""
        kind_ordinal(kind)
        out: dict[str, Any] = {}
        for source in _SOURCES[kind]:
            for name, value in self.table.get(source, {}).items():
                out[name] = value[severity - 1] if isinstance(value, (list, tuple)) else value
        if overrides:
            out.update(overrides)
        return out

    def for_spec(self, spec: CorruptionSpec) -> dict[str, Any]:
        return self.params(spec.kind, spec.severity, spec.overrides)

    def merged(self, updates: Mapping[str, Mapping[str, Any]]) -> "SeverityProfile":
        table = copy.deepcopy(self.table)
        for kind, params in updates.items():
            table.setdefault(kind, {}).update(params)
        return SeverityProfile(table)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.table, sort_keys=True, default_flow_style=None)

    @classmethod
    def from_yaml(cls, text: str) -> "SeverityProfile":
        """Partial documents are merged over the defaults."""
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ProfileError("severity profile must be a mapping of kind -> parameters")
        return cls().merged(data)

    @classmethod
    def load(cls, path) -> "SeverityProfile":
        return cls.from_yaml(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_yaml())
