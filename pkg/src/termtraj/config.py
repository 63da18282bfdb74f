"""Pipeline configuration: a JSON file plus command-line overrides.

Defaults follow the reference KJFK setup: 2000 m runway radius, the
5 NM x 3000 ft airspace box, up-scaling factor 10, 30 s track-gap and
short-track slack, and a 75-25 train/held-out split.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .geo import AirportReference


@dataclass
class PipelineConfig:
    airport_lat_deg: float = 40.6413
    airport_lon_deg: float = -73.7781
    airport_alt_m: float = 4.0
    runway_radius_m: float = 2000.0
    lateral_bound_m: float = 9260.0
    vertical_bound_m: float = 914.4
    gap_threshold_s: float = 30.0
    climb_threshold_fpm: float = 200.0
    end_fraction: float = 0.95
    up_factor: float = 10.0
    t_com: int | None = None
    short_slack_s: int = 30
    lambda_values: tuple[float, ...] = (1e-2, 1.0, 1e2, 1e4, 1e6)
    holdout_fraction: float = 0.25
    mode: str = "takeoff"
    k: int = 8
    rank: int = 5
    k_grid: tuple[int, ...] | None = None
    r_grid: tuple[int, ...] | None = None
    obs_noise_m: float = 15.0
    split_fraction: float = 0.75
    objective: str = "prediction"
    n_samples_eval: int = 1000
    prediction_prefix: int = 10
    seed: int = 0

    @property
    def airport(self) -> AirportReference:
        return AirportReference(
            self.airport_lat_deg,
            self.airport_lon_deg,
            self.airport_alt_m,
            self.runway_radius_m,
            self.lateral_bound_m,
            self.vertical_bound_m,
        )

    @property
    def obs_noise_var(self) -> float:
        return self.obs_noise_m**2

    def lambda_grid(self) -> list[tuple[float, float]]:
        return sorted((a, b) for a in self.lambda_values for b in self.lambda_values)

    def replace(self, **overrides) -> "PipelineConfig":
        """New config with the given non-None overrides applied."""
        clean = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **clean)


_FIELDS = {f.name for f in dataclasses.fields(PipelineConfig)}
_TUPLE_FIELDS = {"lambda_values", "k_grid", "r_grid"}


def load_config(path=None) -> PipelineConfig:
    """Read a JSON config file; unknown keys are an error."""
    if path is None:
        return PipelineConfig()
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    unknown = set(doc) - _FIELDS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in _TUPLE_FIELDS & set(doc):
        if doc[key] is not None:
            doc[key] = tuple(doc[key])
    return PipelineConfig(**doc)


def default_airport() -> AirportReference:
    return PipelineConfig().airport
