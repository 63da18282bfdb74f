"""Geodetic conversions and terminal-airspace membership.

All position math happens in a local east-north-up (ENU) frame centered at
the airport's runway-center reference point. Functions accept scalars or
numpy arrays and broadcast elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# WGS84 ellipsoid
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)
_EP2 = (WGS84_A * WGS84_A - WGS84_B * WGS84_B) / (WGS84_B * WGS84_B)

# Terminal airspace box defaults: 5 NM laterally, 3000 ft vertically.
DEFAULT_LATERAL_BOUND_M = 9260.0
DEFAULT_VERTICAL_BOUND_M = 914.4


@dataclass(frozen=True)
class GeodeticPosition:
    """A WGS84 latitude/longitude plus pressure altitude in meters."""

    lat_deg: float
    lon_deg: float
    alt_m: float

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude {self.lat_deg} outside [-90, 90]")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise ValueError(f"longitude {self.lon_deg} outside [-180, 180]")

    def to_ecef(self) -> np.ndarray:
        return np.asarray(wgs84_to_ecef(self.lat_deg, self.lon_deg, self.alt_m))


def wgs84_to_ecef(lat_deg, lon_deg, alt_m):
    """WGS84 geodetic coordinates to earth-centered earth-fixed, meters.

    Returns an array of shape (..., 3). Scalars give shape (3,).
    """
    lat = np.radians(np.asarray(lat_deg, dtype=np.float64))
    lon = np.radians(np.asarray(lon_deg, dtype=np.float64))
    alt = np.asarray(alt_m, dtype=np.float64)
    sin_lat = np.sin(lat)
    cos_lat = np.cos(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    x = (n + alt) * cos_lat * np.cos(lon)
    y = (n + alt) * cos_lat * np.sin(lon)
    z = (n * (1.0 - WGS84_E2) + alt) * sin_lat
    return np.stack([x, y, z], axis=-1)


def ecef_to_wgs84(ecef):
    """Inverse of :func:`wgs84_to_ecef` (Bowring start + fixed-point polish).

    Accurate to well under a millimeter for positions near the surface.
    """
    p3 = np.asarray(ecef, dtype=np.float64)
    x, y, z = p3[..., 0], p3[..., 1], p3[..., 2]
    lon = np.arctan2(y, x)
    rho = np.hypot(x, y)
    theta = np.arctan2(z * WGS84_A, rho * WGS84_B)
    lat = np.arctan2(
        z + _EP2 * WGS84_B * np.sin(theta) ** 3,
        rho - WGS84_E2 * WGS84_A * np.cos(theta) ** 3,
    )
    for _ in range(3):
        sin_lat = np.sin(lat)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        alt = rho / np.cos(lat) - n
        lat = np.arctan2(z, rho * (1.0 - WGS84_E2 * n / (n + alt)))
    sin_lat = np.sin(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    # near the poles rho/cos(lat) degenerates; fall back to the z expression
    polar = np.abs(np.cos(lat)) < 1e-10
    alt_polar = np.abs(z) / np.where(np.abs(sin_lat) < 1e-10, 1.0, np.abs(sin_lat)) - n * (
        1.0 - WGS84_E2
    )
    alt = np.where(polar, alt_polar, rho / np.cos(lat) - n)
    return np.degrees(lat), np.degrees(lon), alt


def _enu_rotation(lat_deg: float, lon_deg: float) -> np.ndarray:
    """Rows are the east, north, up unit vectors in ECEF coordinates."""
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    sin_lat, cos_lat = np.sin(lat), np.cos(lat)
    sin_lon, cos_lon = np.sin(lon), np.cos(lon)
    return np.array(
        [
            [-sin_lon, cos_lon, 0.0],
            [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
            [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
        ]
    )


@dataclass(frozen=True)
class AirportReference:
    """Runway-center reference frame plus terminal-airspace geometry."""

    lat_deg: float
    lon_deg: float
    alt_m: float
    runway_radius_m: float = 2000.0
    lateral_bound_m: float = DEFAULT_LATERAL_BOUND_M
    vertical_bound_m: float = DEFAULT_VERTICAL_BOUND_M
    ecef_origin: np.ndarray = field(init=False, repr=False, compare=False)
    rotation: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.runway_radius_m <= 0:
            raise ValueError("runway_radius_m must be positive")
        if self.lateral_bound_m <= 0 or self.vertical_bound_m <= 0:
            raise ValueError("airspace bounds must be positive")
        object.__setattr__(
            self, "ecef_origin", wgs84_to_ecef(self.lat_deg, self.lon_deg, self.alt_m)
        )
        object.__setattr__(self, "rotation", _enu_rotation(self.lat_deg, self.lon_deg))


def ecef_to_enu(ecef, ref: AirportReference):
    """Rotate and translate ECEF positions into the airport ENU frame."""
    delta = np.asarray(ecef, dtype=np.float64) - ref.ecef_origin
    return delta @ ref.rotation.T


def enu_to_ecef(enu, ref: AirportReference):
    """Inverse of :func:`ecef_to_enu`."""
    return np.asarray(enu, dtype=np.float64) @ ref.rotation + ref.ecef_origin


def wgs84_to_enu(lat_deg, lon_deg, alt_m, ref: AirportReference):
    return ecef_to_enu(wgs84_to_ecef(lat_deg, lon_deg, alt_m), ref)


def enu_to_wgs84(enu, ref: AirportReference):
    return ecef_to_wgs84(enu_to_ecef(enu, ref))


def in_terminal_airspace(enu, ref: AirportReference):
    """True where |east| and |north| are under the lateral bound and |up|
    is under the vertical bound.

    The up test is two-sided so that pressure-altitude noise slightly below
    the reference does not drop valid near-ground measurements.
    """
    p = np.asarray(enu, dtype=np.float64)
    return (
        (np.abs(p[..., 0]) < ref.lateral_bound_m)
        & (np.abs(p[..., 1]) < ref.lateral_bound_m)
        & (np.abs(p[..., 2]) < ref.vertical_bound_m)
    )
