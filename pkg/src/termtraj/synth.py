"""Synthetic terminal-airspace ground truth and a simulated radar stream.

Builds a known mixture of smooth parametric archetypes (constant-rate turns
joined to straight climb/descent segments) with orthonormal low-rank
deviations, then simulates the observation process: isotropic position
noise, per-second dropout, and duplicate same-second reports. The output is
the standard measurement file format, so the full pipeline can be validated
end to end against known truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geo, gmm
from .cluster import vectorize
from .config import default_airport
from .geo import AirportReference
from .gmm import ClusterModel, TrajectoryModel


@dataclass
class GroundTruthSpec:
    k_true: int = 4
    t_com: int = 70
    mode: str = "takeoff"
    r_true: int = 2
    deviation_scale_m: float = 120.0
    glide_slope_deg: float = 4.0
    speed_start_mps: float = 70.0
    speed_end_mps: float = 95.0
    turn_angle_deg: float = 55.0
    noise_m: float = 15.0
    dropout: float = 0.1
    duplicate_prob: float = 0.15
    headings_deg: tuple[float, ...] | None = None
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.k_true < 1 or self.t_com < 5 or self.r_true < 1:
            raise ValueError("k_true, t_com, r_true must be positive (t_com >= 5)")
        if not 1.0 <= self.glide_slope_deg <= 10.0:
            raise ValueError("glide slope must be within 1-10 degrees")
        if min(self.deviation_scale_m, self.noise_m) < 0 or not 0 <= self.dropout <= 1:
            raise ValueError("scales must be nonnegative and dropout a probability")


def _archetype(spec: GroundTruthSpec, heading_deg: float, turn_sign: float, slope_deg: float) -> np.ndarray:
    """Runway-outward curve: straight roll, constant-rate turn, straight out.

    Returned in canonical orientation (t=0 at the runway); constant climb
    angle so the slope is exact by construction.
    """
    t = spec.t_com
    speeds = np.linspace(spec.speed_start_mps, spec.speed_end_mps, t - 1)
    t1, t2 = int(0.3 * (t - 1)), int(0.7 * (t - 1))
    omega = np.radians(spec.turn_angle_deg) * turn_sign / max(t2 - t1, 1)
    headings = np.full(t - 1, np.radians(heading_deg))
    headings[t1:t2] += omega * np.arange(1, t2 - t1 + 1)
    headings[t2:] += omega * (t2 - t1)

    pos = np.zeros((t, 3))
    h0 = np.radians(heading_deg)
    pos[0] = [250.0 * np.sin(h0), 250.0 * np.cos(h0), 15.0]
    climb = np.tan(np.radians(slope_deg))
    for i in range(t - 1):
        step = speeds[i]
        pos[i + 1, 0] = pos[i, 0] + step * np.sin(headings[i])
        pos[i + 1, 1] = pos[i, 1] + step * np.cos(headings[i])
        pos[i + 1, 2] = pos[i, 2] + step * climb
    return pos


def _smooth_deviation_basis(t_com: int, r: int, phase: float) -> np.ndarray:
    """Orthonormal columns of smooth low-frequency deviation shapes."""
    dim = 3 * t_com
    grid = (np.arange(t_com) + 0.5) / t_com
    raw = np.empty((dim, r))
    for ell in range(r):
        east = np.sin(np.pi * (ell + 1) * grid + phase)
        north = np.cos(np.pi * (ell + 1) * grid + 0.5 * phase)
        up = 0.3 * np.sin(np.pi * (ell + 2) * grid)
        raw[:, ell] = np.concatenate([east, north, up])
    q, _ = np.linalg.qr(raw)
    return q


def make_ground_truth(spec: GroundTruthSpec, seed=0) -> TrajectoryModel:
    """A fully known trajectory model with parametric archetypes."""
    headings = spec.headings_deg
    if headings is None:
        headings = tuple(15.0 + 360.0 * j / spec.k_true for j in range(spec.k_true))
    if len(headings) != spec.k_true:
        raise ValueError("need one heading per cluster")
    weights = spec.weights or tuple(1.0 / spec.k_true for _ in range(spec.k_true))
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")

    clusters = []
    for j in range(spec.k_true):
        slope = spec.glide_slope_deg + 0.3 * (j % 3)
        curve = _archetype(spec, headings[j], 1.0 if j % 2 == 0 else -1.0, slope)
        if spec.mode == "landing":
            curve = curve[::-1].copy()
        mean = vectorize(curve)
        u = _smooth_deviation_basis(spec.t_com, spec.r_true, phase=0.7 * j)
        variances = (spec.deviation_scale_m**2) * (0.25 ** np.arange(spec.r_true))
        clusters.append(ClusterModel(float(weights[j]), mean, u, variances))
    return TrajectoryModel(spec.mode, spec.t_com, spec.r_true, 1.0, clusters)


def emit_radar_stream(
    true_model: TrajectoryModel,
    n_flights: int,
    spec: GroundTruthSpec,
    seed=0,
    ref: AirportReference | None = None,
    start_unix_time: float = 1_000_000.0,
) -> str:
    """Simulated measurement file content for n_flights sampled trajectories.

    Every flight gets a unique target id and a staggered start time. Each
    second of flight is dropped with probability spec.dropout, otherwise
    reported once (sometimes twice, 0.3 s apart, to mimic multi-sensor
    rates) with isotropic position noise of spec.noise_m.
    """
    ref = ref or default_airport()
    root = np.random.SeedSequence(seed)
    trajs = gmm.sample(
        true_model, n_flights, seed=np.random.SeedSequence(entropy=root.entropy, spawn_key=(0,))
    )
    rng = np.random.default_rng(np.random.SeedSequence(entropy=root.entropy, spawn_key=(1,)))

    ids, times, enu_rows = [], [], []
    for i, traj in enumerate(trajs):
        t0 = start_unix_time + 120.0 * i
        tid = f"SYN{i:06d}"
        for t in range(len(traj)):
            if rng.random() < spec.dropout:
                continue
            reports = 2 if rng.random() < spec.duplicate_prob else 1
            for k in range(reports):
                ids.append(tid)
                times.append(t0 + t + 0.3 * k)
                enu_rows.append(traj[t] + spec.noise_m * rng.standard_normal(3))
    if not enu_rows:
        return "# termtraj synthetic measurements\n"
    lat, lon, alt = geo.enu_to_wgs84(np.array(enu_rows), ref)
    lines = ["# termtraj synthetic measurements"]
    for tid, tt, la, lo, al in zip(ids, times, lat, lon, alt):
        lines.append(f"{tid},{float(tt)!r},{float(la)!r},{float(lo)!r},{float(al)!r}")
    return "\n".join(lines) + "\n"
