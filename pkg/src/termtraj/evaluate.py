"""Model evaluation: kinematic features, smoothed-histogram KL divergence,
prefix-prediction RMS, and grid search over cluster count and rank.

All trajectories passed to the scoring functions live in the model frame
(unscaled meters, forward time).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gmm
from .cluster import cluster_stats, kmeans_pp, vectorize
from .gmm import TrajectoryModel

POSITION_BINS = 400
KINEMATIC_BINS = 100
DEFAULT_LATERAL_BOUND_M = 9260.0

FEATURES = ("position", "longitudinal_speed", "vertical_speed", "turn_rate")


@dataclass
class KinematicSeries:
    """Finite-difference motion features at 1 Hz."""

    longitudinal_speed: np.ndarray  # (T-1,) m/s, horizontal ground speed
    vertical_speed: np.ndarray      # (T-1,) m/s
    turn_rate: np.ndarray           # (T-2,) rad/s, wrapped to (-pi, pi]


def derive_kinematics(trajectory: np.ndarray) -> KinematicSeries:
    p = np.asarray(trajectory, dtype=np.float64)
    if p.shape[0] < 3:
        raise ValueError("need at least 3 time steps for turn rate")
    d = np.diff(p, axis=0)
    speed = np.hypot(d[:, 0], d[:, 1])
    heading = np.arctan2(d[:, 0], d[:, 1])
    turn = np.mod(np.diff(heading) + np.pi, 2.0 * np.pi) - np.pi
    turn = np.where(turn == -np.pi, np.pi, turn)
    return KinematicSeries(speed, d[:, 2], turn)


def kl_from_counts(p_counts, q_counts, alpha: float = 1.0) -> float:
    """KL(P || Q) of two histograms after adding alpha to every bin."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    p = np.asarray(p_counts, dtype=np.float64) + alpha
    q = np.asarray(q_counts, dtype=np.float64) + alpha
    p /= p.sum()
    q /= q.sum()
    return float(np.sum(p * np.log(p / q)))


def histogram_kl(p_samples, q_samples, bins: int = KINEMATIC_BINS, alpha: float = 1.0) -> float:
    """Smoothed-histogram KL divergence on a shared binning.

    Bin edges come from the pooled samples so both histograms are directly
    comparable; alpha pseudo-counts keep every bin positive.
    """
    p_samples = np.asarray(p_samples, dtype=np.float64).ravel()
    q_samples = np.asarray(q_samples, dtype=np.float64).ravel()
    if p_samples.size == 0 or q_samples.size == 0:
        raise ValueError("empty sample set")
    edges = np.histogram_bin_edges(np.concatenate([p_samples, q_samples]), bins=bins)
    p_counts, _ = np.histogram(p_samples, bins=edges)
    q_counts, _ = np.histogram(q_samples, bins=edges)
    return kl_from_counts(p_counts, q_counts, alpha)


def _pooled_features(trajectories) -> dict[str, np.ndarray]:
    speeds, climbs, turns, positions = [], [], [], []
    for traj in trajectories:
        kin = derive_kinematics(traj)
        speeds.append(kin.longitudinal_speed)
        climbs.append(kin.vertical_speed)
        turns.append(kin.turn_rate)
        positions.append(np.asarray(traj)[:, :2])
    return {
        "longitudinal_speed": np.concatenate(speeds),
        "vertical_speed": np.concatenate(climbs),
        "turn_rate": np.concatenate(turns),
        "position": np.concatenate(positions, axis=0),
    }


def feature_histograms(
    real_trajectories,
    generated_trajectories,
    bins: int = KINEMATIC_BINS,
    lateral_bound: float = DEFAULT_LATERAL_BOUND_M,
    position_bins: int = POSITION_BINS,
) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per-feature (edges, real_counts, generated_counts) on shared binnings.

    Position uses a fixed position_bins x position_bins lateral occupancy
    grid over the airspace box, flattened; the kinematic features use `bins`
    uniform bins over the pooled min-max range.
    """
    real = _pooled_features(real_trajectories)
    gen = _pooled_features(generated_trajectories)
    out = {}
    box = [[-lateral_bound, lateral_bound], [-lateral_bound, lateral_bound]]
    hp, xe, _ = np.histogram2d(real["position"][:, 0], real["position"][:, 1], bins=position_bins, range=box)
    hq, _, _ = np.histogram2d(gen["position"][:, 0], gen["position"][:, 1], bins=position_bins, range=box)
    out["position"] = (xe, hp.ravel(), hq.ravel())
    for name in ("longitudinal_speed", "vertical_speed", "turn_rate"):
        pooled = np.concatenate([real[name], gen[name]])
        edges = np.histogram_bin_edges(pooled, bins=bins)
        p_counts, _ = np.histogram(real[name], bins=edges)
        q_counts, _ = np.histogram(gen[name], bins=edges)
        out[name] = (edges, p_counts, q_counts)
    return out


def generation_score(
    model: TrajectoryModel,
    heldout,
    n_samples: int = 1000,
    seed=0,
    alpha: float = 1.0,
    bins: int = KINEMATIC_BINS,
    lateral_bound: float = DEFAULT_LATERAL_BOUND_M,
    position_bins: int = POSITION_BINS,
) -> float:
    """Average smoothed KL over position, speeds, and turn rate histograms.

    Held-out data is P and model samples are Q, so the score punishes the
    model for leaving real modes uncovered.
    """
    if not len(heldout):
        raise ValueError("heldout set is empty")
    if n_samples < 1:
        raise ValueError("need at least one generated sample")
    generated = gmm.sample(model, n_samples, seed)
    hists = feature_histograms(heldout, generated, bins, lateral_bound, position_bins)
    kls = [kl_from_counts(p, q, alpha) for _, p, q in hists.values()]
    return float(np.mean(kls))


def prediction_rms(
    model: TrajectoryModel,
    heldout,
    m: int = 10,
    obs_noise_var: float = gmm.DEFAULT_OBS_NOISE_M**2,
) -> float:
    """Root-mean-square 3-D position error of prefix predictions, meters.

    Each held-out trajectory is predicted from its first m steps; the error
    is accumulated over every unobserved step of every trajectory.
    """
    if not len(heldout):
        raise ValueError("heldout set is empty")
    total, steps = 0.0, 0
    for traj in heldout:
        traj = np.asarray(traj, dtype=np.float64)
        if m >= len(traj):
            raise ValueError(f"m={m} leaves no unobserved steps")
        pred = gmm.predict(model, traj[:m], obs_noise_var)
        err = pred[m:] - traj[m:]
        total += float(np.sum(err * err))
        steps += len(traj) - m
    return float(np.sqrt(total / steps))


def train_test_split(trajectories, fraction: float = 0.75, seed=0):
    """Deterministic shuffled split; train gets floor(fraction * n)."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    n = len(trajectories)
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(n * fraction)
    train = [trajectories[i] for i in perm[:n_train]]
    heldout = [trajectories[i] for i in perm[n_train:]]
    return train, heldout


def fit_pipeline_model(
    train_scaled,
    k: int,
    r: int,
    mode: str,
    up_factor: float = 10.0,
    seed=0,
) -> TrajectoryModel:
    """Cluster scaled canonical trajectories and fit the generative model."""
    points = np.array([vectorize(t) for t in train_scaled])
    centers, labels = kmeans_pp(points, k, seed=seed)
    stats = cluster_stats(points, labels, k, centers=centers)
    return gmm.fit_model(stats, r, mode, up_factor)


def select_hyperparams(
    train_scaled,
    heldout_scaled,
    k_grid,
    r_grid,
    objective: str = "prediction",
    mode: str = "takeoff",
    up_factor: float = 10.0,
    seed=0,
    obs_noise_var: float = gmm.DEFAULT_OBS_NOISE_M**2,
    m: int = 10,
    n_samples: int = 500,
    alpha: float = 1.0,
    return_model: bool = False,
):
    """Exhaustive grid search over (K, r), scored on the held-out set.

    Inputs are scaled canonical trajectories straight from reconstruction;
    held-out ones convert to the model frame before scoring. Returns the
    score-minimizing (k, r) plus the full table of (k, r, score) rows; ties
    keep the earliest grid point in sorted order. With return_model=True the
    winning fitted model is returned as a fourth element.
    """
    if objective not in ("generation", "prediction"):
        raise ValueError(f"unknown objective {objective!r}")
    heldout = [gmm.to_model_frame(t, mode, up_factor) for t in heldout_scaled]
    points = np.array([vectorize(t) for t in train_scaled])
    root = np.random.SeedSequence(seed)
    table = []
    best = None
    best_model = None
    for k in sorted(set(int(k) for k in k_grid)):
        kseed = np.random.SeedSequence(entropy=root.entropy, spawn_key=(k, 0))
        centers, labels = kmeans_pp(points, k, seed=kseed)
        stats = cluster_stats(points, labels, k, centers=centers)
        for r in sorted(set(int(r) for r in r_grid)):
            model = gmm.fit_model(stats, r, mode, up_factor)
            if objective == "prediction":
                score = prediction_rms(model, heldout, m, obs_noise_var)
            else:
                gseed = np.random.SeedSequence(entropy=root.entropy, spawn_key=(k, r, 1))
                score = generation_score(model, heldout, n_samples, seed=gseed, alpha=alpha)
            table.append((k, r, score))
            if best is None or score < best[2]:
                best = (k, r, score)
                best_model = model
    if return_model:
        return best[0], best[1], table, best_model
    return best[0], best[1], table


def write_score_table(rows, path) -> None:
    """Persist (k, r, score) rows as comma-separated text."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,r,score\n")
        for k, r, score in rows:
            fh.write(f"{int(k)},{int(r)},{float(score)!r}\n")


def write_histograms(hists, path_prefix) -> list[str]:
    """Dump feature histograms as `bin,real,generated` CSV files."""
    paths = []
    for name, (_, p_counts, q_counts) in hists.items():
        path = f"{path_prefix}.{name}.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("bin,real,generated\n")
            for i, (a, b) in enumerate(zip(p_counts, q_counts)):
                fh.write(f"{i},{int(a)},{int(b)}\n")
        paths.append(path)
    return paths
