"""K-means++ clustering of vectorized trajectories and per-cluster statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import nearest_centers


@dataclass
class ClusterStats:
    """Weights, centers, population covariances, and member counts."""

    weights: np.ndarray      # (k,), sums to 1
    centers: np.ndarray      # (k, dim)
    covariances: np.ndarray  # (k, dim, dim), symmetric PSD
    counts: np.ndarray       # (k,)

    @property
    def k(self) -> int:
        return len(self.weights)


def vectorize(trajectory: np.ndarray) -> np.ndarray:
    """Stack the columns of a (T, 3) trajectory into a 3T vector.

    The first T entries are east over time, then north, then up.
    """
    return np.asarray(trajectory, dtype=np.float64).flatten(order="F")


def devectorize(vec: np.ndarray, t_com: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    vec = np.asarray(vec, dtype=np.float64)
    if t_com is None:
        if vec.size % 3:
            raise ValueError("vector length is not a multiple of 3")
        t_com = vec.size // 3
    return vec.reshape((t_com, 3), order="F")


def kmeans_pp(
    points: np.ndarray,
    k: int,
    seed=0,
    max_iters: int = 300,
    tol: float = 1e-6,
    return_history: bool = False,
):
    """K-means++ seeding followed by Lloyd iterations.

    Iterates until the largest center movement drops below tol or max_iters
    is reached. Assignment ties go to the lowest center index. Clusters that
    lose all members keep their previous center. Deterministic given seed.

    Returns (centers, assignments); with return_history=True also returns the
    per-iteration objective (sum of squared distances to assigned centers),
    which Lloyd guarantees to be non-increasing.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if n < k:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    _, dmin = nearest_centers(points, centers[:1])
    for j in range(1, k):
        total = dmin.sum()
        if total > 0.0:
            pick = rng.choice(n, p=dmin / total)
        else:
            pick = rng.integers(n)
        centers[j] = points[pick]
        _, dnew = nearest_centers(points, centers[j : j + 1])
        np.minimum(dmin, dnew, out=dmin)

    labels, sqd = nearest_centers(points, centers)
    history = [float(sqd.sum())]
    for _ in range(max_iters):
        new_centers = centers.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centers[j] = points[members].mean(axis=0)
        shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        labels, sqd = nearest_centers(points, centers)
        history.append(float(sqd.sum()))
        if shift < tol:
            break
    if return_history:
        return centers, labels, history
    return centers, labels


def cluster_stats(
    points: np.ndarray,
    assignments: np.ndarray,
    k: int,
    centers: np.ndarray | None = None,
) -> ClusterStats:
    """Per-cluster weight, mean, and population (1/n) covariance.

    Empty clusters get weight 0 and a zero covariance; their center is taken
    from the kmeans centers when provided, else zero.
    """
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments)
    if assignments.min(initial=0) < 0 or assignments.max(initial=0) >= k:
        raise ValueError("assignments out of range")
    n, dim = points.shape
    weights = np.zeros(k)
    means = np.zeros((k, dim))
    covs = np.zeros((k, dim, dim))
    counts = np.zeros(k, dtype=np.int64)
    for j in range(k):
        members = points[assignments == j]
        counts[j] = len(members)
        if counts[j] == 0:
            if centers is not None:
                means[j] = centers[j]
            continue
        mu = members.mean(axis=0)
        means[j] = mu
        centered = members - mu
        cov = centered.T @ centered / counts[j]
        covs[j] = 0.5 * (cov + cov.T)
    weights = counts / n
    return ClusterStats(weights, means, covs, counts)
