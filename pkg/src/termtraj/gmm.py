"""Low-rank Gaussian mixture trajectory model: fitting, density, sampling,
and conditional inference.

Each cluster keeps an archetype mean plus its top-r principal deviations
(orthonormal columns U with variances sigma), so the cluster covariance is
the rank-r matrix U diag(sigma) U^T. Models live in the unscaled, forward-
time frame: meters, t=0 at airspace entry for landings and at the runway
for takeoffs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cluster import ClusterStats, devectorize, vectorize

MODEL_FORMAT_VERSION = 1
DEFAULT_OBS_NOISE_M = 15.0


@dataclass
class ClusterModel:
    weight: float
    mean: np.ndarray        # (dim,)
    deviations: np.ndarray  # (dim, r), orthonormal columns
    variances: np.ndarray   # (r,), non-increasing, >= 0


@dataclass
class TrajectoryModel:
    mode: str
    t_com: int
    rank: int
    up_factor: float
    clusters: list[ClusterModel]

    @property
    def dim(self) -> int:
        return 3 * self.t_com

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.clusters])


@dataclass
class ConditionalGaussian:
    """Posterior of one cluster's latent coefficients given observations.

    The trajectory-space posterior is N(mean, F S F^T) with F = dev_factor,
    S = cov_z; only the factors are stored, never the dense covariance.
    """

    mean: np.ndarray        # (dim,) trajectory-space posterior mean
    dev_factor: np.ndarray  # (dim, r) = U diag(sqrt(variances))
    mean_z: np.ndarray      # (r,)
    cov_z: np.ndarray       # (r, r)
    chol_z: np.ndarray      # lower Cholesky factor of cov_z


@dataclass
class Posterior:
    responsibilities: np.ndarray
    conditionals: list[ConditionalGaussian]
    observed_times: np.ndarray
    observed_values: np.ndarray


def _fix_signs(u: np.ndarray) -> np.ndarray:
    """Flip column signs so the largest-magnitude entry is positive."""
    if u.shape[1] == 0:
        return u
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def truncate_covariance(q: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-r eigenpairs of a symmetric PSD matrix, eigenvalues descending.

    For PSD matrices the eigendecomposition and SVD coincide, so this is the
    best rank-r approximation: the spectral-norm error equals eigenvalue r+1.
    Small negative eigenvalues from roundoff clip to zero.
    """
    q = np.asarray(q, dtype=np.float64)
    dim = q.shape[0]
    if not 1 <= r <= dim:
        raise ValueError(f"rank must be in [1, {dim}], got {r}")
    vals, vecs = np.linalg.eigh(q)
    order = np.argsort(vals)[::-1][:r]
    variances = np.clip(vals[order], 0.0, None)
    return _fix_signs(vecs[:, order]), variances


def fit_model(
    stats: ClusterStats,
    r: int,
    mode: str,
    up_factor: float = 10.0,
) -> TrajectoryModel:
    """Build the generative model from cluster statistics.

    Per cluster: truncate the covariance to rank r, then undo preprocessing:
    divide the up block by up_factor (refactoring the deviation basis so it
    stays orthonormal) and, for landings, reverse the time order inside each
    coordinate block so the model is in forward time.
    """
    dim = stats.centers.shape[1]
    if dim % 3:
        raise ValueError("cluster dimension must be 3 * t_com")
    t_com = dim // 3
    up_rows = slice(2 * t_com, 3 * t_com)
    if mode == "landing":
        perm = np.concatenate([np.arange(b * t_com, (b + 1) * t_com)[::-1] for b in range(3)])
    elif mode == "takeoff":
        perm = None
    else:
        raise ValueError(f"mode must be 'landing' or 'takeoff', got {mode!r}")

    clusters = []
    for j in range(stats.k):
        u, variances = truncate_covariance(stats.covariances[j], r)
        mean = stats.centers[j].copy()
        mean[up_rows] /= up_factor
        w = u * np.sqrt(variances)
        w[up_rows] /= up_factor
        u2, d, _ = np.linalg.svd(w, full_matrices=False)
        u2 = _fix_signs(u2)
        variances = d * d
        if perm is not None:
            mean = mean[perm]
            u2 = u2[perm]
        clusters.append(ClusterModel(float(stats.weights[j]), mean, u2, variances))
    return TrajectoryModel(mode, t_com, r, float(up_factor), clusters)


def to_model_frame(trajectory: np.ndarray, mode: str, up_factor: float = 10.0) -> np.ndarray:
    """Convert a scaled, runway-anchored trajectory to the model frame."""
    out = np.asarray(trajectory, dtype=np.float64).copy()
    out[:, 2] /= up_factor
    if mode == "landing":
        out = out[::-1].copy()
    return out


def log_density(model: TrajectoryModel, j: int, x: np.ndarray, subspace_tol: float = 1e-6) -> float:
    """Log density of cluster j at x, restricted to the cluster's support.

    Uses the pseudo-determinant (product of the positive variances) and the
    pseudo-inverse quadratic form. Points whose residual off the deviation
    subspace exceeds subspace_tol * ||x - mean|| have density zero (-inf).
    """
    c = model.clusters[j]
    d = np.asarray(x, dtype=np.float64) - c.mean
    pos = c.variances > 0.0
    u = c.deviations[:, pos]
    variances = c.variances[pos]
    coef = u.T @ d
    resid = d - u @ coef
    if np.linalg.norm(resid) > subspace_tol * np.linalg.norm(d):
        return -np.inf
    quad = float(np.sum(coef * coef / variances)) if variances.size else 0.0
    r_eff = int(variances.size)
    return -0.5 * (r_eff * np.log(2.0 * np.pi) + float(np.sum(np.log(variances))) + quad)


def _observation_arrays(model: TrajectoryModel, observed) -> tuple[np.ndarray, np.ndarray]:
    """Flatten [(time, xyz), ...] into vectorized indices and values."""
    times = np.array([int(t) for t, _ in observed], dtype=np.int64)
    values = np.array([np.asarray(p, dtype=np.float64) for _, p in observed])
    if len(times) and (times.min() < 0 or times.max() >= model.t_com):
        raise ValueError("observed time index outside [0, t_com)")
    idx = np.concatenate([times + b * model.t_com for b in range(3)]) if len(times) else np.array([], dtype=np.int64)
    y = values.flatten(order="F") if len(times) else np.array([])
    return idx, y


def posterior_clusters(model: TrajectoryModel, observed, obs_noise_var: float) -> np.ndarray:
    """Cluster responsibilities given noisy partial position observations.

    observed is a list of (time index, 3-vector). Each cluster's marginal at
    the observed coordinates is N(mean[obs], U_obs S U_obs^T + obs_noise_var I);
    responsibilities are the normalized weighted likelihoods, computed in log
    space with max subtraction.
    """
    if obs_noise_var <= 0:
        raise ValueError("obs_noise_var must be positive")
    if not len(observed):
        raise ValueError("need at least one observation")
    scores = _cluster_log_marginals(model, observed, obs_noise_var)
    scores -= scores.max()
    resp = np.exp(scores)
    return resp / resp.sum()


def condition(model: TrajectoryModel, j: int, observed, obs_noise_var: float) -> ConditionalGaussian:
    """Condition cluster j's Gaussian on noisy partial observations.

    Works in the r-dimensional latent space: with B mapping coefficients to
    observed coordinates, the posterior over coefficients has covariance
    S = (I + B B^T / var)^-1 and mean S B (y - mean[obs]) / var. The
    trajectory posterior mean and low-rank covariance factors follow.
    """
    if obs_noise_var <= 0:
        raise ValueError("obs_noise_var must be positive")
    c = model.clusters[j]
    r = len(c.variances)
    f = c.deviations * np.sqrt(c.variances)
    idx, y = _observation_arrays(model, observed)
    if len(idx) == 0:
        eye = np.eye(r)
        return ConditionalGaussian(c.mean.copy(), f, np.zeros(r), eye, eye.copy())
    b = f[idx].T  # (r, n_obs)
    prec = np.eye(r) + (b @ b.T) / obs_noise_var
    cov_z = np.linalg.inv(prec)
    cov_z = 0.5 * (cov_z + cov_z.T)
    mean_z = cov_z @ (b @ (y - c.mean[idx])) / obs_noise_var
    try:
        chol_z = np.linalg.cholesky(cov_z)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - S is PD for var > 0
        raise RuntimeError("latent posterior covariance not positive definite") from exc
    return ConditionalGaussian(c.mean + f @ mean_z, f, mean_z, cov_z, chol_z)


def posterior(model: TrajectoryModel, observed, obs_noise_var: float) -> Posterior:
    """Full posterior: responsibilities plus every cluster's conditional."""
    resp = posterior_clusters(model, observed, obs_noise_var)
    conds = [condition(model, j, observed, obs_noise_var) for j in range(model.k)]
    idx, y = _observation_arrays(model, observed)
    return Posterior(resp, conds, idx, y)


def _draw_mixture(model, weights, conditionals, count, seed):
    """Shared sampler: cluster indices from one uniform vector, then one
    standard-normal row per sample, so prior and posterior sampling follow
    the same stream layout for a given seed."""
    rng = np.random.default_rng(seed)
    u = rng.random(count)
    z = rng.standard_normal((count, model.rank))
    cum = np.cumsum(weights)
    picks = np.minimum(np.searchsorted(cum, u, side="right"), model.k - 1)
    out = np.empty((count, model.dim))
    for j in range(model.k):
        rows = picks == j
        if not rows.any():
            continue
        cond = conditionals[j]
        zj = cond.mean_z + z[rows] @ cond.chol_z.T
        out[rows] = cond.mean + zj @ cond.dev_factor.T
    return [devectorize(v, model.t_com) for v in out]


def _prior_conditionals(model: TrajectoryModel) -> list[ConditionalGaussian]:
    conds = []
    for c in model.clusters:
        eye = np.eye(len(c.variances))
        f = c.deviations * np.sqrt(c.variances)
        conds.append(ConditionalGaussian(c.mean, f, np.zeros(len(c.variances)), eye, eye))
    return conds


def sample(model: TrajectoryModel, count: int, seed=0) -> list[np.ndarray]:
    """Draw trajectories: cluster from the weights, then archetype plus a
    random combination of principal deviations."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    return _draw_mixture(model, model.weights, _prior_conditionals(model), count, seed)


def sample_posterior(
    model: TrajectoryModel, observed, obs_noise_var: float, count: int, seed=0
) -> list[np.ndarray]:
    """Draw trajectories from the posterior given partial observations.

    With no observations this reproduces :func:`sample` exactly for the same
    seed (identical random-stream layout).
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if not len(observed):
        return _draw_mixture(model, model.weights, _prior_conditionals(model), count, seed)
    resp = posterior_clusters(model, observed, obs_noise_var)
    conds = [condition(model, j, observed, obs_noise_var) for j in range(model.k)]
    return _draw_mixture(model, resp, conds, count, seed)


def predict(model: TrajectoryModel, observed_prefix: np.ndarray, obs_noise_var: float) -> np.ndarray:
    """Posterior-mean trajectory of the most responsible cluster, given the
    first m positions (an (m, 3) array)."""
    prefix = np.atleast_2d(np.asarray(observed_prefix, dtype=np.float64))
    if prefix.shape[0] < 1 or prefix.shape[1] != 3:
        raise ValueError("observed_prefix must be (m, 3) with m >= 1")
    observed = [(t, prefix[t]) for t in range(prefix.shape[0])]
    resp = posterior_clusters(model, observed, obs_noise_var)
    j = int(np.argmax(resp))
    return devectorize(condition(model, j, observed, obs_noise_var).mean, model.t_com)


def search_time_offset(
    model: TrajectoryModel, positions: np.ndarray, obs_noise_var: float
) -> int:
    """Best alignment of an m-step observation window against model time.

    Scans offsets 0..t_com-m and returns the one maximizing the weighted
    marginal likelihood of the window. Offset 0 reproduces the plain prefix
    protocol.
    """
    positions = np.atleast_2d(positions)
    m = positions.shape[0]
    best_off, best_score = 0, -np.inf
    for off in range(model.t_com - m + 1):
        observed = [(off + t, positions[t]) for t in range(m)]
        scores = _cluster_log_marginals(model, observed, obs_noise_var)
        top = scores.max()
        total = top + np.log(np.sum(np.exp(scores - top)))
        if total > best_score:
            best_score, best_off = total, off
    return best_off


def _cluster_log_marginals(model, observed, obs_noise_var):
    idx, y = _observation_arrays(model, observed)
    m_obs = len(idx)
    scores = np.empty(model.k)
    for j, c in enumerate(model.clusters):
        g = c.deviations[idx] * np.sqrt(c.variances)
        dy = y - c.mean[idx]
        a = g.T @ g + obs_noise_var * np.eye(g.shape[1])
        chol = np.linalg.cholesky(a)
        w = np.linalg.solve(a, g.T @ dy)
        quad = (dy @ dy - (g.T @ dy) @ w) / obs_noise_var
        logdet = (m_obs - g.shape[1]) * np.log(obs_noise_var) + 2.0 * float(
            np.sum(np.log(np.diag(chol)))
        )
        with np.errstate(divide="ignore"):
            scores[j] = np.log(c.weight) - 0.5 * (
                m_obs * np.log(2.0 * np.pi) + logdet + quad
            )
    return scores


# --- model persistence -------------------------------------------------------


def save_model(model: TrajectoryModel, path) -> None:
    """Write the model as JSON; floats serialize via repr so they round-trip
    exactly, and identical models produce byte-identical files."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "mode": model.mode,
        "T_com": model.t_com,
        "r": model.rank,
        "up_factor": model.up_factor,
        "clusters": [
            {
                "pi": c.weight,
                "mu": c.mean.tolist(),
                "sigma": c.variances.tolist(),
                "U": {
                    "shape": list(c.deviations.shape),
                    "data": c.deviations.flatten(order="F").tolist(),
                },
            }
            for c in model.clusters
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> TrajectoryModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format: {doc.get('format_version')}")
    clusters = []
    for c in doc["clusters"]:
        shape = tuple(c["U"]["shape"])
        u = np.array(c["U"]["data"], dtype=np.float64).reshape(shape, order="F")
        clusters.append(
            ClusterModel(float(c["pi"]), np.array(c["mu"]), u, np.array(c["sigma"]))
        )
    return TrajectoryModel(doc["mode"], int(doc["T_com"]), int(doc["r"]), float(doc["up_factor"]), clusters)
