"""Fixed-length trajectory reconstruction from noisy, gappy tracks.

Each track becomes the minimizer of

    ||A P - Phat||_F^2 + lam1 ||D2 P||_F^2 + lam2 ||D3 P||_F^2

where A is the 0/1 measurement-time mask, Phat holds per-second measurement
means, and D2/D3 are banded acceleration and jerk difference operators. The
normal equations are symmetric positive definite with half-bandwidth 4, so
each column solves in O(N) via a banded Cholesky factorization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from ._kernels import solve_banded_spd
from .ingest import RawTrack

log = logging.getLogger(__name__)

D2_STENCIL = (1.0, -2.0, 1.0)
D3_STENCIL = (-1.0, 2.0, 0.0, -2.0, 1.0)

DEFAULT_LAMBDA_VALUES = (1e-2, 1.0, 1e2, 1e4, 1e6)
FALLBACK_LAMBDA = (1e2, 1e2)


class SingularSystemError(RuntimeError):
    """The reconstruction normal equations are not positive definite."""


class InsufficientMeasurementsError(ValueError):
    """Too few measured times to run held-out regularization selection."""


def build_difference_operators(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense acceleration (D2, (n-2) x n) and jerk (D3, (n-4) x n) operators.

    D2 annihilates affine sequences, D3 annihilates quadratics. Row i of D3
    starts at column i so every stencil index stays in range.
    """
    if n < 5:
        raise ValueError(f"need n >= 5 for the jerk operator, got {n}")
    d2 = np.zeros((n - 2, n))
    d3 = np.zeros((n - 4, n))
    for m, w in enumerate(D2_STENCIL):
        d2[np.arange(n - 2), np.arange(n - 2) + m] = w
    for m, w in enumerate(D3_STENCIL):
        d3[np.arange(n - 4), np.arange(n - 4) + m] = w
    return d2, d3


@lru_cache(maxsize=256)
def _penalty_bands(n: int, stencil: tuple[float, ...]) -> np.ndarray:
    """Lower banded storage of S^T S for the banded stencil operator S.

    Treat the result as read-only (it is cached).
    """
    width = len(stencil)
    rows = n - width + 1
    bands = np.zeros((width, n))
    for d in range(width):
        for m in range(width - d):
            w = stencil[m] * stencil[m + d]
            if w == 0.0:
                continue
            a0 = m
            a1 = min(m + rows - 1, n - 1 - d)
            if a1 >= a0:
                bands[d, a0 : a1 + 1] += w
    return bands


def normal_equation_bands(n: int, mask: np.ndarray, lam1: float, lam2: float) -> np.ndarray:
    """Banded storage of A^T A + lam1 D2^T D2 + lam2 D3^T D3."""
    bands = np.zeros((5, n))
    bands[0, :] = mask
    if lam1 != 0.0:
        bands[:3] += lam1 * _penalty_bands(n, D2_STENCIL)
    if lam2 != 0.0:
        bands += lam2 * _penalty_bands(n, D3_STENCIL)
    return bands


@dataclass
class ReconstructionProblem:
    """One track's smoothing problem on the integer-second grid 0..n-1."""

    n: int
    mask: np.ndarray
    targets: np.ndarray
    lam1: float
    lam2: float

    def __post_init__(self):
        if self.n < 5:
            raise ValueError(f"need n >= 5, got {self.n}")
        self.mask = np.asarray(self.mask, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.mask.shape != (self.n,) or self.targets.shape != (self.n, 3):
            raise ValueError("mask/targets shapes do not match n")
        if np.count_nonzero(self.mask) < 2:
            raise ValueError("need at least 2 measured times")
        if self.lam1 < 0 or self.lam2 < 0:
            raise ValueError("regularization weights must be nonnegative")


def build_targets(track: RawTrack, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-second measurement means on the grid 0..n-1.

    Multiple measurements in one second are averaged; seconds at or beyond
    n are dropped (truncation); unmeasured rows are zero with mask 0.
    """
    mask = np.zeros(n)
    targets = np.zeros((n, 3))
    counts = np.zeros(n)
    t = track.times
    valid = (t >= 0) & (t < n)
    np.add.at(targets, t[valid], track.enu[valid])
    np.add.at(counts, t[valid], 1.0)
    measured = counts > 0
    targets[measured] /= counts[measured, None]
    mask[measured] = 1.0
    return mask, targets


def solve_reconstruction(problem: ReconstructionProblem) -> np.ndarray:
    """Minimizer of the smoothing objective, an (n, 3) position matrix."""
    bands = normal_equation_bands(problem.n, problem.mask, problem.lam1, problem.lam2)
    rhs = problem.targets * problem.mask[:, None]
    try:
        return solve_banded_spd(bands, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "normal equations are singular; add regularization or measurements"
        ) from exc


def default_lambda_grid() -> list[tuple[float, float]]:
    return sorted(product(DEFAULT_LAMBDA_VALUES, DEFAULT_LAMBDA_VALUES))


def select_regularization(
    track: RawTrack,
    grid=None,
    holdout_fraction: float = 0.25,
    seed=0,
    return_losses: bool = False,
):
    """Pick (lam1, lam2) from a grid by held-out validation on one track.

    A random quarter of the measured seconds is withheld, the rest are fit at
    each grid point, and the squared error on the withheld seconds decides.
    Grid points whose system is singular score infinity. Ties (losses equal
    to within 1e-9 relative) resolve toward the largest (lam1, lam2), so
    noise-free data prefers the smoothest member of the grid.
    """
    pairs = sorted((float(a), float(b)) for a, b in (grid or default_lambda_grid()))
    n = max(int(track.times[-1]) + 1, 5)
    mask, targets = build_targets(track, n)
    measured = np.nonzero(mask)[0]
    if len(measured) < 4:
        raise InsufficientMeasurementsError(
            f"need at least 4 measured seconds, got {len(measured)}"
        )
    n_hold = max(1, min(int(round(holdout_fraction * len(measured))), len(measured) - 3))
    rng = np.random.default_rng(seed)
    hold = np.sort(rng.choice(measured, size=n_hold, replace=False))
    train_mask = mask.copy()
    train_mask[hold] = 0.0

    losses = []
    for lam1, lam2 in pairs:
        try:
            fit = solve_reconstruction(
                ReconstructionProblem(n, train_mask, targets * train_mask[:, None], lam1, lam2)
            )
            loss = float(np.sum((fit[hold] - targets[hold]) ** 2))
        except (SingularSystemError, ValueError):
            loss = np.inf
        losses.append((lam1, lam2, loss))

    best_loss = min(l for _, _, l in losses)
    floor = 1e-12 * (1.0 + float(np.sum(targets[hold] ** 2)))
    tied = [(l1, l2) for l1, l2, l in losses if l <= best_loss + 1e-9 * best_loss + floor]
    choice = max(tied)
    if return_losses:
        return choice, losses
    return choice


def select_common_length(tracks: list[RawTrack]) -> int:
    """Median track duration in seconds (midpoint for even counts)."""
    if not tracks:
        raise ValueError("no tracks")
    durations = [t.duration for t in tracks]
    return int(np.floor(np.median(durations) + 0.5))


def filter_and_fit(
    tracks: list[RawTrack],
    t_com: int,
    short_slack: int = 30,
    grid=None,
    holdout_fraction: float = 0.25,
    seed=0,
) -> list[np.ndarray]:
    """Reconstruct every usable track to exactly t_com rows.

    Tracks more than short_slack seconds shorter than t_com are dropped.
    Shorter tracks extrapolate (the smoothness penalties govern the tail),
    longer ones truncate. Tracks too sparse for held-out selection fall back
    to lam1 = lam2 = 1e2. Per-track solver failures are logged and skipped,
    never aborting the batch; tracks are independent, so callers may solve
    them concurrently as long as output order is preserved.
    """
    if t_com < 5:
        raise ValueError(f"t_com must be at least 5, got {t_com}")
    out = []
    root = np.random.SeedSequence(seed)
    for i, track in enumerate(tracks):
        if track.duration < t_com - short_slack:
            continue
        child_seed = np.random.SeedSequence(entropy=root.entropy, spawn_key=(i,))
        try:
            lam1, lam2 = select_regularization(
                track, grid, holdout_fraction, seed=child_seed
            )
        except InsufficientMeasurementsError:
            lam1, lam2 = FALLBACK_LAMBDA
        n = max(track.duration, t_com)
        mask, targets = build_targets(track, n)
        try:
            fit = solve_reconstruction(ReconstructionProblem(n, mask, targets, lam1, lam2))
        except (SingularSystemError, ValueError) as exc:
            log.warning("skipping track %s #%d: %s", track.target_id, i, exc)
            continue
        out.append(fit[:t_com])
    return out


# --- trajectory batch file ---------------------------------------------------


def write_trajectories(trajectories: list[np.ndarray], path) -> None:
    """Persist a batch of equal-length trajectories as plain text.

    Header line is `t_com,count`; then each trajectory contributes t_com
    lines of `east,north,up` (repr floats, exact round-trip).
    """
    if trajectories:
        t_com = len(trajectories[0])
        if any(len(p) != t_com for p in trajectories):
            raise ValueError("trajectories must share a common length")
    else:
        t_com = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{t_com},{len(trajectories)}\n")
        for p in trajectories:
            for e, n, u in np.asarray(p, dtype=np.float64):
                fh.write(f"{float(e)!r},{float(n)!r},{float(u)!r}\n")


def read_trajectories(path) -> list[np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        t_com_s, count_s = header.split(",")
        t_com, count = int(t_com_s), int(count_s)
        out = []
        for _ in range(count):
            rows = [fh.readline().split(",") for _ in range(t_com)]
            out.append(np.array([[float(v) for v in r] for r in rows]))
    return out
