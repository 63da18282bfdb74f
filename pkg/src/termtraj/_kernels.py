"""Hot numeric kernels: banded SPD solves and nearest-center assignment.

Each kernel has two interchangeable implementations:

* a numba ``@njit`` version, used by default when numba imports cleanly;
* a numpy/scipy fallback, selected by setting ``TERMTRAJ_NO_NUMBA=1``
  (or when numba is not installed).

Both variants are always importable by name (``*_numba`` / ``*_numpy``) so
the test suite and ``benchmarks/bench_kernels.py`` can compare them; the
environment flag only decides which one the public aliases point to.
"""

import os

import numpy as np
import scipy.linalg


def _flag_disabled() -> bool:
    return os.environ.get("TERMTRAJ_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    NUMBA_AVAILABLE = False

NUMBA_ENABLED = NUMBA_AVAILABLE and not _flag_disabled()


# ---------------------------------------------------------------------------
# Banded symmetric positive definite solve (lower "offset" storage).
#
# bands[d, i] = M[i + d, i] for d = 0..u, the same layout scipy's
# solveh_banded(..., lower=True) expects. Cholesky of a half-bandwidth-u
# matrix costs O(n u^2); solves cost O(n u) per column.
# ---------------------------------------------------------------------------


def _banded_cholesky_impl(bands, L):
    u = bands.shape[0] - 1
    n = bands.shape[1]
    for j in range(n):
        s = bands[0, j]
        kmin = j - u if j - u > 0 else 0
        for k in range(kmin, j):
            s -= L[j - k, k] * L[j - k, k]
        if s <= 0.0:
            return 1
        ljj = np.sqrt(s)
        L[0, j] = ljj
        imax = j + u if j + u < n - 1 else n - 1
        for i in range(j + 1, imax + 1):
            s2 = bands[i - j, j]
            kmin2 = i - u if i - u > 0 else 0
            for k in range(kmin2, j):
                s2 -= L[i - k, k] * L[j - k, k]
            L[i - j, j] = s2 / ljj
    return 0


def _banded_substitute_impl(L, b, out):
    u = L.shape[0] - 1
    n = L.shape[1]
    m = b.shape[1]
    for c in range(m):
        for i in range(n):
            s = b[i, c]
            kmin = i - u if i - u > 0 else 0
            for k in range(kmin, i):
                s -= L[i - k, k] * out[k, c]
            out[i, c] = s / L[0, i]
        for i in range(n - 1, -1, -1):
            s = out[i, c]
            jmax = i + u if i + u < n - 1 else n - 1
            for j in range(i + 1, jmax + 1):
                s -= L[j - i, i] * out[j, c]
            out[i, c] = s / L[0, i]


if NUMBA_AVAILABLE:
    _banded_cholesky_jit = njit(cache=True)(_banded_cholesky_impl)
    _banded_substitute_jit = njit(cache=True)(_banded_substitute_impl)


def solve_banded_spd_numba(bands, rhs):
    """Solve M x = rhs with M in lower banded storage, via jitted Cholesky."""
    bands = np.ascontiguousarray(bands, dtype=np.float64)
    b = np.asarray(rhs, dtype=np.float64)
    one_d = b.ndim == 1
    if one_d:
        b = b[:, None]
    L = np.zeros_like(bands)
    if _banded_cholesky_jit(bands, L) != 0:
        raise np.linalg.LinAlgError("banded matrix is not positive definite")
    out = np.empty_like(b)
    _banded_substitute_jit(L, np.ascontiguousarray(b), out)
    return out[:, 0] if one_d else out


def solve_banded_spd_numpy(bands, rhs):
    """scipy fallback for :func:`solve_banded_spd_numba`."""
    return scipy.linalg.solveh_banded(bands, rhs, lower=True)


# ---------------------------------------------------------------------------
# Nearest-center assignment (the Lloyd-iteration hot loop).
# ---------------------------------------------------------------------------


def _nearest_centers_impl(X, C, labels, sqd):
    n, d = X.shape
    k = C.shape[0]
    for i in range(n):
        best = np.inf
        bj = 0
        for j in range(k):
            s = 0.0
            for t in range(d):
                diff = X[i, t] - C[j, t]
                s += diff * diff
            if s < best:
                best = s
                bj = j
        labels[i] = bj
        sqd[i] = best


if NUMBA_AVAILABLE:
    _nearest_centers_jit = njit(cache=True)(_nearest_centers_impl)


def nearest_centers_numba(X, C):
    """Index of the nearest center for each row of X, plus squared distance.

    Ties resolve to the lowest center index.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    labels = np.empty(X.shape[0], dtype=np.int64)
    sqd = np.empty(X.shape[0], dtype=np.float64)
    _nearest_centers_jit(X, C, labels, sqd)
    return labels, sqd


def nearest_centers_numpy(X, C):
    """BLAS fallback for :func:`nearest_centers_numba`."""
    X = np.asarray(X, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    d2 = np.sum(X * X, axis=1)[:, None] + np.sum(C * C, axis=1)[None, :]
    d2 -= 2.0 * (X @ C.T)
    np.maximum(d2, 0.0, out=d2)
    labels = np.argmin(d2, axis=1)
    sqd = d2[np.arange(X.shape[0]), labels]
    return labels, sqd


if NUMBA_ENABLED:
    solve_banded_spd = solve_banded_spd_numba
    nearest_centers = nearest_centers_numba
else:
    solve_banded_spd = solve_banded_spd_numpy
    nearest_centers = nearest_centers_numpy
