"""Multivariate normal lower-orthant probabilities.

Computes P(X_1 <= b_1, ..., X_d <= b_d) for X ~ N(0, R) with R a
correlation matrix, via sequential conditioning on a Cholesky factor with
randomized quasi-Monte Carlo (rank-1 lattice points, antithetic pairs,
independent random shifts). The shift spread gives an error estimate, so
the routine can refuse to return a silently inaccurate answer.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import MvnFailureError

# Samples per shift, number of shifts, and the accuracy bar. The lattice
# size is fixed rather than adaptive so results are reproducible.
_POINTS_PER_SHIFT = 4096
_N_SHIFTS = 12
_MAX_ERROR = 5e-4
_SHIFT_SEED = 20240917

# sqrt(prime) fractional parts: a standard generator set for rank-1
# Richtmyer lattices, one coordinate per integration dimension.
_PRIMES = np.array(
    [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61],
    dtype=float,
)

_TINY = 1e-16


def _psd_cholesky(corr: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor tolerant of singular correlation matrices.

    When a pivot underflows (duplicated or linearly dependent rows) the
    remaining entries of that column are zeroed, which corresponds to the
    degenerate component being a deterministic function of earlier ones.
    """
    d = corr.shape[0]
    a = corr.copy().astype(float)
    chol = np.zeros_like(a)
    for j in range(d):
        pivot = a[j, j] - np.dot(chol[j, :j], chol[j, :j])
        if pivot <= 1e-12:
            chol[j, j] = 0.0
            continue
        chol[j, j] = np.sqrt(pivot)
        for i in range(j + 1, d):
            chol[i, j] = (a[i, j] - np.dot(chol[i, :j], chol[j, :j])) / chol[j, j]
    return chol


def mvn_lower_orthant(upper: np.ndarray, corr: np.ndarray) -> float:
    """P(X <= upper) componentwise for X ~ N(0, corr).

    Raises
    ------
    MvnFailureError
        The internal error estimate exceeds the accuracy bar, or the
        inputs are not a valid correlation matrix / bound vector.
    """
    b = np.asarray(upper, dtype=float)
    r = np.asarray(corr, dtype=float)
    d = b.shape[0]
    if b.ndim != 1 or r.shape != (d, d):
        raise MvnFailureError("bounds and correlation matrix shapes disagree")
    if not np.all(np.isfinite(r)) or not np.allclose(r, r.T, atol=1e-10):
        raise MvnFailureError("correlation matrix must be finite and symmetric")
    if not np.allclose(np.diag(r), 1.0, atol=1e-8):
        raise MvnFailureError("correlation matrix must have unit diagonal")
    if np.any(np.isnan(b)):
        raise MvnFailureError("bounds must not be NaN")
    if d == 0:
        return 1.0
    if d == 1:
        return float(ndtr(b[0]))
    if d > len(_PRIMES):
        raise MvnFailureError(f"dimension {d} exceeds supported maximum {len(_PRIMES)}")

    chol = _psd_cholesky(r)

    # Lattice points for d-1 integration dimensions (the last stage of the
    # sequential factorization needs no fresh uniform).
    m = _POINTS_PER_SHIFT
    k = np.arange(1, m + 1, dtype=float)[:, None]
    gens = np.sqrt(_PRIMES[: d - 1])[None, :]
    base = k * gens
    base -= np.floor(base)

    rng = np.random.Generator(np.random.Philox(_SHIFT_SEED))
    shift_means = np.empty(_N_SHIFTS)
    for s in range(_N_SHIFTS):
        shift = rng.random(d - 1)
        u = base + shift
        u -= np.floor(u)
        # Antithetic pairing halves the lattice bias at no extra cost.
        probs = np.zeros(m)
        for pts in (u, 1.0 - u):
            e = np.full(m, ndtr(b[0] / chol[0, 0]) if chol[0, 0] > 0 else float(b[0] >= 0))
            prod = e.copy()
            y = np.zeros((m, d - 1))
            for i in range(1, d):
                quantile = np.clip(e * pts[:, i - 1], _TINY, 1.0 - _TINY)
                y[:, i - 1] = np.where(e > 0, ndtri(quantile), 0.0)
                partial = y[:, : i] @ chol[i, :i]
                if chol[i, i] > 0:
                    e = ndtr((b[i] - partial) / chol[i, i])
                else:
                    e = (b[i] - partial >= 0).astype(float)
                prod *= e
            probs += prod
        shift_means[s] = probs.sum() / (2 * m)

    estimate = float(np.mean(shift_means))
    error = 3.0 * float(np.std(shift_means, ddof=1)) / np.sqrt(_N_SHIFTS)
    if error > _MAX_ERROR:
        raise MvnFailureError(
            f"orthant probability error estimate {error:.2e} exceeds {_MAX_ERROR:.0e}"
        )
    return min(max(estimate, 0.0), 1.0)
