"""Gaussian kernel matrices and the mean pairwise distance bandwidth heuristic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

__all__ = ["KernelConfig", "DEFAULT_PAIR_CAP", "mean_pairwise_distance", "gram_matrix"]

# All unordered pairs are used exactly up to this many; beyond it the heuristic
# switches to seeded uniform subsampling (m ~ 3000 instances).
DEFAULT_PAIR_CAP = 4_500_000


@dataclass(frozen=True)
class KernelConfig:
    """Bandwidth settings; sigma=None means "use the mean-distance heuristic"."""

    sigma: float | None = None
    subsample_pairs: int = DEFAULT_PAIR_CAP

    def __post_init__(self):
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.subsample_pairs < 1:
            raise ValueError("subsample_pairs must be positive")


def mean_pairwise_distance(X, cap: int = DEFAULT_PAIR_CAP, seed: int = 0) -> float:
    """Mean Euclidean distance over distinct unordered instance pairs.

    Exact when m(m-1)/2 <= cap, otherwise the mean over cap pairs sampled
    uniformly (seeded; duplicates allowed).  Raises if the mean is zero, which
    would make the Gaussian bandwidth degenerate.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two instances")
    m = X.shape[0]
    n_pairs = m * (m - 1) // 2
    if n_pairs <= cap:
        mean = float(pdist(X).mean())
    else:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, m, size=cap)
        jj = rng.integers(0, m - 1, size=cap)
        jj = jj + (jj >= ii)  # uniform over ordered pairs with i != j
        mean = float(np.sqrt(((X[ii] - X[jj]) ** 2).sum(axis=1)).mean())
    if mean <= 0.0:
        raise ValueError("degenerate bandwidth (zero mean distance)")
    return mean


def gram_matrix(X_rows, X_cols, sigma: float) -> np.ndarray:
    """Gaussian kernel matrix: entry (i, j) = exp(-||x_i - x_j||^2 / (2 sigma^2)).

    Squared distances come from exact coordinate differences, so the square
    case has a unit diagonal exactly and is symmetric to machine precision.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    X_rows = np.asarray(X_rows, dtype=np.float64)
    X_cols = np.asarray(X_cols, dtype=np.float64)
    if X_rows.ndim != 2 or X_cols.ndim != 2 or X_rows.shape[1] != X_cols.shape[1]:
        raise ValueError(
            f"dimension mismatch: {X_rows.shape} rows vs {X_cols.shape} columns"
        )
    sq = cdist(X_rows, X_cols, "sqeuclidean")
    return np.exp(-sq / (2.0 * sigma * sigma))
