"""PLKNN baseline: k-nearest-neighbor voting over candidate sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import PLDataset

__all__ = ["KnnConfig", "plknn_predict"]


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")


def plknn_predict(train: PLDataset, X_query, cfg: KnnConfig) -> np.ndarray:
    """Predict by counting how often each label appears among the k nearest
    neighbors' candidate sets.

    Votes are unweighted indicator counts.  Distance ties prefer the lower
    training index; vote ties prefer the lower label.
    """
    if cfg.k >= train.m:
        raise ValueError(f"k={cfg.k} must be smaller than the {train.m} training instances")
    X_query = np.asarray(X_query, dtype=np.float64)
    if X_query.ndim != 2 or X_query.shape[1] != train.n:
        raise ValueError(
            f"dimension mismatch: query has {X_query.shape[-1]} features, training has {train.n}"
        )
    dists = cdist(X_query, train.features)
    nn = np.argsort(dists, axis=1, kind="stable")[:, : cfg.k]
    votes = train.candidates[nn].sum(axis=1)
    return np.argmax(votes, axis=1)
