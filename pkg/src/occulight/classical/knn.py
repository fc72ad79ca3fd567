from __future__ import annotations

import numpy as np

from .base import ScoringClassifier


class KNeighborsClassifier(ScoringClassifier):
    """Euclidean k-nearest neighbours; scores are neighbour-label fractions.

    Equidistant neighbours are ordered by training index, so results are
    deterministic.
    """

    kind = "KNN"
    probabilistic = True

    def __init__(self, k=5):
        self.k = k

    def _fit(self, X, y_idx):
        self.X_ = X.copy()
        self.y_ = y_idx.copy()

    def kneighbors(self, X) -> np.ndarray:
        """Indices of the k nearest training points, nearest first."""
        X = np.asarray(X, dtype=float)
        k = min(self.k, self.X_.shape[0])
        idx = np.arange(self.X_.shape[0])
        out = np.empty((X.shape[0], k), dtype=np.int64)
        for i, row in enumerate(X):
            dist = np.sum((self.X_ - row) ** 2, axis=1)
            out[i] = np.lexsort((idx, dist))[:k]
        return out

    def _scores(self, X):
        nb = self.y_[self.kneighbors(X)]
        C = len(self.classes_)
        return np.stack([(nb == c).mean(axis=1) for c in range(C)], axis=1)

    def _state(self):
        return {"X": self.X_, "y": self.y_}

    def _load_state(self, s):
        self.X_, self.y_ = s["X"], s["y"]
